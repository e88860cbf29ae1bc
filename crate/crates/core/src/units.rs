//! Unit conversions and small numeric helpers.

/// Floor used when a power in dB would be minus infinity.
pub const DB_FLOOR: f64 = -200.0;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db10(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

pub fn from_db10(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    from_db10(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    db10(w / 1e-3)
}

/// W/Hz to dBm/MHz.
pub fn density_to_dbm_per_mhz(w_per_hz: f64) -> f64 {
    watts_to_dbm(w_per_hz * 1e6)
}

/// dBm/MHz to W/Hz.
pub fn dbm_per_mhz_to_density(dbm: f64) -> f64 {
    dbm_to_watts(dbm) / 1e6
}

/// Gaussian tail probability Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Smallest 2^a 3^b 5^c that is at least `n`.
pub fn smooth_size(n: usize) -> usize {
    let n = n.max(1);
    let mut best = usize::MAX;
    let mut p2 = 1usize;
    while p2 < 2 * n {
        let mut p3 = p2;
        while p3 < 2 * n {
            let mut p5 = p3;
            while p5 < n {
                p5 *= 5;
            }
            best = best.min(p5);
            p3 *= 3;
        }
        p2 *= 2;
    }
    best
}
