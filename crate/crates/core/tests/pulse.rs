use std::f64::consts::PI;

use thuwb::pulse::{
    autocorrelation, coexistence_power, combine_sampled, correlation_matrix, dtft_power, free_space_loss_db,
    gaussian_derivative_pulse, hermite, mask_margin, psd_estimate, GaussianPulseSpec, PsdConfig, PsdEstimate,
    SpectralMask, DEFAULT_SUPPORT_SIGMAS,
};
use thuwb::units::{dbm_per_mhz_to_density, watts_to_dbm};
use thuwb::SampledWaveform;

const DT: f64 = 6.25e-12;

fn fifth() -> SampledWaveform {
    let spec = GaussianPulseSpec::fcc_fifth_order();
    gaussian_derivative_pulse(&spec, DT, DEFAULT_SUPPORT_SIGMAS * spec.sigma).unwrap()
}

#[test]
fn hermite_matches_explicit_polynomials() {
    for &x in &[-2.3, -0.7, 0.0, 0.4, 1.9] {
        let x: f64 = x;
        assert!((hermite(0, x) - 1.0).abs() < 1e-12);
        assert!((hermite(1, x) - x).abs() < 1e-12);
        assert!((hermite(2, x) - (x * x - 1.0)).abs() < 1e-12);
        assert!((hermite(5, x) - (x.powi(5) - 10.0 * x.powi(3) + 15.0 * x)).abs() < 1e-9);
    }
}

#[test]
fn shape_is_gaussian_derivative() {
    // Central difference of the order-(n-1) shape against the order-n shape.
    let sigma = 5e-11;
    for n in 1..=5u32 {
        let lo = GaussianPulseSpec::new(n - 1, sigma).unwrap();
        let hi = GaussianPulseSpec::new(n, sigma).unwrap();
        for &t in &[-7e-11, -2e-11, 1e-11, 6e-11] {
            let h = sigma * 1e-5;
            let d = (lo.shape(t + h) - lo.shape(t - h)) / (2.0 * h) * sigma;
            assert!((d - hi.shape(t)).abs() < 1e-6, "order {n} at {t}");
        }
    }
}

#[test]
fn pulse_has_unit_energy_and_odd_symmetry() {
    let w = fifth();
    assert!((w.energy() - 1.0).abs() < 1e-12);
    let s = w.samples();
    for i in 0..s.len() {
        assert!((s[i] + s[s.len() - 1 - i]).abs() < 1e-12);
    }
}

#[test]
fn coarse_sampling_and_short_support_rejected() {
    let spec = GaussianPulseSpec::fcc_fifth_order();
    assert!(gaussian_derivative_pulse(&spec, spec.sigma / 2.0, 6.0 * spec.sigma).is_err());
    assert!(gaussian_derivative_pulse(&spec, DT, 1.0 * spec.sigma).is_err());
    assert!(GaussianPulseSpec::new(5, -1.0).is_err());
}

#[test]
fn autocorrelation_matches_dense_sums() {
    let w = fifth();
    let spec = GaussianPulseSpec::fcc_fifth_order();
    // Grid lags: discrete inner product.
    for k in [0i64, 1, 5, 17, -9] {
        let dense: f64 = (0..w.len() as i64)
            .map(|i| w.at_index(w.start_index() + i) * w.at_index(w.start_index() + i - k))
            .sum::<f64>()
            * DT;
        assert!((autocorrelation(&w, k as f64 * DT) - dense).abs() < 1e-10, "lag {k}");
    }
    // Off-grid lags: continuous pulse evaluated at shifted instants.
    let scale = spec.normalization(DT, DEFAULT_SUPPORT_SIGMAS * spec.sigma);
    for &lag in &[0.37 * DT, 3.5 * DT, -11.2 * DT] {
        let dense: f64 = (-2000..=2000)
            .map(|i| {
                let t = i as f64 * DT;
                scale * scale * spec.shape(t) * spec.shape(t - lag)
            })
            .sum::<f64>()
            * DT;
        assert!((autocorrelation(&w, lag) - dense).abs() < 1e-6, "lag {lag}");
    }
}

#[test]
fn correlation_matrix_is_symmetric_psd() {
    let w = fifth();
    let xi = [0.0, 2.1e-11, 5.5e-11, 1.3e-10];
    let r = correlation_matrix(&xi, &w);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(r[(i, j)], r[(j, i)]);
        }
        assert!((r[(i, i)] - 1.0).abs() < 1e-9);
    }
    let eig = r.symmetric_eigen();
    assert!(eig.eigenvalues.iter().all(|&e| e > -1e-12));
}

#[test]
fn dtft_power_matches_direct_sum() {
    let w = fifth();
    let fs = [1e9, 4.2e9, 7.0e9, 11.3e9];
    let got = dtft_power(&w, &fs);
    for (f, g) in fs.iter().zip(got) {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, x) in w.samples().iter().enumerate() {
            let ph = -2.0 * PI * f * w.time_of(i);
            re += x * ph.cos();
            im += x * ph.sin();
        }
        let want = (re * re + im * im) * DT * DT;
        assert!((g - want).abs() <= 1e-9 * want.max(1e-30), "{f}");
    }
}

#[test]
fn lone_psd_peak_in_band_and_power_conserved() {
    let w = fifth();
    let cfg = PsdConfig::default();
    let psd = psd_estimate(&w, None, 1, 0, &cfg).unwrap();
    let (f_peak, _) = psd.peak();
    let analytic = GaussianPulseSpec::fcc_fifth_order().peak_frequency();
    assert!((f_peak - analytic).abs() < 20e6, "{f_peak} vs {analytic}");
    assert!(f_peak > 3.1e9 && f_peak < 10.6e9);
    let p = psd.total_power_w();
    assert!((p / cfg.tx_power_w - 1.0).abs() < 1e-3, "{p} vs {}", cfg.tx_power_w);
}

#[test]
fn mask_margin_matches_loop_and_scales_with_power() {
    let w = fifth();
    let mask = SpectralMask::fcc_indoor();
    let cfg = PsdConfig::default();
    let psd = psd_estimate(&w, None, 1, 0, &cfg).unwrap();
    let (m, f) = mask_margin(&psd, &mask);
    let mut worst = f64::INFINITY;
    for (&fr, &d) in psd.frequencies.iter().zip(&psd.density) {
        if let Some(l) = mask.limit_at(fr) {
            worst = worst.min(l - d);
        }
    }
    assert_eq!(m, worst);
    assert!(mask.limit_at(f).is_some());
    let half = PsdConfig {
        tx_power_w: cfg.tx_power_w / 2.0,
        ..cfg
    };
    let (m2, _) = mask_margin(&psd_estimate(&w, None, 1, 0, &half).unwrap(), &mask);
    assert!((m2 - m - 10.0 * 2f64.log10()).abs() < 1e-9);
}

#[test]
fn combination_is_linear_in_shifted_copies() {
    let w = fifth();
    let c = combine_sampled(&w, &[1.0, -0.5], &[0.0, 10.0 * DT]).unwrap();
    for n in c.waveform.start_index()..c.waveform.end_index() {
        let want = w.at_index(n) - 0.5 * w.at_index(n - 10);
        assert!((c.waveform.at_index(n) - want).abs() < 1e-15);
    }
    assert_eq!(c.max_snap_error, 0.0);
    let off = combine_sampled(&w, &[1.0], &[0.3 * DT]).unwrap();
    assert!((off.max_snap_error - 0.3 * DT).abs() < 1e-20);
    assert!(!off.warnings.is_empty());
}

#[test]
fn coexistence_of_flat_mask_follows_friis() {
    let mask = SpectralMask::flat(-41.3, 12e9).unwrap();
    let psd = PsdEstimate::from_mask(&mask, 1e6);
    let band = (5.19e9, 5.21e9);
    let got = coexistence_power(&psd, band, 1.0).unwrap();
    let rx_dbm = watts_to_dbm(dbm_per_mhz_to_density(-41.3) * 20e6);
    let fspl = 20.0 * (4.0 * PI * 5.2e9 / 299_792_458.0).log10();
    assert!((got - (rx_dbm - fspl)).abs() < 1e-9, "{got}");
    assert!((free_space_loss_db(5.2e9, 1.0) - fspl).abs() < 1e-12);
    let far = coexistence_power(&psd, band, 2.0).unwrap();
    assert!((got - far - 20.0 * 2f64.log10()).abs() < 1e-9);
    assert!(coexistence_power(&psd, (13e9, 14e9), 1.0).is_err());
}
