use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::psd::{PsdEstimate, PSD_FLOOR};
use crate::error::{Error, Result};
use crate::units::{db10, dbm_per_mhz_to_density, watts_to_dbm, DB_FLOOR, SPEED_OF_LIGHT};

/// A narrowband receiver exposed to the UWB emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimBand {
    pub name: String,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    /// Highest tolerable interference power, dBm.
    pub desired_dbm: Option<f64>,
}

impl VictimBand {
    pub fn new(name: &str, f_low_hz: f64, f_high_hz: f64, desired_dbm: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            f_low_hz,
            f_high_hz,
            desired_dbm,
        }
    }

    /// Common WLAN/WPAN receivers with their tolerable interference levels.
    pub fn standard_set() -> Vec<Self> {
        vec![
            Self::new("802.11a", 5.19e9, 5.21e9, Some(-88.0)),
            Self::new("802.11b", 2.401e9, 2.423e9, Some(-82.0)),
            Self::new("802.15.1", 2.4795e9, 2.4805e9, Some(-76.0)),
            Self::new("802.15.3", 2.4025e9, 2.4175e9, Some(-81.0)),
            Self::new("802.15.4", 2.404e9, 2.406e9, Some(-91.0)),
        ]
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.f_low_hz + self.f_high_hz)
    }
}

/// Free-space (Friis) loss in dB at frequency `f` and distance `d`.
pub fn free_space_loss_db(f: f64, d: f64) -> f64 {
    20.0 * (4.0 * PI * d * f / SPEED_OF_LIGHT).log10()
}

/// Interference power in dBm received in `band` at `distance` meters.
///
/// The PSD is integrated over the bins in `[f_low, f_high)`; free-space loss
/// is taken at the band center for 1 m and extended with the d^-2 law.
pub fn coexistence_power(psd: &PsdEstimate, band: (f64, f64), distance: f64) -> Result<f64> {
    let (lo, hi) = band;
    if !(hi > lo) {
        return Err(Error::invalid("victim band is empty"));
    }
    if !(distance > 0.0) {
        return Err(Error::invalid("distance must be positive"));
    }
    let f_first = psd.frequencies.first().copied().unwrap_or(f64::NAN);
    let f_last = psd.frequencies.last().copied().unwrap_or(f64::NAN);
    if !(lo >= f_first && hi <= f_last + psd.bin_width()) {
        return Err(Error::invalid("victim band lies outside the PSD span"));
    }
    let df = psd.bin_width();
    let mut in_band = 0usize;
    let mut watts = 0.0;
    for (&f, &d) in psd.frequencies.iter().zip(&psd.density) {
        if f >= lo && f < hi {
            in_band += 1;
            if d > PSD_FLOOR {
                watts += dbm_per_mhz_to_density(d) * df;
            }
        }
    }
    if in_band == 0 {
        return Err(Error::invalid("no PSD bins inside the victim band"));
    }
    if watts <= 0.0 {
        return Ok(DB_FLOOR);
    }
    let loss = free_space_loss_db(0.5 * (lo + hi), 1.0) + 2.0 * db10(distance);
    Ok((watts_to_dbm(watts) - loss).max(DB_FLOOR))
}
