use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::SampledWaveform;

/// Default half-support of a generated pulse in units of sigma.
pub const DEFAULT_SUPPORT_SIGMAS: f64 = 6.0;

/// Minimum energy fraction the truncated support must hold.
const MIN_ENERGY_FRACTION: f64 = 0.9999;

/// n-th derivative of a Gaussian, `exp(-t^2 / 2 sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulseSpec {
    pub derivative_order: u32,
    /// Seconds.
    pub sigma: f64,
}

impl GaussianPulseSpec {
    pub fn new(derivative_order: u32, sigma: f64) -> Result<Self> {
        let s = Self {
            derivative_order,
            sigma,
        };
        s.validate()?;
        Ok(s)
    }

    /// Fifth derivative with sigma = 50.8 ps, whose spectrum fits the FCC indoor mask.
    pub fn fcc_fifth_order() -> Self {
        Self {
            derivative_order: 5,
            sigma: 5.08e-11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!("pulse sigma {} must be positive", self.sigma)));
        }
        Ok(())
    }

    /// Unnormalized shape `(-1)^n He_n(t/sigma) exp(-t^2/2sigma^2)`.
    pub fn shape(&self, t: f64) -> f64 {
        let x = t / self.sigma;
        let sign = if self.derivative_order.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sign * hermite(self.derivative_order, x) * (-0.5 * x * x).exp()
    }

    /// Scale factor that gives the pulse sampled at `sample_period` unit energy.
    pub fn normalization(&self, sample_period: f64, half_support: f64) -> f64 {
        let k = (half_support / sample_period + 1e-9).floor() as i64;
        let e: f64 = (-k..=k)
            .map(|i| self.shape(i as f64 * sample_period).powi(2))
            .sum::<f64>()
            * sample_period;
        1.0 / e.sqrt()
    }

    /// Frequency of the spectral peak, `sqrt(n) / (2 pi sigma)`.
    pub fn peak_frequency(&self) -> f64 {
        (self.derivative_order as f64).sqrt() / (2.0 * std::f64::consts::PI * self.sigma)
    }

    /// Fraction of the continuous-time energy inside `|t| <= half_support`.
    pub fn energy_fraction(&self, half_support: f64) -> f64 {
        let step = self.sigma / 64.0;
        let span = (half_support.max(20.0 * self.sigma) / step).ceil() as i64;
        let mut inside = 0.0;
        let mut total = 0.0;
        for i in -span..=span {
            let t = i as f64 * step;
            let e = self.shape(t).powi(2);
            total += e;
            if t.abs() <= half_support {
                inside += e;
            }
        }
        inside / total
    }
}

/// Probabilists' Hermite polynomial He_n(x).
pub fn hermite(n: u32, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = x;
    for k in 1..n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Unit-energy Gaussian-derivative pulse sampled symmetrically about t = 0.
pub fn gaussian_derivative_pulse(
    spec: &GaussianPulseSpec,
    sample_period: f64,
    half_support: f64,
) -> Result<SampledWaveform> {
    spec.validate()?;
    if !(sample_period > 0.0) || !sample_period.is_finite() {
        return Err(Error::invalid(format!(
            "sample period {sample_period} must be positive"
        )));
    }
    if sample_period > spec.sigma / 4.0 {
        return Err(Error::invalid(format!(
            "sample period {sample_period} exceeds sigma/4 = {}",
            spec.sigma / 4.0
        )));
    }
    let fraction = spec.energy_fraction(half_support);
    if fraction < MIN_ENERGY_FRACTION {
        return Err(Error::InsufficientSupport { fraction });
    }
    let k = (half_support / sample_period + 1e-9).floor() as i64;
    let scale = spec.normalization(sample_period, half_support);
    let samples = (-k..=k).map(|i| scale * spec.shape(i as f64 * sample_period)).collect();
    SampledWaveform::on_grid(samples, sample_period, -k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_low_orders() {
        let x = 0.7;
        assert_eq!(hermite(0, x), 1.0);
        assert_eq!(hermite(1, x), x);
        assert!((hermite(5, x) - (x.powi(5) - 10.0 * x.powi(3) + 15.0 * x)).abs() < 1e-12);
    }

    #[test]
    fn short_support_rejected() {
        let s = GaussianPulseSpec::fcc_fifth_order();
        let r = gaussian_derivative_pulse(&s, s.sigma / 8.0, 2.0 * s.sigma);
        assert!(matches!(r, Err(Error::InsufficientSupport { .. })));
    }

    #[test]
    fn coarse_sampling_rejected() {
        let s = GaussianPulseSpec::fcc_fifth_order();
        assert!(gaussian_derivative_pulse(&s, s.sigma / 2.0, 6.0 * s.sigma).is_err());
        assert!(GaussianPulseSpec::new(5, -1.0).is_err());
    }
}
