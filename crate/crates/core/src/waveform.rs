//! Uniformly sampled real signals.

use crate::error::{Error, Result};

/// A real signal sampled every `sample_period` seconds, first sample at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    samples: Vec<f64>,
    sample_period: f64,
    t0: f64,
}

impl SampledWaveform {
    pub fn new(samples: Vec<f64>, sample_period: f64, t0: f64) -> Result<Self> {
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(Error::invalid(format!(
                "sample period {sample_period} must be positive"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_period,
            t0,
        })
    }

    /// Waveform whose first sample sits on grid index `start` (t0 = start * dt).
    pub fn on_grid(samples: Vec<f64>, sample_period: f64, start: i64) -> Result<Self> {
        Self::new(samples, sample_period, start as f64 * sample_period)
    }

    pub fn zeros(len: usize, sample_period: f64, start: i64) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_period,
            t0: start as f64 * sample_period,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid index of the first sample.
    pub fn start_index(&self) -> i64 {
        (self.t0 / self.sample_period).round() as i64
    }

    /// One past the grid index of the last sample.
    pub fn end_index(&self) -> i64 {
        self.start_index() + self.samples.len() as i64
    }

    pub fn time_of(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.sample_period
    }

    /// Value at absolute grid index `n`, zero outside the support.
    pub fn at_index(&self, n: i64) -> f64 {
        let i = n - self.start_index();
        if i < 0 || i >= self.samples.len() as i64 {
            0.0
        } else {
            self.samples[i as usize]
        }
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() * self.sample_period
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            ..*self
        }
    }

    /// Scale to unit energy. Leaves an all-zero waveform unchanged.
    pub fn normalized(&self) -> Self {
        let e = self.energy();
        if e > 0.0 {
            self.scaled(1.0 / e.sqrt())
        } else {
            self.clone()
        }
    }

    /// `∫ self(t) other(t) dt` for two waveforms on the same grid.
    pub fn inner_product(&self, other: &SampledWaveform) -> f64 {
        self.inner_product_shifted(other, 0)
    }

    /// `∫ self(t) other(t - shift*dt) dt`.
    pub fn inner_product_shifted(&self, other: &SampledWaveform, shift: i64) -> f64 {
        let a0 = self.start_index();
        let b0 = other.start_index() + shift;
        let lo = a0.max(b0);
        let hi = self.end_index().min(b0 + other.len() as i64);
        if hi <= lo {
            return 0.0;
        }
        let a = &self.samples[(lo - a0) as usize..(hi - a0) as usize];
        let b = &other.samples[(lo - b0) as usize..(hi - b0) as usize];
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.sample_period
    }

    /// Add `gain * other(t - shift*dt)` in place, growing the support as needed.
    pub fn accumulate(&mut self, other: &SampledWaveform, gain: f64, shift: i64) {
        if other.is_empty() {
            return;
        }
        let b0 = other.start_index() + shift;
        let b1 = b0 + other.len() as i64;
        self.extend_to(b0, b1);
        let a0 = self.start_index();
        let off = (b0 - a0) as usize;
        for (dst, src) in self.samples[off..off + other.len()].iter_mut().zip(&other.samples) {
            *dst += gain * src;
        }
    }

    /// Grow the support with zeros so it covers grid indices `[lo, hi)`.
    pub fn extend_to(&mut self, lo: i64, hi: i64) {
        if self.samples.is_empty() {
            self.samples = vec![0.0; (hi - lo).max(0) as usize];
            self.t0 = lo as f64 * self.sample_period;
            return;
        }
        let a0 = self.start_index();
        let a1 = self.end_index();
        if lo < a0 {
            let pad = (a0 - lo) as usize;
            let mut v = vec![0.0; pad];
            v.extend_from_slice(&self.samples);
            self.samples = v;
            self.t0 = lo as f64 * self.sample_period;
        }
        if hi > a1 {
            let n = self.samples.len() + (hi - a1) as usize;
            self.samples.resize(n, 0.0);
        }
    }

    pub fn add(&self, other: &SampledWaveform) -> Self {
        let mut out = self.clone();
        out.accumulate(other, 1.0, 0);
        out
    }
}

/// Samples taken every Δ, indexed by absolute receiver sample number.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSamples {
    pub start: i64,
    pub values: Vec<f64>,
}

impl DeltaSamples {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn get(&self, n: i64) -> Option<f64> {
        let i = n - self.start;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }

    /// Value at `n`, zero outside the span.
    pub fn at(&self, n: i64) -> f64 {
        self.get(n).unwrap_or(0.0)
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.start && n < self.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_period() {
        assert!(SampledWaveform::new(vec![1.0], 0.0, 0.0).is_err());
        assert!(SampledWaveform::new(vec![f64::NAN], 1.0, 0.0).is_err());
    }

    #[test]
    fn accumulate_grows_both_sides() {
        let mut a = SampledWaveform::on_grid(vec![1.0, 1.0], 1.0, 0).unwrap();
        let b = SampledWaveform::on_grid(vec![2.0], 1.0, 0).unwrap();
        a.accumulate(&b, 1.0, -2);
        a.accumulate(&b, 0.5, 3);
        assert_eq!(a.start_index(), -2);
        assert_eq!(a.samples(), &[2.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn shifted_inner_product() {
        let a = SampledWaveform::on_grid(vec![0.0, 1.0, 2.0], 0.5, 0).unwrap();
        let b = SampledWaveform::on_grid(vec![1.0, 2.0], 0.5, 0).unwrap();
        assert_eq!(a.inner_product_shifted(&b, 1), (1.0 + 4.0) * 0.5);
        assert_eq!(a.inner_product_shifted(&b, 5), 0.0);
    }
}
