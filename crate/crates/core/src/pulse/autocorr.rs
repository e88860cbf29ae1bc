use nalgebra::DMatrix;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::units::smooth_size;
use crate::waveform::SampledWaveform;

/// Autocorrelation of a sampled pulse, evaluable at any real lag.
///
/// Between grid lags the discrete autocorrelation is interpolated with its
/// band-limited (trigonometric) interpolant; at grid lags it equals the
/// discrete inner product exactly.
#[derive(Debug, Clone)]
pub struct Autocorrelation {
    /// |P_k|^2 for k = 0..=n/2.
    power: Vec<f64>,
    n_fft: usize,
    sample_period: f64,
    support: f64,
}

impl Autocorrelation {
    pub fn new(p: &SampledWaveform) -> Self {
        let len = p.len().max(1);
        let n_fft = smooth_size(2 * len);
        let mut buf: Vec<Complex64> = p.samples().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(n_fft, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
        let power = buf[..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect();
        Self {
            power,
            n_fft,
            sample_period: p.sample_period(),
            support: p.len() as f64 * p.sample_period(),
        }
    }

    /// r(lag) = ∫ p(t - lag) p(t) dt.
    pub fn at(&self, lag: f64) -> f64 {
        if lag.abs() >= self.support {
            return 0.0;
        }
        let n = self.n_fft;
        let w = 2.0 * std::f64::consts::PI * lag / (n as f64 * self.sample_period);
        let half = n / 2;
        let mut acc = self.power[0];
        for k in 1..half {
            acc += 2.0 * self.power[k] * (w * k as f64).cos();
        }
        if n.is_multiple_of(2) {
            acc += self.power[half] * (w * half as f64).cos();
        } else {
            acc += 2.0 * self.power[half] * (w * half as f64).cos();
        }
        acc * self.sample_period / n as f64
    }
}

/// r(lag) for a single lag.
pub fn autocorrelation(p: &SampledWaveform, lag: f64) -> f64 {
    Autocorrelation::new(p).at(lag)
}

/// Gram matrix R[i][j] = r(xi_i - xi_j).
pub fn correlation_matrix(xi: &[f64], p: &SampledWaveform) -> DMatrix<f64> {
    let ac = Autocorrelation::new(p);
    let n = xi.len();
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = ac.at(xi[i] - xi[j]);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}
