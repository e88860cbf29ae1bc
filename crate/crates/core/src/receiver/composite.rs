use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, Fft, FftPlanner};

use crate::channel::Path;
use crate::units::smooth_size;
use crate::waveform::SampledWaveform;

/// `X[m] = ∫ tx(u) tpl(u - m dt) du` on the simulation grid.
#[derive(Debug, Clone)]
pub struct CrossCorrelation {
    pub start: i64,
    pub values: Vec<f64>,
}

impl CrossCorrelation {
    pub fn new(tx: &SampledWaveform, template: &SampledWaveform) -> Self {
        let start = tx.start_index() - template.end_index() + 1;
        let end = tx.end_index() - template.start_index();
        let values = (start..end).map(|m| tx.inner_product_shifted(template, m)).collect();
        Self { start, values }
    }

    pub fn at(&self, m: i64) -> f64 {
        let i = m - self.start;
        if i < 0 || i >= self.values.len() as i64 {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }
}

/// Template-convolved channel sampled every Δ: `h̃[n] = Σ α_k X(n·os - d_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeChannel {
    pub start: i64,
    pub taps: Vec<f64>,
}

impl CompositeChannel {
    pub fn new(start: i64, taps: Vec<f64>) -> Self {
        Self { start, taps }
    }

    /// Composite response of `paths`, scaled by `amplitude` and delayed by
    /// `offset` simulation samples, seen through the cross-correlation `x`.
    /// Path delays are rounded to the simulation grid of period `sim_period`.
    pub fn from_paths(
        paths: &[Path],
        amplitude: f64,
        x: &CrossCorrelation,
        sim_period: f64,
        oversampling: usize,
        offset: i64,
    ) -> Self {
        let os = oversampling as i64;
        let shifts: Vec<i64> = paths
            .iter()
            .map(|p| (p.delay / sim_period).round() as i64 + offset)
            .collect();
        let lo = shifts
            .iter()
            .map(|s| (x.start + s + os - 1).div_euclid(os))
            .min()
            .unwrap_or(0);
        let hi = shifts
            .iter()
            .map(|s| (x.end() - 1 + s).div_euclid(os) + 1)
            .max()
            .unwrap_or(0);
        let mut taps = vec![0.0; (hi - lo).max(0) as usize];
        for (p, &s) in paths.iter().zip(&shifts) {
            let g = amplitude * p.gain;
            let n0 = (x.start + s + os - 1).div_euclid(os);
            let n1 = (x.end() - 1 + s).div_euclid(os) + 1;
            for n in n0..n1 {
                taps[(n - lo) as usize] += g * x.values[(n * os - s - x.start) as usize];
            }
        }
        Self { start: lo, taps }
    }

    pub fn end(&self) -> i64 {
        self.start + self.taps.len() as i64
    }

    pub fn at(&self, n: i64) -> f64 {
        let i = n - self.start;
        if i < 0 || i >= self.taps.len() as i64 {
            0.0
        } else {
            self.taps[i as usize]
        }
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|x| x * x).sum()
    }

    /// Index of the largest |tap|; the earliest wins ties.
    pub fn peak_index(&self) -> i64 {
        let mut best = (0usize, -1.0);
        for (i, t) in self.taps.iter().enumerate() {
            if t.abs() > best.1 {
                best = (i, t.abs());
            }
        }
        self.start + best.0 as i64
    }

    pub fn scaled(&self, g: f64) -> Self {
        Self {
            start: self.start,
            taps: self.taps.iter().map(|t| t * g).collect(),
        }
    }
}

/// Accumulate `y[n] += Σ_k b_k h[n - k p]` for `n` in `[start, start + out.len())`.
pub fn synthesize(bits: &[i8], h: &CompositeChannel, p: usize, start: i64, out: &mut [f64]) {
    let p = p as i64;
    let len = out.len() as i64;
    for (k, &b) in bits.iter().enumerate() {
        let b = b as f64;
        let s = k as i64 * p + h.start - start;
        let lo = (-s).max(0);
        let hi = (len - s).min(h.taps.len() as i64);
        if hi <= lo {
            continue;
        }
        let dst = &mut out[(s + lo) as usize..(s + hi) as usize];
        for (d, t) in dst.iter_mut().zip(&h.taps[lo as usize..hi as usize]) {
            *d += b * t;
        }
    }
}

/// Exact Gaussian generator for a stationary sequence with a short
/// covariance `c[0..=M]`, by circulant embedding.
#[derive(Clone)]
pub struct ColoredNoise {
    len: usize,
    n_fft: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ColoredNoise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ColoredNoise")
            .field("len", &self.len)
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl ColoredNoise {
    /// Generator for sequences of `len` samples with covariance `cov[|m|]`.
    pub fn new(cov: &[f64], len: usize) -> Self {
        let m = cov.len().saturating_sub(1);
        let n_fft = smooth_size((len + m).max(2 * m + 1).max(1));
        let mut row = vec![Complex64::new(0.0, 0.0); n_fft];
        for (i, &c) in cov.iter().enumerate() {
            row[i].re += c;
            if i > 0 {
                row[n_fft - i].re += c;
            }
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_fft);
        fft.process(&mut row);
        let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / n_fft as f64).sqrt()).collect();
        Self {
            len,
            n_fft,
            sqrt_eig,
            fft,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Two independent sequences, each scaled by `scale`.
    pub fn generate_pair<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex64::new(a * s, b * s)
            })
            .collect();
        self.fft.process(&mut buf);
        let a = buf[..self.len].iter().map(|c| c.re * scale).collect();
        let b = buf[..self.len].iter().map(|c| c.im * scale).collect();
        (a, b)
    }

    pub fn generate<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Vec<f64> {
        self.generate_pair(scale, rng).0
    }
}
