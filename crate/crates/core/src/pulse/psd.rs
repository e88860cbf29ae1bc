use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::th_code::{sequence_waveform, Numerology, PulseSequence};
use crate::units::{db10, dbm_per_mhz_to_density, density_to_dbm_per_mhz};
use crate::waveform::SampledWaveform;

/// Density reported for bins with no power, dBm/MHz.
pub const PSD_FLOOR: f64 = -300.0;

/// Hann window equivalent noise bandwidth in bins.
const HANN_ENBW_BINS: f64 = 1.5;

/// Absolute scaling and span of PSD estimates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PsdConfig {
    /// Average transmit power in watts.
    pub tx_power_w: f64,
    /// Highest reported frequency in Hz.
    pub max_frequency: f64,
    /// Hz.
    pub resolution_bandwidth: f64,
}

impl Default for PsdConfig {
    /// Power that exactly fills -41.3 dBm/MHz flat over 3.1-10.6 GHz.
    fn default() -> Self {
        Self {
            tx_power_w: dbm_per_mhz_to_density(-41.3) * 7.5e9,
            max_frequency: 20e9,
            resolution_bandwidth: 1e6,
        }
    }
}

/// One-sided PSD in dBm/MHz on an increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    pub resolution_bandwidth: f64,
}

impl PsdEstimate {
    /// Spacing between adjacent bins.
    pub fn bin_width(&self) -> f64 {
        match self.frequencies.as_slice() {
            [a, b, ..] => b - a,
            _ => self.resolution_bandwidth,
        }
    }

    /// `(frequency, density)` of the largest bin.
    pub fn peak(&self) -> (f64, f64) {
        self.frequencies
            .iter()
            .zip(&self.density)
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |acc, (&f, &d)| if d > acc.1 { (f, d) } else { acc },
            )
    }

    /// Peak over mean of the linear density inside `[f_low, f_high]`, in dB.
    pub fn peak_to_average_db(&self, band: (f64, f64)) -> f64 {
        let lin: Vec<f64> = self
            .frequencies
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= band.0 && **f <= band.1)
            .map(|(_, d)| 10f64.powf(d / 10.0))
            .collect();
        peak_to_mean_db(&lin)
    }

    /// Total power in watts, rectangle rule over the bins.
    pub fn total_power_w(&self) -> f64 {
        let df = self.bin_width();
        self.density
            .iter()
            .filter(|d| **d > PSD_FLOOR)
            .map(|d| dbm_per_mhz_to_density(*d) * df)
            .sum()
    }

    /// Flat-at-mask spectrum on a grid of spacing `df`.
    pub fn from_mask(mask: &super::SpectralMask, df: f64) -> Self {
        let n = (mask.f_max() / df).floor() as usize;
        let frequencies: Vec<f64> = (0..=n).map(|k| k as f64 * df).collect();
        let density = frequencies
            .iter()
            .map(|f| mask.limit_at(*f).unwrap_or(PSD_FLOOR))
            .collect();
        Self {
            frequencies,
            density,
            resolution_bandwidth: df,
        }
    }

    /// Two-column CSV `frequency_hz,psd_dbm_per_mhz`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frequency_hz,psd_dbm_per_mhz\n");
        for (f, d) in self.frequencies.iter().zip(&self.density) {
            let _ = writeln!(s, "{f},{d}");
        }
        s
    }
}

fn peak_to_mean_db(lin: &[f64]) -> f64 {
    if lin.is_empty() {
        return f64::NAN;
    }
    let max = lin.iter().cloned().fold(0.0, f64::max);
    let mean = lin.iter().sum::<f64>() / lin.len() as f64;
    db10(max / mean)
}

/// Pulse-train context: the estimated waveform is the basis pulse and the
/// symbol waveform is assembled from `sequence`.
#[derive(Debug, Clone)]
pub struct TrainContext {
    pub sequence: PulseSequence,
    pub numerology: Numerology,
}

fn to_dbm(lin_w_per_hz: f64) -> f64 {
    if lin_w_per_hz > 0.0 {
        density_to_dbm_per_mhz(lin_w_per_hz).max(PSD_FLOOR)
    } else {
        PSD_FLOOR
    }
}

/// |W(f)|^2 of the sampled waveform by direct DTFT, `W(f) = dt Σ w_n e^{-j2πf t_n}`.
pub fn dtft_power(w: &SampledWaveform, frequencies: &[f64]) -> Vec<f64> {
    let dt = w.sample_period();
    frequencies
        .iter()
        .map(|&f| {
            let step = Complex64::from_polar(1.0, -2.0 * PI * f * dt);
            let mut ph = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for &x in w.samples() {
                acc += ph * x;
                ph *= step;
            }
            acc.norm_sqr() * dt * dt
        })
        .collect()
}

/// PSD of a lone waveform (random-sign repetition) or of a modulated pulse train.
///
/// Without a context the result is `2|W(f)|^2 P_tx / E_w`, the spectrum of the
/// waveform repeated with random antipodal signs at any rate and the configured
/// average power. With a context, `w` is the basis pulse and the result is a
/// Hann-windowed Welch average over `n_realizations` random bit segments.
pub fn psd_estimate(
    w: &SampledWaveform,
    context: Option<&TrainContext>,
    n_realizations: usize,
    seed: u64,
    cfg: &PsdConfig,
) -> Result<PsdEstimate> {
    if w.is_empty() {
        return Err(Error::invalid("waveform is empty"));
    }
    if n_realizations < 1 {
        return Err(Error::invalid("n_realizations must be at least 1"));
    }
    if !(cfg.resolution_bandwidth > 0.0) || !(cfg.max_frequency > 0.0) || !(cfg.tx_power_w >= 0.0) {
        return Err(Error::invalid("PSD configuration values must be positive"));
    }
    match context {
        None => lone_psd(w, cfg),
        Some(ctx) => train_psd(w, ctx, n_realizations, seed, cfg),
    }
}

fn lone_psd(w: &SampledWaveform, cfg: &PsdConfig) -> Result<PsdEstimate> {
    let dt = w.sample_period();
    let energy = w.energy();
    let fs = 1.0 / dt;
    let f_top = cfg.max_frequency.min(fs / 2.0);
    let n_exact = fs / cfg.resolution_bandwidth;
    let n_fft = n_exact.round() as usize;
    let on_fft_grid = (n_exact - n_fft as f64).abs() < 1e-6 && n_fft >= w.len();
    let df = if on_fft_grid {
        fs / n_fft as f64
    } else {
        cfg.resolution_bandwidth
    };
    let n_bins = (f_top / df + 1e-9).floor() as usize + 1;
    let frequencies: Vec<f64> = (0..n_bins).map(|k| k as f64 * df).collect();
    let power = if on_fft_grid {
        let mut buf: Vec<Complex64> = w.samples().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(n_fft, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
        buf[..n_bins].iter().map(|c| c.norm_sqr() * dt * dt).collect()
    } else {
        dtft_power(w, &frequencies)
    };
    let scale = if energy > 0.0 { cfg.tx_power_w / energy } else { 0.0 };
    let nyquist_bin = on_fft_grid && n_fft.is_multiple_of(2) && n_bins == n_fft / 2 + 1;
    let density = power
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (nyquist_bin && k == n_bins - 1) {
                1.0
            } else {
                2.0
            };
            to_dbm(one_sided * p * scale)
        })
        .collect();
    Ok(PsdEstimate {
        frequencies,
        density,
        resolution_bandwidth: df,
    })
}

fn train_psd(
    w_tr: &SampledWaveform,
    ctx: &TrainContext,
    n_realizations: usize,
    seed: u64,
    cfg: &PsdConfig,
) -> Result<PsdEstimate> {
    let num = &ctx.numerology;
    num.validate()?;
    let dt = w_tr.sample_period();
    if (dt - num.sim_period()).abs() > 1e-9 * dt {
        return Err(Error::invalid(
            "basis pulse must be sampled at the numerology's simulation period",
        ));
    }
    let w_seq = sequence_waveform(&ctx.sequence, num, w_tr)?.waveform;
    let e_seq = w_seq.energy();
    let sps = num.sim_samples_per_symbol() as i64;
    let n_seg = (HANN_ENBW_BINS / (cfg.resolution_bandwidth * dt)).round() as usize;
    let n_fft = crate::units::smooth_size(n_seg);
    let window: Vec<f64> = (0..n_seg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n_seg as f64).cos())
        .collect();
    let win_power: f64 = window.iter().map(|x| x * x).sum();
    let df = 1.0 / (n_fft as f64 * dt);
    let n_bins = ((cfg.max_frequency.min(0.5 / dt)) / df).floor() as usize + 1;
    let fft = FftPlanner::new().plan_fft_forward(n_fft);

    // Every symbol whose support overlaps the segment.
    let k_lo = (-w_seq.end_index()).div_euclid(sps);
    let k_hi = (n_seg as i64 - w_seq.start_index()).div_euclid(sps) + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; n_bins];
    let mut x = vec![0.0; n_seg];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for _ in 0..n_realizations {
        x.iter_mut().for_each(|v| *v = 0.0);
        for k in k_lo..=k_hi {
            let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let start = k * sps + w_seq.start_index();
            for (i, &s) in w_seq.samples().iter().enumerate() {
                let n = start + i as i64;
                if n >= 0 && (n as usize) < n_seg {
                    x[n as usize] += b * s;
                }
            }
        }
        for (i, c) in buf.iter_mut().enumerate() {
            *c = if i < n_seg {
                Complex64::new(x[i] * window[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }
    // Two-sided density of the unit-amplitude train, then scale to the TX power.
    let avg_power = e_seq / num.symbol_period();
    let scale = if avg_power > 0.0 {
        cfg.tx_power_w / avg_power
    } else {
        0.0
    };
    let norm = dt / (win_power * n_realizations as f64);
    let frequencies = (0..n_bins).map(|k| k as f64 * df).collect();
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, a)| to_dbm(if k == 0 { 1.0 } else { 2.0 } * a * norm * scale))
        .collect();
    Ok(PsdEstimate {
        frequencies,
        density,
        resolution_bandwidth: cfg.resolution_bandwidth,
    })
}

/// Ripple of the sequence factor `|Σ a_j e^{-j2πf t_j}|^2` over `band`, in dB.
///
/// This is the PSD of the symbol waveform divided by that of one pulse,
/// sampled every `df` Hz.
pub fn sequence_factor_ripple_db(seq: &PulseSequence, num: &Numerology, band: (f64, f64), df: f64) -> f64 {
    let n = ((band.1 - band.0) / df).floor() as usize;
    let lin: Vec<f64> = (0..=n)
        .map(|k| {
            let f = band.0 + k as f64 * df;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&pos, &a) in seq.positions.iter().zip(&seq.amplitudes) {
                acc += Complex64::from_polar(a, -2.0 * PI * f * pos as f64 * num.chip_period);
            }
            acc.norm_sqr()
        })
        .collect();
    peak_to_mean_db(&lin)
}
