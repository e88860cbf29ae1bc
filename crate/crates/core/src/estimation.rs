//! Training sequences, swept-finger channel estimation and least-squares solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, LsSolution};
use crate::receiver::{finger_outputs_from_samples, EqualizerTaps, InterferenceProfile};
use crate::th_code::Numerology;
use crate::waveform::DeltaSamples;

/// Primitive polynomial x^9 + x^4 + 1 as a coefficient mask (bit i is x^i).
pub const POLY_DEG9_A: u32 = (1 << 9) | (1 << 4) | 1;
/// Primitive polynomial x^9 + x^6 + x^4 + x^3 + 1.
pub const POLY_DEG9_B: u32 = (1 << 9) | (1 << 6) | (1 << 4) | (1 << 3) | 1;

/// Layout of the training preamble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub n_symbols: usize,
    pub repeats: usize,
    /// Guard interval after each repeat, in symbols (73 × 5 ns = 365 ns).
    pub guard_symbols: usize,
    pub fingers: usize,
    pub samples_per_symbol: usize,
    /// Feedback polynomial of the maximal-length generator.
    pub polynomial: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n_symbols: 511,
            repeats: 4,
            guard_symbols: 73,
            fingers: 10,
            samples_per_symbol: 32,
            polynomial: POLY_DEG9_A,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 || self.repeats == 0 || self.fingers == 0 || self.samples_per_symbol == 0 {
            return Err(Error::invalid("training counts must be positive"));
        }
        if self.repeats * self.fingers < self.samples_per_symbol {
            return Err(Error::invalid("repeats × fingers must cover every sampling phase"));
        }
        Ok(())
    }

    /// Symbols per repeat including the guard.
    pub fn symbols_per_repeat(&self) -> usize {
        self.n_symbols + self.guard_symbols
    }

    /// Receiver samples per repeat including the guard.
    pub fn samples_per_repeat(&self) -> usize {
        self.symbols_per_repeat() * self.samples_per_symbol
    }

    /// Channel-estimate window, one guard interval long, in Δ.
    pub fn window(&self) -> usize {
        self.guard_symbols * self.samples_per_symbol
    }

    pub fn guard_duration(&self, num: &Numerology) -> f64 {
        self.guard_symbols as f64 * num.symbol_period()
    }

    /// `repeats × (n_symbols T_s + guard)` in seconds.
    pub fn total_duration(&self, num: &Numerology) -> f64 {
        self.repeats as f64 * (self.n_symbols as f64 * num.symbol_period() + self.guard_duration(num))
    }
}

/// One period of the maximal-length sequence of `polynomial`, mapped 0 → +1, 1 → -1.
///
/// The seed selects the nonzero initial register state; the sequence is a
/// cyclic shift of the same m-sequence for every seed.
pub fn m_sequence(polynomial: u32, seed: u64) -> Result<Vec<i8>> {
    let degree = 31 - polynomial.leading_zeros();
    if degree == 0 || degree > 24 || polynomial & 1 == 0 {
        return Err(Error::invalid("polynomial needs a constant term and degree in 1..=24"));
    }
    let period = (1usize << degree) - 1;
    let mut bits: Vec<u8> = Vec::with_capacity(period + degree as usize);
    let init = (seed % period as u64) as usize + 1;
    for i in 0..degree {
        bits.push(((init >> i) & 1) as u8);
    }
    while bits.len() < 2 * period {
        let n = bits.len() - degree as usize;
        let mut fb = 0u8;
        for i in 0..degree {
            if polynomial >> i & 1 == 1 {
                fb ^= bits[n + i as usize];
            }
        }
        bits.push(fb);
    }
    // A primitive polynomial gives no period shorter than 2^deg - 1.
    let deg = degree as usize;
    let true_period = (1..=period).find(|&d| bits[d..d + deg] == bits[..deg]);
    if true_period != Some(period) {
        return Err(Error::invalid(format!("polynomial {polynomial:#b} is not primitive")));
    }
    bits.truncate(period);
    Ok(bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect())
}

/// Training bits of length `n_symbols` from the configured m-sequence.
pub fn training_sequence(config: &TrainingConfig, seed: u64) -> Result<Vec<i8>> {
    config.validate()?;
    let seq = m_sequence(config.polynomial, seed)?;
    if seq.len() < config.n_symbols {
        return Err(Error::invalid("m-sequence shorter than the training length"));
    }
    Ok(seq[..config.n_symbols].to_vec())
}

/// Sampling offset `t[l][m] = repeats·l + m` (in Δ) of finger `l` during repeat `m`, zero-based.
pub fn finger_sweep_schedule(config: &TrainingConfig) -> Vec<Vec<i64>> {
    (0..config.fingers)
        .map(|l| (0..config.repeats).map(|m| (config.repeats * l + m) as i64).collect())
        .collect()
}

/// Estimated composite channel over `[0, window)` in Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub taps: Vec<f64>,
    /// Number of (repeat, finger) observations averaged into each tap.
    pub sources: Vec<u32>,
}

impl ChannelEstimate {
    pub fn at(&self, n: i64) -> f64 {
        if n < 0 || n >= self.taps.len() as i64 {
            0.0
        } else {
            self.taps[n as usize]
        }
    }

    pub fn as_composite(&self) -> crate::receiver::CompositeChannel {
        crate::receiver::CompositeChannel::new(0, self.taps.clone())
    }
}

struct Source<'a> {
    offset: i64,
    y: &'a DeltaSamples,
}

fn sources<'a>(repeats: &'a [DeltaSamples], config: &TrainingConfig) -> Result<Vec<Source<'a>>> {
    if repeats.len() != config.repeats {
        return Err(Error::InsufficientData(format!(
            "expected {} training repeats, got {}",
            config.repeats,
            repeats.len()
        )));
    }
    let sched = finger_sweep_schedule(config);
    let mut out = Vec::new();
    for row in &sched {
        for (m, &t) in row.iter().enumerate() {
            out.push(Source {
                offset: t,
                y: &repeats[m],
            });
        }
    }
    Ok(out)
}

/// Sliding-correlator estimate `h̃(n) = (1/N) Σ_k b_k y(n + k p)`.
///
/// Each tap uses only the finger samples the sweep schedule provides: tap
/// `n` is observed by every (finger, repeat) whose offset `t` satisfies
/// `t ≡ n (mod p)` and `t ≤ n`; multiple observations are averaged.
/// `repeats[m]` holds the Δ-rate matched-filter output of repeat `m`,
/// indexed from the first training symbol.
pub fn estimate_channel(
    repeats: &[DeltaSamples],
    training: &[f64],
    config: &TrainingConfig,
    window: usize,
) -> Result<ChannelEstimate> {
    config.validate()?;
    let p = config.samples_per_symbol as i64;
    let n_sym = training.len();
    if n_sym == 0 {
        return Err(Error::InsufficientData("empty training sequence".into()));
    }
    let srcs = sources(repeats, config)?;
    let mut taps = vec![0.0; window];
    let mut counts = vec![0u32; window];
    for (n, (tap, count)) in taps.iter_mut().zip(counts.iter_mut()).enumerate() {
        let n = n as i64;
        for s in srcs.iter().filter(|s| s.offset <= n && (n - s.offset) % p == 0) {
            let last = n + (n_sym as i64 - 1) * p;
            if !s.y.contains(n) || !s.y.contains(last) {
                return Err(Error::InsufficientData(format!(
                    "training observation does not cover samples {n}..={last}"
                )));
            }
            let acc: f64 = training
                .iter()
                .enumerate()
                .map(|(k, b)| b * s.y.at(n + k as i64 * p))
                .sum();
            *tap += acc / n_sym as f64;
            *count += 1;
        }
        if *count == 0 {
            return Err(Error::InsufficientData(format!("no finger observes tap {n}")));
        }
        *tap /= *count as f64;
    }
    Ok(ChannelEstimate { taps, sources: counts })
}

/// `Σ|ĥ - h|^2 / Σ|h|^2`.
pub fn nmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid("estimate and truth lengths differ"));
    }
    let e: f64 = truth.iter().map(|h| h * h).sum();
    if !(e > 0.0) {
        return Err(Error::invalid("truth has zero energy"));
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / e)
}

/// NMSE restricted to the `k` largest-magnitude true taps.
pub fn nmse_largest(estimate: &[f64], truth: &[f64], k: usize) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid("estimate and truth lengths differ"));
    }
    let mut idx: Vec<usize> = (0..truth.len()).collect();
    idx.sort_by(|&a, &b| truth[b].abs().total_cmp(&truth[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    let est: Vec<f64> = idx.iter().map(|&i| estimate[i]).collect();
    let tru: Vec<f64> = idx.iter().map(|&i| truth[i]).collect();
    nmse(&est, &tru)
}

/// Per-phase power of `i(n) = y(n) - Σ_k b_k ĥ(n - k p)` over the training
/// samples each (finger, repeat) pair observed.
pub fn estimate_interference(
    repeats: &[DeltaSamples],
    training: &[f64],
    estimate: &ChannelEstimate,
    config: &TrainingConfig,
) -> Result<InterferenceProfile> {
    config.validate()?;
    let p = config.samples_per_symbol as i64;
    let srcs = sources(repeats, config)?;
    let w = estimate.taps.len() as i64;
    let mut sum = vec![0.0; p as usize];
    let mut count = vec![0usize; p as usize];
    for s in &srcs {
        for j in 0..training.len() as i64 {
            let n = s.offset + j * p;
            let Some(y) = s.y.get(n) else {
                return Err(Error::InsufficientData(format!(
                    "training observation lacks sample {n}"
                )));
            };
            // Symbols k with 0 <= n - k p < w.
            let k_lo = ((n - w + 1).max(0) + p - 1) / p;
            let k_hi = (n / p).min(training.len() as i64 - 1);
            let mut model = 0.0;
            for k in k_lo..=k_hi {
                model += training[k as usize] * estimate.taps[(n - k * p) as usize];
            }
            let r = y - model;
            let phase = n.rem_euclid(p) as usize;
            sum[phase] += r * r;
            count[phase] += 1;
        }
    }
    if count.contains(&0) {
        return Err(Error::InsufficientData("some sampling phase was never observed".into()));
    }
    Ok(InterferenceProfile {
        power: sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect(),
    })
}

/// `γ = (Y Yᵀ)^{-1} Y b` over finger rows `rows[n][l]`.
pub fn solve_weights_from_fingers(rows: &[Vec<f64>], training: &[i8]) -> Result<LsSolution> {
    if rows.len() != training.len() {
        return Err(Error::invalid("finger rows and training length differ"));
    }
    let b: Vec<f64> = training.iter().map(|&x| x as f64).collect();
    least_squares(rows, &b)
}

/// LS Rake weights from the Δ-rate training observation at the given finger delays.
pub fn solve_rake_weights(
    y: &DeltaSamples,
    training: &[i8],
    finger_delays: &[i64],
    timing_offset: i64,
    p: usize,
) -> Result<LsSolution> {
    let f = finger_outputs_from_samples(y, finger_delays, timing_offset, p, training.len());
    if !f.warnings.is_empty() {
        return Err(Error::InsufficientData(
            "finger samples fall outside the training observation".into(),
        ));
    }
    solve_weights_from_fingers(&f.rows, training)
}

/// Regressor `[z[n+K], ..., z[n-K]]`, zero outside `z`.
pub fn equalizer_window(z: &[f64], n: usize, k: usize) -> Vec<f64> {
    let k = k as i64;
    (-k..=k)
        .map(|j| {
            let i = n as i64 - j;
            if i < 0 || i >= z.len() as i64 {
                0.0
            } else {
                z[i as usize]
            }
        })
        .collect()
}

/// LS equalizer taps `c_{-K..K}` mapping combiner outputs onto the training symbols.
pub fn solve_equalizer(z: &[f64], training: &[i8], k: usize) -> Result<(EqualizerTaps, LsSolution)> {
    if z.len() != training.len() {
        return Err(Error::invalid("combiner output and training length differ"));
    }
    if training.len() < 2 * k + 1 {
        return Err(Error::InsufficientData(format!(
            "need at least {} training symbols",
            2 * k + 1
        )));
    }
    let rows: Vec<Vec<f64>> = (0..z.len()).map(|n| equalizer_window(z, n, k)).collect();
    let b: Vec<f64> = training.iter().map(|&x| x as f64).collect();
    let sol = least_squares(&rows, &b)?;
    Ok((EqualizerTaps::new(sol.x.clone())?, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_and_repeat() {
        let c = TrainingConfig::default();
        assert_eq!(c.window(), 2336);
        assert_eq!(c.samples_per_repeat(), 584 * 32);
    }

    #[test]
    fn non_primitive_rejected() {
        // x^9 + 1 is reducible.
        assert!(m_sequence((1 << 9) | 1, 0).is_err());
    }

    #[test]
    fn second_polynomial_is_primitive() {
        assert_eq!(m_sequence(POLY_DEG9_B, 5).unwrap().len(), 511);
    }

    #[test]
    fn under_covered_phases_rejected() {
        let c = TrainingConfig {
            repeats: 2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
