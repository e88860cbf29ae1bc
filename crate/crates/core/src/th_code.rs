//! Numerology, time-hopping codes and transmit waveform assembly.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::pulse::sequence_factor_ripple_db;
use crate::waveform::SampledWaveform;

/// Frame, chip and sampling structure of one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub frames_per_symbol: usize,
    pub chips_per_frame: usize,
    /// Seconds.
    pub chip_period: f64,
    /// Receiver samples per symbol (p).
    pub samples_per_symbol: usize,
    /// Simulation samples per receiver sample.
    pub oversampling: usize,
}

impl Default for Numerology {
    fn default() -> Self {
        Self {
            frames_per_symbol: 5,
            chips_per_frame: 5,
            chip_period: 0.2e-9,
            samples_per_symbol: 32,
            oversampling: 25,
        }
    }
}

impl Numerology {
    pub fn validate(&self) -> Result<()> {
        if self.frames_per_symbol == 0 || self.chips_per_frame == 0 {
            return Err(Error::invalid("frame and chip counts must be positive"));
        }
        if self.samples_per_symbol == 0 || self.oversampling == 0 {
            return Err(Error::invalid("sample counts must be positive"));
        }
        if !(self.chip_period > 0.0) || !self.chip_period.is_finite() {
            return Err(Error::invalid("chip period must be positive"));
        }
        Ok(())
    }

    pub fn frame_period(&self) -> f64 {
        self.chips_per_frame as f64 * self.chip_period
    }

    pub fn symbol_period(&self) -> f64 {
        self.frames_per_symbol as f64 * self.frame_period()
    }

    pub fn chips_per_symbol(&self) -> usize {
        self.frames_per_symbol * self.chips_per_frame
    }

    /// Receiver sample spacing Δ.
    pub fn delta(&self) -> f64 {
        self.symbol_period() / self.samples_per_symbol as f64
    }

    /// Simulation sample period Δ / oversampling.
    pub fn sim_period(&self) -> f64 {
        self.delta() / self.oversampling as f64
    }

    pub fn sim_samples_per_symbol(&self) -> usize {
        self.samples_per_symbol * self.oversampling
    }

    /// Simulation-grid offset of chip `index` within a symbol and the rounding error in seconds.
    pub fn chip_offset(&self, index: usize) -> (i64, f64) {
        let t = index as f64 * self.chip_period;
        let n = (t / self.sim_period()).round();
        (n as i64, (t - n * self.sim_period()).abs())
    }
}

/// Per-frame chip positions and polarities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct THCode {
    pub chips: Vec<usize>,
    pub polarity: Vec<i8>,
}

impl THCode {
    pub fn new(chips: Vec<usize>, polarity: Vec<i8>, num: &Numerology) -> Result<Self> {
        let c = Self { chips, polarity };
        c.validate(num)?;
        Ok(c)
    }

    pub fn unipolar(chips: Vec<usize>, num: &Numerology) -> Result<Self> {
        let n = chips.len();
        Self::new(chips, vec![1; n], num)
    }

    /// Chip sequence 1000000010001000010000010 over 5 frames of 5 chips.
    pub fn reference_unipolar() -> Self {
        Self {
            chips: vec![0, 3, 2, 2, 3],
            polarity: vec![1; 5],
        }
    }

    pub fn validate(&self, num: &Numerology) -> Result<()> {
        if self.chips.len() != num.frames_per_symbol || self.polarity.len() != num.frames_per_symbol {
            return Err(Error::invalid(format!(
                "code needs {} chips and polarities",
                num.frames_per_symbol
            )));
        }
        if let Some(c) = self.chips.iter().find(|&&c| c >= num.chips_per_frame) {
            return Err(Error::invalid(format!(
                "chip {c} out of range 0..{}",
                num.chips_per_frame
            )));
        }
        if self.polarity.iter().any(|&d| d != 1 && d != -1) {
            return Err(Error::invalid("polarities must be +1 or -1"));
        }
        Ok(())
    }

    /// Same polarities with every chip moved one position later (mod N_c).
    pub fn offset_by_one_chip(&self, num: &Numerology) -> Self {
        Self {
            chips: self.chips.iter().map(|c| (c + 1) % num.chips_per_frame).collect(),
            polarity: self.polarity.clone(),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            chips: self.chips.clone(),
            polarity: self.polarity.iter().map(|d| -d).collect(),
        }
    }
}

/// Pulse positions (in chips from symbol start) with real amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub positions: Vec<usize>,
    pub amplitudes: Vec<f64>,
}

impl PulseSequence {
    pub fn new(positions: Vec<usize>, amplitudes: Vec<f64>) -> Result<Self> {
        if positions.len() != amplitudes.len() || positions.is_empty() {
            return Err(Error::invalid(
                "positions and amplitudes must be non-empty and equal in length",
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("amplitudes must be finite"));
        }
        Ok(Self { positions, amplitudes })
    }

    pub fn from_code(code: &THCode, num: &Numerology) -> Self {
        Self {
            positions: code
                .chips
                .iter()
                .enumerate()
                .map(|(j, &c)| j * num.chips_per_frame + c)
                .collect(),
            amplitudes: code.polarity.iter().map(|&d| d as f64).collect(),
        }
    }

    /// Reference positions weighted by [-0.5, 0.5, 0.5, -0.5, 1.5].
    pub fn reference_weighted() -> Self {
        Self {
            positions: vec![0, 8, 12, 17, 23],
            amplitudes: vec![-0.5, 0.5, 0.5, -0.5, 1.5],
        }
    }

    pub fn energy_factor(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }
}

/// Chip-rate indicator: `s[j·N_c + c_j] = d_j`, zero elsewhere.
pub fn chip_indicator(code: &THCode, num: &Numerology) -> Result<Vec<f64>> {
    code.validate(num)?;
    let mut s = vec![0.0; num.chips_per_symbol()];
    for (j, (&c, &d)) in code.chips.iter().zip(&code.polarity).enumerate() {
        s[j * num.chips_per_frame + c] = d as f64;
    }
    Ok(s)
}

/// Symbol waveform with assembly diagnostics.
#[derive(Debug, Clone)]
pub struct SymbolWaveform {
    pub waveform: SampledWaveform,
    pub max_snap_error: f64,
    pub warnings: Vec<Warning>,
}

fn check_grid(num: &Numerology, w_tr: &SampledWaveform) -> Result<()> {
    num.validate()?;
    let dt = w_tr.sample_period();
    if (dt - num.sim_period()).abs() > 1e-9 * dt {
        return Err(Error::invalid(format!(
            "pulse sample period {dt} differs from the simulation period {}",
            num.sim_period()
        )));
    }
    Ok(())
}

/// Width holding 99.9% of the pulse energy, in seconds.
fn effective_width(w: &SampledWaveform) -> f64 {
    let e: Vec<f64> = w.samples().iter().map(|x| x * x).collect();
    let total: f64 = e.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail = 0.0005 * total;
    let mut acc = 0.0;
    let mut lo = 0;
    while lo < e.len() && acc + e[lo] <= tail {
        acc += e[lo];
        lo += 1;
    }
    acc = 0.0;
    let mut hi = e.len();
    while hi > lo && acc + e[hi - 1] <= tail {
        acc += e[hi - 1];
        hi -= 1;
    }
    (hi - lo) as f64 * w.sample_period()
}

/// `w_seq(t) = Σ a_j w_tr(t - pos_j T_c)`.
pub fn sequence_waveform(seq: &PulseSequence, num: &Numerology, w_tr: &SampledWaveform) -> Result<SymbolWaveform> {
    check_grid(num, w_tr)?;
    if let Some(p) = seq.positions.iter().find(|&&p| p >= num.chips_per_symbol()) {
        return Err(Error::invalid(format!("pulse position {p} lies beyond the symbol")));
    }
    let mut out = SampledWaveform::zeros(0, w_tr.sample_period(), w_tr.start_index());
    let mut max_snap: f64 = 0.0;
    for (&pos, &a) in seq.positions.iter().zip(&seq.amplitudes) {
        let (shift, err) = num.chip_offset(pos);
        max_snap = max_snap.max(err);
        out.accumulate(w_tr, a, shift);
    }
    let mut warnings = Vec::new();
    let mut sorted = seq.positions.clone();
    sorted.sort_unstable();
    let min_sep = sorted
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 * num.chip_period)
        .fold(f64::INFINITY, f64::min);
    let support = effective_width(w_tr);
    if min_sep < support {
        warnings.push(Warning::PulseOverlap {
            min_separation: min_sep,
            support,
        });
    }
    if max_snap > 1e-6 * w_tr.sample_period() {
        warnings.push(Warning::GridSnap { max_error: max_snap });
    }
    Ok(SymbolWaveform {
        waveform: out,
        max_snap_error: max_snap,
        warnings,
    })
}

/// Per-symbol waveform of a code, one pulse per frame.
pub fn symbol_waveform(code: &THCode, num: &Numerology, w_tr: &SampledWaveform) -> Result<SymbolWaveform> {
    code.validate(num)?;
    sequence_waveform(&PulseSequence::from_code(code, num), num, w_tr)
}

/// Symbol waveform assembled from the chip indicator, `Σ_j s_j w_tr(t - j T_c)`.
pub fn indicator_waveform(s: &[f64], num: &Numerology, w_tr: &SampledWaveform) -> Result<SampledWaveform> {
    check_grid(num, w_tr)?;
    if s.len() != num.chips_per_symbol() {
        return Err(Error::invalid("indicator length must be N_f N_c"));
    }
    let mut out = SampledWaveform::zeros(0, w_tr.sample_period(), w_tr.start_index());
    for (j, &a) in s.iter().enumerate() {
        if a != 0.0 {
            out.accumulate(w_tr, a, num.chip_offset(j).0);
        }
    }
    Ok(out)
}

/// Antipodal symbols on one code.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub bits: Vec<i8>,
    pub code: THCode,
    pub numerology: Numerology,
}

impl SymbolStream {
    pub fn new(bits: Vec<i8>, code: THCode, numerology: Numerology) -> Result<Self> {
        code.validate(&numerology)?;
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::invalid("symbols must be +1 or -1"));
        }
        Ok(Self { bits, code, numerology })
    }
}

/// `s(t) = Σ_k b_k w_seq(t - k T_s)`.
pub fn modulate(stream: &SymbolStream, w_seq: &SampledWaveform) -> Result<SampledWaveform> {
    check_grid(&stream.numerology, w_seq)?;
    let sps = stream.numerology.sim_samples_per_symbol() as i64;
    let mut out = SampledWaveform::zeros(0, w_seq.sample_period(), w_seq.start_index());
    if stream.bits.is_empty() {
        return Ok(out);
    }
    let n = stream.bits.len() as i64;
    out.extend_to(w_seq.start_index(), w_seq.end_index() + (n - 1) * sps);
    for (k, &b) in stream.bits.iter().enumerate() {
        out.accumulate(w_seq, b as f64, k as i64 * sps);
    }
    Ok(out)
}

/// Split a bit stream alternately onto a code and its one-chip offset copy.
pub fn demux_200mbps(bits: &[i8], code: &THCode, num: &Numerology) -> Result<(SymbolStream, SymbolStream)> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::invalid("dual-stream mode needs an even number of bits"));
    }
    let a = bits.iter().step_by(2).copied().collect();
    let b = bits.iter().skip(1).step_by(2).copied().collect();
    Ok((
        SymbolStream::new(a, code.clone(), *num)?,
        SymbolStream::new(b, code.offset_by_one_chip(num), *num)?,
    ))
}

/// Code search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeSearchOptions {
    /// Search polarities as well as chip positions.
    pub polarity: bool,
    /// Enumerate every code instead of drawing random candidates.
    pub exhaustive: bool,
    /// Band over which the spectral ripple is measured, Hz.
    pub band: (f64, f64),
    /// Ripple grid spacing, Hz.
    pub grid_spacing: f64,
    /// dB of ripple traded per unit of normalized cross-correlation.
    pub xcorr_weight: f64,
}

impl Default for CodeSearchOptions {
    fn default() -> Self {
        Self {
            polarity: true,
            exhaustive: false,
            band: (3.1e9, 10.6e9),
            grid_spacing: 10e6,
            xcorr_weight: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCode {
    pub code: THCode,
    /// Peak-to-average of the code's spectral factor, dB.
    pub ripple_db: f64,
    /// Largest normalized cross-correlation with the other selected codes.
    pub max_xcorr: f64,
}

/// Largest cyclic chip-level cross-correlation between two codes, divided by N_f.
pub fn max_cross_correlation(a: &THCode, b: &THCode, num: &Numerology) -> Result<f64> {
    let sa = chip_indicator(a, num)?;
    let sb = chip_indicator(b, num)?;
    let n = sa.len();
    let mut best: f64 = 0.0;
    for shift in 0..n {
        let c: f64 = (0..n).map(|j| sa[j] * sb[(j + shift) % n]).sum();
        best = best.max(c.abs());
    }
    Ok(best / num.frames_per_symbol as f64)
}

fn code_ripple(code: &THCode, num: &Numerology, opts: &CodeSearchOptions) -> f64 {
    sequence_factor_ripple_db(&PulseSequence::from_code(code, num), num, opts.band, opts.grid_spacing)
}

fn all_codes(num: &Numerology, polarity: bool) -> Vec<THCode> {
    let nf = num.frames_per_symbol;
    let positions = (num.chips_per_frame as u64).pow(nf as u32);
    let signs = if polarity { 1u64 << nf } else { 1 };
    let mut out = Vec::with_capacity((positions * signs) as usize);
    for p in 0..positions {
        for s in 0..signs {
            let mut rest = p;
            let chips = (0..nf)
                .map(|_| {
                    let c = (rest % num.chips_per_frame as u64) as usize;
                    rest /= num.chips_per_frame as u64;
                    c
                })
                .collect();
            let polarity = (0..nf).map(|j| if s >> j & 1 == 1 { -1 } else { 1 }).collect();
            out.push(THCode { chips, polarity });
        }
    }
    out
}

/// Random or exhaustive scored search for a set of codes.
///
/// Candidates are ranked by spectral ripple; the set is built greedily, each
/// pick minimizing `ripple_db + xcorr_weight * max_xcorr` against the codes
/// already chosen.
pub fn generate_code_set(
    n_codes: usize,
    num: &Numerology,
    n_candidates: usize,
    seed: u64,
    opts: &CodeSearchOptions,
) -> Result<Vec<ScoredCode>> {
    num.validate()?;
    let positions = (num.chips_per_frame as f64).powi(num.frames_per_symbol as i32);
    if n_codes as f64 > positions {
        return Err(Error::invalid(format!(
            "cannot draw {n_codes} distinct codes from {positions}"
        )));
    }
    if n_candidates < n_codes {
        return Err(Error::invalid("n_candidates must be at least n_codes"));
    }
    let space = positions
        * if opts.polarity {
            2f64.powi(num.frames_per_symbol as i32)
        } else {
            1.0
        };
    let candidates: Vec<THCode> = if opts.exhaustive {
        all_codes(num, opts.polarity)
    } else {
        let target = (n_candidates as f64).min(space) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(target);
        while out.len() < target {
            let chips = (0..num.frames_per_symbol)
                .map(|_| rng.random_range(0..num.chips_per_frame))
                .collect();
            let polarity = (0..num.frames_per_symbol)
                .map(|_| if opts.polarity && rng.random::<bool>() { -1 } else { 1 })
                .collect();
            let c = THCode { chips, polarity };
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
        out
    };
    let ripples: Vec<f64> = candidates.iter().map(|c| code_ripple(c, num, opts)).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut used_positions: HashSet<Vec<usize>> = HashSet::new();
    while chosen.len() < n_codes {
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in candidates.iter().enumerate() {
            if used_positions.contains(&c.chips) {
                continue;
            }
            let mut xc: f64 = 0.0;
            for &j in &chosen {
                xc = xc.max(max_cross_correlation(c, &candidates[j], num)?);
            }
            let score = ripples[i] + opts.xcorr_weight * xc;
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, i));
            }
        }
        let (_, i) = best.ok_or_else(|| Error::InsufficientData("ran out of distinct candidate codes".into()))?;
        used_positions.insert(candidates[i].chips.clone());
        chosen.push(i);
    }
    chosen
        .iter()
        .map(|&i| {
            let mut xc: f64 = 0.0;
            for &j in &chosen {
                if j != i {
                    xc = xc.max(max_cross_correlation(&candidates[i], &candidates[j], num)?);
                }
            }
            Ok(ScoredCode {
                code: candidates[i].clone(),
                ripple_db: ripples[i],
                max_xcorr: xc,
            })
        })
        .collect()
}

/// Code set file: numerology header plus one entry per code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSet {
    pub numerology: Numerology,
    #[serde(rename = "code")]
    pub codes: Vec<THCode>,
}

impl CodeSet {
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let set: Self = toml::from_str(s)?;
        set.numerology.validate()?;
        for c in &set.codes {
            c.validate(&set.numerology)?;
        }
        Ok(set)
    }
}
