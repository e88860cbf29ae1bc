use serde::{Deserialize, Serialize};

use super::composite::CompositeChannel;
use crate::error::{Error, Result, Warning};
use crate::estimation::solve_weights_from_fingers;
use crate::th_code::Numerology;
use crate::waveform::{DeltaSamples, SampledWaveform};

/// Finger delays (in Δ), combining weights and common timing offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RakeState {
    pub finger_delays: Vec<i64>,
    pub weights: Vec<f64>,
    pub timing_offset: i64,
}

impl RakeState {
    pub fn new(finger_delays: Vec<i64>, weights: Vec<f64>, timing_offset: i64) -> Result<Self> {
        let r = Self {
            finger_delays,
            weights,
            timing_offset,
        };
        r.validate()?;
        Ok(r)
    }

    /// Unit weights on the given delays.
    pub fn with_delays(finger_delays: Vec<i64>) -> Result<Self> {
        let n = finger_delays.len();
        Self::new(finger_delays, vec![1.0; n], 0)
    }

    pub fn fingers(&self) -> usize {
        self.finger_delays.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.finger_delays.is_empty() {
            return Err(Error::invalid("a Rake needs at least one finger"));
        }
        if self.finger_delays.len() != self.weights.len() {
            return Err(Error::invalid("finger delays and weights differ in length"));
        }
        let mut d = self.finger_delays.clone();
        d.sort_unstable();
        if d.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("finger delays must be distinct"));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("finger weights must be finite"));
        }
        Ok(())
    }
}

/// Per-symbol finger samples, `rows[n][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerOutputs {
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<Warning>,
}

/// Correlate the received waveform with the template delayed by
/// `(p n + n_l + n_o) Δ` for each symbol `n` and finger `l`.
pub fn rake_finger_outputs(
    received: &SampledWaveform,
    rake: &RakeState,
    template: &SampledWaveform,
    num: &Numerology,
    n_symbols: usize,
) -> Result<FingerOutputs> {
    rake.validate()?;
    num.validate()?;
    let dt = num.sim_period();
    if (received.sample_period() - dt).abs() > 1e-9 * dt || (template.sample_period() - dt).abs() > 1e-9 * dt {
        return Err(Error::invalid("waveforms must be sampled at the simulation period"));
    }
    let os = num.oversampling as i64;
    let p = num.samples_per_symbol as i64;
    let mut warnings = Vec::new();
    let rows = (0..n_symbols as i64)
        .map(|n| {
            rake.finger_delays
                .iter()
                .map(|&nl| {
                    let idx = p * n + nl + rake.timing_offset;
                    let shift = idx * os;
                    if shift + template.end_index() <= received.start_index()
                        || shift + template.start_index() >= received.end_index()
                    {
                        warnings.push(Warning::OutOfSpan { index: idx });
                        0.0
                    } else {
                        received.inner_product_shifted(template, shift)
                    }
                })
                .collect()
        })
        .collect();
    Ok(FingerOutputs { rows, warnings })
}

/// Read `y[p n + n_l + n_o]` for each symbol and finger, zero outside the span.
pub fn finger_outputs_from_samples(
    y: &DeltaSamples,
    finger_delays: &[i64],
    timing_offset: i64,
    p: usize,
    n_symbols: usize,
) -> FingerOutputs {
    let mut warnings = Vec::new();
    let rows = (0..n_symbols as i64)
        .map(|n| {
            finger_delays
                .iter()
                .map(|&nl| {
                    let idx = p as i64 * n + nl + timing_offset;
                    y.get(idx).unwrap_or_else(|| {
                        warnings.push(Warning::OutOfSpan { index: idx });
                        0.0
                    })
                })
                .collect()
        })
        .collect();
    FingerOutputs { rows, warnings }
}

/// Chosen finger delays.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerSelection {
    pub delays: Vec<i64>,
    pub warnings: Vec<Warning>,
}

/// Per-phase interference-plus-noise power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceProfile {
    pub power: Vec<f64>,
}

impl InterferenceProfile {
    pub fn uniform(p: usize, level: f64) -> Self {
        Self { power: vec![level; p] }
    }

    /// Power at the phase of absolute tap index `n`.
    pub fn at(&self, n: i64) -> f64 {
        self.power[n.rem_euclid(self.power.len() as i64) as usize]
    }
}

/// Pick the `l` taps with the largest |h̃[n]|, or |h̃[n]|/sqrt(P_{n mod p})
/// with a profile; ties go to the smaller delay.
pub fn select_fingers(
    h: &CompositeChannel,
    l: usize,
    profile: Option<&InterferenceProfile>,
) -> Result<FingerSelection> {
    if l == 0 {
        return Err(Error::invalid("at least one finger is required"));
    }
    if let Some(pr) = profile {
        if pr.power.is_empty() || pr.power.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::invalid(
                "interference profile must be non-empty and non-negative",
            ));
        }
    }
    let mut cands: Vec<(f64, i64)> = h
        .taps
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let n = h.start + i as i64;
            let metric = match profile {
                Some(pr) => t.abs() / pr.at(n).max(f64::MIN_POSITIVE).sqrt(),
                None => t.abs(),
            };
            (metric, n)
        })
        .filter(|(m, _)| *m > 0.0)
        .collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut warnings = Vec::new();
    if cands.len() < l {
        warnings.push(Warning::FewerTaps {
            requested: l,
            available: cands.len(),
        });
    }
    Ok(FingerSelection {
        delays: cands.iter().take(l).map(|c| c.1).collect(),
        warnings,
    })
}

/// `z[n] = Σ_l h̃(n_l) f[n][l]`.
pub fn combine_mrc(fingers: &FingerOutputs, h: &CompositeChannel, rake: &RakeState) -> Vec<f64> {
    let w: Vec<f64> = rake.finger_delays.iter().map(|&nl| h.at(nl)).collect();
    fingers
        .rows
        .iter()
        .map(|row| row.iter().zip(&w).map(|(f, g)| f * g).sum())
        .collect()
}

/// Trained combiner with its training MSE.
#[derive(Debug, Clone)]
pub struct MmseCombiner {
    pub rake: RakeState,
    pub mse: f64,
    pub warnings: Vec<Warning>,
}

impl MmseCombiner {
    pub fn combine(&self, fingers: &FingerOutputs) -> Vec<f64> {
        fingers
            .rows
            .iter()
            .map(|row| row.iter().zip(&self.rake.weights).map(|(f, g)| f * g).sum())
            .collect()
    }
}

/// Least-squares combining weights trained on `reference` symbols.
///
/// With `adaptive` the timing offset is chosen from `n_o_range` (inclusive)
/// to minimize the training MSE; otherwise the range start is used.
pub fn combine_mmse(
    y: &DeltaSamples,
    finger_delays: &[i64],
    reference: &[i8],
    p: usize,
    adaptive: bool,
    n_o_range: (i64, i64),
) -> Result<MmseCombiner> {
    if reference.is_empty() {
        return Err(Error::InsufficientData("no reference symbols".into()));
    }
    if n_o_range.1 < n_o_range.0 {
        return Err(Error::invalid("empty timing-offset range"));
    }
    let offsets: Vec<i64> = if adaptive {
        (n_o_range.0..=n_o_range.1).collect()
    } else {
        vec![n_o_range.0]
    };
    let mut best: Option<MmseCombiner> = None;
    for n_o in offsets {
        let f = finger_outputs_from_samples(y, finger_delays, n_o, p, reference.len());
        let sol = solve_weights_from_fingers(&f.rows, reference)?;
        let mse = training_mse(&f.rows, &sol.x, reference);
        if best.as_ref().is_none_or(|b| mse < b.mse) {
            let mut warnings = f.warnings;
            if sol.ridge > 0.0 {
                warnings.push(Warning::Regularized { ridge: sol.ridge });
            }
            best = Some(MmseCombiner {
                rake: RakeState::new(finger_delays.to_vec(), sol.x, n_o)?,
                mse,
                warnings,
            });
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no timing offset evaluated".into()))
}

fn training_mse(rows: &[Vec<f64>], w: &[f64], reference: &[i8]) -> f64 {
    rows.iter()
        .zip(reference)
        .map(|(r, &b)| {
            let z: f64 = r.iter().zip(w).map(|(a, c)| a * c).sum();
            (z - b as f64).powi(2)
        })
        .sum::<f64>()
        / reference.len() as f64
}

/// `P_k = mean_m |i[m p + k]|^2`.
pub fn estimate_interference_profile(residual: &[f64], p: usize) -> Result<InterferenceProfile> {
    if p == 0 || residual.len() < p {
        return Err(Error::InsufficientData(format!(
            "residual of {} samples is shorter than one symbol of {p}",
            residual.len()
        )));
    }
    let mut sum = vec![0.0; p];
    let mut count = vec![0usize; p];
    for (i, r) in residual.iter().enumerate() {
        sum[i % p] += r * r;
        count[i % p] += 1;
    }
    Ok(InterferenceProfile {
        power: sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect(),
    })
}
