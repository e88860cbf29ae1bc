use serde::{Deserialize, Serialize};

use super::gaussian::{gaussian_derivative_pulse, GaussianPulseSpec, DEFAULT_SUPPORT_SIGMAS};
use crate::error::{Error, Result, Warning};
use crate::waveform::SampledWaveform;

/// One weighted, delayed copy of the base pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseTerm {
    pub weight: f64,
    /// Seconds.
    pub delay: f64,
}

/// `w(t) = Σ u_i p(t - xi_i)` over a Gaussian-derivative base pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseCombination {
    pub base: GaussianPulseSpec,
    #[serde(rename = "pulse")]
    pub terms: Vec<PulseTerm>,
}

impl PulseCombination {
    pub fn new(base: GaussianPulseSpec, weights: &[f64], delays: &[f64]) -> Result<Self> {
        if weights.len() != delays.len() || weights.is_empty() {
            return Err(Error::invalid(
                "weights and delays must be non-empty and of equal length",
            ));
        }
        let pc = Self {
            base,
            terms: weights
                .iter()
                .zip(delays)
                .map(|(&weight, &delay)| PulseTerm { weight, delay })
                .collect(),
        };
        pc.validate(f64::INFINITY)?;
        Ok(pc)
    }

    /// The base pulse alone.
    pub fn single(base: GaussianPulseSpec) -> Self {
        Self {
            base,
            terms: vec![PulseTerm {
                weight: 1.0,
                delay: 0.0,
            }],
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    pub fn delays(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.delay).collect()
    }

    /// Checks finiteness and that all delays fit inside `max_span` seconds.
    pub fn validate(&self, max_span: f64) -> Result<()> {
        self.base.validate()?;
        if self.terms.is_empty() {
            return Err(Error::invalid("pulse combination has no terms"));
        }
        for t in &self.terms {
            if !t.weight.is_finite() || !t.delay.is_finite() || t.delay < 0.0 {
                return Err(Error::invalid(
                    "weights must be finite and delays finite and non-negative",
                ));
            }
        }
        let span = self.terms.iter().map(|t| t.delay).fold(0.0, f64::max);
        if span > max_span {
            return Err(Error::invalid(format!("delay span {span} exceeds {max_span}")));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let pc: Self = toml::from_str(s)?;
        pc.validate(f64::INFINITY)?;
        Ok(pc)
    }
}

/// Combined waveform plus the worst delay rounding applied.
#[derive(Debug, Clone)]
pub struct CombinedWaveform {
    pub waveform: SampledWaveform,
    /// Seconds.
    pub max_snap_error: f64,
    pub warnings: Vec<Warning>,
}

/// Sample the combination on a grid with period `sample_period`.
pub fn combine_pulses(pc: &PulseCombination, sample_period: f64) -> Result<CombinedWaveform> {
    pc.validate(f64::INFINITY)?;
    let base = gaussian_derivative_pulse(&pc.base, sample_period, DEFAULT_SUPPORT_SIGMAS * pc.base.sigma)?;
    combine_sampled(&base, &pc.weights(), &pc.delays())
}

/// Combine an already sampled base pulse; delays are snapped to its grid.
pub fn combine_sampled(base: &SampledWaveform, weights: &[f64], delays: &[f64]) -> Result<CombinedWaveform> {
    if weights.len() != delays.len() || weights.is_empty() {
        return Err(Error::invalid(
            "weights and delays must be non-empty and of equal length",
        ));
    }
    let dt = base.sample_period();
    let mut out = SampledWaveform::zeros(0, dt, base.start_index());
    let mut max_snap: f64 = 0.0;
    for (&u, &xi) in weights.iter().zip(delays) {
        let shift = (xi / dt).round();
        max_snap = max_snap.max((xi - shift * dt).abs());
        out.accumulate(base, u, shift as i64);
    }
    let mut warnings = Vec::new();
    if max_snap > 1e-6 * dt {
        warnings.push(Warning::GridSnap { max_error: max_snap });
    }
    Ok(CombinedWaveform {
        waveform: out,
        max_snap_error: max_snap,
        warnings,
    })
}
