use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sv::ChannelRealization;
use crate::error::{Error, Result};
use crate::th_code::{modulate, SymbolStream};
use crate::waveform::SampledWaveform;

/// Output of [`apply_channel`] with the worst delay rounding applied.
#[derive(Debug, Clone)]
pub struct ChanneledWaveform {
    pub waveform: SampledWaveform,
    /// Seconds.
    pub max_snap_error: f64,
}

/// `x(t) = Σ α_k sig(t - τ_k)` with delays rounded to the signal's grid.
///
/// Shadowing is not applied here.
pub fn apply_channel(sig: &SampledWaveform, ch: &ChannelRealization) -> ChanneledWaveform {
    let dt = sig.sample_period();
    let mut out = SampledWaveform::zeros(0, dt, sig.start_index());
    let mut max_snap: f64 = 0.0;
    for p in ch.paths() {
        let shift = (p.delay / dt).round();
        max_snap = max_snap.max((p.delay - shift * dt).abs());
        out.accumulate(sig, p.gain, shift as i64);
    }
    ChanneledWaveform {
        waveform: out,
        max_snap_error: max_snap,
    }
}

/// Distance-dependent power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Meters.
    pub distance: f64,
    /// Meters.
    pub reference_distance: f64,
    pub pathloss_exponent: f64,
}

impl LinkGeometry {
    pub fn at(distance: f64) -> Self {
        Self {
            distance,
            reference_distance: 1.0,
            pathloss_exponent: 2.0,
        }
    }

    /// Amplitude factor `(d_ref / d)^(n/2)`.
    pub fn amplitude(&self) -> Result<f64> {
        if !(self.distance > 0.0) || !(self.reference_distance > 0.0) {
            return Err(Error::invalid("distances must be positive"));
        }
        Ok((self.reference_distance / self.distance).powf(self.pathloss_exponent / 2.0))
    }

    /// Power gain in dB relative to the reference distance.
    pub fn gain_db(&self) -> Result<f64> {
        Ok(20.0 * self.amplitude()?.log10())
    }
}

pub fn link_scale(sig: &SampledWaveform, geometry: &LinkGeometry) -> Result<SampledWaveform> {
    Ok(sig.scaled(geometry.amplitude()?))
}

/// Add white Gaussian noise of two-sided density `noise_density` (W/Hz).
pub fn add_awgn<R: Rng + ?Sized>(sig: &SampledWaveform, noise_density: f64, rng: &mut R) -> Result<SampledWaveform> {
    if !(noise_density >= 0.0) || !noise_density.is_finite() {
        return Err(Error::invalid("noise density must be finite and non-negative"));
    }
    if noise_density == 0.0 {
        return Ok(sig.clone());
    }
    let sd = (noise_density / sig.sample_period()).sqrt();
    let mut out = sig.clone();
    for x in out.samples_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x += sd * z;
    }
    Ok(out)
}

/// An asynchronous co-channel transmitter.
#[derive(Debug, Clone)]
pub struct InterfererSpec {
    pub stream: SymbolStream,
    /// The interferer's symbol waveform.
    pub w_seq: SampledWaveform,
    pub channel: ChannelRealization,
    /// Epoch offset in seconds; drawn uniformly over one symbol when `None`.
    pub relative_delay: Option<f64>,
    /// Amplitude scaling of the interferer in dB.
    pub relative_power_db: f64,
}

/// Superimpose the interferer on `sig`, growing the support if needed.
pub fn add_interferer<R: Rng + ?Sized>(
    sig: &SampledWaveform,
    spec: &InterfererSpec,
    rng: &mut R,
) -> Result<SampledWaveform> {
    if spec.relative_power_db == f64::NEG_INFINITY {
        return Ok(sig.clone());
    }
    if !spec.relative_power_db.is_finite() {
        return Err(Error::invalid("interferer power must be finite or -inf"));
    }
    let dt = sig.sample_period();
    if (spec.w_seq.sample_period() - dt).abs() > 1e-9 * dt {
        return Err(Error::invalid("interferer waveform uses a different sample period"));
    }
    let delay = match spec.relative_delay {
        Some(d) => d,
        None => rng.random::<f64>() * spec.stream.numerology.symbol_period(),
    };
    let tx = modulate(&spec.stream, &spec.w_seq)?;
    let rx = apply_channel(&tx, &spec.channel).waveform;
    let mut out = sig.clone();
    out.accumulate(
        &rx,
        10f64.powf(spec.relative_power_db / 20.0),
        (delay / dt).round() as i64,
    );
    Ok(out)
}
