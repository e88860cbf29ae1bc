use crate::error::{Error, Result};
use crate::th_code::Numerology;
use crate::waveform::{DeltaSamples, SampledWaveform};

/// Δ-spaced matched-filter output `y[n] = ∫ x(t) w(t - nΔ) dt`.
///
/// With `range = None` every `n` at which the template overlaps the received
/// support is produced.
pub fn matched_filter_samples(
    received: &SampledWaveform,
    template: &SampledWaveform,
    num: &Numerology,
    range: Option<(i64, i64)>,
) -> Result<DeltaSamples> {
    num.validate()?;
    let dt = num.sim_period();
    for w in [received, template] {
        if (w.sample_period() - dt).abs() > 1e-9 * dt {
            return Err(Error::invalid(
                "waveforms must be sampled at the simulation period (Δ / oversampling)",
            ));
        }
    }
    let os = num.oversampling as i64;
    let (lo, hi) = range.unwrap_or_else(|| {
        let lo = (received.start_index() - template.end_index()).div_euclid(os) + 1;
        let hi = (received.end_index() - template.start_index()).div_euclid(os) + 1;
        (lo, hi.max(lo))
    });
    let values = (lo..hi)
        .map(|n| received.inner_product_shifted(template, n * os))
        .collect();
    Ok(DeltaSamples::new(lo, values))
}
