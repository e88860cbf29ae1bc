use serde::{Deserialize, Serialize};

use super::psd::PsdEstimate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSegment {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub limit_dbm_per_mhz: f64,
}

/// Piecewise-constant PSD limit over `[0, f_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMask {
    #[serde(rename = "segment")]
    segments: Vec<MaskSegment>,
}

/// Lowest frequency a mask must reach.
const MIN_MASK_SPAN: f64 = 10.6e9;

impl SpectralMask {
    pub fn new(segments: Vec<MaskSegment>) -> Result<Self> {
        let m = Self { segments };
        m.validate()?;
        Ok(m)
    }

    /// FCC indoor UWB emission limits up to 20 GHz.
    pub fn fcc_indoor() -> Self {
        let seg = |f_low_hz, f_high_hz, limit_dbm_per_mhz| MaskSegment {
            f_low_hz,
            f_high_hz,
            limit_dbm_per_mhz,
        };
        Self {
            segments: vec![
                seg(0.0, 0.96e9, -41.3),
                seg(0.96e9, 1.61e9, -75.3),
                seg(1.61e9, 1.99e9, -53.3),
                seg(1.99e9, 3.1e9, -51.3),
                seg(3.1e9, 10.6e9, -41.3),
                seg(10.6e9, 20e9, -51.3),
            ],
        }
    }

    /// Flat limit over `[0, f_max]`.
    pub fn flat(limit_dbm_per_mhz: f64, f_max: f64) -> Result<Self> {
        Self::new(vec![MaskSegment {
            f_low_hz: 0.0,
            f_high_hz: f_max,
            limit_dbm_per_mhz,
        }])
    }

    pub fn segments(&self) -> &[MaskSegment] {
        &self.segments
    }

    pub fn f_max(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.f_high_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::invalid("mask has no segments"))?;
        if first.f_low_hz != 0.0 {
            return Err(Error::invalid("mask must start at 0 Hz"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.f_high_hz > s.f_low_hz) || !s.f_high_hz.is_finite() || s.limit_dbm_per_mhz.is_nan() {
                return Err(Error::invalid(format!("segment {i} is empty or malformed")));
            }
            if i > 0 && s.f_low_hz != self.segments[i - 1].f_high_hz {
                return Err(Error::invalid(format!(
                    "segment {i} is not contiguous with its predecessor"
                )));
            }
        }
        if self.f_max() < MIN_MASK_SPAN {
            return Err(Error::invalid(format!(
                "mask must extend to at least {MIN_MASK_SPAN} Hz"
            )));
        }
        Ok(())
    }

    /// Limit at `f` in dBm/MHz; at a segment boundary the stricter side applies.
    pub fn limit_at(&self, f: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for s in &self.segments {
            if f >= s.f_low_hz && f <= s.f_high_hz {
                best = Some(best.map_or(s.limit_dbm_per_mhz, |b| b.min(s.limit_dbm_per_mhz)));
            }
        }
        best
    }

    /// Copy with `[f_low, f_high]` capped at `limit`.
    pub fn with_notch(&self, f_low: f64, f_high: f64, limit: f64) -> Result<Self> {
        if !(f_high > f_low) || f_low < 0.0 || f_high > self.f_max() {
            return Err(Error::invalid("notch must be a non-empty band inside the mask span"));
        }
        let mut out = Vec::new();
        for s in &self.segments {
            let cuts = [
                s.f_low_hz,
                f_low.clamp(s.f_low_hz, s.f_high_hz),
                f_high.clamp(s.f_low_hz, s.f_high_hz),
                s.f_high_hz,
            ];
            for w in cuts.windows(2) {
                if w[1] > w[0] {
                    let inside = w[0] >= f_low && w[1] <= f_high;
                    out.push(MaskSegment {
                        f_low_hz: w[0],
                        f_high_hz: w[1],
                        limit_dbm_per_mhz: if inside {
                            s.limit_dbm_per_mhz.min(limit)
                        } else {
                            s.limit_dbm_per_mhz
                        },
                    });
                }
            }
        }
        Self::new(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let m: Self = toml::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// Smallest `limit - density` over the PSD bins inside the mask span.
///
/// Returns `(margin_db, frequency)`; a negative margin is a violation.
pub fn mask_margin(psd: &PsdEstimate, mask: &SpectralMask) -> (f64, f64) {
    let mut worst = (f64::INFINITY, f64::NAN);
    for (&f, &d) in psd.frequencies.iter().zip(&psd.density) {
        if let Some(limit) = mask.limit_at(f) {
            let m = limit - d;
            if m < worst.0 {
                worst = (m, f);
            }
        }
    }
    worst
}
