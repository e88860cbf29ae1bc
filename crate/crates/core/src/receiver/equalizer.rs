use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear equalizer taps `c_{-K}..c_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerTaps {
    pub taps: Vec<f64>,
}

impl EqualizerTaps {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::invalid("equalizer needs an odd number of taps"));
        }
        if taps.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("equalizer taps must be finite"));
        }
        Ok(Self { taps })
    }

    pub fn identity(k: usize) -> Self {
        let mut taps = vec![0.0; 2 * k + 1];
        taps[k] = 1.0;
        Self { taps }
    }

    pub fn half_width(&self) -> usize {
        self.taps.len() / 2
    }

    /// Tap `c_j` for `j` in `-K..=K`.
    pub fn tap(&self, j: i64) -> f64 {
        self.taps[(j + self.half_width() as i64) as usize]
    }
}

/// `b̃[n] = Σ_{k=-K}^{K} c_k z[n - k]`, zero outside `z`.
pub fn equalize(z: &[f64], taps: &EqualizerTaps) -> Vec<f64> {
    let k = taps.half_width() as i64;
    let len = z.len() as i64;
    (0..len)
        .map(|n| {
            (-k..=k)
                .map(|j| {
                    let i = n - j;
                    if i < 0 || i >= len {
                        0.0
                    } else {
                        taps.tap(j) * z[i as usize]
                    }
                })
                .sum()
        })
        .collect()
}

/// Hard decisions and soft values for the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    /// Positive favours symbol +1 (coded bit 0).
    pub llr: Vec<f64>,
    pub hard: Vec<i8>,
}

/// `hard = sign(b̃)` with zero mapped to +1, `llr = 2 b̃ scale`.
pub fn demodulate(b_tilde: &[f64], scale: f64) -> Demodulated {
    Demodulated {
        llr: b_tilde.iter().map(|b| 2.0 * b * scale).collect(),
        hard: b_tilde.iter().map(|&b| if b >= 0.0 { 1 } else { -1 }).collect(),
    }
}
