//! Rate-1/2 convolutional code with soft-decision Viterbi decoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feed-forward rate-1/2 code, terminated by flushing zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvCodeSpec {
    pub constraint_length: u32,
    /// Generator taps, most significant bit on the current input.
    pub generators: [u32; 2],
}

impl Default for ConvCodeSpec {
    /// The (171, 133) octal, K = 7 code.
    fn default() -> Self {
        Self {
            constraint_length: 7,
            generators: [0o171, 0o133],
        }
    }
}

impl ConvCodeSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=16).contains(&k) {
            return Err(Error::invalid("constraint length must be in 2..=16"));
        }
        for g in self.generators {
            if g == 0 || g >> k != 0 {
                return Err(Error::invalid(format!(
                    "generator {g:o} must be nonzero with degree below {k}"
                )));
            }
        }
        Ok(())
    }

    pub fn memory(&self) -> usize {
        self.constraint_length as usize - 1
    }

    pub fn n_states(&self) -> usize {
        1 << self.memory()
    }

    /// Coded length for `n` information bits.
    pub fn coded_len(&self, n: usize) -> usize {
        2 * (n + self.memory())
    }

    /// Output pair for register contents `reg` (newest bit in the MSB).
    fn outputs(&self, reg: u32) -> [u8; 2] {
        [
            ((reg & self.generators[0]).count_ones() & 1) as u8,
            ((reg & self.generators[1]).count_ones() & 1) as u8,
        ]
    }
}

/// Encode 0/1 bits; `memory` zero tail bits return the register to zero.
pub fn conv_encode(bits: &[u8], spec: &ConvCodeSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::invalid("bits must be 0 or 1"));
    }
    let m = spec.memory() as u32;
    let mut state = 0u32;
    let mut out = Vec::with_capacity(spec.coded_len(bits.len()));
    for &b in bits.iter().chain(std::iter::repeat_n(&0, m as usize)) {
        let reg = ((b as u32) << m) | state;
        out.extend_from_slice(&spec.outputs(reg));
        state = reg >> 1;
    }
    Ok(out)
}

/// Maximum-likelihood decoding of a terminated block.
///
/// `llrs[i] > 0` favours coded bit 0. Ties prefer the lower predecessor state.
pub fn viterbi_decode(llrs: &[f64], spec: &ConvCodeSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let m = spec.memory();
    if !llrs.len().is_multiple_of(2) || llrs.len() < 2 * m {
        return Err(Error::invalid(format!(
            "{} soft values do not match a terminated rate-1/2 block",
            llrs.len()
        )));
    }
    if llrs.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("soft values contain NaN"));
    }
    let n_steps = llrs.len() / 2;
    let n_states = spec.n_states();
    let mbits = m as u32;

    // Branch outputs for (state, input).
    let mut branch = vec![[0u8; 2]; 2 * n_states];
    for s in 0..n_states {
        for b in 0..2 {
            branch[2 * s + b] = spec.outputs(((b as u32) << mbits) | s as u32);
        }
    }

    const NEG: f64 = f64::NEG_INFINITY;
    let mut metric = vec![NEG; n_states];
    metric[0] = 0.0;
    let mut next = vec![NEG; n_states];
    // decisions[t][s'] = predecessor state of s' at step t.
    let mut decisions = vec![0u16; n_steps * n_states];
    for t in 0..n_steps {
        let (l0, l1) = (llrs[2 * t], llrs[2 * t + 1]);
        let bm = |o: [u8; 2]| (if o[0] == 0 { l0 } else { -l0 }) + (if o[1] == 0 { l1 } else { -l1 });
        next.iter_mut().for_each(|x| *x = NEG);
        for ns in 0..n_states {
            // ns = reg >> 1 with reg = (b << m) | s, so b = ns >> (m-1) and s = (ns << 1 | lsb) & mask.
            let b = ns >> (m - 1);
            let base = (ns << 1) & (n_states - 1);
            for lsb in 0..2 {
                let s = base | lsb;
                if metric[s] == NEG {
                    continue;
                }
                let cand = metric[s] + bm(branch[2 * s + b]);
                if cand > next[ns] {
                    next[ns] = cand;
                    decisions[t * n_states + ns] = s as u16;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }
    if metric[0] == NEG {
        return Err(Error::invalid("trellis did not terminate in the zero state"));
    }
    let mut bits = vec![0u8; n_steps];
    let mut s = 0usize;
    for t in (0..n_steps).rev() {
        bits[t] = (s >> (m - 1)) as u8;
        s = decisions[t * n_states + s] as usize;
    }
    bits.truncate(n_steps - m);
    Ok(bits)
}

/// Map coded bits to antipodal symbols, 0 to +1 and 1 to -1.
pub fn bits_to_symbols(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect()
}
