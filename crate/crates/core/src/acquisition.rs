//! Coarse timing acquisition by serial and sequential block search.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::th_code::Numerology;
use crate::waveform::SampledWaveform;

/// Delay hypotheses and which of them are aligned with a real path.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub n_cells: usize,
    signal: Vec<bool>,
    /// Seconds per cell test.
    pub dwell_time: f64,
}

impl SearchSpace {
    pub fn new(n_cells: usize, signal_cells: &[usize], dwell_time: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::invalid("search space needs at least one cell"));
        }
        if !(dwell_time >= 0.0) || !dwell_time.is_finite() {
            return Err(Error::invalid("dwell time must be finite and non-negative"));
        }
        let mut signal = vec![false; n_cells];
        for &c in signal_cells {
            *signal
                .get_mut(c)
                .ok_or_else(|| Error::invalid(format!("signal cell {c} outside 0..{n_cells}")))? = true;
        }
        Ok(Self {
            n_cells,
            signal,
            dwell_time,
        })
    }

    pub fn is_signal(&self, cell: usize) -> bool {
        self.signal[cell]
    }

    pub fn signal_cells(&self) -> Vec<usize> {
        (0..self.n_cells).filter(|&c| self.signal[c]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub threshold: f64,
    pub block_size: usize,
    /// Seconds lost per false alarm.
    pub penalty_time: f64,
    pub max_tests: usize,
    /// Fixed first cell; random when `None`.
    pub start_cell: Option<usize>,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) {
            return Err(Error::invalid("threshold must be non-negative"));
        }
        if self.block_size == 0 {
            return Err(Error::invalid("block size must be at least 1"));
        }
        if !(self.penalty_time >= 0.0) {
            return Err(Error::invalid("penalty time must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchOutcome {
    Detect,
    FalseLockThenDetect,
    Exhausted,
}

impl SearchOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SearchOutcome::Detect => "detect",
            SearchOutcome::FalseLockThenDetect => "false_lock_then_detect",
            SearchOutcome::Exhausted => "exhausted",
        }
    }

    pub fn detected(&self) -> bool {
        !matches!(self, SearchOutcome::Exhausted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub found_cell: Option<usize>,
    /// Seconds: `tests × dwell + false_alarms × penalty`.
    pub elapsed: f64,
    pub tests: usize,
    pub false_alarms: usize,
    pub outcome: SearchOutcome,
}

/// Produces one correlator statistic per cell test.
pub trait CellStatisticSource {
    fn draw(&mut self, cell: usize, rng: &mut dyn rand::RngCore) -> f64;
}

/// `|m_c + σ N(0,1)|` per test: the dwell-averaged correlator output with
/// known per-cell means.
#[derive(Debug, Clone)]
pub struct GaussianCells {
    pub means: Vec<f64>,
    pub sigma: f64,
}

impl CellStatisticSource for GaussianCells {
    fn draw(&mut self, cell: usize, rng: &mut dyn rand::RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.means.get(cell).copied().unwrap_or(0.0) + self.sigma * z).abs()
    }
}

/// Statistics computed from a received waveform that already holds its noise.
pub struct WaveformCells<'a> {
    pub received: &'a SampledWaveform,
    pub template: &'a SampledWaveform,
    pub numerology: Numerology,
    pub preamble: &'a [i8],
    /// Cell index of grid offset zero.
    pub first_cell: i64,
}

impl CellStatisticSource for WaveformCells<'_> {
    fn draw(&mut self, cell: usize, _rng: &mut dyn rand::RngCore) -> f64 {
        cell_statistic(
            self.received,
            self.template,
            cell as i64 + self.first_cell,
            &self.numerology,
            self.preamble,
        )
    }
}

/// `|(1/N) Σ_k b_k ∫ x(t) w(t - (cell + k p)Δ) dt|` over the `N` preamble symbols.
pub fn cell_statistic(
    received: &SampledWaveform,
    template: &SampledWaveform,
    cell: i64,
    num: &Numerology,
    preamble: &[i8],
) -> f64 {
    if preamble.is_empty() {
        return 0.0;
    }
    let os = num.oversampling as i64;
    let p = num.samples_per_symbol as i64;
    let acc: f64 = preamble
        .iter()
        .enumerate()
        .map(|(k, &b)| b as f64 * received.inner_product_shifted(template, (cell + k as i64 * p) * os))
        .sum();
    (acc / preamble.len() as f64).abs()
}

/// Threshold `eta × σ̂` with σ̂ the RMS of noise-only correlator outputs.
pub fn threshold_from_noise(noise_outputs: &[f64], eta: f64) -> Result<f64> {
    if noise_outputs.is_empty() {
        return Err(Error::InsufficientData("no noise-only outputs".into()));
    }
    let ms = noise_outputs.iter().map(|x| x * x).sum::<f64>() / noise_outputs.len() as f64;
    Ok(eta * ms.sqrt())
}

struct Tally<'a> {
    space: &'a SearchSpace,
    cfg: &'a SearchConfig,
    tests: usize,
    false_alarms: usize,
}

impl Tally<'_> {
    fn finish(&self, found: Option<usize>) -> SearchResult {
        let outcome = match (found, self.false_alarms) {
            (None, _) => SearchOutcome::Exhausted,
            (Some(_), 0) => SearchOutcome::Detect,
            (Some(_), _) => SearchOutcome::FalseLockThenDetect,
        };
        SearchResult {
            found_cell: found,
            elapsed: self.tests as f64 * self.space.dwell_time + self.false_alarms as f64 * self.cfg.penalty_time,
            tests: self.tests,
            false_alarms: self.false_alarms,
            outcome,
        }
    }

    fn budget_left(&self) -> bool {
        self.tests < self.cfg.max_tests
    }
}

fn start_cell<R: Rng + ?Sized>(space: &SearchSpace, cfg: &SearchConfig, rng: &mut R) -> usize {
    match cfg.start_cell {
        Some(c) => c % space.n_cells,
        None => rng.random_range(0..space.n_cells),
    }
}

/// Test cells one by one, cyclically from a random start.
///
/// A crossing on a non-signal cell costs the penalty time and the search
/// resumes with the next cell.
pub fn serial_search<R: Rng>(
    space: &SearchSpace,
    cfg: &SearchConfig,
    source: &mut dyn CellStatisticSource,
    rng: &mut R,
) -> Result<SearchResult> {
    cfg.validate()?;
    let start = start_cell(space, cfg, rng);
    let mut t = Tally {
        space,
        cfg,
        tests: 0,
        false_alarms: 0,
    };
    let mut i = 0usize;
    while t.budget_left() {
        let c = (start + i) % space.n_cells;
        i += 1;
        t.tests += 1;
        if source.draw(c, rng) > cfg.threshold {
            if space.is_signal(c) {
                return Ok(t.finish(Some(c)));
            }
            t.false_alarms += 1;
        }
    }
    Ok(t.finish(None))
}

/// Cells probed by the quick test of a block.
fn comb(block: std::ops::Range<usize>) -> Vec<usize> {
    let stride = (block.len() / 4).max(1);
    block.step_by(stride).collect()
}

/// Quick test per block (sum of |statistic| over a comb of its cells against
/// `threshold × sqrt(comb size)`), then a serial search inside an accepted
/// block. An accepted block without detection costs the in-block tests plus
/// one penalty time. Single-cell blocks use the cell test itself.
pub fn block_search<R: Rng>(
    space: &SearchSpace,
    cfg: &SearchConfig,
    source: &mut dyn CellStatisticSource,
    rng: &mut R,
) -> Result<SearchResult> {
    cfg.validate()?;
    let bs = cfg.block_size;
    let n_blocks = space.n_cells.div_ceil(bs);
    let start = start_cell(space, cfg, rng);
    let first_block = start / bs;
    let mut t = Tally {
        space,
        cfg,
        tests: 0,
        false_alarms: 0,
    };
    let mut i = 0usize;
    while t.budget_left() {
        let b = (first_block + i) % n_blocks;
        i += 1;
        let cells = b * bs..((b + 1) * bs).min(space.n_cells);
        if cells.len() == 1 {
            let c = cells.start;
            t.tests += 1;
            if source.draw(c, rng) > cfg.threshold {
                if space.is_signal(c) {
                    return Ok(t.finish(Some(c)));
                }
                t.false_alarms += 1;
            }
            continue;
        }
        let probe = comb(cells.clone());
        t.tests += 1;
        let stat: f64 = probe.iter().map(|&c| source.draw(c, rng)).sum();
        if stat <= cfg.threshold * (probe.len() as f64).sqrt() {
            continue;
        }
        let mut detected = None;
        for c in cells {
            if !t.budget_left() {
                break;
            }
            t.tests += 1;
            if source.draw(c, rng) > cfg.threshold {
                if space.is_signal(c) {
                    detected = Some(c);
                    break;
                }
                t.false_alarms += 1;
            }
        }
        if detected.is_some() {
            return Ok(t.finish(detected));
        }
        t.false_alarms += 1;
    }
    Ok(t.finish(None))
}

/// Summary over many searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionStats {
    pub p_detect: f64,
    pub mean_time: f64,
    pub mean_tests: f64,
    pub median_time: f64,
    pub p90_time: f64,
}

/// Detection probability and timing distribution; times cover detected runs only.
pub fn acquisition_stats(results: &[SearchResult]) -> Result<AcquisitionStats> {
    if results.is_empty() {
        return Err(Error::InsufficientData("no search results".into()));
    }
    let mut times: Vec<f64> = results
        .iter()
        .filter(|r| r.outcome.detected())
        .map(|r| r.elapsed)
        .collect();
    times.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        if times.is_empty() {
            f64::NAN
        } else {
            let idx = ((q * times.len() as f64).ceil() as usize).clamp(1, times.len()) - 1;
            times[idx]
        }
    };
    Ok(AcquisitionStats {
        p_detect: times.len() as f64 / results.len() as f64,
        mean_time: if times.is_empty() {
            f64::NAN
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        },
        mean_tests: results.iter().map(|r| r.tests as f64).sum::<f64>() / results.len() as f64,
        median_time: quantile(0.5),
        p90_time: quantile(0.9),
    })
}

/// CSV `run,outcome,tests,elapsed_ns`.
pub fn results_csv(results: &[SearchResult]) -> String {
    let mut s = String::from("run,outcome,tests,elapsed_ns\n");
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{},{}", r.outcome.label(), r.tests, r.elapsed * 1e9);
    }
    s
}
