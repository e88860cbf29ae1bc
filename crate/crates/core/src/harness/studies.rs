use rand::Rng;
use serde::{Deserialize, Serialize};

use super::link::{
    run_estimation_trial, run_link_trial, run_link_trial_with, run_uncoded_trial, trial_rng, LinkSetup, TrialResult,
};
use super::parallel::run_indexed;
use super::scenario::{default_interferer_code, default_link_code, CombinerMode, InterfererSettings, LinkScenario};
use crate::acquisition::{
    acquisition_stats, block_search, serial_search, threshold_from_noise, AcquisitionStats, GaussianCells,
    SearchConfig, SearchResult, SearchSpace,
};
use crate::channel::{generate_channel, ChannelModel};
use crate::error::{Error, Result};
use crate::pulse::{
    coexistence_power, combine_pulses, mask_margin, GaussianPulseSpec, PsdEstimate, PulseCombination, SpectralMask,
    VictimBand,
};
use crate::receiver::{CompositeChannel, CrossCorrelation};
use crate::th_code::{symbol_waveform, Numerology, THCode};
use crate::units::from_db10;

/// Success statistics at one distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPoint {
    pub distance_m: f64,
    pub snr_db: f64,
    pub success_probability: f64,
    pub acquisition_probability: f64,
    /// Mean NMSE over acquired realizations.
    pub mean_nmse: f64,
    pub realizations: usize,
}

/// Link-success curve with its coverage figures.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCurve {
    pub points: Vec<LinkPoint>,
    /// Distance where the success probability falls to 0.9, linearly interpolated.
    pub outage_distance: Option<f64>,
    /// Mean over realizations of the largest grid distance up to which every point succeeds.
    pub mean_coverage: f64,
    pub trials: Vec<TrialResult>,
}

/// Success probability target of the outage distance.
pub const COVERAGE_SUCCESS: f64 = 0.9;

/// First crossing of `level` by the piecewise-linear curve through `(x, y)`, scanning up in x.
pub fn crossing_distance(points: &[(f64, f64)], level: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for &(x, y) in points {
        if y < level {
            let (x0, y0) = prev?;
            return Some(x0 + (y0 - level) / (y0 - y) * (x - x0));
        }
        prev = Some((x, y));
    }
    None
}

/// Run every realization at every distance of `scenario.distances`.
///
/// Realization `r` uses trial index `r` at every distance, so points are
/// paired: the same channel, timing and noise shapes, scaled by path loss.
pub fn sweep_link_success(scenario: &LinkScenario, workers: usize) -> Result<LinkCurve> {
    let setup = LinkSetup::new(scenario)?;
    let mut distances = scenario.distances.clone();
    distances.sort_by(f64::total_cmp);
    let n_r = scenario.realizations;
    let trials = run_indexed(distances.len() * n_r, workers, |i| {
        run_link_trial(&setup, (i % n_r) as u64, distances[i / n_r])
    })?;
    let points: Vec<LinkPoint> = distances
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let ts = &trials[k * n_r..(k + 1) * n_r];
            let acquired: Vec<&TrialResult> = ts.iter().filter(|t| t.acquired && t.nmse.is_finite()).collect();
            LinkPoint {
                distance_m: d,
                snr_db: scenario.snr_db_at(d),
                success_probability: ts.iter().filter(|t| t.success).count() as f64 / n_r as f64,
                acquisition_probability: ts.iter().filter(|t| t.acquired).count() as f64 / n_r as f64,
                mean_nmse: if acquired.is_empty() {
                    f64::NAN
                } else {
                    acquired.iter().map(|t| t.nmse).sum::<f64>() / acquired.len() as f64
                },
                realizations: n_r,
            }
        })
        .collect();
    let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.distance_m, p.success_probability)).collect();
    let mean_coverage = (0..n_r)
        .map(|r| {
            let mut reach = 0.0;
            for (k, &d) in distances.iter().enumerate() {
                if !trials[k * n_r + r].success {
                    break;
                }
                reach = d;
            }
            reach
        })
        .sum::<f64>()
        / n_r as f64;
    Ok(LinkCurve {
        outage_distance: crossing_distance(&curve, COVERAGE_SUCCESS),
        mean_coverage,
        points,
        trials,
    })
}

/// PER against the distance of an interfering piconet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterfererStudy {
    pub link: LinkScenario,
    /// Desired-link distance, meters.
    pub desired_distance: f64,
    /// Interferer distance over desired distance.
    pub ratios: Vec<f64>,
}

impl Default for InterfererStudy {
    fn default() -> Self {
        let link = LinkScenario {
            interferer: Some(InterfererSettings {
                model: ChannelModel::Cm1,
                code: default_interferer_code(),
                distance_ratio: 1.0,
            }),
            realizations: 50,
            ..LinkScenario::default()
        };
        Self {
            link,
            desired_distance: 5.0,
            ratios: vec![0.5, 0.71, 1.0, 1.41, 2.0, 2.83, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererPoint {
    pub distance_ratio: f64,
    pub per: f64,
    pub packets: usize,
    pub packet_errors: usize,
}

/// Packet error rate at each interferer distance ratio, every packet sent,
/// realizations paired across ratios.
pub fn sweep_interferer(study: &InterfererStudy, workers: usize) -> Result<Vec<InterfererPoint>> {
    let base = study
        .link
        .interferer
        .clone()
        .ok_or_else(|| Error::invalid("interferer sweep needs interferer settings"))?;
    if !(study.desired_distance > 0.0) {
        return Err(Error::invalid("desired distance must be positive"));
    }
    let setups: Vec<LinkSetup> = study
        .ratios
        .iter()
        .map(|&ratio| {
            let mut sc = study.link.clone();
            sc.interferer = Some(InterfererSettings {
                distance_ratio: ratio,
                ..base.clone()
            });
            LinkSetup::new(&sc)
        })
        .collect::<Result<_>>()?;
    let n_r = study.link.realizations;
    let trials = run_indexed(setups.len() * n_r, workers, |i| {
        run_link_trial_with(&setups[i / n_r], (i % n_r) as u64, study.desired_distance, false)
    })?;
    Ok(study
        .ratios
        .iter()
        .enumerate()
        .map(|(k, &ratio)| {
            let ts = &trials[k * n_r..(k + 1) * n_r];
            // A realization that fails before sending counts as a full packet block lost.
            let mut packets = 0;
            let mut errors = 0;
            for t in ts {
                if t.acquired && t.error.is_none() {
                    packets += t.packets;
                    errors += t.packet_errors;
                } else {
                    packets += study.link.packets_per_realization;
                    errors += study.link.packets_per_realization;
                }
            }
            InterfererPoint {
                distance_ratio: ratio,
                per: errors as f64 / packets as f64,
                packets,
                packet_errors: errors,
            }
        })
        .collect())
}

/// NMSE against SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationStudy {
    pub link: LinkScenario,
    pub snrs_db: Vec<f64>,
}

impl Default for EstimationStudy {
    fn default() -> Self {
        let mut link = LinkScenario::default();
        link.acquisition.genie = true;
        Self {
            link,
            snrs_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmsePoint {
    pub snr_db: f64,
    pub nmse: f64,
    pub realizations: usize,
}

/// Mean channel-estimation NMSE per SNR, realizations paired across SNR.
pub fn nmse_study(study: &EstimationStudy, workers: usize) -> Result<Vec<NmsePoint>> {
    let setup = LinkSetup::new(&study.link)?;
    let n_r = study.link.realizations;
    let vals = run_indexed(study.snrs_db.len() * n_r, workers, |i| {
        run_estimation_trial(&setup, (i % n_r) as u64, study.snrs_db[i / n_r])
    })?;
    study
        .snrs_db
        .iter()
        .enumerate()
        .map(|(k, &snr)| {
            let mut sum = 0.0;
            let mut n = 0;
            for v in &vals[k * n_r..(k + 1) * n_r] {
                let v = v
                    .as_ref()
                    .map_err(|e| Error::InsufficientData(format!("estimation trial failed: {e}")))?;
                if v.is_finite() {
                    sum += v;
                    n += 1;
                }
            }
            Ok(NmsePoint {
                snr_db: snr,
                nmse: if n > 0 { sum / n as f64 } else { f64::NAN },
                realizations: n,
            })
        })
        .collect()
}

/// Uncoded bit error rate per combiner mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BerStudy {
    pub link: LinkScenario,
    pub snrs_db: Vec<f64>,
    pub symbols_per_trial: usize,
    pub modes: Vec<CombinerMode>,
}

impl Default for BerStudy {
    fn default() -> Self {
        let mut link = LinkScenario::default();
        link.acquisition.genie = true;
        link.realizations = 20;
        Self {
            link,
            snrs_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            symbols_per_trial: 5000,
            modes: vec![CombinerMode::Mrc, CombinerMode::Mmse, CombinerMode::MmseNormalized],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub mode: CombinerMode,
    pub errors: usize,
    pub bits: usize,
    pub ber: f64,
}

/// Uncoded BER; every mode detects the same received blocks.
pub fn ber_study(study: &BerStudy, workers: usize) -> Result<Vec<BerPoint>> {
    if study.modes.is_empty() {
        return Err(Error::invalid("no combiner modes requested"));
    }
    let setup = LinkSetup::uncoded(&study.link, study.symbols_per_trial)?;
    let n_r = study.link.realizations;
    let res = run_indexed(study.snrs_db.len() * n_r, workers, |i| {
        run_uncoded_trial(&setup, (i % n_r) as u64, study.snrs_db[i / n_r], &study.modes)
    })?;
    let mut out = Vec::new();
    for (k, &snr) in study.snrs_db.iter().enumerate() {
        for (m, &mode) in study.modes.iter().enumerate() {
            let mut errors = 0;
            let mut bits = 0;
            for r in &res[k * n_r..(k + 1) * n_r] {
                if let Some(e) = &r.error {
                    return Err(Error::InsufficientData(format!("trial {} failed: {e}", r.trial)));
                }
                errors += r.errors[m];
                bits += r.symbols;
            }
            out.push(BerPoint {
                snr_db: snr,
                mode,
                errors,
                bits,
                ber: errors as f64 / bits as f64,
            });
        }
    }
    Ok(out)
}

/// Serial versus block search on channel-derived cell statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionStudy {
    pub seed: u64,
    pub numerology: Numerology,
    pub pulse: PulseCombination,
    pub code: THCode,
    pub channel: ChannelModel,
    /// Es/N0 of the unit-energy channel, dB.
    pub snr_db: f64,
    pub preamble_symbols: usize,
    pub n_cells: usize,
    pub block_size: usize,
    pub eta: f64,
    pub signal_fraction: f64,
    pub penalty_dwells: f64,
    pub max_tests: usize,
    pub runs: usize,
}

impl Default for AcquisitionStudy {
    fn default() -> Self {
        Self {
            seed: 1,
            numerology: Numerology::default(),
            pulse: PulseCombination::single(GaussianPulseSpec::fcc_fifth_order()),
            code: default_link_code(),
            channel: ChannelModel::Cm1,
            // Es/N0 at the CM1 coverage distance of the default calibration.
            snr_db: 10.0,
            preamble_symbols: 64,
            n_cells: 500,
            block_size: 25,
            eta: 4.0,
            signal_fraction: 0.25,
            penalty_dwells: 10.0,
            max_tests: 1000,
            runs: 10_000,
        }
    }
}

/// Paired results of both searches.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionReport {
    pub serial: Vec<SearchResult>,
    pub block: Vec<SearchResult>,
    pub serial_stats: AcquisitionStats,
    pub block_stats: AcquisitionStats,
}

/// Each run draws a channel and a uniform arrival cell, then runs serial and
/// block search from the same start cell with identically seeded noise.
pub fn acquisition_study(study: &AcquisitionStudy, workers: usize) -> Result<AcquisitionReport> {
    let num = study.numerology;
    num.validate()?;
    study.code.validate(&num)?;
    if study.runs == 0 || study.n_cells == 0 || study.preamble_symbols == 0 || study.block_size == 0 {
        return Err(Error::invalid("acquisition study counts must be positive"));
    }
    let params = study
        .channel
        .params()
        .ok_or_else(|| Error::invalid("preset channel required"))?;
    let dt = num.sim_period();
    let os = num.oversampling as i64;
    let pulse = combine_pulses(&study.pulse, dt)?.waveform;
    let tx = symbol_waveform(&study.code, &num, &pulse)?.waveform.normalized();
    let x = CrossCorrelation::new(&tx, &tx);
    let sigma = (0.5 / study.preamble_symbols as f64).sqrt();
    let dwell = study.preamble_symbols as f64 * num.symbol_period();
    let pairs = run_indexed(study.runs, workers, |i| -> Result<(SearchResult, SearchResult)> {
        let mut rng = trial_rng(study.seed, i as u64, 0);
        let ch = generate_channel(&params, study.channel, &mut rng)?;
        let arrival = rng.random_range(0..study.n_cells as i64 * os);
        let amp = from_db10(study.snr_db).sqrt() * ch.shadowing_amplitude();
        let h = CompositeChannel::from_paths(ch.paths(), amp, &x, dt, num.oversampling, arrival);
        let peak = h.taps.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let signal: Vec<usize> = (0..study.n_cells)
            .filter(|&c| h.at(c as i64).abs() >= study.signal_fraction * peak)
            .collect();
        let space = SearchSpace::new(study.n_cells, &signal, dwell)?;
        let mut noise_rng = trial_rng(study.seed, i as u64, 1);
        let noise: Vec<f64> = (0..256)
            .map(|_| sigma * rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut noise_rng))
            .collect();
        let cfg = SearchConfig {
            threshold: threshold_from_noise(&noise, study.eta)?,
            block_size: 1,
            penalty_time: study.penalty_dwells * dwell,
            max_tests: study.max_tests,
            start_cell: Some(rng.random_range(0..study.n_cells)),
        };
        let means: Vec<f64> = (0..study.n_cells).map(|c| h.at(c as i64)).collect();
        let mut cells = GaussianCells {
            means: means.clone(),
            sigma,
        };
        let serial = serial_search(&space, &cfg, &mut cells, &mut trial_rng(study.seed, i as u64, 2))?;
        let block_cfg = SearchConfig {
            block_size: study.block_size,
            ..cfg
        };
        let mut cells = GaussianCells { means, sigma };
        let block = block_search(&space, &block_cfg, &mut cells, &mut trial_rng(study.seed, i as u64, 2))?;
        Ok((serial, block))
    })?;
    let (serial, block): (Vec<SearchResult>, Vec<SearchResult>) =
        pairs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(AcquisitionReport {
        serial_stats: acquisition_stats(&serial)?,
        block_stats: acquisition_stats(&block)?,
        serial,
        block,
    })
}

/// One row of the coexistence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceRow {
    pub system: String,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub achieved_dbm: f64,
    pub desired_dbm: Option<f64>,
}

impl CoexistenceRow {
    pub fn meets_desired(&self) -> Option<bool> {
        self.desired_dbm.map(|d| self.achieved_dbm <= d)
    }
}

/// In-band interference power of `psd` at every victim receiver `distance` meters away.
pub fn coexistence_table(psd: &PsdEstimate, victims: &[VictimBand], distance: f64) -> Result<Vec<CoexistenceRow>> {
    victims
        .iter()
        .map(|v| {
            Ok(CoexistenceRow {
                system: v.name.clone(),
                f_low_hz: v.f_low_hz,
                f_high_hz: v.f_high_hz,
                achieved_dbm: coexistence_power(psd, (v.f_low_hz, v.f_high_hz), distance)?,
                desired_dbm: v.desired_dbm,
            })
        })
        .collect()
}

/// Lone-waveform PSD scaled to the largest power that keeps it under `mask`.
pub fn mask_limited_psd(psd_at_unit_power: &PsdEstimate, mask: &SpectralMask) -> PsdEstimate {
    let (margin, _) = mask_margin(psd_at_unit_power, mask);
    PsdEstimate {
        frequencies: psd_at_unit_power.frequencies.clone(),
        density: psd_at_unit_power.density.iter().map(|d| d + margin).collect(),
        resolution_bandwidth: psd_at_unit_power.resolution_bandwidth,
    }
}
