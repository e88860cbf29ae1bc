//! Experiment definitions, CSV emission and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::LinkScenario;
use super::studies::{
    acquisition_study, ber_study, coexistence_table, mask_limited_psd, nmse_study, sweep_interferer,
    sweep_link_success, AcquisitionStudy, BerStudy, EstimationStudy, InterfererStudy,
};
use crate::error::{Error, Result};
use crate::pulse::{
    combine_pulses, mask_margin, optimize_pulse_design, psd_estimate, sequence_factor_ripple_db, GaussianPulseSpec,
    MaskSegment, OptimizerConfig, PsdConfig, PsdEstimate, PulseCombination, SpectralMask, TrainContext, VictimBand,
};
use crate::th_code::{generate_code_set, CodeSearchOptions, CodeSet, Numerology, PulseSequence, THCode};
use crate::units::watts_to_dbm;

/// Mask-constrained pulse design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseDesignConfig {
    pub mask: SpectralMask,
    pub base: GaussianPulseSpec,
    /// Pulses beyond the first.
    pub extra_pulses: usize,
    /// Largest delay of any pulse, seconds.
    pub delay_range: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for PulseDesignConfig {
    fn default() -> Self {
        Self {
            mask: SpectralMask::fcc_indoor(),
            base: GaussianPulseSpec::fcc_fifth_order(),
            extra_pulses: 3,
            delay_range: 0.2e-9,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// PSD of a pulse combination, alone or as a modulated train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsdExperiment {
    pub numerology: Numerology,
    pub pulse: PulseCombination,
    /// Train pulse positions and weights; the lone waveform when absent.
    pub sequence: Option<PulseSequence>,
    pub realizations: usize,
    pub seed: u64,
    pub psd: PsdConfig,
    /// Band of the reported peak-to-average ripple, Hz.
    pub band: (f64, f64),
}

impl Default for PsdExperiment {
    fn default() -> Self {
        Self {
            numerology: Numerology::default(),
            pulse: PulseCombination::single(GaussianPulseSpec::fcc_fifth_order()),
            sequence: None,
            realizations: 20,
            seed: 1,
            psd: PsdConfig::default(),
            band: (3.1e9, 10.6e9),
        }
    }
}

/// Time-hopping code search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeSearchConfig {
    pub numerology: Numerology,
    pub n_codes: usize,
    pub candidates: usize,
    pub seed: u64,
    pub polarity: bool,
    pub exhaustive: bool,
    pub xcorr_weight: f64,
    pub band: (f64, f64),
    pub grid_spacing: f64,
}

impl Default for CodeSearchConfig {
    fn default() -> Self {
        let o = CodeSearchOptions::default();
        Self {
            numerology: Numerology::default(),
            n_codes: 4,
            candidates: 400,
            seed: 1,
            polarity: o.polarity,
            exhaustive: o.exhaustive,
            xcorr_weight: o.xcorr_weight,
            band: o.band,
            grid_spacing: o.grid_spacing,
        }
    }
}

/// Interference into narrowband receivers from a flat-mask transmitter and
/// from a design shaped under the mask plus extra notches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoexistenceConfig {
    pub mask: SpectralMask,
    /// Additional limits imposed on the shaped design.
    pub notches: Vec<MaskSegment>,
    pub design: PulseDesignConfig,
    pub victims: Vec<VictimBand>,
    /// Victim distance, meters.
    pub distance: f64,
}

impl Default for CoexistenceConfig {
    fn default() -> Self {
        Self {
            mask: SpectralMask::fcc_indoor(),
            notches: vec![MaskSegment {
                f_low_hz: 5.15e9,
                f_high_hz: 5.35e9,
                limit_dbm_per_mhz: -61.3,
            }],
            design: PulseDesignConfig::default(),
            victims: VictimBand::standard_set(),
            distance: 1.0,
        }
    }
}

impl CoexistenceConfig {
    /// Regulatory mask with every notch applied.
    pub fn design_mask(&self) -> Result<SpectralMask> {
        let mut m = self.mask.clone();
        for n in &self.notches {
            m = m.with_notch(n.f_low_hz, n.f_high_hz, n.limit_dbm_per_mhz)?;
        }
        Ok(m)
    }
}

/// A reproducible experiment; the manifest stores one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    PulseDesign(PulseDesignConfig),
    Psd(PsdExperiment),
    CodeSearch(CodeSearchConfig),
    LinkSweep(LinkScenario),
    InterfererSweep(InterfererStudy),
    Coexistence(CoexistenceConfig),
    AcquisitionStudy(AcquisitionStudy),
    EstimationStudy(EstimationStudy),
    BerStudy(BerStudy),
}

impl Experiment {
    pub fn command(&self) -> &'static str {
        match self {
            Experiment::PulseDesign(_) => "pulse-design",
            Experiment::Psd(_) => "psd",
            Experiment::CodeSearch(_) => "code-search",
            Experiment::LinkSweep(_) => "link-sweep",
            Experiment::InterfererSweep(_) => "interferer-sweep",
            Experiment::Coexistence(_) => "coexistence",
            Experiment::AcquisitionStudy(_) => "acquisition-study",
            Experiment::EstimationStudy(_) => "estimation-study",
            Experiment::BerStudy(_) => "ber-study",
        }
    }

    /// Parse a table holding `command = "<name>"` and that experiment's fields.
    pub fn from_toml(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Replace the master seed. Experiments without randomness ignore it.
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::PulseDesign(_) | Experiment::Coexistence(_) => {}
            Experiment::Psd(c) => c.seed = seed,
            Experiment::CodeSearch(c) => c.seed = seed,
            Experiment::LinkSweep(c) => c.seed = seed,
            Experiment::InterfererSweep(c) => c.link.seed = seed,
            Experiment::AcquisitionStudy(c) => c.seed = seed,
            Experiment::EstimationStudy(c) => c.link.seed = seed,
            Experiment::BerStudy(c) => c.link.seed = seed,
        }
    }

    /// Replace the Monte-Carlo trial count (realizations, runs or candidates).
    pub fn set_trials(&mut self, trials: usize) -> Result<()> {
        if trials == 0 {
            return Err(Error::invalid("trial count must be positive"));
        }
        match self {
            Experiment::PulseDesign(_) | Experiment::Coexistence(_) => {}
            Experiment::Psd(c) => c.realizations = trials,
            Experiment::CodeSearch(c) => c.candidates = trials,
            Experiment::LinkSweep(c) => c.realizations = trials,
            Experiment::InterfererSweep(c) => c.link.realizations = trials,
            Experiment::AcquisitionStudy(c) => c.runs = trials,
            Experiment::EstimationStudy(c) => c.link.realizations = trials,
            Experiment::BerStudy(c) => c.link.realizations = trials,
        }
        Ok(())
    }
}

/// Everything needed to reproduce a run's CSVs exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub experiment: Experiment,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

impl Manifest {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Write `header` then one serialized record per row.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

struct Out {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Out {
    fn csv<T: Serialize>(&mut self, name: &str, header: &[&str], rows: &[T]) -> Result<()> {
        let p = self.dir.join(name);
        write_csv(&p, header, rows)?;
        self.files.push(p);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.dir.join(name);
        fs::write(&p, body)?;
        self.files.push(p);
        Ok(())
    }
}

/// Run `experiment`, write its CSVs and manifest into `out_dir`, and return the written paths.
///
/// Outputs do not depend on `workers`.
pub fn run_experiment(experiment: &Experiment, out_dir: &Path, workers: usize) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut out = Out {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    match experiment {
        Experiment::PulseDesign(c) => pulse_design(c, &mut out)?,
        Experiment::Psd(c) => psd(c, &mut out)?,
        Experiment::CodeSearch(c) => code_search(c, &mut out)?,
        Experiment::LinkSweep(c) => link_sweep(c, workers, &mut out)?,
        Experiment::InterfererSweep(c) => {
            let pts = sweep_interferer(c, workers)?;
            let two: Vec<(f64, f64)> = pts.iter().map(|p| (p.distance_ratio, p.per)).collect();
            out.csv("interferer_per.csv", &["distance_ratio", "per"], &two)?;
            out.csv(
                "interferer_points.csv",
                &["distance_ratio", "per", "packets", "packet_errors"],
                &pts,
            )?;
        }
        Experiment::Coexistence(c) => coexistence(c, &mut out)?,
        Experiment::AcquisitionStudy(c) => acquisition(c, workers, &mut out)?,
        Experiment::EstimationStudy(c) => {
            let pts = nmse_study(c, workers)?;
            let two: Vec<(f64, f64)> = pts.iter().map(|p| (p.snr_db, p.nmse)).collect();
            out.csv("nmse.csv", &["snr_db", "nmse"], &two)?;
            out.csv("nmse_points.csv", &["snr_db", "nmse", "realizations"], &pts)?;
        }
        Experiment::BerStudy(c) => {
            let pts = ber_study(c, workers)?;
            out.csv("ber.csv", &["snr_db", "mode", "errors", "bits", "ber"], &pts)?;
            for mode in &c.modes {
                let two: Vec<(f64, f64)> = pts
                    .iter()
                    .filter(|p| p.mode == *mode)
                    .map(|p| (p.snr_db, p.ber))
                    .collect();
                out.csv(&format!("ber_{}.csv", mode.label()), &["snr_db", "ber"], &two)?;
            }
        }
    }
    out.text(MANIFEST_FILE, &Manifest::new(experiment.clone()).to_toml()?)?;
    Ok(out.files)
}

/// Re-run the experiment recorded in `manifest_path` into `out_dir`.
pub fn rerun(manifest_path: &Path, out_dir: &Path, workers: usize) -> Result<Vec<PathBuf>> {
    let m = Manifest::load(manifest_path)?;
    run_experiment(&m.experiment, out_dir, workers)
}

fn pulse_design(c: &PulseDesignConfig, out: &mut Out) -> Result<()> {
    let d = optimize_pulse_design(&c.mask, &c.base, c.extra_pulses, c.delay_range, &c.optimizer)?;
    let dt = c.optimizer.sample_period;
    let cfg = PsdConfig {
        tx_power_w: d.max_tx_power_w,
        max_frequency: c.mask.f_max(),
        resolution_bandwidth: c.optimizer.grid_spacing,
    };
    let est = psd_estimate(&d.waveform(dt)?, None, 1, 0, &cfg)?;
    let (margin, _) = mask_margin(&est, &c.mask);
    out.text("design.toml", &d.combination.to_toml()?)?;
    write_psd(out, "design_psd.csv", &est)?;
    out.csv(
        "design_summary.csv",
        &[
            "extra_pulses",
            "step1_gain_db",
            "step2_gain_db",
            "max_tx_power_dbm",
            "min_margin_db",
            "converged",
            "evaluations",
        ],
        &[(
            c.extra_pulses,
            -10.0 * d.step1_objective.log10(),
            d.objective_db(),
            watts_to_dbm(d.max_tx_power_w),
            margin,
            d.converged,
            d.evaluations,
        )],
    )
}

fn write_psd(out: &mut Out, name: &str, est: &PsdEstimate) -> Result<()> {
    let rows: Vec<(f64, f64)> = est
        .frequencies
        .iter()
        .copied()
        .zip(est.density.iter().copied())
        .collect();
    out.csv(name, &["frequency_hz", "psd_dbm_per_mhz"], &rows)
}

fn psd(c: &PsdExperiment, out: &mut Out) -> Result<()> {
    let dt = c.numerology.sim_period();
    let w = combine_pulses(&c.pulse, dt)?.waveform;
    let est = match &c.sequence {
        Some(seq) => {
            let ctx = TrainContext {
                sequence: seq.clone(),
                numerology: c.numerology,
            };
            psd_estimate(&w, Some(&ctx), c.realizations, c.seed, &c.psd)?
        }
        None => psd_estimate(&w, None, 1, c.seed, &c.psd)?,
    };
    write_psd(out, "psd.csv", &est)?;
    let (f_peak, d_peak) = est.peak();
    let factor = c
        .sequence
        .as_ref()
        .map(|s| sequence_factor_ripple_db(s, &c.numerology, c.band, c.psd.resolution_bandwidth.max(1e6)));
    out.csv(
        "psd_summary.csv",
        &[
            "peak_frequency_hz",
            "peak_dbm_per_mhz",
            "ripple_db",
            "sequence_factor_ripple_db",
        ],
        &[(f_peak, d_peak, est.peak_to_average_db(c.band), factor)],
    )
}

#[derive(Serialize)]
struct CodeRow {
    index: usize,
    chips: String,
    polarity: String,
    ripple_db: f64,
    max_xcorr: f64,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn code_search(c: &CodeSearchConfig, out: &mut Out) -> Result<()> {
    let opts = CodeSearchOptions {
        polarity: c.polarity,
        exhaustive: c.exhaustive,
        band: c.band,
        grid_spacing: c.grid_spacing,
        xcorr_weight: c.xcorr_weight,
    };
    let codes = generate_code_set(c.n_codes, &c.numerology, c.candidates, c.seed, &opts)?;
    let set = CodeSet {
        numerology: c.numerology,
        codes: codes.iter().map(|s| s.code.clone()).collect::<Vec<THCode>>(),
    };
    out.text("codes.toml", &set.to_toml()?)?;
    let rows: Vec<CodeRow> = codes
        .iter()
        .enumerate()
        .map(|(i, s)| CodeRow {
            index: i,
            chips: join(&s.code.chips),
            polarity: join(&s.code.polarity),
            ripple_db: s.ripple_db,
            max_xcorr: s.max_xcorr,
        })
        .collect();
    out.csv(
        "codes.csv",
        &["index", "chips", "polarity", "ripple_db", "max_xcorr"],
        &rows,
    )
}

fn link_sweep(c: &LinkScenario, workers: usize, out: &mut Out) -> Result<()> {
    let curve = sweep_link_success(c, workers)?;
    let two: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|p| (p.distance_m, p.success_probability))
        .collect();
    out.csv("link_success.csv", &["distance_m", "success_probability"], &two)?;
    out.csv(
        "link_points.csv",
        &[
            "distance_m",
            "snr_db",
            "success_probability",
            "acquisition_probability",
            "mean_nmse",
            "realizations",
        ],
        &curve.points,
    )?;
    out.csv(
        "link_coverage.csv",
        &["outage_distance_m", "mean_coverage_m"],
        &[(curve.outage_distance, curve.mean_coverage)],
    )?;
    out.csv(
        "link_trials.csv",
        &[
            "trial",
            "distance",
            "snr_db",
            "acquired",
            "acquisition_tests",
            "nmse",
            "packets",
            "packet_errors",
            "success",
            "error",
        ],
        &curve.trials,
    )
}

#[derive(Serialize)]
struct CoexRow<'a> {
    system: &'a str,
    f_low_hz: f64,
    f_high_hz: f64,
    flat_mask_dbm: f64,
    achieved_dbm: f64,
    desired_dbm: Option<f64>,
}

fn coexistence(c: &CoexistenceConfig, out: &mut Out) -> Result<()> {
    let df = c.design.optimizer.grid_spacing;
    let flat = PsdEstimate::from_mask(&c.mask, df);
    let design_mask = c.design_mask()?;
    let d = optimize_pulse_design(
        &design_mask,
        &c.design.base,
        c.design.extra_pulses,
        c.design.delay_range,
        &c.design.optimizer,
    )?;
    let unit = psd_estimate(
        &d.waveform(c.design.optimizer.sample_period)?,
        None,
        1,
        0,
        &PsdConfig {
            tx_power_w: 1.0,
            max_frequency: design_mask.f_max(),
            resolution_bandwidth: df,
        },
    )?;
    let shaped = mask_limited_psd(&unit, &design_mask);
    let flat_rows = coexistence_table(&flat, &c.victims, c.distance)?;
    let shaped_rows = coexistence_table(&shaped, &c.victims, c.distance)?;
    let rows: Vec<CoexRow> = flat_rows
        .iter()
        .zip(&shaped_rows)
        .map(|(f, s)| CoexRow {
            system: &f.system,
            f_low_hz: f.f_low_hz,
            f_high_hz: f.f_high_hz,
            flat_mask_dbm: f.achieved_dbm,
            achieved_dbm: s.achieved_dbm,
            desired_dbm: f.desired_dbm,
        })
        .collect();
    out.text("coexistence_design.toml", &d.combination.to_toml()?)?;
    out.csv(
        "coexistence.csv",
        &[
            "system",
            "f_low_hz",
            "f_high_hz",
            "flat_mask_dbm",
            "achieved_dbm",
            "desired_dbm",
        ],
        &rows,
    )
}

#[derive(Serialize)]
struct RunRow {
    run: usize,
    method: &'static str,
    outcome: &'static str,
    tests: usize,
    false_alarms: usize,
    elapsed_ns: f64,
}

fn acquisition(c: &AcquisitionStudy, workers: usize, out: &mut Out) -> Result<()> {
    let rep = acquisition_study(c, workers)?;
    let mut rows = Vec::with_capacity(2 * rep.serial.len());
    for (method, results) in [("serial", &rep.serial), ("block", &rep.block)] {
        for (i, r) in results.iter().enumerate() {
            rows.push(RunRow {
                run: i,
                method,
                outcome: r.outcome.label(),
                tests: r.tests,
                false_alarms: r.false_alarms,
                elapsed_ns: r.elapsed * 1e9,
            });
        }
    }
    out.csv(
        "acquisition_runs.csv",
        &["run", "method", "outcome", "tests", "false_alarms", "elapsed_ns"],
        &rows,
    )?;
    let summary: Vec<(&str, f64, f64, f64, f64, f64)> = [("serial", &rep.serial_stats), ("block", &rep.block_stats)]
        .iter()
        .map(|(m, s)| {
            (
                *m,
                s.p_detect,
                s.mean_time * 1e9,
                s.mean_tests,
                s.median_time * 1e9,
                s.p90_time * 1e9,
            )
        })
        .collect();
    out.csv(
        "acquisition_summary.csv",
        &[
            "method",
            "p_detect",
            "mean_time_ns",
            "mean_tests",
            "median_time_ns",
            "p90_time_ns",
        ],
        &summary,
    )
}
