use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use thuwb::harness::{rerun, run_experiment, Experiment, MANIFEST_FILE};

#[derive(Parser)]
#[command(name = "thuwb", version, about = "Time-hopping impulse-radio UWB link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with the experiment settings; defaults are used for omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trial count (realizations, runs or candidates), overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory for CSVs and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Print the effective settings as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a pulse combination under a spectral mask.
    PulseDesign(Common),
    /// Estimate the PSD of a pulse or pulse train.
    Psd(Common),
    /// Search time-hopping codes with flat spectra and low cross-correlation.
    CodeSearch(Common),
    /// Link-success probability versus distance.
    LinkSweep(Common),
    /// Packet error rate versus interfering-piconet distance.
    InterfererSweep(Common),
    /// Interference into narrowband victim receivers.
    Coexistence(Common),
    /// Serial versus block search acquisition statistics.
    AcquisitionStudy(Common),
    /// Channel-estimation NMSE versus SNR.
    EstimationStudy(Common),
    /// Uncoded BER per combiner mode versus SNR.
    BerStudy(Common),
    /// Re-run an experiment from its manifest.
    Rerun {
        /// Path to a manifest file or a directory containing one.
        manifest: PathBuf,
        /// Output directory for the regenerated files
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&s).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn experiment(cmd: &Command, c: &Common) -> Result<Experiment> {
    let p = c.config.as_deref();
    Ok(match cmd {
        Command::PulseDesign(_) => Experiment::PulseDesign(load(p)?),
        Command::Psd(_) => Experiment::Psd(load(p)?),
        Command::CodeSearch(_) => Experiment::CodeSearch(load(p)?),
        Command::LinkSweep(_) => Experiment::LinkSweep(load(p)?),
        Command::InterfererSweep(_) => Experiment::InterfererSweep(load(p)?),
        Command::Coexistence(_) => Experiment::Coexistence(load(p)?),
        Command::AcquisitionStudy(_) => Experiment::AcquisitionStudy(load(p)?),
        Command::EstimationStudy(_) => Experiment::EstimationStudy(load(p)?),
        Command::BerStudy(_) => Experiment::BerStudy(load(p)?),
        Command::Rerun { .. } => unreachable!("rerun has no config"),
    })
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Rerun { manifest, out, workers } => {
            let path = if manifest.is_dir() {
                manifest.join(MANIFEST_FILE)
            } else {
                manifest.clone()
            };
            let files = rerun(&path, out, *workers).with_context(|| format!("re-running {}", path.display()))?;
            report(&files);
            return Ok(());
        }
        Command::PulseDesign(c)
        | Command::Psd(c)
        | Command::CodeSearch(c)
        | Command::LinkSweep(c)
        | Command::InterfererSweep(c)
        | Command::Coexistence(c)
        | Command::AcquisitionStudy(c)
        | Command::EstimationStudy(c)
        | Command::BerStudy(c) => c.clone(),
    };
    let mut exp = experiment(&cli.command, &common)?;
    if let Some(s) = common.seed {
        exp.set_seed(s);
    }
    if let Some(t) = common.trials {
        exp.set_trials(t)?;
    }
    if common.dump_config {
        print!("{}", thuwb::harness::Manifest::new(exp).to_toml()?);
        return Ok(());
    }
    let out = common.out.unwrap_or_else(|| PathBuf::from("out").join(exp.command()));
    let files = run_experiment(&exp, &out, common.workers).with_context(|| format!("running {}", exp.command()))?;
    report(&files);
    Ok(())
}
