use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::estimation::TrainingConfig;
use crate::fec::ConvCodeSpec;
use crate::pulse::{GaussianPulseSpec, PulseCombination};
use crate::th_code::{Numerology, THCode};

/// How the Rake combining weights are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombinerMode {
    /// Weights equal to the estimated composite taps.
    Mrc,
    /// Trained least-squares weights, fingers on the largest |h̃|.
    Mmse,
    /// Trained weights, fingers on the largest |h̃|/sqrt(P_k).
    MmseNormalized,
}

impl CombinerMode {
    pub fn label(&self) -> &'static str {
        match self {
            CombinerMode::Mrc => "mrc",
            CombinerMode::Mmse => "mmse",
            CombinerMode::MmseNormalized => "mmse-normalized",
        }
    }
}

/// Single stream (110 Mbit/s) or two chip-offset streams (200 Mbit/s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataRate {
    #[serde(rename = "110")]
    Mbps110,
    #[serde(rename = "200")]
    Mbps200,
}

/// Timing acquisition settings for the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionSettings {
    /// Skip the search: the first path arrives on the receiver sampling grid
    /// and the window starts from the true strongest tap.
    pub genie: bool,
    pub n_cells: usize,
    /// Preamble symbols integrated per cell test.
    pub preamble_symbols: usize,
    /// Threshold in units of the noise-only statistic RMS.
    pub eta: f64,
    /// Cells with |h̃| at least this fraction of the peak count as signal cells.
    pub signal_fraction: f64,
    /// 1 for serial search, larger for block search.
    pub block_size: usize,
    pub max_tests: usize,
    /// Time lost per false alarm, in dwell times.
    pub penalty_dwells: f64,
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        Self {
            genie: false,
            n_cells: 500,
            preamble_symbols: 64,
            eta: 4.0,
            signal_fraction: 0.25,
            block_size: 1,
            max_tests: 2000,
            penalty_dwells: 10.0,
        }
    }
}

impl AcquisitionSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 || self.preamble_symbols == 0 || self.block_size == 0 || self.max_tests == 0 {
            return Err(Error::invalid("acquisition counts must be positive"));
        }
        if !(self.eta > 0.0)
            || !(self.penalty_dwells >= 0.0)
            || !(self.signal_fraction > 0.0 && self.signal_fraction <= 1.0)
        {
            return Err(Error::invalid("eta must be positive and signal_fraction in (0, 1]"));
        }
        Ok(())
    }
}

/// A co-channel piconet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererSettings {
    pub model: ChannelModel,
    pub code: THCode,
    /// Interferer distance divided by the desired-link distance.
    pub distance_ratio: f64,
}

impl InterfererSettings {
    /// Received power relative to the desired signal under the path-loss law.
    pub fn relative_power_db(&self, pathloss_exponent: f64) -> f64 {
        -10.0 * pathloss_exponent * self.distance_ratio.log10()
    }
}

/// Everything a link experiment needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkScenario {
    pub seed: u64,
    pub numerology: Numerology,
    pub pulse: PulseCombination,
    pub code: THCode,
    pub fec: ConvCodeSpec,
    pub channel: ChannelModel,
    pub rate: DataRate,
    pub combiner: CombinerMode,
    pub training: TrainingConfig,
    /// Rake fingers; the estimation finger count when absent.
    pub rake_fingers: Option<usize>,
    /// Equalizer half width K (2K+1 taps).
    pub equalizer_half_width: usize,
    pub acquisition: AcquisitionSettings,
    pub interferer: Option<InterfererSettings>,
    /// Es/N0 in dB at 1 m for a unit-energy channel.
    pub snr_ref_db: f64,
    pub pathloss_exponent: f64,
    pub distances: Vec<f64>,
    pub packet_bytes: usize,
    /// Channel realizations per distance.
    pub realizations: usize,
    pub packets_per_realization: usize,
    pub per_target: f64,
}

/// Code of the desired link: chips 0,3,2,2,3 with alternating-sign polarity.
pub fn default_link_code() -> THCode {
    THCode {
        chips: vec![0, 3, 2, 2, 3],
        polarity: vec![-1, 1, 1, -1, 1],
    }
}

/// Code of the interfering piconet.
pub fn default_interferer_code() -> THCode {
    THCode {
        chips: vec![1, 4, 0, 3, 1],
        polarity: vec![1, 1, -1, 1, -1],
    }
}

impl Default for LinkScenario {
    fn default() -> Self {
        Self {
            seed: 1,
            numerology: Numerology::default(),
            pulse: PulseCombination::single(GaussianPulseSpec::fcc_fifth_order()),
            code: default_link_code(),
            fec: ConvCodeSpec::default(),
            channel: ChannelModel::Cm1,
            rate: DataRate::Mbps110,
            combiner: CombinerMode::MmseNormalized,
            training: TrainingConfig::default(),
            rake_fingers: None,
            equalizer_half_width: 2,
            acquisition: AcquisitionSettings::default(),
            interferer: None,
            snr_ref_db: DEFAULT_SNR_REF_DB,
            pathloss_exponent: 2.0,
            distances: vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 20.0],
            packet_bytes: 1024,
            realizations: 200,
            packets_per_realization: 10,
            per_target: 0.08,
        }
    }
}

/// Default calibration of the 1 m reference Es/N0.
pub const DEFAULT_SNR_REF_DB: f64 = 30.0;

impl LinkScenario {
    pub fn validate(&self) -> Result<()> {
        self.numerology.validate()?;
        self.code.validate(&self.numerology)?;
        self.fec.validate()?;
        self.training.validate()?;
        self.acquisition.validate()?;
        if self.training.samples_per_symbol != self.numerology.samples_per_symbol {
            return Err(Error::invalid("training and numerology disagree on samples per symbol"));
        }
        if self.rake_fingers == Some(0) {
            return Err(Error::invalid("the Rake needs at least one finger"));
        }
        if self.channel == ChannelModel::Custom {
            return Err(Error::invalid("link scenarios need a preset channel model"));
        }
        if let Some(i) = &self.interferer {
            i.code.validate(&self.numerology)?;
            if i.model == ChannelModel::Custom {
                return Err(Error::invalid("interferer needs a preset channel model"));
            }
            if !(i.distance_ratio > 0.0) {
                return Err(Error::invalid("interferer distance ratio must be positive"));
            }
        }
        if self.packet_bytes == 0 || self.realizations == 0 || self.packets_per_realization == 0 {
            return Err(Error::invalid(
                "packet length, realizations and packets must be positive",
            ));
        }
        if !(self.per_target > 0.0 && self.per_target <= 1.0) {
            return Err(Error::invalid("PER target must lie in (0, 1]"));
        }
        if !self.snr_ref_db.is_finite() || !(self.pathloss_exponent >= 0.0) {
            return Err(Error::invalid("SNR calibration must be finite"));
        }
        if self.distances.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("distances must be positive"));
        }
        Ok(())
    }

    /// Es/N0 in dB at `distance` meters for a unit-energy channel.
    pub fn snr_db_at(&self, distance: f64) -> f64 {
        self.snr_ref_db - 10.0 * self.pathloss_exponent * distance.log10()
    }

    /// Distance at which the unit-energy Es/N0 equals `snr_db`.
    pub fn distance_for_snr(&self, snr_db: f64) -> f64 {
        10f64.powf((self.snr_ref_db - snr_db) / (10.0 * self.pathloss_exponent))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let sc: Self = toml::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }
}
