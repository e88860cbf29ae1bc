use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multipath model label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelModel {
    #[serde(rename = "CM1")]
    Cm1,
    #[serde(rename = "CM2")]
    Cm2,
    #[serde(rename = "CM3")]
    Cm3,
    #[serde(rename = "CM4")]
    Cm4,
    /// A single unit path.
    #[serde(rename = "AWGN")]
    Awgn,
    #[serde(rename = "custom")]
    Custom,
}

impl ChannelModel {
    pub fn tag(&self) -> &'static str {
        match self {
            ChannelModel::Cm1 => "CM1",
            ChannelModel::Cm2 => "CM2",
            ChannelModel::Cm3 => "CM3",
            ChannelModel::Cm4 => "CM4",
            ChannelModel::Awgn => "AWGN",
            ChannelModel::Custom => "custom",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CM1" => Ok(ChannelModel::Cm1),
            "CM2" => Ok(ChannelModel::Cm2),
            "CM3" => Ok(ChannelModel::Cm3),
            "CM4" => Ok(ChannelModel::Cm4),
            "AWGN" => Ok(ChannelModel::Awgn),
            "CUSTOM" => Ok(ChannelModel::Custom),
            _ => Err(Error::parse(format!("unknown channel model {s}"))),
        }
    }

    /// Preset parameters; `Custom` has none.
    pub fn params(&self) -> Option<SvModelParams> {
        match self {
            ChannelModel::Cm1 => Some(SvModelParams::cm1()),
            ChannelModel::Cm2 => Some(SvModelParams::cm2()),
            ChannelModel::Cm3 => Some(SvModelParams::cm3()),
            ChannelModel::Cm4 => Some(SvModelParams::cm4()),
            ChannelModel::Awgn => Some(SvModelParams::single_path()),
            ChannelModel::Custom => None,
        }
    }
}

/// Saleh-Valenzuela cluster/ray parameters.
///
/// The CM1-CM4 presets follow the IEEE 802.15.3a channel-model report and
/// are configuration data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvModelParams {
    pub cluster_rate_per_ns: f64,
    pub ray_rate_per_ns: f64,
    pub cluster_decay_ns: f64,
    pub ray_decay_ns: f64,
    /// Per-ray lognormal fading, dB.
    pub ray_fading_db: f64,
    /// Per-realization lognormal shadowing, dB.
    pub shadowing_db: f64,
    pub max_excess_delay_ns: f64,
}

impl SvModelParams {
    fn preset(cluster_rate_per_ns: f64, ray_rate_per_ns: f64, cluster_decay_ns: f64, ray_decay_ns: f64) -> Self {
        Self {
            cluster_rate_per_ns,
            ray_rate_per_ns,
            cluster_decay_ns,
            ray_decay_ns,
            ray_fading_db: 4.8,
            shadowing_db: 3.0,
            max_excess_delay_ns: 200.0,
        }
    }

    /// LOS, 0-4 m.
    pub fn cm1() -> Self {
        Self::preset(0.0233, 2.5, 7.1, 4.3)
    }

    /// NLOS, 0-4 m.
    pub fn cm2() -> Self {
        Self::preset(0.4, 0.5, 5.5, 6.7)
    }

    /// NLOS, 4-10 m.
    pub fn cm3() -> Self {
        Self::preset(0.0667, 2.1, 14.0, 7.9)
    }

    /// Extreme NLOS, 25 ns RMS delay spread.
    pub fn cm4() -> Self {
        Self::preset(0.0667, 2.1, 24.0, 12.0)
    }

    /// Single unit path at zero delay.
    pub fn single_path() -> Self {
        Self {
            cluster_rate_per_ns: 0.0,
            ray_rate_per_ns: 0.0,
            cluster_decay_ns: 1.0,
            ray_decay_ns: 1.0,
            ray_fading_db: 0.0,
            shadowing_db: 0.0,
            max_excess_delay_ns: 1.0,
        }
    }

    /// Rates may be zero (degenerate single cluster or ray); everything else positive.
    pub fn validate(&self) -> Result<()> {
        let ok = self.cluster_rate_per_ns >= 0.0
            && self.ray_rate_per_ns >= 0.0
            && self.cluster_decay_ns > 0.0
            && self.ray_decay_ns > 0.0
            && self.ray_fading_db >= 0.0
            && self.shadowing_db >= 0.0
            && self.max_excess_delay_ns > 0.0;
        let finite = [
            self.cluster_rate_per_ns,
            self.ray_rate_per_ns,
            self.cluster_decay_ns,
            self.ray_decay_ns,
            self.ray_fading_db,
            self.shadowing_db,
            self.max_excess_delay_ns,
        ]
        .iter()
        .all(|x| x.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::invalid("channel model parameters must be finite and positive"))
        }
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Seconds.
    pub delay: f64,
    pub gain: f64,
}

/// Discrete multipath response `h(t) = Σ α_k δ(t - τ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    paths: Vec<Path>,
    pub model: ChannelModel,
    /// Shadowing power gain in dB, applied on top of the unit-energy paths.
    pub shadowing_db: f64,
}

impl ChannelRealization {
    pub fn new(mut paths: Vec<Path>, model: ChannelModel, shadowing_db: f64) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("a channel needs at least one path"));
        }
        if paths
            .iter()
            .any(|p| !p.delay.is_finite() || p.delay < 0.0 || !p.gain.is_finite())
        {
            return Err(Error::invalid("path delays must be non-negative and gains finite"));
        }
        if !shadowing_db.is_finite() {
            return Err(Error::invalid("shadowing must be finite"));
        }
        paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Ok(Self {
            paths,
            model,
            shadowing_db,
        })
    }

    /// Unit path at zero delay.
    pub fn identity() -> Self {
        Self {
            paths: vec![Path { delay: 0.0, gain: 1.0 }],
            model: ChannelModel::Custom,
            shadowing_db: 0.0,
        }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn energy(&self) -> f64 {
        self.paths.iter().map(|p| p.gain * p.gain).sum()
    }

    /// Amplitude factor of the shadowing term.
    pub fn shadowing_amplitude(&self) -> f64 {
        10f64.powf(self.shadowing_db / 20.0)
    }

    pub fn mean_excess_delay(&self) -> f64 {
        let e = self.energy();
        self.paths.iter().map(|p| p.gain * p.gain * p.delay).sum::<f64>() / e
    }

    pub fn rms_delay_spread(&self) -> f64 {
        let e = self.energy();
        let m1 = self.mean_excess_delay();
        let m2 = self
            .paths
            .iter()
            .map(|p| p.gain * p.gain * p.delay * p.delay)
            .sum::<f64>()
            / e;
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.last().map_or(0.0, |p| p.delay)
    }

    /// Two-column text: `delay_ns gain` per line, `#` header lines.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# model {}\n# shadowing_db {}\n# delay_ns gain\n",
            self.model.tag(),
            self.shadowing_db
        );
        for p in &self.paths {
            let _ = writeln!(s, "{:.17e} {:.17e}", p.delay * 1e9, p.gain);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut model = ChannelModel::Custom;
        let mut shadowing_db = 0.0;
        let mut paths = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("model"), Some(tag)) => model = ChannelModel::from_tag(tag)?,
                    (Some("shadowing_db"), Some(v)) => {
                        shadowing_db = v
                            .parse()
                            .map_err(|_| Error::parse(format!("line {}: bad shadowing", i + 1)))?
                    }
                    _ => {}
                }
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::parse(format!("line {}: expected two columns", i + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(format!("line {}: bad number {s}", i + 1)))
            };
            paths.push(Path {
                delay: parse(cols[0])? * 1e-9,
                gain: parse(cols[1])?,
            });
        }
        Self::new(paths, model, shadowing_db)
    }
}

fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).map(|d| d.sample(rng)).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    }
}

/// Draw one Saleh-Valenzuela realization.
///
/// Clusters and rays arrive as Poisson processes; the mean ray power decays
/// as `exp(-T/Γ) exp(-τ/γ)`, each ray gets lognormal fading and a random
/// sign, and the tap energy is normalized to one before shadowing.
pub fn generate_channel<R: Rng + ?Sized>(
    params: &SvModelParams,
    model: ChannelModel,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let max = params.max_excess_delay_ns;
    // Rays beyond this excess delay within a cluster are 60 dB down.
    let ray_horizon = params.ray_decay_ns * 60.0 / (10.0 * std::f64::consts::LOG10_E);
    let fading = Normal::new(0.0, params.ray_fading_db).map_err(|e| Error::invalid(e.to_string()))?;
    let shadow = Normal::new(0.0, params.shadowing_db).map_err(|e| Error::invalid(e.to_string()))?;
    let mut paths = Vec::new();
    let mut t_cluster = 0.0;
    while t_cluster < max {
        let mut tau = 0.0;
        while t_cluster + tau < max && tau <= ray_horizon {
            let mean_power = (-t_cluster / params.cluster_decay_ns - tau / params.ray_decay_ns).exp();
            let fade_db = fading.sample(rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            paths.push(Path {
                delay: (t_cluster + tau) * 1e-9,
                gain: sign * mean_power.sqrt() * 10f64.powf(fade_db / 20.0),
            });
            tau += exp_draw(params.ray_rate_per_ns, rng);
        }
        t_cluster += exp_draw(params.cluster_rate_per_ns, rng);
    }
    let e: f64 = paths.iter().map(|p| p.gain * p.gain).sum();
    let norm = 1.0 / e.sqrt();
    paths.iter_mut().for_each(|p| p.gain *= norm);
    let shadowing_db = shadow.sample(rng);
    ChannelRealization::new(paths, model, shadowing_db)
}
