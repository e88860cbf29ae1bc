//! One link trial on the symbol-rate model.
//!
//! The received Δ-rate matched-filter output is synthesized directly as
//! `y[n] = Σ_k b_k h̃[n - k p] + ñ[n]`, where `h̃` is the channel seen through
//! the transmit/template cross-correlation and `ñ` is Gaussian with the
//! template autocorrelation as covariance. This is exact for the continuous
//! chain with paths snapped to the simulation grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scenario::{CombinerMode, DataRate, LinkScenario};
use crate::acquisition::{block_search, serial_search, threshold_from_noise, GaussianCells, SearchConfig, SearchSpace};
use crate::channel::generate_channel;
use crate::error::{Error, Result, Stage, StageExt};
use crate::estimation::{
    estimate_channel, estimate_interference, nmse, solve_equalizer, training_sequence, TrainingConfig, POLY_DEG9_B,
};
use crate::fec::{bits_to_symbols, conv_encode, viterbi_decode};
use crate::pulse::combine_pulses;
use crate::receiver::{
    combine_mmse, demodulate, equalize, finger_outputs_from_samples, select_fingers, synthesize, ColoredNoise,
    CompositeChannel, CrossCorrelation, EqualizerTaps, RakeState,
};
use crate::th_code::symbol_waveform;
use crate::units::from_db10;
use crate::waveform::{DeltaSamples, SampledWaveform};

const STREAMS_PER_TRIAL: u64 = 8;
const RNG_CHANNEL: u64 = 0;
const RNG_ACQUIRE: u64 = 1;
const RNG_TRAINING: u64 = 2;
const RNG_DATA: u64 = 3;
const RNG_INTERFERER: u64 = 4;

/// Independent generator for one purpose of one trial.
///
/// Every trial owns `STREAMS_PER_TRIAL` ChaCha streams of the master seed, so
/// no two trials or purposes share random numbers and results do not depend
/// on execution order.
pub fn trial_rng(seed: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(STREAMS_PER_TRIAL).wrapping_add(purpose));
    rng
}

/// Receiver side of one data stream.
struct StreamRx {
    training: Vec<i8>,
    training_f: Vec<f64>,
    /// Cross-correlation of each desired stream's transmit waveform with this template.
    x_desired: Vec<CrossCorrelation>,
    x_interferer: Option<CrossCorrelation>,
    train_noise: ColoredNoise,
    data_noise: ColoredNoise,
}

/// Immutable per-scenario state shared by all trials.
pub struct LinkSetup {
    pub scenario: LinkScenario,
    streams: Vec<StreamRx>,
    info_bits: usize,
    data_symbols: usize,
}

impl std::fmt::Debug for LinkSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinkSetup")
            .field("streams", &self.streams.len())
            .field("info_bits", &self.info_bits)
            .field("data_symbols", &self.data_symbols)
            .finish()
    }
}

/// Unit-energy symbol waveform of `code`.
fn unit_symbol(code: &crate::th_code::THCode, sc: &LinkScenario, pulse: &SampledWaveform) -> Result<SampledWaveform> {
    let w = symbol_waveform(code, &sc.numerology, pulse)?.waveform;
    if !(w.energy() > 0.0) {
        return Err(Error::invalid("symbol waveform has zero energy"));
    }
    Ok(w.normalized())
}

/// Δ-rate noise covariance `(N0/2) X_tt[m os]` for N0 = 1.
fn noise_covariance(x_tt: &CrossCorrelation, os: i64) -> Vec<f64> {
    let m_max = (x_tt.end() - 1).div_euclid(os).max(0);
    (0..=m_max).map(|m| 0.5 * x_tt.at(m * os)).collect()
}

impl LinkSetup {
    pub fn new(scenario: &LinkScenario) -> Result<Self> {
        scenario.validate()?;
        Self::build(scenario, 0)
    }

    /// Setup for a fixed number of uncoded data symbols per packet.
    pub fn uncoded(scenario: &LinkScenario, symbols: usize) -> Result<Self> {
        scenario.validate()?;
        if symbols == 0 {
            return Err(Error::invalid("need at least one data symbol"));
        }
        Self::build(scenario, symbols)
    }

    fn build(sc: &LinkScenario, uncoded_symbols: usize) -> Result<Self> {
        let num = sc.numerology;
        let os = num.oversampling as i64;
        let p = num.samples_per_symbol;
        let pulse = combine_pulses(&sc.pulse, num.sim_period())?.waveform;
        let codes = match sc.rate {
            DataRate::Mbps110 => vec![sc.code.clone()],
            DataRate::Mbps200 => vec![sc.code.clone(), sc.code.offset_by_one_chip(&num)],
        };
        let tx: Vec<SampledWaveform> = codes
            .iter()
            .map(|c| unit_symbol(c, sc, &pulse))
            .collect::<Result<_>>()?;
        let tx_int = match &sc.interferer {
            Some(i) => Some(unit_symbol(&i.code, sc, &pulse)?),
            None => None,
        };
        let info_bits = if uncoded_symbols > 0 { 0 } else { sc.packet_bytes * 8 };
        let coded = if uncoded_symbols > 0 {
            uncoded_symbols
        } else {
            sc.fec.coded_len(info_bits)
        };
        let data_symbols = coded.div_ceil(tx.len());
        let data_len = data_symbols * p + sc.training.window() + p;
        let polys = [sc.training.polynomial, POLY_DEG9_B];
        let mut streams = Vec::with_capacity(tx.len());
        for (r, tpl) in tx.iter().enumerate() {
            let x_desired: Vec<CrossCorrelation> = tx.iter().map(|t| CrossCorrelation::new(t, tpl)).collect();
            let cov = noise_covariance(&x_desired[r], os);
            let cfg = TrainingConfig {
                polynomial: polys[r],
                ..sc.training
            };
            let training = training_sequence(&cfg, 0)?;
            streams.push(StreamRx {
                training_f: training.iter().map(|&b| b as f64).collect(),
                training,
                x_interferer: tx_int.as_ref().map(|ti| CrossCorrelation::new(ti, tpl)),
                train_noise: ColoredNoise::new(&cov, sc.training.samples_per_repeat()),
                data_noise: ColoredNoise::new(&cov, data_len),
                x_desired,
            });
        }
        Ok(Self {
            scenario: sc.clone(),
            streams,
            info_bits,
            data_symbols,
        })
    }

    pub fn info_bits(&self) -> usize {
        self.info_bits
    }

    /// Data symbols per stream per packet.
    pub fn data_symbols(&self) -> usize {
        self.data_symbols
    }
}

/// Outcome of one channel realization at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub distance: f64,
    /// Es/N0 in dB for a unit-energy channel at this distance.
    pub snr_db: f64,
    pub acquired: bool,
    pub acquisition_tests: usize,
    /// Channel-estimation NMSE of the first stream.
    pub nmse: f64,
    pub packets: usize,
    pub packet_errors: usize,
    /// Acquired and packet error rate below target.
    pub success: bool,
    /// Failing stage and message when the chain aborted.
    pub error: Option<String>,
}

/// Trained receiver of one stream.
#[derive(Debug, Clone)]
pub struct TrainedReceiver {
    pub rake: RakeState,
    pub equalizer: EqualizerTaps,
    /// Inverse residual variance on the training block.
    pub llr_scale: f64,
}

/// Channel, timing and training state of one realization.
struct Prepared {
    /// `h[r][s]`: desired stream `s` seen by receiver `r`.
    h: Vec<Vec<CompositeChannel>>,
    h_int: Vec<Option<CompositeChannel>>,
    origin: i64,
    acquired: bool,
    tests: usize,
    repeats: Vec<Vec<DeltaSamples>>,
    nmse: f64,
    rng_int: ChaCha8Rng,
    spare_noise: Vec<Option<Vec<f64>>>,
}

/// Add a continuous random-bit interferer to `out`, which covers absolute
/// indices `[origin, origin + out.len())`.
fn add_interferer<R: Rng + ?Sized>(out: &mut [f64], h: &CompositeChannel, origin: i64, p: i64, rng: &mut R) {
    let k_first = (origin - h.end() + 1).div_euclid(p);
    let k_last = (origin + out.len() as i64 - 1 - h.start).div_euclid(p);
    if k_last < k_first {
        return;
    }
    let bits: Vec<i8> = (k_first..=k_last)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    synthesize(&bits, h, p as usize, origin - k_first * p, out);
}

fn acquire(setup: &LinkSetup, h: &CompositeChannel, trial: u64) -> Result<(Option<i64>, usize)> {
    let sc = &setup.scenario;
    let a = &sc.acquisition;
    let w = sc.training.window() as i64;
    if a.genie {
        return Ok((Some(h.peak_index() - w / 2), 0));
    }
    let mut rng = trial_rng(sc.seed, trial, RNG_ACQUIRE);
    let sigma = (0.5 / a.preamble_symbols as f64).sqrt();
    let peak = h.taps.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let signal: Vec<usize> = (0..a.n_cells)
        .filter(|&c| h.at(c as i64).abs() >= a.signal_fraction * peak)
        .collect();
    let noise: Vec<f64> = (0..256)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    let threshold = threshold_from_noise(&noise, a.eta)?;
    let dwell = a.preamble_symbols as f64 * sc.numerology.symbol_period();
    let space = SearchSpace::new(a.n_cells, &signal, dwell)?;
    let cfg = SearchConfig {
        threshold,
        block_size: a.block_size,
        penalty_time: a.penalty_dwells * dwell,
        max_tests: a.max_tests,
        start_cell: None,
    };
    let mut cells = GaussianCells {
        means: (0..a.n_cells).map(|c| h.at(c as i64)).collect(),
        sigma,
    };
    let res = if a.block_size == 1 {
        serial_search(&space, &cfg, &mut cells, &mut rng)?
    } else {
        block_search(&space, &cfg, &mut cells, &mut rng)?
    };
    Ok((res.found_cell.map(|c| c as i64 - w / 2), res.tests))
}

fn prepare(setup: &LinkSetup, trial: u64, es_db: f64, interferer_es_db: Option<f64>) -> Result<Prepared> {
    let sc = &setup.scenario;
    let num = sc.numerology;
    let p = num.samples_per_symbol as i64;
    let os = num.oversampling as i64;
    let dt = num.sim_period();
    let n_streams = setup.streams.len();

    let mut rng = trial_rng(sc.seed, trial, RNG_CHANNEL);
    let params = sc
        .channel
        .params()
        .ok_or_else(|| Error::invalid("preset channel required"))?;
    let ch = generate_channel(&params, sc.channel, &mut rng).stage(Stage::Channel)?;
    let arrival = if sc.acquisition.genie {
        rng.random_range(0..p) * os
    } else {
        rng.random_range(0..p * os)
    };
    let amp = (from_db10(es_db) / n_streams as f64).sqrt() * ch.shadowing_amplitude();
    let h: Vec<Vec<CompositeChannel>> = setup
        .streams
        .iter()
        .map(|rx| {
            rx.x_desired
                .iter()
                .map(|x| CompositeChannel::from_paths(ch.paths(), amp, x, dt, num.oversampling, arrival))
                .collect()
        })
        .collect();

    let mut rng_int = trial_rng(sc.seed, trial, RNG_INTERFERER);
    let mut h_int: Vec<Option<CompositeChannel>> = vec![None; n_streams];
    if let (Some(is), Some(ies)) = (&sc.interferer, interferer_es_db) {
        let params = is
            .model
            .params()
            .ok_or_else(|| Error::invalid("preset interferer channel required"))?;
        let ich = generate_channel(&params, is.model, &mut rng_int).stage(Stage::Channel)?;
        let offset = rng_int.random_range(0..p * os);
        let iamp = from_db10(ies).sqrt() * ich.shadowing_amplitude();
        for (r, rx) in setup.streams.iter().enumerate() {
            if let Some(x) = &rx.x_interferer {
                h_int[r] = Some(CompositeChannel::from_paths(
                    ich.paths(),
                    iamp,
                    x,
                    dt,
                    num.oversampling,
                    offset,
                ));
            }
        }
    }

    let (origin, tests) = acquire(setup, &h[0][0], trial).stage(Stage::Acquire)?;
    let Some(origin) = origin else {
        return Ok(Prepared {
            h,
            h_int,
            origin: 0,
            acquired: false,
            tests,
            repeats: Vec::new(),
            nmse: f64::NAN,
            rng_int,
            spare_noise: vec![None; n_streams],
        });
    };

    let mut rng_t = trial_rng(sc.seed, trial, RNG_TRAINING);
    let len = sc.training.samples_per_repeat();
    let mut repeats: Vec<Vec<DeltaSamples>> = Vec::with_capacity(n_streams);
    for (r, rx) in setup.streams.iter().enumerate() {
        let mut reps = Vec::with_capacity(sc.training.repeats);
        let mut spare: Option<Vec<f64>> = None;
        for _ in 0..sc.training.repeats {
            let mut y = match spare.take() {
                Some(n) => n,
                None => {
                    let (a, b) = rx.train_noise.generate_pair(1.0, &mut rng_t);
                    spare = Some(b);
                    a
                }
            };
            y.truncate(len);
            for (s, tx) in setup.streams.iter().enumerate() {
                synthesize(&tx.training, &h[r][s], p as usize, origin, &mut y);
            }
            if let Some(hi) = &h_int[r] {
                add_interferer(&mut y, hi, origin, p, &mut rng_int);
            }
            reps.push(DeltaSamples::new(0, y));
        }
        repeats.push(reps);
    }
    let w = sc.training.window() as i64;
    let truth: Vec<f64> = (0..w).map(|j| h[0][0].at(origin + j)).collect();
    let est =
        estimate_channel(&repeats[0], &setup.streams[0].training_f, &sc.training, w as usize).stage(Stage::Estimate)?;
    let nmse = nmse(&est.taps, &truth).unwrap_or(f64::NAN);
    Ok(Prepared {
        h,
        h_int,
        origin,
        acquired: true,
        tests,
        repeats,
        nmse,
        rng_int,
        spare_noise: vec![None; n_streams],
    })
}

/// Estimate, select fingers, train the combiner and equalizer for stream `r`.
fn train_receiver(setup: &LinkSetup, prep: &Prepared, r: usize, mode: CombinerMode) -> Result<TrainedReceiver> {
    let sc = &setup.scenario;
    let rx = &setup.streams[r];
    let p = sc.numerology.samples_per_symbol;
    let reps = &prep.repeats[r];
    let cfg = TrainingConfig {
        polynomial: if r == 0 { sc.training.polynomial } else { POLY_DEG9_B },
        ..sc.training
    };
    let est = estimate_channel(reps, &rx.training_f, &cfg, cfg.window()).stage(Stage::Estimate)?;
    let profile = match mode {
        CombinerMode::MmseNormalized => {
            Some(estimate_interference(reps, &rx.training_f, &est, &cfg).stage(Stage::Estimate)?)
        }
        _ => None,
    };
    let fingers = sc.rake_fingers.unwrap_or(cfg.fingers);
    let sel = select_fingers(&est.as_composite(), fingers, profile.as_ref()).stage(Stage::Rake)?;
    let last = reps
        .last()
        .ok_or_else(|| Error::InsufficientData("no training repeats".into()))?;
    let rake = match mode {
        CombinerMode::Mrc => {
            let w = sel.delays.iter().map(|&d| est.at(d)).collect();
            RakeState::new(sel.delays.clone(), w, 0).stage(Stage::Rake)?
        }
        CombinerMode::Mmse | CombinerMode::MmseNormalized => {
            combine_mmse(last, &sel.delays, &rx.training, p, true, (0, p as i64 - 1))
                .stage(Stage::Rake)?
                .rake
        }
    };
    let z = combine(last, &rake, p, rx.training.len());
    let (equalizer, _) = solve_equalizer(&z, &rx.training, sc.equalizer_half_width).stage(Stage::Equalize)?;
    let bt = equalize(&z, &equalizer);
    let var = bt.iter().zip(&rx.training_f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / bt.len() as f64;
    Ok(TrainedReceiver {
        rake,
        equalizer,
        llr_scale: 1.0 / var.max(1e-12),
    })
}

fn combine(y: &DeltaSamples, rake: &RakeState, p: usize, n: usize) -> Vec<f64> {
    let f = finger_outputs_from_samples(y, &rake.finger_delays, rake.timing_offset, p, n);
    f.rows
        .iter()
        .map(|row| row.iter().zip(&rake.weights).map(|(a, b)| a * b).sum())
        .collect()
}

/// Received Δ-rate samples of one packet for every stream.
fn receive_packet(
    setup: &LinkSetup,
    prep: &mut Prepared,
    symbols: &[Vec<i8>],
    rng_data: &mut ChaCha8Rng,
) -> Vec<DeltaSamples> {
    let p = setup.scenario.numerology.samples_per_symbol;
    let n = setup.streams.len();
    // Each FFT yields two independent sequences; the second is kept for the next packet.
    let noise: Vec<Vec<f64>> = (0..n)
        .map(|r| match prep.spare_noise[r].take() {
            Some(v) => v,
            None => {
                let (a, b) = setup.streams[r].data_noise.generate_pair(1.0, rng_data);
                prep.spare_noise[r] = Some(b);
                a
            }
        })
        .collect();
    noise
        .into_iter()
        .enumerate()
        .map(|(r, mut y)| {
            for (s, sym) in symbols.iter().enumerate() {
                synthesize(sym, &prep.h[r][s], p, prep.origin, &mut y);
            }
            if let Some(hi) = &prep.h_int[r] {
                add_interferer(&mut y, hi, prep.origin, p as i64, &mut prep.rng_int);
            }
            DeltaSamples::new(0, y)
        })
        .collect()
}

/// Equalized soft outputs `b̃` of one stream.
fn detect(rx: &TrainedReceiver, y: &DeltaSamples, p: usize, n: usize) -> Vec<f64> {
    equalize(&combine(y, &rx.rake, p, n), &rx.equalizer)
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

fn interferer_es_db(sc: &LinkScenario, es_db: f64) -> Option<f64> {
    sc.interferer
        .as_ref()
        .map(|i| es_db + i.relative_power_db(sc.pathloss_exponent))
}

/// Full chain for one channel realization at `distance`: acquire, estimate,
/// train, then send packets until the PER target is met or missed.
pub fn run_link_trial(setup: &LinkSetup, trial: u64, distance: f64) -> TrialResult {
    run_link_trial_with(setup, trial, distance, true)
}

/// As [`run_link_trial`]; with `stop_early` false every packet is sent.
pub fn run_link_trial_with(setup: &LinkSetup, trial: u64, distance: f64, stop_early: bool) -> TrialResult {
    let sc = &setup.scenario;
    let es_db = sc.snr_db_at(distance);
    let mut res = TrialResult {
        trial,
        distance,
        snr_db: es_db,
        acquired: false,
        acquisition_tests: 0,
        nmse: f64::NAN,
        packets: 0,
        packet_errors: 0,
        success: false,
        error: None,
    };
    if let Err(e) = link_chain(setup, trial, es_db, stop_early, &mut res) {
        res.success = false;
        res.error = Some(e.to_string());
    }
    res
}

fn link_chain(setup: &LinkSetup, trial: u64, es_db: f64, stop_early: bool, res: &mut TrialResult) -> Result<()> {
    let sc = &setup.scenario;
    let p = sc.numerology.samples_per_symbol;
    let mut prep = prepare(setup, trial, es_db, interferer_es_db(sc, es_db))?;
    res.acquired = prep.acquired;
    res.acquisition_tests = prep.tests;
    res.nmse = prep.nmse;
    if !prep.acquired {
        return Ok(());
    }
    let rxs: Vec<TrainedReceiver> = (0..setup.streams.len())
        .map(|r| train_receiver(setup, &prep, r, sc.combiner))
        .collect::<Result<_>>()?;
    let mut rng_data = trial_rng(sc.seed, trial, RNG_DATA);
    let n_streams = setup.streams.len();
    let allowed = sc.per_target * sc.packets_per_realization as f64;
    for _ in 0..sc.packets_per_realization {
        let info = random_bits(setup.info_bits, &mut rng_data);
        let coded = bits_to_symbols(&conv_encode(&info, &sc.fec).stage(Stage::Encode)?);
        let mut per_stream: Vec<Vec<i8>> = vec![Vec::with_capacity(setup.data_symbols); n_streams];
        for (i, &s) in coded.iter().enumerate() {
            per_stream[i % n_streams].push(s);
        }
        let ys = receive_packet(setup, &mut prep, &per_stream, &mut rng_data);
        let mut llr = vec![0.0; coded.len()];
        for (r, (rx, y)) in rxs.iter().zip(&ys).enumerate() {
            let bt = detect(rx, y, p, per_stream[r].len());
            let d = demodulate(&bt, rx.llr_scale);
            for (j, l) in d.llr.into_iter().enumerate() {
                llr[j * n_streams + r] = l;
            }
        }
        let decoded = viterbi_decode(&llr, &sc.fec).stage(Stage::Decode)?;
        res.packets += 1;
        if decoded != info {
            res.packet_errors += 1;
            if stop_early && res.packet_errors as f64 >= allowed {
                break;
            }
        }
    }
    res.success = (res.packet_errors as f64) < allowed;
    Ok(())
}

/// Uncoded symbol errors per combiner mode on one shared realization.
#[derive(Debug, Clone, PartialEq)]
pub struct UncodedResult {
    pub trial: u64,
    pub errors: Vec<usize>,
    pub symbols: usize,
    pub error: Option<String>,
}

/// Send one uncoded block of `setup.data_symbols()` symbols per stream at
/// unit-channel Es/N0 `es_db`, detecting it with every mode in `modes`.
pub fn run_uncoded_trial(setup: &LinkSetup, trial: u64, es_db: f64, modes: &[CombinerMode]) -> UncodedResult {
    let mut out = UncodedResult {
        trial,
        errors: vec![0; modes.len()],
        symbols: 0,
        error: None,
    };
    if let Err(e) = uncoded_chain(setup, trial, es_db, modes, &mut out) {
        out.error = Some(e.to_string());
    }
    out
}

fn uncoded_chain(
    setup: &LinkSetup,
    trial: u64,
    es_db: f64,
    modes: &[CombinerMode],
    out: &mut UncodedResult,
) -> Result<()> {
    let sc = &setup.scenario;
    let p = sc.numerology.samples_per_symbol;
    let mut prep = prepare(setup, trial, es_db, interferer_es_db(sc, es_db))?;
    if !prep.acquired {
        return Err(Error::Stage {
            stage: Stage::Acquire,
            source: Box::new(Error::InsufficientData("acquisition failed".into())),
        });
    }
    let mut rng_data = trial_rng(sc.seed, trial, RNG_DATA);
    let n = setup.data_symbols;
    let symbols: Vec<Vec<i8>> = (0..setup.streams.len())
        .map(|_| bits_to_symbols(&random_bits(n, &mut rng_data)))
        .collect();
    let ys = receive_packet(setup, &mut prep, &symbols, &mut rng_data);
    for (i, &mode) in modes.iter().enumerate() {
        for (r, y) in ys.iter().enumerate() {
            let rx = train_receiver(setup, &prep, r, mode)?;
            let d = demodulate(&detect(&rx, y, p, n), 1.0);
            out.errors[i] += d.hard.iter().zip(&symbols[r]).filter(|(a, b)| a != b).count();
        }
    }
    out.symbols = n * setup.streams.len();
    Ok(())
}

/// Channel-estimation NMSE of one realization at unit-channel Es/N0 `es_db`.
pub fn run_estimation_trial(setup: &LinkSetup, trial: u64, es_db: f64) -> Result<f64> {
    let prep = prepare(setup, trial, es_db, interferer_es_db(&setup.scenario, es_db))?;
    Ok(prep.nmse)
}
