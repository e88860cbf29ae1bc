use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thuwb::channel::{
    add_awgn, add_interferer, apply_channel, generate_channel, link_scale, ChannelModel, ChannelRealization,
    InterfererSpec, LinkGeometry, Path, SvModelParams,
};
use thuwb::th_code::{Numerology, SymbolStream, THCode};
use thuwb::SampledWaveform;

const DT: f64 = 6.25e-12;

fn presets() -> [(ChannelModel, SvModelParams); 4] {
    [
        (ChannelModel::Cm1, SvModelParams::cm1()),
        (ChannelModel::Cm2, SvModelParams::cm2()),
        (ChannelModel::Cm3, SvModelParams::cm3()),
        (ChannelModel::Cm4, SvModelParams::cm4()),
    ]
}

/// Mean of (mean excess delay, RMS delay spread) in ns over `n` draws.
fn delay_stats(model: ChannelModel, params: &SvModelParams, n: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut acc = (0.0, 0.0);
    for _ in 0..n {
        let ch = generate_channel(params, model, &mut rng).unwrap();
        acc.0 += ch.mean_excess_delay() * 1e9;
        acc.1 += ch.rms_delay_spread() * 1e9;
    }
    (acc.0 / n as f64, acc.1 / n as f64)
}

#[test]
fn realizations_are_normalized_and_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (model, params) in presets() {
        for _ in 0..20 {
            let ch = generate_channel(&params, model, &mut rng).unwrap();
            assert!((ch.energy() - 1.0).abs() < 1e-12);
            assert_eq!(ch.paths()[0].delay, 0.0);
            assert!(ch.paths().windows(2).all(|w| w[0].delay <= w[1].delay));
            assert!(ch.max_delay() < params.max_excess_delay_ns * 1e-9);
            assert_eq!(ch.model, model);
        }
    }
}

#[test]
fn delay_spread_grows_from_cm1_to_cm4() {
    let stats: Vec<(f64, f64)> = presets().iter().map(|(m, p)| delay_stats(*m, p, 300)).collect();
    // Targets of the model report: RMS spread about 5, 8, 14 and 25 ns.
    let target = [5.28, 8.03, 14.28, 25.0];
    for (s, t) in stats.iter().zip(target) {
        assert!((s.1 / t - 1.0).abs() < 0.3, "rms {} vs {t}", s.1);
    }
    assert!(stats[0].1 < stats[1].1 && stats[1].1 < stats[2].1 && stats[2].1 < stats[3].1);
}

#[test]
fn single_path_preset_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ch = generate_channel(&SvModelParams::single_path(), ChannelModel::Custom, &mut rng).unwrap();
    assert_eq!(ch.paths().len(), 1);
    assert_eq!(ch.paths()[0].delay, 0.0);
    assert!((ch.paths()[0].gain.abs() - 1.0).abs() < 1e-12);
    assert_eq!(ch.shadowing_db, 0.0);
}

#[test]
fn apply_channel_is_sum_of_delayed_copies() {
    let sig = SampledWaveform::on_grid((0..40).map(|i| (i as f64 * 0.3).sin()).collect(), DT, -5).unwrap();
    let ch = ChannelRealization::new(
        vec![
            Path { delay: 0.0, gain: 0.8 },
            Path {
                delay: 7.0 * DT,
                gain: -0.5,
            },
            Path {
                delay: 30.2 * DT,
                gain: 0.3,
            },
        ],
        ChannelModel::Custom,
        0.0,
    )
    .unwrap();
    let out = apply_channel(&sig, &ch);
    assert!((out.max_snap_error - 0.2 * DT).abs() < 1e-20);
    for n in out.waveform.start_index() - 3..out.waveform.end_index() + 3 {
        let want = 0.8 * sig.at_index(n) - 0.5 * sig.at_index(n - 7) + 0.3 * sig.at_index(n - 30);
        assert!((out.waveform.at_index(n) - want).abs() < 1e-15);
    }
}

#[test]
fn path_loss_law() {
    let g = LinkGeometry::at(4.0);
    assert!((g.gain_db().unwrap() + 20.0 * 4f64.log10()).abs() < 1e-12);
    let sig = SampledWaveform::on_grid(vec![1.0, -2.0], DT, 0).unwrap();
    assert_eq!(link_scale(&sig, &g).unwrap().samples(), &[0.25, -0.5]);
    assert!(LinkGeometry::at(0.0).amplitude().is_err());
}

#[test]
fn awgn_sample_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sig = SampledWaveform::zeros(200_000, DT, 0);
    let n0_half = 3e-12;
    let y = add_awgn(&sig, n0_half, &mut rng).unwrap();
    let var = y.samples().iter().map(|x| x * x).sum::<f64>() / y.len() as f64;
    let want = n0_half / DT;
    assert!((var / want - 1.0).abs() < 0.02, "{var} vs {want}");
    assert!(add_awgn(&sig, -1.0, &mut rng).is_err());
}

#[test]
fn interferer_superposition() {
    let num = Numerology::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = SampledWaveform::on_grid(vec![1.0; 10], num.sim_period(), 0).unwrap();
    let code = THCode::new(vec![0; 5], vec![1; 5], &num).unwrap();
    let spec = InterfererSpec {
        stream: SymbolStream::new(vec![1, -1], code, num).unwrap(),
        w_seq: w.clone(),
        channel: ChannelRealization::identity(),
        relative_delay: Some(100.0 * num.sim_period()),
        relative_power_db: -6.0,
    };
    let base = SampledWaveform::zeros(4, num.sim_period(), 0);
    let out = add_interferer(&base, &spec, &mut rng).unwrap();
    let a = 10f64.powf(-6.0 / 20.0);
    assert!((out.at_index(105) - a).abs() < 1e-12);
    assert!((out.at_index(905) + a).abs() < 1e-12);
    assert_eq!(out.at_index(99), 0.0);
    let off = InterfererSpec {
        relative_power_db: f64::NEG_INFINITY,
        ..spec
    };
    assert_eq!(add_interferer(&base, &off, &mut rng).unwrap(), base);
}
