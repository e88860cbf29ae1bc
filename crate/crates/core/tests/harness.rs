use std::fs;
use std::process::Command;

use thuwb::channel::ChannelModel;
use thuwb::harness::{
    default_interferer_code, rerun, run_experiment, run_link_trial, sweep_interferer, sweep_link_success, write_csv,
    BerStudy, CombinerMode, Experiment, InterfererSettings, InterfererStudy, LinkScenario, LinkSetup, Manifest,
    MANIFEST_FILE,
};

/// Small AWGN link for quick checks.
fn small_awgn(snr_ref_db: f64) -> LinkScenario {
    let mut sc = LinkScenario {
        channel: ChannelModel::Awgn,
        snr_ref_db,
        packet_bytes: 32,
        packets_per_realization: 3,
        realizations: 4,
        distances: vec![1.0],
        ..LinkScenario::default()
    };
    sc.acquisition.genie = true;
    sc
}

#[test]
fn noiseless_awgn_link_has_no_packet_errors() {
    let setup = LinkSetup::new(&small_awgn(80.0)).unwrap();
    for trial in 0..4 {
        let r = run_link_trial(&setup, trial, 1.0);
        assert!(r.error.is_none(), "{:?}", r.error);
        assert!(r.acquired && r.success);
        assert_eq!(r.packets, 3);
        assert_eq!(r.packet_errors, 0);
        // Correlation sidelobes of the finite training sequence leave a small floor.
        assert!(r.nmse < 0.02, "{}", r.nmse);
    }
}

#[test]
fn very_low_snr_link_loses_every_packet() {
    let setup = LinkSetup::new(&small_awgn(-20.0)).unwrap();
    let mut packets = 0;
    let mut errors = 0;
    for trial in 0..4 {
        let r = run_link_trial(&setup, trial, 1.0);
        assert!(!r.success);
        packets += r.packets;
        errors += r.packet_errors;
    }
    assert_eq!(errors, packets);
}

#[test]
fn search_based_acquisition_works_at_high_snr() {
    let mut sc = small_awgn(60.0);
    sc.acquisition.genie = false;
    let setup = LinkSetup::new(&sc).unwrap();
    let r = run_link_trial(&setup, 0, 1.0);
    assert!(r.acquired, "{:?}", r.error);
    assert!(r.acquisition_tests >= 1);
    assert_eq!(r.packet_errors, 0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let sc = LinkScenario {
        channel: ChannelModel::Cm2,
        distances: vec![4.0, 12.0],
        realizations: 3,
        packets_per_realization: 2,
        packet_bytes: 64,
        ..LinkScenario::default()
    };
    let base = sweep_link_success(&sc, 1).unwrap();
    for w in [4, 8] {
        let other = sweep_link_success(&sc, w).unwrap();
        assert_eq!(other.points, base.points);
        assert_eq!(other.trials, base.trials);
    }
}

#[test]
fn distant_interferer_matches_single_user() {
    let link = LinkScenario {
        channel: ChannelModel::Cm1,
        realizations: 3,
        packets_per_realization: 2,
        packet_bytes: 64,
        ..LinkScenario::default()
    };
    let alone = sweep_link_success(
        &LinkScenario {
            distances: vec![5.0],
            ..link.clone()
        },
        1,
    )
    .unwrap();
    let study = InterfererStudy {
        link: LinkScenario {
            interferer: Some(InterfererSettings {
                model: ChannelModel::Cm1,
                code: default_interferer_code(),
                distance_ratio: 1.0,
            }),
            ..link
        },
        desired_distance: 5.0,
        ratios: vec![1e9],
    };
    let far = sweep_interferer(&study, 1).unwrap();
    let alone_errors: usize = alone.trials.iter().map(|t| t.packet_errors).sum();
    assert_eq!(far[0].packet_errors, alone_errors);
}

#[test]
fn manifest_round_trips_through_toml() {
    let mut ber = BerStudy {
        modes: vec![CombinerMode::Mrc],
        ..BerStudy::default()
    };
    ber.link.rake_fingers = Some(3);
    for e in [
        Experiment::LinkSweep(LinkScenario::default()),
        Experiment::BerStudy(ber),
        Experiment::InterfererSweep(InterfererStudy::default()),
    ] {
        let m = Manifest::new(e);
        let back = Manifest::from_toml(&m.to_toml().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}

#[test]
fn empty_rows_give_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.csv");
    write_csv::<(f64, f64)>(&p, &["a", "b"], &[]).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n");
}

#[test]
fn rerun_reproduces_csvs_byte_for_byte() {
    let mut study = BerStudy::default();
    study.link.realizations = 2;
    study.symbols_per_trial = 200;
    study.snrs_db = vec![0.0, 6.0];
    let e = Experiment::BerStudy(study);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = run_experiment(&e, a.path(), 1).unwrap();
    assert!(files.iter().any(|f| f.ends_with(MANIFEST_FILE)));
    let again = rerun(&a.path().join(MANIFEST_FILE), b.path(), 3).unwrap();
    assert_eq!(files.len(), again.len());
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
}

#[test]
fn cli_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ber");
    let cfg = dir.path().join("ber.toml");
    fs::write(&cfg, "snrs_db = [4.0]\nsymbols_per_trial = 100\nmodes = [\"mrc\"]\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_thuwb"))
        .args(["ber-study", "--trials", "2", "--seed", "9", "--workers", "1"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let m = Manifest::load(&out.join(MANIFEST_FILE)).unwrap();
    match m.experiment {
        Experiment::BerStudy(s) => {
            assert_eq!(s.link.seed, 9);
            assert_eq!(s.link.realizations, 2);
            assert_eq!(s.modes, vec![CombinerMode::Mrc]);
        }
        other => panic!("wrong experiment {}", other.command()),
    }
    let csv = fs::read_to_string(out.join("ber_mrc.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("snr_db,ber"));
    assert_eq!(csv.lines().count(), 2);

    let bad = Command::new(env!("CARGO_BIN_EXE_thuwb"))
        .args(["ber-study", "--trials", "0", "--out"])
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
