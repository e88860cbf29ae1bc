mod common;

use common::gaussian;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thuwb::estimation::{
    estimate_channel, estimate_interference, finger_sweep_schedule, m_sequence, nmse, nmse_largest, training_sequence,
    TrainingConfig, POLY_DEG9_A, POLY_DEG9_B,
};
use thuwb::receiver::{synthesize, CompositeChannel};
use thuwb::th_code::Numerology;
use thuwb::DeltaSamples;

#[test]
fn m_sequences_have_two_valued_periodic_autocorrelation() {
    for poly in [POLY_DEG9_A, POLY_DEG9_B] {
        let s = m_sequence(poly, 3).unwrap();
        assert_eq!(s.len(), 511);
        assert_eq!(s.iter().map(|&x| x as i32).sum::<i32>(), -1);
        for lag in 0..511 {
            let r: i32 = (0..511).map(|i| s[i] as i32 * s[(i + lag) % 511] as i32).sum();
            assert_eq!(r, if lag == 0 { 511 } else { -1 }, "lag {lag}");
        }
    }
}

#[test]
fn seeds_give_cyclic_shifts() {
    let a = m_sequence(POLY_DEG9_A, 0).unwrap();
    let b = m_sequence(POLY_DEG9_A, 77).unwrap();
    assert_ne!(a, b);
    assert!((0..511).any(|k| (0..511).all(|i| a[(i + k) % 511] == b[i])));
}

#[test]
fn reducible_polynomials_rejected() {
    assert!(m_sequence((1 << 9) | 1, 0).is_err());
    assert!(m_sequence((1 << 9) | (1 << 3), 0).is_err());
    // x^4 + x^2 + 1 = (x^2 + x + 1)^2.
    assert!(m_sequence((1 << 4) | (1 << 2) | 1, 0).is_err());
    assert_eq!(m_sequence((1 << 4) | 1 | 2, 0).unwrap().len(), 15);
}

#[test]
fn training_timing_of_default_numerology() {
    let c = TrainingConfig::default();
    let num = Numerology::default();
    // 4 × (511 + 73) symbols of 5 ns.
    let total = 4.0 * (511.0 + 73.0) * 5e-9;
    assert!((c.total_duration(&num) - total).abs() < 1e-15);
    assert!((c.guard_duration(&num) - 365e-9).abs() < 1e-15);
    assert_eq!(training_sequence(&c, 0).unwrap().len(), 511);
}

#[test]
fn sweep_covers_every_phase() {
    let c = TrainingConfig::default();
    let s = finger_sweep_schedule(&c);
    assert_eq!(s.len(), 10);
    let mut seen = [false; 32];
    for row in &s {
        assert_eq!(row.len(), 4);
        for &t in row {
            if t < 32 {
                seen[t as usize] = true;
            }
        }
    }
    assert!(seen.iter().all(|&x| x));
    let thin = TrainingConfig { fingers: 7, ..c };
    assert!(thin.validate().is_err());
}

fn observe(h: &CompositeChannel, bits: &[f64], c: &TrainingConfig, noise: f64, seed: u64) -> Vec<DeltaSamples> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<i8> = bits.iter().map(|&x| x as i8).collect();
    (0..c.repeats)
        .map(|_| {
            let mut y = vec![0.0; c.samples_per_repeat()];
            synthesize(&b, h, c.samples_per_symbol, 0, &mut y);
            y.iter_mut().for_each(|v| *v += noise * gaussian(&mut rng));
            DeltaSamples::new(0, y)
        })
        .collect()
}

#[test]
fn noiseless_short_channel_is_exact() {
    let c = TrainingConfig::default();
    let bits: Vec<f64> = training_sequence(&c, 1).unwrap().iter().map(|&b| b as f64).collect();
    let taps: Vec<f64> = (0..32).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let h = CompositeChannel::new(0, taps.clone());
    let est = estimate_channel(&observe(&h, &bits, &c, 0.0, 0), &bits, &c, 64).unwrap();
    for n in 0..32 {
        assert!((est.taps[n] - taps[n]).abs() < 1e-12);
    }
    assert!(est.taps[32..].iter().all(|t| t.abs() < 0.25));
    assert!(est.sources.iter().all(|&s| s >= 1));
}

#[test]
fn estimate_matches_dense_correlator() {
    let c = TrainingConfig::default();
    let bits: Vec<f64> = training_sequence(&c, 2).unwrap().iter().map(|&b| b as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = CompositeChannel::new(
        0,
        (0..300)
            .map(|i| gaussian(&mut rng) * (-(i as f64) / 80.0).exp())
            .collect(),
    );
    let reps = observe(&h, &bits, &c, 0.1, 6);
    let est = estimate_channel(&reps, &bits, &c, 200).unwrap();
    let sched = finger_sweep_schedule(&c);
    for n in [0i64, 5, 31, 32, 77, 199] {
        let mut acc = 0.0;
        let mut cnt = 0;
        for row in &sched {
            for (m, &t) in row.iter().enumerate() {
                if t <= n && (n - t) % 32 == 0 {
                    acc += bits
                        .iter()
                        .enumerate()
                        .map(|(k, b)| b * reps[m].at(n + 32 * k as i64))
                        .sum::<f64>()
                        / 511.0;
                    cnt += 1;
                }
            }
        }
        assert!((est.taps[n as usize] - acc / cnt as f64).abs() < 1e-12, "{n}");
    }
    let truth: Vec<f64> = (0..200).map(|n| h.at(n)).collect();
    assert!(nmse(&est.taps, &truth).unwrap() < 0.1);
}

#[test]
fn white_noise_profile_is_flat() {
    let c = TrainingConfig::default();
    let bits: Vec<f64> = training_sequence(&c, 3).unwrap().iter().map(|&b| b as f64).collect();
    let h = CompositeChannel::new(0, vec![1.0, 0.5, -0.25]);
    let reps = observe(&h, &bits, &c, 0.5, 8);
    let est = estimate_channel(&reps, &bits, &c, 64).unwrap();
    let prof = estimate_interference(&reps, &bits, &est, &c).unwrap();
    for p in &prof.power {
        assert!((p / 0.25 - 1.0).abs() < 0.25, "{p}");
    }
}

#[test]
fn short_observation_rejected() {
    let c = TrainingConfig::default();
    let bits = vec![1.0; 511];
    let reps = vec![DeltaSamples::new(0, vec![0.0; 100]); 4];
    assert!(estimate_channel(&reps, &bits, &c, 64).is_err());
    assert!(estimate_channel(&reps[..3], &bits, &c, 64).is_err());
}

#[test]
fn nmse_definitions() {
    let t = [1.0, -2.0, 0.5];
    assert_eq!(nmse(&t, &t).unwrap(), 0.0);
    assert_eq!(nmse(&[0.0; 3], &t).unwrap(), 1.0);
    assert!(nmse(&[0.0; 3], &[0.0; 3]).is_err());
    // Only the largest tap (index 1) counts.
    assert_eq!(nmse_largest(&[9.0, -2.0, 9.0], &t, 1).unwrap(), 0.0);
}
