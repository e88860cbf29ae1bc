use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thuwb::fec::{bits_to_symbols, conv_encode, viterbi_decode, ConvCodeSpec};

/// Shift-register encoder written out tap by tap; taps[0] is the current input.
fn reference_encode(bits: &[u8]) -> Vec<u8> {
    let g0 = [1, 1, 1, 1, 0, 0, 1];
    let g1 = [1, 0, 1, 1, 0, 1, 1];
    let mut reg = [0u8; 7];
    let mut out = Vec::new();
    for &b in bits.iter().chain([0u8; 6].iter()) {
        reg.rotate_right(1);
        reg[0] = b;
        out.push(reg.iter().zip(g0).map(|(r, g)| r * g).sum::<u8>() % 2);
        out.push(reg.iter().zip(g1).map(|(r, g)| r * g).sum::<u8>() % 2);
    }
    out
}

fn llr(coded: &[u8]) -> Vec<f64> {
    bits_to_symbols(coded).iter().map(|&s| s as f64).collect()
}

#[test]
fn encoder_matches_tap_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = ConvCodeSpec::default();
    for len in [0, 1, 7, 50] {
        let bits: Vec<u8> = (0..len).map(|_| rng.random_range(0..2)).collect();
        assert_eq!(conv_encode(&bits, &spec).unwrap(), reference_encode(&bits));
    }
}

#[test]
fn impulse_response_is_generators() {
    let out = conv_encode(&[1], &ConvCodeSpec::default()).unwrap();
    let a: Vec<u8> = out.iter().step_by(2).copied().collect();
    let b: Vec<u8> = out.iter().skip(1).step_by(2).copied().collect();
    assert_eq!(a, vec![1, 1, 1, 1, 0, 0, 1]);
    assert_eq!(b, vec![1, 0, 1, 1, 0, 1, 1]);
}

#[test]
fn free_distance_is_ten() {
    let spec = ConvCodeSpec::default();
    let mut min_w = usize::MAX;
    for m in 1u32..(1 << 10) {
        if m & 1 == 0 {
            continue;
        }
        let bits: Vec<u8> = (0..10).map(|i| (m >> i & 1) as u8).collect();
        let w = conv_encode(&bits, &spec).unwrap().iter().filter(|&&b| b == 1).count();
        min_w = min_w.min(w);
    }
    assert_eq!(min_w, 10);
}

#[test]
fn viterbi_equals_brute_force_ml() {
    let spec = ConvCodeSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8;
    let book: Vec<(Vec<u8>, Vec<f64>)> = (0u32..1 << n)
        .map(|m| {
            let bits: Vec<u8> = (0..n).map(|i| (m >> i & 1) as u8).collect();
            let s = llr(&conv_encode(&bits, &spec).unwrap());
            (bits, s)
        })
        .collect();
    for _ in 0..40 {
        let noisy: Vec<f64> = book[rng.random_range(0..book.len())]
            .1
            .iter()
            .map(|s| s + 1.2 * (rng.random::<f64>() - 0.5) * 2.0)
            .collect();
        let best = book
            .iter()
            .max_by(|a, b| {
                let ma: f64 = a.1.iter().zip(&noisy).map(|(x, y)| x * y).sum();
                let mb: f64 = b.1.iter().zip(&noisy).map(|(x, y)| x * y).sum();
                ma.total_cmp(&mb)
            })
            .unwrap();
        assert_eq!(viterbi_decode(&noisy, &spec).unwrap(), best.0);
    }
}

#[test]
fn corrects_four_hard_errors() {
    let spec = ConvCodeSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bits: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
    let mut l = llr(&conv_encode(&bits, &spec).unwrap());
    for i in [10, 60, 130, 300] {
        l[i] = -l[i];
    }
    assert_eq!(viterbi_decode(&l, &spec).unwrap(), bits);
}

#[test]
fn rejects_malformed_input() {
    let spec = ConvCodeSpec::default();
    assert!(viterbi_decode(&[1.0; 13], &spec).is_err());
    assert!(viterbi_decode(&[1.0; 4], &spec).is_err());
    assert!(viterbi_decode(&[f64::NAN; 12], &spec).is_err());
    assert!(conv_encode(&[2], &spec).is_err());
    let bad = ConvCodeSpec {
        constraint_length: 3,
        generators: [0o17, 0o5],
    };
    assert!(bad.validate().is_err());
}
