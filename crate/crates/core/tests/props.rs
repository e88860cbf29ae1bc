mod common;

use common::normal_equations;
use proptest::prelude::*;
use thuwb::fec::{conv_encode, viterbi_decode, ConvCodeSpec};
use thuwb::pulse::{mask_margin, PsdEstimate, SpectralMask};
use thuwb::receiver::{combine_mmse, synthesize, CompositeChannel};
use thuwb::{DeltaSamples, SampledWaveform};

fn bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 1..max)
}

fn antipodal(n: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn encode_decode_round_trip(info in bits(200), gain in 0.1f64..10.0) {
        let spec = ConvCodeSpec::default();
        let coded = conv_encode(&info, &spec).unwrap();
        prop_assert_eq!(coded.len(), spec.coded_len(info.len()));
        let llrs: Vec<f64> = coded.iter().map(|&c| if c == 0 { gain } else { -gain }).collect();
        prop_assert_eq!(viterbi_decode(&llrs, &spec).unwrap(), info);
    }

    #[test]
    fn encoder_is_linear(a in bits(64), seed in any::<u64>()) {
        let spec = ConvCodeSpec::default();
        let b: Vec<u8> = (0..a.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
        let ea = conv_encode(&a, &spec).unwrap();
        let eb = conv_encode(&b, &spec).unwrap();
        let ex = conv_encode(&x, &spec).unwrap();
        prop_assert!(ea.iter().zip(&eb).zip(&ex).all(|((p, q), r)| p ^ q == *r));
    }

    #[test]
    fn synthesis_is_linear_in_bits_and_channel(
        b1 in antipodal(12),
        b2 in antipodal(12),
        taps in prop::collection::vec(-1.0f64..1.0, 1..70),
        start in -40i64..40,
        g in -3.0f64..3.0,
    ) {
        let p = 16;
        let h = CompositeChannel::new(start, taps);
        let len = 12 * p + 80;
        let mut y1 = vec![0.0; len];
        let mut y2 = vec![0.0; len];
        synthesize(&b1, &h, p, 20, &mut y1);
        synthesize(&b2, &h.scaled(g), p, 20, &mut y2);
        // Both at once into one buffer equals the separate sum.
        let mut both = vec![0.0; len];
        synthesize(&b1, &h, p, 20, &mut both);
        synthesize(&b2, &h.scaled(g), p, 20, &mut both);
        for n in 0..len {
            prop_assert!((both[n] - y1[n] - y2[n]).abs() < 1e-12);
            // out[i] holds absolute index 20 + i.
            let want: f64 = b1
                .iter()
                .enumerate()
                .map(|(k, &b)| b as f64 * h.at(n as i64 + 20 - (k * p) as i64))
                .sum();
            prop_assert!((y1[n] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn trained_rake_weights_solve_least_squares(
        data in antipodal(48),
        samples in prop::collection::vec(-1.0f64..1.0, 48 * 8 + 16),
        delays in prop::collection::btree_set(0i64..8, 1..4),
    ) {
        let p = 8;
        let y = DeltaSamples::new(0, samples.clone());
        let delays: Vec<i64> = delays.into_iter().collect();
        let fit = combine_mmse(&y, &delays, &data, p, false, (0, 0)).unwrap();
        let rows: Vec<Vec<f64>> = (0..data.len())
            .map(|k| delays.iter().map(|&d| y.at(d + (k * p) as i64)).collect())
            .collect();
        let target: Vec<f64> = data.iter().map(|&b| b as f64).collect();
        let oracle = normal_equations(&rows, &target);
        for (w, o) in fit.rake.weights.iter().zip(&oracle) {
            prop_assert!((w - o).abs() < 1e-8 * (1.0 + o.abs()), "{} vs {}", w, o);
        }
    }

    #[test]
    fn mask_margin_tracks_power_offset(
        density in prop::collection::vec(-120.0f64..-40.0, 10..60),
        offset in -30.0f64..30.0,
    ) {
        let n = density.len();
        let freqs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * 1e8).collect();
        let mask = SpectralMask::fcc_indoor();
        let psd = PsdEstimate { frequencies: freqs.clone(), density: density.clone(), resolution_bandwidth: 1e6 };
        let louder = PsdEstimate {
            frequencies: freqs,
            density: density.iter().map(|d| d + offset).collect(),
            resolution_bandwidth: 1e6,
        };
        let (m0, f0) = mask_margin(&psd, &mask);
        let (m1, f1) = mask_margin(&louder, &mask);
        prop_assert!((m0 - offset - m1).abs() < 1e-9);
        prop_assert_eq!(f0, f1);
    }

    #[test]
    fn accumulate_matches_pointwise_sum(
        a in prop::collection::vec(-1.0f64..1.0, 1..40),
        b in prop::collection::vec(-1.0f64..1.0, 1..40),
        a0 in -50i64..50,
        shift in -80i64..80,
        g in -2.0f64..2.0,
    ) {
        let dt = 1e-12;
        let wa = SampledWaveform::on_grid(a, dt, a0).unwrap();
        let wb = SampledWaveform::on_grid(b, dt, 0).unwrap();
        let mut acc = wa.clone();
        acc.accumulate(&wb, g, shift);
        prop_assert!(acc.start_index() <= wa.start_index().min(shift));
        for n in -200..200 {
            let want = wa.at_index(n) + g * wb.at_index(n - shift);
            prop_assert!((acc.at_index(n) - want).abs() < 1e-15);
        }
    }
}
