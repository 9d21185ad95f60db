use birkhoff::gibbs::InhomMarkov;
use birkhoff::legendre::{mobius_spectrum, spectrum_closed_form, spectrum_curve, DEFAULT_DERIV_TOL};
use birkhoff::model::{empirical_frequencies, FrequencyTable, Potential, SymbolicSpace, WeightSequence};
use birkhoff::partition::{exact_log_partition_word, log_partition_blocks, log_partition_word};
use birkhoff::pressure::{closed_form_curve, hilbert_metric, mat_vec, projective_diameter_bound};
use birkhoff::returnwords::decompose;
use proptest::prelude::*;

fn potential(r: usize) -> impl Strategy<Value = Potential> {
    prop::collection::vec(-2.0f64..2.0, 1 << r)
        .prop_map(move |t| Potential::new(SymbolicSpace::signs(), r, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engines_agree(
        p in (2usize..=3).prop_flat_map(potential),
        word in prop::collection::vec(-2.0f64..2.0, 0..9),
        lambda in -3.0f64..3.0,
        block in 1usize..5,
    ) {
        let e = exact_log_partition_word(&p, lambda, &word).unwrap();
        let t = log_partition_word(&p, lambda, &word).unwrap();
        let b = log_partition_blocks(&p, lambda, &word, block).unwrap();
        prop_assert!((e - t).abs() <= 1e-12 * e.abs().max(1.0));
        prop_assert!((b - t).abs() <= 1e-12 * t.abs().max(1.0));
    }

    #[test]
    fn log_partition_convex_in_lambda(
        p in (1usize..=3).prop_flat_map(potential),
        word in prop::collection::vec(-2.0f64..2.0, 1..40),
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
    ) {
        let f = |l: f64| log_partition_word(&p, l, &word).unwrap();
        let mid = f(0.5 * (a + b));
        let chord = 0.5 * (f(a) + f(b));
        prop_assert!(mid <= chord + 1e-10 * chord.abs().max(1.0));
    }

    #[test]
    fn hilbert_contraction(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        x in prop::collection::vec(0.01f64..10.0, 3),
        y in prop::collection::vec(0.01f64..10.0, 3),
        spread in 0.05f64..3.0,
    ) {
        let b: Vec<f64> = entries.iter().map(|u| (u * spread).exp()).collect();
        let c = projective_diameter_bound(&b, 3).unwrap();
        let before = hilbert_metric(&x, &y).unwrap();
        let after = hilbert_metric(&mat_vec(&b, &x), &mat_vec(&b, &y)).unwrap();
        prop_assert!(after <= c.birkhoff_ratio * before + 1e-12);
        prop_assert!(c.birkhoff_ratio <= c.ratio + 1e-15);
        prop_assert!(c.diameter <= c.diameter_bound + 1e-12);
    }

    #[test]
    fn iid_weights_are_pure_functions_of_index(seed in any::<u64>(), start in 0usize..5000, len in 1usize..200) {
        let table = FrequencyTable::exact(vec![-1.0, 0.5, 2.0], vec![0.25, 0.25, 0.5]).unwrap();
        let w = WeightSequence::iid(seed, table.clone());
        let block = w.values(start, start + len).unwrap();
        for (i, v) in block.iter().enumerate() {
            prop_assert_eq!(*v, w.weight_at(start + i).unwrap());
        }
        let again = WeightSequence::iid(seed, table).values(start, start + len).unwrap();
        prop_assert_eq!(block, again);
    }

    #[test]
    fn empirical_frequencies_sum_to_one(seed in any::<u64>(), n in 1usize..3000) {
        let table = FrequencyTable::exact(vec![-1.0, 0.0, 1.0], vec![0.3, 0.4, 0.3]).unwrap();
        let ft = empirical_frequencies(&WeightSequence::iid(seed, table), n).unwrap();
        prop_assert!((ft.freqs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(ft.freqs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn markov_rows_and_normalization(lambda in -4.0f64..4.0, n in 1usize..9) {
        let m = InhomMarkov::new(lambda, WeightSequence::moebius(), 10).unwrap();
        for k in 0..10 {
            let p = m.matrix(k);
            prop_assert!((p[0][0] + p[0][1] - 1.0).abs() <= 1e-14);
            prop_assert!((0.5 * (p[0][1] + p[1][1]) - 0.5).abs() <= 1e-14);
        }
        let total: f64 = (0u32..1 << (n + 1))
            .map(|bits| {
                let x: Vec<i8> = (0..=n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
                m.cylinder_measure(&x).unwrap()
            })
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spectrum_bounds_ordered(t in -0.999f64..0.999) {
        let ft = FrequencyTable::moebius();
        let a = t * ft.abs_mean();
        let s = spectrum_closed_form(&ft, a).unwrap();
        prop_assert!(0.0 <= s.dim_lower && s.dim_lower <= s.dim_upper && s.dim_upper <= 1.0 + 1e-12);
        prop_assert!((s.dim() - mobius_spectrum(a).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn curve_spectrum_bounds_ordered(t in -0.9f64..0.9) {
        let lambdas: Vec<f64> = (0..257).map(|i| -8.0 + i as f64 / 16.0).collect();
        let curve = closed_form_curve(&FrequencyTable::moebius(), &lambdas).unwrap();
        let s = spectrum_curve(&curve, t * 0.6, DEFAULT_DERIV_TOL).unwrap();
        prop_assert!(0.0 <= s.dim_lower && s.dim_lower <= s.dim_upper && s.dim_upper <= 1.0 + 1e-12);
    }

    #[test]
    fn decomposition_reconstructs(body in prop::collection::vec(0u8..3, 1..300), k in 1usize..4) {
        let k = k.min(body.len());
        // repeat the sequence so the prefix recurs
        let x: Vec<u8> = body.iter().chain(&body).copied().collect();
        let d = decompose(&x, &x[..k], x.len()).unwrap();
        prop_assert_eq!(d.reconstruct(), x[..d.coverage].to_vec());
        prop_assert!((d.freqs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for v in &d.returns {
            prop_assert!(v.starts_with(&x[..k.min(v.len())]));
        }
    }
}
