use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use causal_capacity::channels::{
    choi_of_kraus, compose, haar_unitary, kraus_of_choi, max_abs_diff, random_cptp, remix_kraus, QuantumChannel,
};
use causal_capacity::processes::{build_cnot_sdpp, build_switch};
use causal_capacity::tensor::{CMatrix, LabeledOperator, SpaceLayout, C64};

fn random_matrix(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a Haar unitary scaled by a diagonal gives a generic non-Hermitian matrix
    let u = haar_unitary(d, &mut rng);
    let diag = CMatrix::from_fn(d, d, |i, j| if i == j { C64::new(1.0 + i as f64, 0.5) } else { C64::default() });
    u * diag
}

fn layout(dims: &[usize]) -> SpaceLayout {
    SpaceLayout::new(dims.iter().enumerate().map(|(k, d)| (format!("f{k}"), *d))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn permute_round_trip(dims in prop::collection::vec(1usize..=3, 1..=4), seed in 0u64..1000) {
        let l = layout(&dims);
        let op = LabeledOperator::new(l.clone(), random_matrix(l.dim(), seed)).unwrap();
        let labels: Vec<String> = l.labels().iter().rev().map(|s| s.to_string()).collect();
        let rev: Vec<&str> = labels.iter().map(String::as_str).collect();
        let back = op.permute_factors(&rev).unwrap().permute_factors(&l.labels()).unwrap();
        prop_assert!(max_abs_diff(back.matrix(), op.matrix()) == 0.0);
    }

    #[test]
    fn partial_trace_of_product(da in 1usize..=3, db in 1usize..=3, seed in 0u64..1000) {
        let a = LabeledOperator::new(SpaceLayout::single("a", da), random_matrix(da, seed)).unwrap();
        let b = LabeledOperator::new(SpaceLayout::single("b", db), random_matrix(db, seed + 1)).unwrap();
        let ab = a.tensor(&b).unwrap();
        let ta = ab.partial_trace(&["b"]).unwrap();
        let expected = a.matrix() * b.trace();
        prop_assert!(max_abs_diff(ta.matrix(), &expected) < 1e-12);
        prop_assert!((ab.trace() - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn cj_round_trip(i in 1usize..=3, o in 1usize..=3, e in 1usize..=4, seed in 0u64..10_000) {
        prop_assume!(o * e >= i);
        let ch = random_cptp(i, o, e, seed).unwrap();
        let kraus = kraus_of_choi(ch.choi(), i, 1e-10).unwrap();
        prop_assert!(kraus.len() <= i * o);
        let back = choi_of_kraus(&kraus).unwrap();
        prop_assert!(max_abs_diff(back.matrix(), ch.choi_matrix()) <= 1e-9);
        prop_assert!((ch.choi().trace().re - i as f64).abs() < 1e-10);
    }

    #[test]
    fn compose_is_associative(seed in 0u64..10_000) {
        let a = random_cptp(2, 3, 2, seed).unwrap();
        let b = random_cptp(3, 2, 2, seed + 1).unwrap();
        let c = random_cptp(2, 2, 3, seed + 2).unwrap();
        let left = compose(&c, &compose(&b, &a).unwrap()).unwrap();
        let right = compose(&compose(&c, &b).unwrap(), &a).unwrap();
        prop_assert!(max_abs_diff(left.choi_matrix(), right.choi_matrix()) < 1e-10);
    }

    #[test]
    fn remixing_keeps_channel(seed in 0u64..10_000) {
        let ch = random_cptp(2, 2, 3, seed).unwrap();
        let n = ch.kraus().len();
        let v = haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 0xabcd));
        let remixed = QuantumChannel::from_kraus(remix_kraus(ch.kraus(), &v).unwrap()).unwrap();
        prop_assert!(max_abs_diff(remixed.choi_matrix(), ch.choi_matrix()) < 1e-10);
    }

    #[test]
    fn induced_channels_are_cptp(seed in 0u64..10_000) {
        let a = random_cptp(2, 2, 2, seed).unwrap();
        let b = random_cptp(2, 2, 4, seed + 7).unwrap();
        for w in [build_switch(), build_cnot_sdpp()] {
            let g = w.apply(&a, &b).unwrap();
            prop_assert!(g.is_cptp(1e-9));
            let literal = w.process_matrix().apply(&a, &b).unwrap();
            prop_assert!(max_abs_diff(g.choi_matrix(), literal.choi_matrix()) < 1e-12);
        }
    }
}
