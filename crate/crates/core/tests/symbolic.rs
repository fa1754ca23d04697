mod common;

use common::{random_cost, rng};
use ergodic_transport::symbolic::{decode, encode, word_count, CostTensor, Word};
use ergodic_transport::transfer::pressure;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #[test]
    fn decode_inverts_encode(d in 1usize..=3, symbols in prop::collection::vec(0usize..3, 0..=6)) {
        let symbols: Vec<usize> = symbols.into_iter().map(|s| s % d).collect();
        let index = encode(&symbols, d);
        prop_assert!(index < word_count(d, symbols.len()).max(1));
        prop_assert_eq!(decode(index, symbols.len(), d), symbols);
    }

    #[test]
    fn word_shift_drops_first_symbol(d in 2usize..=3, len in 1usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let w = Word::from_index(r.gen_range(0..word_count(d, len)), len, d);
        let s = w.shift();
        prop_assert_eq!(s.symbols(), &w.symbols()[1..]);
        prop_assert_eq!(s.index(d), w.index(d) / d);
    }

    #[test]
    fn lifting_keeps_every_evaluation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nx, d, m) = (r.gen_range(1..=3), r.gen_range(1..=3), r.gen_range(1..=2));
        let c = random_cost(&mut r, nx, d, m, 3.0);
        let lifted = c.lift_depth(m + 1).unwrap();
        prop_assert_eq!(lifted.depth(), m + 1);
        for x in 0..nx {
            for w in 0..word_count(d, m + 1) {
                let word = decode(w, m + 1, d);
                prop_assert_eq!(lifted.eval(x, &word), c.eval(x, &word));
            }
        }
    }
}

#[test]
fn lift_leaves_pressure_unchanged() {
    let mut r = rng(11);
    for _ in 0..60 {
        let nx = r.gen_range(1..=3);
        let d = if nx == 1 {
            r.gen_range(2..=3)
        } else {
            r.gen_range(1..=3)
        };
        let m = r.gen_range(1..=2);
        let c = random_cost(&mut r, nx, d, m, 2.0);
        let p = pressure(&c).unwrap();
        let q = pressure(&c.lift_depth(m + 1).unwrap()).unwrap();
        assert!((p - q).abs() <= 1e-10, "{p} vs {q} for {:?}", c.values());
    }
}

#[test]
fn example_one_lifted_to_depth_three() {
    let c = common::example_one();
    let expected = ((5.0 + 17f64.sqrt()) / 2.0).ln();
    let lifted = c.lift_depth(3).unwrap();
    approx::assert_abs_diff_eq!(pressure(&lifted).unwrap(), expected, epsilon = 1e-12);
}

#[test]
fn depth_one_lift_ignores_second_symbol() {
    let c = CostTensor::new(2, 3, 1, vec![0.1, -0.2, 0.3, 1.0, 2.0, 3.0]).unwrap();
    let l = c.lift_depth(2).unwrap();
    for x in 0..2 {
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(l.eval(x, &[a, b]), c.eval(x, &[a]));
            }
        }
    }
}
