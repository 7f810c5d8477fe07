//! Property tests for the cross-module invariants.

use proptest::collection::btree_set;
use proptest::prelude::*;

use f2kit::fourier::{u2_via_spectrum, wht_in_place, wht_spectrum};
use f2kit::frac::Frac;
use f2kit::gf2::{
    is_affine_subspace, iterated_derivative, set_stats, span, sumset, FnTable, PointF2, SubsetF2n,
};
use f2kit::gowers::{gowers_norm_exact, polynomial_degree};

fn subset_strategy(dim: u32) -> impl Strategy<Value = SubsetF2n> {
    btree_set(0..(1u32 << dim), 1..=24)
        .prop_map(move |codes| {
            let codes: Vec<u32> = codes.into_iter().collect();
            SubsetF2n::from_codes(dim, &codes).unwrap()
        })
}

fn bool_fn_strategy(dim: u32) -> impl Strategy<Value = FnTable> {
    proptest::collection::vec(0u32..2, 1 << dim)
        .prop_map(move |table| FnTable::new(dim, 1, table).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sumset_contains_zero_and_sits_inside_span(s in subset_strategy(6)) {
        let sum = sumset(&s).unwrap();
        prop_assert!(sum.contains(0));
        let sp = span(&s);
        for c in sum.codes() {
            prop_assert!(sp.contains(c));
        }
        prop_assert_eq!(span(&sp).codes(), sp.codes());
        prop_assert!(sp.len().is_power_of_two());
    }

    #[test]
    fn doubling_one_exactly_characterizes_affine_subspaces(s in subset_strategy(6)) {
        let stats = set_stats(&s).unwrap();
        prop_assert!(stats.doubling >= Frac::one());
        prop_assert_eq!(stats.doubling == Frac::one(), is_affine_subspace(&s));
        prop_assert!(stats.size <= stats.sumset_size);
        prop_assert!(stats.sumset_size <= stats.size * stats.size);
        prop_assert!(stats.size <= stats.span_size);
    }

    #[test]
    fn iterated_derivative_is_order_invariant(
        f in bool_fn_strategy(5),
        mut codes in proptest::collection::vec(0u32..32, 2..=3),
    ) {
        let ys: Vec<PointF2> = codes.iter().map(|&c| PointF2::new(5, c).unwrap()).collect();
        let fwd = iterated_derivative(&f, &ys).unwrap();
        codes.reverse();
        let ys_rev: Vec<PointF2> = codes.iter().map(|&c| PointF2::new(5, c).unwrap()).collect();
        prop_assert_eq!(fwd, iterated_derivative(&f, &ys_rev).unwrap());
    }

    #[test]
    fn derivative_strictly_drops_degree(f in bool_fn_strategy(5), y in 1u32..32) {
        let d = polynomial_degree(&f).unwrap();
        let fy = f2kit::gf2::derivative(&f, PointF2::new(5, y).unwrap()).unwrap();
        prop_assert!(polynomial_degree(&fy).unwrap() <= d.max(1) - 1);
    }

    #[test]
    fn transform_applied_twice_scales_by_domain_size(f in bool_fn_strategy(6)) {
        let mut data: Vec<i32> = f.table().iter().map(|&b| 1 - 2 * b as i32).collect();
        let original = data.clone();
        wht_in_place(&mut data);
        wht_in_place(&mut data);
        for (a, b) in data.iter().zip(&original) {
            prop_assert_eq!(*a, b * 64);
        }
    }

    #[test]
    fn parseval_and_spectral_u2(f in bool_fn_strategy(6)) {
        let spec = wht_spectrum(&f).unwrap();
        prop_assert!((spec.parseval_sum() - 1.0).abs() < 1e-12);
        let u2 = u2_via_spectrum(&f).unwrap();
        let exact = gowers_norm_exact(&f, 2).unwrap().value;
        prop_assert!((u2 - exact).abs() <= 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&u2));
    }

    #[test]
    fn fn_file_round_trip(f in bool_fn_strategy(4)) {
        let mut buf = Vec::new();
        f2kit::io::write_fn(&f, &mut buf).unwrap();
        prop_assert_eq!(f2kit::io::read_fn(&buf[..]).unwrap(), f);
    }

    #[test]
    fn set_file_round_trip(s in subset_strategy(7)) {
        let mut buf = Vec::new();
        f2kit::io::write_set(&s, &mut buf).unwrap();
        prop_assert_eq!(f2kit::io::read_set(&buf[..]).unwrap(), s);
    }
}
