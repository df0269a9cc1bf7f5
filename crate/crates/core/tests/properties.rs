//! Property tests for the structural invariants of maps and transformations.

use proptest::prelude::*;
use qpmap::classify::{find_integrals, sampling_oracle, IntegralBasis};
use qpmap::map::{canonicalize, MapParts};
use qpmap::transform::{inverse_transform_state, transform_state, transformed_parts};
use qpmap::{apply_qmt, class_invariant, compose, Matrix, QPMap, Qmt, Scalar, State};

fn quarter() -> impl Strategy<Value = Scalar> {
    (-4i64..=4).prop_map(|k| Scalar::ratio(k, 4))
}

fn matrix(rows: usize, cols: usize, entry: BoxedStrategy<Scalar>) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(proptest::collection::vec(entry, cols), rows)
        .prop_map(move |r| Matrix::from_rows(r, cols).unwrap())
}

fn small_int() -> BoxedStrategy<Scalar> {
    (-2i64..=2).prop_map(Scalar::int).boxed()
}

/// Raw triples; zero rows of B, zero columns of A and repeated rows all occur.
fn raw_parts() -> impl Strategy<Value = MapParts> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec(quarter(), n),
            matrix(n, m, quarter().boxed()),
            matrix(m, n, (0i64..=1).prop_map(Scalar::int).boxed()),
        )
            .prop_map(move |(l, a, b)| MapParts::new(n, m, l, a, b).unwrap())
    })
}

fn valid_map() -> impl Strategy<Value = QPMap> {
    raw_parts().prop_map(canonicalize)
}

fn state(n: usize) -> impl Strategy<Value = State> {
    proptest::collection::vec(-0.5f64..0.5, n).prop_map(|u| State::from_log(u).unwrap())
}

fn qmt(n: usize) -> impl Strategy<Value = Qmt> {
    matrix(n, n, small_int()).prop_filter_map("singular", |c| Qmt::new(c).ok())
}

fn map_with_qmts() -> impl Strategy<Value = (QPMap, Qmt, Qmt, State)> {
    valid_map().prop_flat_map(|map| {
        let n = map.n();
        (Just(map), qmt(n), qmt(n), state(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalize_is_idempotent_and_keeps_dynamics(parts in raw_parts(), seed in any::<u64>()) {
        let once = canonicalize(parts.clone());
        let twice = canonicalize(once.parts().clone());
        prop_assert_eq!(&once, &twice);

        let n = parts.n();
        let u: Vec<f64> = (0..n).map(|i| ((seed >> (8 * i)) & 0xff) as f64 / 255.0 - 0.5).collect();
        let s = State::from_log(u).unwrap();
        let phi_raw: Vec<f64> = (0..n)
            .map(|i| {
                let mut p = parts.lambda[i].to_f64();
                for j in 0..parts.m() {
                    let e: f64 = (0..n).map(|k| parts.b.get(j, k).to_f64() * s.log()[k]).sum();
                    p += parts.a.get(i, j).to_f64() * e.exp();
                }
                p
            })
            .collect();
        let stepped = once.step(&s).unwrap();
        for i in 0..n {
            prop_assert!((stepped.log()[i] - s.log()[i] - phi_raw[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn class_invariant_survives_any_qmt((map, t, _, _) in map_with_qmts()) {
        let raw = transformed_parts(&map, &t).unwrap();
        prop_assert_eq!(class_invariant(&map).bm, raw.b.mul(&raw.a.prepend_col(&raw.lambda)));
    }

    #[test]
    fn compose_matches_sequential_application((map, t1, t2, _) in map_with_qmts()) {
        let sequential = apply_qmt(&apply_qmt(&map, &t2).unwrap(), &t1).unwrap();
        let composed = apply_qmt(&map, &compose(&t1, &t2).unwrap()).unwrap();
        prop_assert_eq!(sequential, composed);
    }

    #[test]
    fn identity_is_neutral((map, t, _, _) in map_with_qmts()) {
        let id = Qmt::identity(map.n());
        prop_assert_eq!(apply_qmt(&map, &id).unwrap(), map.clone());
        prop_assert_eq!(compose(&t, &id).unwrap().c().clone(), t.c().clone());
        prop_assert_eq!(compose(&id, &t).unwrap().c().clone(), t.c().clone());
    }

    #[test]
    fn state_transform_round_trips((_, t, _, s) in map_with_qmts()) {
        let back = transform_state(&t, &inverse_transform_state(&t, &s).unwrap()).unwrap();
        prop_assert!(back.max_log_deviation(&s) <= 1e-12);
    }

    #[test]
    fn integrals_are_conserved(map in valid_map(), s in state(4)) {
        let s = State::from_log(s.log()[..map.n()].to_vec()).unwrap();
        let basis = find_integrals(&map);
        if let Ok(traj) = map.iterate(&s, 5) {
            for c in &basis.exponent_vectors {
                let v0 = IntegralBasis::log_value(c, &s);
                for st in &traj.states {
                    // rounding in c . u scales with the largest term, not with the sum
                    let scale: f64 = c.iter().zip(st.log()).map(|(ci, ui)| (ci.to_f64() * ui).abs()).sum();
                    prop_assert!((IntegralBasis::log_value(c, st) - v0).abs() <= 1e-9 * (1.0 + scale));
                }
            }
        }
    }

    #[test]
    fn oracle_is_deterministic(map in valid_map(), seed in any::<u64>()) {
        let a = sampling_oracle(&map, seed, 16);
        let b = sampling_oracle(&map, seed, 16);
        prop_assert_eq!(a, b);
    }
}
