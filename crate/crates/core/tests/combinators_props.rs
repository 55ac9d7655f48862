//! Lattice and composition properties of the combinators.

mod common;

use std::sync::Arc;

use bilayer_core::combinators::{compose, join, lt_from_oq, meet, oq_from_lt, ClosureFn};
use bilayer_core::engine::{Verified, Witness, DEFAULT_BUDGET};
use bilayer_core::families::{error, id_fn};
use bilayer_core::solver::{solve_lt, validate_triple};
use bilayer_core::{BilayerFn, CellOracle};
use common::small_families;
use proptest::prelude::*;

fn reduces(f: &BilayerFn, g: &BilayerFn, depth: usize) -> bool {
    solve_lt(f, g, depth, DEFAULT_BUDGET).unwrap().witness.is_some()
}

fn solved(f: &BilayerFn, g: &BilayerFn, depth: usize) -> Option<Verified> {
    let pair = solve_lt(f, g, depth, DEFAULT_BUDGET).unwrap().witness?;
    let w = Witness {
        source: Arc::new(f.clone()),
        target: Arc::new(g.clone()),
        arthur: Arc::new(pair.arthur),
        nimue: Arc::new(pair.nimue),
        depth,
    };
    Some(w.verify().unwrap())
}

#[test]
fn join_is_above_and_meet_below() {
    let items = [error(1, 2).unwrap(), error(1, 3).unwrap(), error(2, 3).unwrap(), id_fn(2).unwrap()];
    for f in &items {
        for g in &items {
            let j = join(f, g).unwrap();
            let m = meet(f, g).unwrap();
            assert!(reduces(f, &j, 1), "{} <= join", f.name());
            assert!(reduces(g, &j, 1), "{} <= join", g.name());
            assert!(reduces(&m, f, 1), "meet <= {}", f.name());
            assert!(reduces(&m, g, 1), "meet <= {}", g.name());
        }
    }
}

#[test]
fn closure_round_trip_on_solved_witnesses() {
    let h = error(1, 2).unwrap();
    for f in small_families() {
        if let Some(w) = solved(&f, &h, 1) {
            let (triple, closure) = oq_from_lt(&w);
            validate_triple(&f, &closure, &triple).unwrap();
            let back = lt_from_oq(Arc::new(f.clone()), &closure, &triple).unwrap();
            back.verify().unwrap();
        }
    }
}

#[test]
fn closure_values_do_not_depend_on_spare_depth() {
    let h = Arc::new(error(1, 2).unwrap());
    let shallow = ClosureFn::new(h.clone(), 1);
    let deep = ClosureFn::new(h, 2);
    let table = shallow.materialize().unwrap();
    assert!(!table.is_empty());
    for (tau, eta, values) in table.iter() {
        assert_eq!(deep.cell_values(tau, eta).as_ref(), Some(values));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn composition_preserves_winning(i in 0usize..4, j in 0usize..4, k in 0usize..4, d0 in 1usize..=2, d1 in 1usize..=2) {
        let items = small_families();
        let (f, g, h) = (&items[i], &items[j], &items[k]);
        if let (Some(outer), Some(inner)) = (solved(f, g, d0), solved(g, h, d1)) {
            let composite = compose(&outer, &inner).unwrap();
            prop_assert!(composite.depth <= d0 * d1);
            prop_assert!(composite.verify().is_ok());
        }
    }
}
