//! Constructors for the named bilayer functions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use itertools::Itertools;

use crate::bilayer::{nat_set, precondition, BilayerError, BilayerFn, MultiFn, ValueSet};
use crate::term::Term;

/// `k` options of which a secret set of `m` are wrong.
///
/// Secrets are the `m`-element subsets `A` of `{0..k-1}` as set terms; the
/// cell at `(* | A)` is the complement of `A`.
pub fn error(m: u64, k: u64) -> Result<BilayerFn, BilayerError> {
    if m == 0 || m >= k {
        return Err(precondition(format!("error({m},{k}) needs 0 < m < k")));
    }
    let cells = (0..k).combinations(m as usize).map(|wrong| {
        let values = (0..k).filter(|a| !wrong.contains(a)).map(Term::Nat).collect();
        (Term::Star, Term::Set(wrong), values)
    });
    BilayerFn::new(format!("error({m},{k})"), cells, nat_set(0..k))
}

/// The hard-block variant: `k` blocks, `n` of them hard, hit `m` times.
///
/// Public inputs are the strictly increasing `n`-tuples of hard positions,
/// secrets are all `m`-tuples of hit positions. A normal block survives
/// unless it is hit; a hard block survives unless every hit lands on it.
pub fn error_hard(m: u64, k: u64, n: u64) -> Result<BilayerFn, BilayerError> {
    if m == 0 || m >= k {
        return Err(precondition(format!("error_hard({m},{k},{n}) needs 0 < m < k")));
    }
    error_hard_with_zero(m, k, n)
}

/// Same as [`error_hard`] but also accepts `m = 0` (no hits, every block
/// survives), which the consolidation step falls back to when `m = 1`.
pub(crate) fn error_hard_with_zero(m: u64, k: u64, n: u64) -> Result<BilayerFn, BilayerError> {
    if m >= k || n > k {
        return Err(precondition(format!("error_hard({m},{k},{n}) needs m < k and n <= k")));
    }
    let mut cells = Vec::new();
    for hard in (0..k).combinations(n as usize) {
        let hits_iter: Vec<Vec<u64>> =
            if m == 0 { alloc::vec![Vec::new()] } else { (0..m).map(|_| 0..k).multi_cartesian_product().collect() };
        for hits in hits_iter {
            let values = hard_block_survivors(k, &hard, &hits);
            cells.push((Term::nat_tuple(hard.iter().copied()), Term::nat_tuple(hits), values));
        }
    }
    BilayerFn::new(format!("error_hard({m},{k},{n})"), cells, nat_set(0..k))
}

/// Blocks `< k` that survive the hits; `hard` lists the hard positions.
pub fn hard_block_survivors(k: u64, hard: &[u64], hits: &[u64]) -> ValueSet {
    (0..k)
        .filter(|a| if hard.contains(a) { hits.is_empty() || hits.iter().any(|c| c != a) } else { !hits.contains(a) })
        .map(Term::Nat)
        .collect()
}

/// Checks a public hard-block list: distinct positions below `k`.
pub fn check_hard_positions(k: u64, hard: &[u64]) -> Result<(), BilayerError> {
    if hard.iter().any(|&a| a >= k) {
        return Err(precondition(format!("hard block position out of range in {hard:?}")));
    }
    let mut sorted = hard.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(precondition(format!("hard block positions must be distinct, got {hard:?}")));
    }
    Ok(())
}

/// Lifts a multifunction to a bilayer function with the single secret `*`.
pub fn hat(name: impl Into<String>, f: &MultiFn) -> Result<BilayerFn, BilayerError> {
    let cells = f.iter().map(|(n, v)| (n.clone(), Term::Star, v.clone()));
    BilayerFn::from_cells(name, cells)
}

/// `Avoid_g` truncated to the universe `{0..universe-1}`.
///
/// `g[n] = Some(v)` forbids `v` at public input `n`; `None` leaves the
/// whole universe available.
pub fn avoid(g: &[Option<u64>], universe: u64) -> Result<BilayerFn, BilayerError> {
    if universe < 2 {
        return Err(precondition(format!("avoid needs a universe of at least 2, got {universe}")));
    }
    if g.is_empty() {
        return Err(precondition("avoid needs at least one public input"));
    }
    if let Some(v) = g.iter().flatten().find(|&&v| v >= universe) {
        return Err(precondition(format!("avoid: value {v} is not below the universe {universe}")));
    }
    let cells = g.iter().enumerate().map(|(n, forbidden)| {
        let values = (0..universe).filter(|v| Some(*v) != *forbidden).map(Term::Nat).collect();
        (Term::Nat(n as u64), Term::Star, values)
    });
    let shown: Vec<String> = g.iter().map(|v| v.map_or_else(|| String::from("_"), |v| format!("{v}"))).collect();
    BilayerFn::new(format!("avoid([{}],{universe})", shown.join(",")), cells, nat_set(0..universe))
}

/// The identity on `{0..alphabet-1}` with no secret layer.
pub fn id_fn(alphabet: u64) -> Result<BilayerFn, BilayerError> {
    if alphabet == 0 {
        return Err(precondition("id needs an alphabet of at least 1"));
    }
    let f: MultiFn = (0..alphabet).map(|n| (Term::Nat(n), nat_set([n]))).collect();
    hat(format!("id({alphabet})"), &f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    fn binom(n: u64, r: u64) -> u64 {
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn error_cells() {
        let e = error(1, 2).unwrap();
        assert_eq!(e.cell(&Term::Star, &Term::set([0])), Some(&nat_set([1])));
        assert_eq!(e.cell(&Term::Star, &Term::set([1])), Some(&nat_set([0])));
        let e = error(1, 3).unwrap();
        assert_eq!(e.cell(&Term::Star, &Term::set([2])), Some(&nat_set([0, 1])));
        let e = error(2, 3).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.iter().all(|(_, _, v)| v.len() == 1));
    }

    #[test]
    fn error_rejects_bad_parameters() {
        assert!(error(0, 2).is_err());
        assert!(error(2, 2).is_err());
        assert!(error(3, 2).is_err());
    }

    #[test]
    fn error_shape_for_all_small_parameters() {
        for k in 2..=7 {
            for m in 1..k {
                let e = error(m, k).unwrap();
                assert!(e.is_basic());
                assert_eq!(e.len() as u64, binom(k, m));
                for (_, secret, values) in e.iter() {
                    assert_eq!(values.len() as u64, k - m);
                    assert!(values.is_subset(e.alphabet()));
                    for a in secret.as_set().unwrap() {
                        assert!(!values.contains(&Term::Nat(*a)));
                    }
                }
            }
        }
    }

    #[test]
    fn hard_block_cells() {
        let e = error_hard(2, 4, 1).unwrap();
        let public = Term::nat_tuple([0]);
        assert_eq!(e.cell(&public, &Term::nat_tuple([0, 0])), Some(&nat_set([1, 2, 3])));
        assert_eq!(e.cell(&public, &Term::nat_tuple([0, 1])), Some(&nat_set([0, 2, 3])));
        assert_eq!(e.cell(&public, &Term::nat_tuple([1, 1])), Some(&nat_set([0, 2, 3])));
        assert_eq!(e.dom_pub().count(), 4);
        assert_eq!(e.secrets(&public).count(), 16);
    }

    #[test]
    fn no_hard_blocks_matches_plain_error() {
        for k in 2..=5 {
            for m in 1..k {
                let hard = error_hard(m, k, 0).unwrap();
                let plain = error(m, k).unwrap();
                // Collapse each hit tuple to its hit set; tuples hitting fewer
                // than m distinct blocks are dominated and have no plain twin.
                let mut by_set: BTreeMap<Term, ValueSet> = BTreeMap::new();
                for (_, secret, values) in hard.iter() {
                    let hits = Term::set(secret.as_nat_tuple().unwrap());
                    if hits.as_set().unwrap().len() as u64 == m {
                        let prev = by_set.insert(hits, values.clone());
                        assert!(prev.is_none_or(|p| p == *values));
                    }
                }
                let plain_cells: BTreeMap<Term, ValueSet> =
                    plain.iter().map(|(_, s, v)| (s.clone(), v.clone())).collect();
                assert_eq!(by_set, plain_cells);
            }
        }
    }

    #[test]
    fn hard_positions_validation() {
        assert!(check_hard_positions(4, &[0, 2]).is_ok());
        assert!(check_hard_positions(4, &[2, 2]).is_err());
        assert!(check_hard_positions(4, &[4]).is_err());
    }

    #[test]
    fn hat_and_id() {
        let f: MultiFn = [(Term::Nat(0), ValueSet::new()), (Term::Nat(1), nat_set([3]))].into_iter().collect();
        let h = hat("f", &f).unwrap();
        assert_eq!(h.cell(&Term::Nat(0), &Term::Star), Some(&ValueSet::new()));
        assert_eq!(h.dom_pub().cloned().collect::<Vec<_>>(), f.keys().cloned().collect::<Vec<_>>());
        let id = id_fn(2).unwrap();
        assert_eq!(id.cell(&Term::Nat(1), &Term::Star), Some(&nat_set([1])));
        assert_eq!(id_fn(1).unwrap().len(), 1);
        assert!(id_fn(0).is_err());
    }

    #[test]
    fn avoid_cells() {
        let a = avoid(&[Some(1), None], 3).unwrap();
        assert_eq!(a.cell(&Term::Nat(0), &Term::Star), Some(&nat_set([0, 2])));
        assert_eq!(a.cell(&Term::Nat(1), &Term::Star), Some(&nat_set([0, 1, 2])));
        assert_eq!(a.name(), "avoid([1,_],3)");
        let tight = avoid(&[Some(0), Some(1)], 2).unwrap();
        assert!(tight.iter().all(|(_, _, v)| v.len() == 1));
        assert!(avoid(&[Some(0)], 1).is_err());
        assert!(avoid(&[Some(5)], 3).is_err());
    }
}
