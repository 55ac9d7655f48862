//! Deterministic pseudo-random players shared by the property tests.
#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use bilayer_core::engine::{ArthurMove, ArthurStrategy, MerlinStrategy, MerlinView, NimueStrategy, NimueView};
use bilayer_core::families::{error, id_fn};
use bilayer_core::{BilayerFn, Term};

pub fn small_families() -> Vec<BilayerFn> {
    vec![id_fn(2).unwrap(), error(1, 2).unwrap(), error(1, 3).unwrap(), error(2, 3).unwrap()]
}

pub fn pick<T: Hash>(seed: u64, salt: &T, n: usize) -> usize {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    salt.hash(&mut h);
    (h.finish() % n as u64) as usize
}

/// Queries or terminates by hashing what Arthur can see.
pub struct HashArthur {
    pub seed: u64,
    pub queries: Vec<Term>,
    pub values: Vec<Term>,
}

impl HashArthur {
    pub fn new(seed: u64, f: &BilayerFn, g: &BilayerFn) -> Self {
        HashArthur { seed, queries: g.dom_pub().cloned().collect(), values: f.alphabet().iter().cloned().collect() }
    }
}

impl ArthurStrategy for HashArthur {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        let i = pick(self.seed, &(first, answers), self.queries.len() + self.values.len());
        Some(match i.checked_sub(self.queries.len()) {
            None => ArthurMove::Query(self.queries[i].clone()),
            Some(j) => ArthurMove::Terminate(self.values[j].clone()),
        })
    }
}

/// Picks a secret for the current query by hashing the whole history.
pub struct HashNimue {
    pub seed: u64,
    pub g: BilayerFn,
}

impl NimueStrategy for HashNimue {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let secrets: Vec<&Term> = self.g.secrets(view.query).collect();
        if secrets.is_empty() {
            return None;
        }
        let salt = (view.first, view.first_secret, view.rounds, view.query);
        Some(secrets[pick(self.seed, &salt, secrets.len())].clone())
    }
}

/// A legal Merlin: a fixed opening, then a hashed choice from each cell.
pub struct HashMerlin {
    pub seed: u64,
    pub opening: (Term, Term),
    pub g: BilayerFn,
}

impl HashMerlin {
    pub fn new(seed: u64, f: &BilayerFn, g: &BilayerFn) -> Self {
        let openings: Vec<(Term, Term)> = f.iter().map(|(p, s, _)| (p.clone(), s.clone())).collect();
        let opening = openings[pick(seed, &"open", openings.len())].clone();
        HashMerlin { seed, opening, g: g.clone() }
    }
}

impl MerlinStrategy for HashMerlin {
    fn first(&self) -> Option<(Term, Term)> {
        Some(self.opening.clone())
    }

    fn respond(&self, view: &MerlinView<'_>) -> Option<Term> {
        let cell: Vec<&Term> = self.g.cell(view.query, view.secret)?.iter().collect();
        if cell.is_empty() {
            return None;
        }
        Some(cell[pick(self.seed, &(view.rounds, view.query), cell.len())].clone())
    }
}
