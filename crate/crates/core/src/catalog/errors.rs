//! Reductions inside the error family: the easy direction, the
//! consolidation step, and the chain that collapses `error(m,k)` down to
//! `error(1, ceil(k/m))`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use itertools::Itertools;
use thiserror::Error;

use crate::bilayer::{precondition, BilayerError, BilayerFn};
use crate::combinators::{compose, join, join_dispatch, lift_triple, ComposeError};
use crate::engine::{ArthurMove, ArthurStrategy, CopyStrategy, NimueStrategy, NimueView, Verdict, Verified, Witness};
use crate::families::{error, error_hard, error_hard_with_zero};
use crate::solver::TableTriple;
use crate::term::Term;

#[derive(Debug, Clone, Error)]
pub enum ChainError {
    #[error(transparent)]
    Bilayer(#[from] BilayerError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error("the witness for {name} did not verify: {verdict:?}")]
    NotWinning { name: alloc::string::String, verdict: Verdict },
}

pub(crate) fn verified(w: Witness) -> Result<Verified, ChainError> {
    let name = format!("{} <= {}", w.source.name(), w.target.name());
    w.verify().map_err(|verdict| ChainError::NotWinning { name, verdict })
}

pub fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// `error(1,l) <=1 error(m,k)` for `ceil(k/m) <= l`.
///
/// `{0..k-1}` is cut into consecutive blocks of size `m`; the forbidden
/// value `j` becomes the secret covering block `j` (padded with the least
/// other values), and an answer is reported as the index of its block.
pub fn easy_direction(m: u64, k: u64, l: u64) -> Result<TableTriple, BilayerError> {
    if m == 0 || m >= k {
        return Err(precondition(format!("easy_direction({m},{k},{l}) needs 0 < m < k")));
    }
    let blocks = ceil_div(k, m);
    if blocks > l {
        return Err(precondition(format!("easy_direction({m},{k},{l}) needs ceil(k/m) = {blocks} <= {l}")));
    }
    let mut triple = TableTriple::default();
    triple.inner.insert(Term::Star, Term::Star);
    for x in 0..k {
        triple.outer.insert((Term::Star, Term::Nat(x)), Term::Nat(x / m));
    }
    for j in 0..l {
        let mut wrong: Vec<u64> = if j < blocks { (j * m..((j + 1) * m).min(k)).collect() } else { Vec::new() };
        let mut pad = 0;
        while wrong.len() < m as usize {
            if !wrong.contains(&pad) {
                wrong.push(pad);
            }
            pad += 1;
        }
        triple.secret.insert((Term::Star, Term::set([j])), Term::set(wrong));
    }
    Ok(triple)
}

/// Hits allowed in the consolidated problem.
pub fn consolidated_hits(m: u64, k: u64, n: u64) -> u64 {
    (k - n - m).min(m).max(1)
}

/// Whether the consolidation strategy wins for these parameters.
///
/// With one hit and a hard block present the fallback loses: a single hit
/// on a hard block breaks it, which the zero-hit fallback cannot express.
pub fn consolidation_admissible(m: u64, k: u64, n: u64) -> bool {
    m < k && n <= k && k - n >= m && (m >= 2 || (m == 1 && n == 0))
}

/// The consolidation step for `error_hard(m,k,n)`.
///
/// Arthur tries every `m`-subset of the normal blocks in lexicographic
/// order, asking the left side of the join for the instance where that
/// subset is merged into one new hard block. Remaining blocks keep their
/// relative order and the merged block gets index `k-m`. Any answer other
/// than the merged block is a solution; if every answer is the merged block
/// the hits miss some normal block of each subset, and one query to the
/// right side with `m-1` hits finishes.
#[derive(Clone, Debug)]
pub struct Consolidation {
    m: u64,
    k: u64,
    n: u64,
    hits: u64,
}

impl Consolidation {
    pub fn new(m: u64, k: u64, n: u64) -> Result<Self, BilayerError> {
        if !consolidation_admissible(m, k, n) {
            return Err(precondition(format!("consolidation({m},{k},{n}) is not admissible")));
        }
        Ok(Consolidation { m, k, n, hits: consolidated_hits(m, k, n) })
    }

    pub fn source(&self) -> Result<BilayerFn, BilayerError> {
        error_hard(self.m, self.k, self.n)
    }

    pub fn target(&self) -> Result<BilayerFn, BilayerError> {
        let left = error_hard(self.hits, self.k - self.m + 1, self.n + 1)?;
        let right = error_hard_with_zero(self.m - 1, self.k, self.n)?;
        join(&left, &right)
    }

    pub fn patterns(&self, hard: &[u64]) -> Vec<Vec<u64>> {
        (0..self.k).filter(|x| !hard.contains(x)).combinations(self.m as usize).collect()
    }

    pub fn depth(&self) -> usize {
        self.patterns(&(0..self.n).collect::<Vec<_>>()).len() + 1
    }

    fn merged(&self) -> u64 {
        self.k - self.m
    }

    fn remaining(&self, pattern: &[u64]) -> Vec<u64> {
        (0..self.k).filter(|x| !pattern.contains(x)).collect()
    }

    fn rename(remaining: &[u64], x: u64) -> u64 {
        remaining.binary_search(&x).expect("block outside the pattern") as u64
    }

    fn left_public(&self, hard: &[u64], pattern: &[u64]) -> Term {
        let remaining = self.remaining(pattern);
        let mut renamed: Vec<u64> = hard.iter().map(|&a| Self::rename(&remaining, a)).collect();
        renamed.push(self.merged());
        Term::inl(Term::nat_tuple(renamed))
    }

    /// The hard block broken by `hits`, if all of them land on one.
    fn broken_hard(hard: &[u64], hits: &[u64]) -> Option<u64> {
        let first = *hits.first()?;
        (hard.contains(&first) && hits.iter().all(|&c| c == first)).then_some(first)
    }

    fn broken_normal(hard: &[u64], hits: &[u64]) -> Vec<u64> {
        hits.iter().copied().filter(|c| !hard.contains(c)).sorted().dedup().collect()
    }

    fn pad(mut hits: Vec<u64>, len: u64) -> Vec<u64> {
        let fill = hits.first().copied().unwrap_or(0);
        hits.truncate(len as usize);
        hits.resize(len as usize, fill);
        hits
    }

    /// Nimue's hits after merging `pattern`. The blocks these hits break are
    /// the merged block or blocks the original hits already broke.
    fn left_secret(&self, hard: &[u64], hits: &[u64], pattern: &[u64]) -> Term {
        let remaining = self.remaining(pattern);
        let merged = || Term::inl(Term::nat_tuple(Self::pad(alloc::vec![self.merged()], self.hits)));
        if let Some(h) = Self::broken_hard(hard, hits) {
            return Term::inl(Term::nat_tuple(Self::pad(alloc::vec![Self::rename(&remaining, h)], self.hits)));
        }
        let outside: Vec<u64> = Self::broken_normal(hard, hits)
            .into_iter()
            .filter(|x| !pattern.contains(x))
            .map(|x| Self::rename(&remaining, x))
            .collect();
        if outside.is_empty() {
            merged()
        } else {
            Term::inl(Term::nat_tuple(Self::pad(outside, self.hits)))
        }
    }

    /// Nimue's `m-1` hits for the fallback query.
    fn right_secret(&self, hard: &[u64], hits: &[u64]) -> Term {
        let len = self.m - 1;
        let chosen = match Self::broken_hard(hard, hits) {
            Some(h) => alloc::vec![h],
            None => Self::broken_normal(hard, hits),
        };
        let chosen = if len == 0 { Vec::new() } else { Self::pad(chosen, len) };
        Term::inr(Term::nat_tuple(chosen))
    }

    pub fn witness(self) -> Result<Witness, BilayerError> {
        let source = Arc::new(self.source()?);
        let target = Arc::new(self.target()?);
        let depth = self.depth();
        let strategy = Arc::new(self);
        Ok(Witness { source, target, arthur: strategy.clone(), nimue: strategy, depth })
    }
}

impl ArthurStrategy for Consolidation {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        let hard = first.as_nat_tuple()?;
        let patterns = self.patterns(&hard);
        for (i, answer) in answers.iter().enumerate() {
            let u = answer.as_nat()?;
            let Some(pattern) = patterns.get(i) else {
                return Some(ArthurMove::Terminate(answer.clone()));
            };
            if u != self.merged() {
                let original = *self.remaining(pattern).get(u as usize)?;
                return Some(ArthurMove::Terminate(Term::Nat(original)));
            }
        }
        match patterns.get(answers.len()) {
            Some(pattern) => Some(ArthurMove::Query(self.left_public(&hard, pattern))),
            None if answers.len() == patterns.len() => Some(ArthurMove::Query(Term::inr(first.clone()))),
            None => None,
        }
    }
}

impl NimueStrategy for Consolidation {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let hard = view.first.as_nat_tuple()?;
        let hits = view.first_secret.as_nat_tuple()?;
        let patterns = self.patterns(&hard);
        match patterns.get(view.rounds.len()) {
            Some(pattern) => Some(self.left_secret(&hard, &hits, pattern)),
            None => Some(self.right_secret(&hard, &hits)),
        }
    }
}

/// `error_hard(1,k,n) <=1 error(1,k)`: with one hit hard and normal blocks
/// behave alike.
pub fn single_hit_triple(k: u64, n: u64) -> Result<TableTriple, BilayerError> {
    let source = error_hard(1, k, n)?;
    let mut triple = TableTriple::default();
    for (a, c, _) in source.iter() {
        triple.inner.insert(a.clone(), Term::Star);
        let hit = c.as_nat_tuple().and_then(|h| h.first().copied()).expect("one hit");
        triple.secret.insert((a.clone(), c.clone()), Term::set([hit]));
        for x in 0..k {
            triple.outer.insert((a.clone(), Term::Nat(x)), Term::Nat(x));
        }
    }
    Ok(triple)
}

/// `error(m,k) <=1 error_hard(m,k,0)`: the wrong set becomes a sorted hit
/// tuple.
pub fn plain_to_hard_triple(m: u64, k: u64) -> Result<TableTriple, BilayerError> {
    let source = error(m, k)?;
    let mut triple = TableTriple::default();
    triple.inner.insert(Term::Star, Term::Tuple(Vec::new()));
    for (_, c, _) in source.iter() {
        let hits = c.as_set().expect("set secret").iter().copied();
        triple.secret.insert((Term::Star, c.clone()), Term::nat_tuple(hits));
    }
    for x in 0..k {
        triple.outer.insert((Term::Star, Term::Nat(x)), Term::Nat(x));
    }
    Ok(triple)
}

/// The target size after collapsing `error_hard(m,k,n)`.
pub fn collapsed_size(m: u64, k: u64, n: u64) -> u64 {
    ceil_div(k - n, m) + n
}

/// Builds and verifies the chain of reductions
/// `error(m,k) <= error(1, ceil(k/m))`, caching intermediate witnesses.
#[derive(Default)]
pub struct ChainBuilder {
    hard: BTreeMap<(u64, u64, u64), Verified>,
}

impl ChainBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// `error(1,from) <=1 error(1,to)` for `to <= from`, verified.
    fn widen(&self, from: u64, to: u64) -> Result<Verified, ChainError> {
        let triple = easy_direction(1, to, from)?;
        verified(lift_triple(Arc::new(error(1, from)?), Arc::new(error(1, to)?), triple))
    }

    /// A verified witness for `error_hard(m,k,n) <= error(1, q)` with
    /// `q = ceil((k-n)/m) + n`.
    pub fn hard(&mut self, m: u64, k: u64, n: u64) -> Result<Verified, ChainError> {
        if let Some(w) = self.hard.get(&(m, k, n)) {
            return Ok(w.clone());
        }
        let w = if m == 1 {
            let triple = single_hit_triple(k, n)?;
            verified(lift_triple(Arc::new(error_hard(1, k, n)?), Arc::new(error(1, k)?), triple))?
        } else {
            let q = collapsed_size(m, k, n);
            let step = Consolidation::new(m, k, n)?;
            let hits = step.hits;
            let consolidation = verified(step.witness()?)?;
            let left_q = collapsed_size(hits, k - m + 1, n + 1);
            let left = self.hard(hits, k - m + 1, n + 1)?;
            let left = verified(compose(&left, &self.widen(left_q, q)?)?)?;
            let right_q = collapsed_size(m - 1, k, n);
            let right = self.hard(m - 1, k, n)?;
            let right = verified(compose(&right, &self.widen(right_q, q)?)?)?;
            let dispatch = verified(join_dispatch(&left, &right)?)?;
            verified(compose(&consolidation, &dispatch)?)?
        };
        self.hard.insert((m, k, n), w.clone());
        Ok(w)
    }

    /// A verified witness for `error(m,k) <= error(1, ceil(k/m))`.
    pub fn chain(&mut self, m: u64, k: u64) -> Result<Verified, ChainError> {
        let source = Arc::new(error(m, k)?);
        if m == 1 {
            let copy = Arc::new(CopyStrategy);
            return verified(Witness {
                source: source.clone(),
                target: source,
                arthur: copy.clone(),
                nimue: copy,
                depth: 1,
            });
        }
        let bridge = verified(lift_triple(source, Arc::new(error_hard(m, k, 0)?), plain_to_hard_triple(m, k)?))?;
        let hard = self.hard(m, k, 0)?;
        verified(compose(&bridge, &hard)?)
    }
}

/// A verified witness for `error(m,k) <= error(1, ceil(k/m))`.
pub fn collapse_chain(m: u64, k: u64) -> Result<Verified, ChainError> {
    ChainBuilder::new().chain(m, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::validate_triple;

    #[test]
    fn easy_direction_examples() {
        let t = easy_direction(2, 4, 2).unwrap();
        assert_eq!(t.secret[&(Term::Star, Term::set([1]))], Term::set([2, 3]));
        validate_triple(&error(1, 2).unwrap(), &error(2, 4).unwrap(), &t).unwrap();
        let t = easy_direction(1, 2, 3).unwrap();
        validate_triple(&error(1, 3).unwrap(), &error(1, 2).unwrap(), &t).unwrap();
        assert!(easy_direction(2, 4, 1).is_err());
        let t = easy_direction(2, 5, 3).unwrap();
        assert_eq!(t.secret[&(Term::Star, Term::set([2]))], Term::set([0, 4]));
        validate_triple(&error(1, 3).unwrap(), &error(2, 5).unwrap(), &t).unwrap();
    }

    #[test]
    fn consolidation_2_4_0_wins() {
        let step = Consolidation::new(2, 4, 0).unwrap();
        assert_eq!(step.depth(), 7);
        let w = step.witness().unwrap().verify().unwrap();
        assert!(w.plays() > 0);
    }

    #[test]
    fn consolidation_single_hit() {
        for k in 2..5 {
            assert!(Consolidation::new(1, k, 0).unwrap().witness().unwrap().verify().is_ok());
        }
        assert!(Consolidation::new(1, 4, 1).is_err());
    }

    #[test]
    fn consolidation_with_hard_blocks() {
        for (m, k, n) in [(2, 4, 1), (2, 5, 1), (3, 5, 0), (2, 4, 2), (3, 4, 1)] {
            let w = Consolidation::new(m, k, n).unwrap().witness().unwrap();
            assert!(w.verify().is_ok(), "({m},{k},{n})");
        }
    }

    #[test]
    fn chains_verify() {
        let mut builder = ChainBuilder::new();
        for (m, k) in [(1, 3), (2, 3), (2, 4), (2, 5)] {
            let w = builder.chain(m, k).unwrap();
            assert_eq!(w.target.name(), format!("error(1,{})", ceil_div(k, m)));
        }
    }
}
