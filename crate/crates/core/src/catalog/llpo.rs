//! Clocked halting tables and the lesser limited principle of omniscience.
//!
//! A [`ClockedTable`] stands in for a program `e` whose runs on `0..k-1`
//! halt at known stages or never. Arthur-side code only reads tables
//! through a [`ClockProbe`], which answers "has `j` halted by stage `s`?".

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use itertools::Itertools;

use crate::bilayer::{nat_set, precondition, BilayerError, BilayerFn, ValueSet};
use crate::solver::OneQuery;
use crate::term::Term;

/// Halting stages (counted from 1) of `k` runs; `None` never halts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockedTable {
    stages: Vec<Option<u64>>,
}

impl ClockedTable {
    pub fn new(stages: Vec<Option<u64>>) -> Result<Self, BilayerError> {
        if stages.contains(&Some(0)) {
            return Err(precondition("halting stages start at 1"));
        }
        Ok(ClockedTable { stages })
    }

    pub fn count(&self) -> u64 {
        self.stages.len() as u64
    }

    pub fn stage(&self, j: u64) -> Option<u64> {
        self.stages.get(j as usize).copied().flatten()
    }

    pub fn stages(&self) -> &[Option<u64>] {
        &self.stages
    }

    /// Indices that eventually halt, ascending.
    pub fn halting(&self) -> Vec<u64> {
        (0..self.count()).filter(|&j| self.stage(j).is_some()).collect()
    }

    pub fn non_halting(&self) -> Vec<u64> {
        (0..self.count()).filter(|&j| self.stage(j).is_none()).collect()
    }

    /// Every table on `k` indices with stages in `1..=bound` or never.
    pub fn all(k: u64, bound: u64) -> impl Iterator<Item = ClockedTable> {
        let options: Vec<Option<u64>> = core::iter::once(None).chain((1..=bound).map(Some)).collect();
        (0..k).map(move |_| options.clone()).multi_cartesian_product().map(|stages| ClockedTable { stages })
    }

    /// A tuple with `Nat(s)` for a halt at stage `s` and `*` for never.
    pub fn to_term(&self) -> Term {
        Term::tuple(self.stages.iter().map(|s| s.map_or(Term::Star, Term::Nat)))
    }

    pub fn from_term(t: &Term) -> Option<Self> {
        let stages = t
            .as_tuple()?
            .iter()
            .map(|x| match x {
                Term::Star => Some(None),
                Term::Nat(s) if *s > 0 => Some(Some(*s)),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ClockedTable { stages })
    }

    /// `stages: [3, never]`.
    pub fn to_text(&self) -> String {
        let items = self.stages.iter().map(|s| s.map_or(String::from("never"), |s| format!("{s}"))).join(", ");
        format!("stages: [{items}]")
    }

    pub fn parse_text(text: &str) -> Result<Self, BilayerError> {
        let syntax = |column: usize, message: &str| BilayerError::Syntax { line: 1, column, message: message.into() };
        let body = text.trim().strip_prefix("stages:").ok_or_else(|| syntax(1, "expected `stages:`"))?.trim();
        let inner = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| syntax(8, "expected a bracketed list"))?;
        let mut stages = Vec::new();
        for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let stage = match item {
                "never" => None,
                n => Some(n.parse::<u64>().map_err(|_| syntax(8, "expected a stage or `never`"))?),
            };
            stages.push(stage);
        }
        ClockedTable::new(stages)
    }
}

/// Arthur's view of a clocked table: stage probes and the index count.
#[derive(Clone, Debug)]
pub struct ClockProbe {
    table: ClockedTable,
}

impl ClockProbe {
    pub fn observe(public: &Term) -> Option<Self> {
        ClockedTable::from_term(public).map(|table| ClockProbe { table })
    }

    pub fn count(&self) -> u64 {
        self.table.count()
    }

    /// Has run `j` halted by stage `s`?
    pub fn halted_by(&self, j: u64, s: u64) -> bool {
        self.table.stage(j).is_some_and(|h| h <= s)
    }
}

/// The cell of `llpo(m,k)` at a table: the indices that never halt.
pub fn llpo_cell(m: u64, table: &ClockedTable) -> Result<ValueSet, BilayerError> {
    let halts = table.halting().len() as u64;
    if halts > m {
        return Err(precondition(format!("{} halts {halts} times, more than {m}", table.to_text())));
    }
    Ok(table.non_halting().into_iter().map(Term::Nat).collect())
}

/// Choose a never-halting index among `k`, promised at most `m` halts; every
/// table with stages up to `bound` is a public input, secrets are `*`.
pub fn llpo(m: u64, k: u64, bound: u64) -> Result<BilayerFn, BilayerError> {
    if m >= k {
        return Err(precondition(format!("llpo({m},{k}) needs m < k")));
    }
    let cells = ClockedTable::all(k, bound).filter(|t| t.halting().len() as u64 <= m).map(|t| {
        let values = llpo_cell(m, &t).expect("filtered to at most m halts");
        (t.to_term(), Term::Star, values)
    });
    BilayerFn::new(format!("llpo({m},{k})"), cells, nat_set(0..k))
}

/// How many stages the waiting branch of [`LlpoReduction`] simulates before
/// it is treated as divergent.
pub const DEFAULT_PATIENCE: u64 = 1 << 20;

/// `llpo(m,k) <=1 error(m,k+1)`.
///
/// Nimue forbids the halting indices, adding the extra index `k` when fewer
/// than `m` halt. An answer `j < k` is reported as is; the answer `k` is only
/// possible when exactly `m` indices halt, so Arthur waits until he has
/// seen `m` halts and reports the least index not among them.
#[derive(Clone, Debug)]
pub struct LlpoReduction {
    m: u64,
    k: u64,
    patience: u64,
}

pub fn llpo_reduction(m: u64, k: u64) -> Result<LlpoReduction, BilayerError> {
    if m == 0 || m >= k {
        return Err(precondition(format!("llpo_reduction({m},{k}) needs 0 < m < k")));
    }
    Ok(LlpoReduction { m, k, patience: DEFAULT_PATIENCE })
}

impl LlpoReduction {
    pub fn with_patience(mut self, patience: u64) -> Self {
        self.patience = patience;
        self
    }

    fn wait_for_halts(&self, probe: &ClockProbe) -> Option<u64> {
        (1..=self.patience).find_map(|s| {
            let seen: Vec<u64> = (0..self.k).filter(|&j| probe.halted_by(j, s)).collect();
            if (seen.len() as u64) < self.m {
                return None;
            }
            (0..self.k).find(|j| !seen.contains(j))
        })
    }
}

impl OneQuery for LlpoReduction {
    fn inner(&self, public: &Term) -> Option<Term> {
        let probe = ClockProbe::observe(public)?;
        (probe.count() == self.k).then_some(Term::Star)
    }

    fn outer(&self, public: &Term, answer: &Term) -> Option<Term> {
        let probe = ClockProbe::observe(public)?;
        match answer.as_nat()? {
            j if j < self.k => Some(Term::Nat(j)),
            j if j == self.k => self.wait_for_halts(&probe).map(Term::Nat),
            _ => None,
        }
    }

    fn secret(&self, public: &Term, _secret: &Term) -> Option<Term> {
        let table = ClockedTable::from_term(public)?;
        let mut wrong = table.halting();
        if wrong.len() as u64 > self.m {
            return None;
        }
        if (wrong.len() as u64) < self.m {
            wrong.push(self.k);
        }
        // error(m,k+1) forbids exactly m values; fill up with never-halting
        // indices, which are still correct answers but need not be offered.
        let mut fill = table.non_halting().into_iter();
        while (wrong.len() as u64) < self.m {
            wrong.push(fill.next()?);
        }
        wrong.sort_unstable();
        Some(Term::Set(wrong))
    }
}

/// The pair of programs built from a two-index table: `psi(0)` halts at
/// stage `t0` if `t1 >= t0`, and `psi(1)` halts at stage `t1` if `t0 > t1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Psi {
    pub clock: ClockedTable,
    /// `{0,1}` minus the indices at which `psi` halts.
    pub values: ValueSet,
}

pub fn psi_table(t: &ClockedTable) -> Result<Psi, BilayerError> {
    if t.count() != 2 {
        return Err(precondition(format!("psi needs two indices, got {}", t.to_text())));
    }
    let later_or_never = |a: Option<u64>, b: Option<u64>| match (a, b) {
        (Some(a), Some(b)) => b >= a,
        (Some(_), None) => true,
        (None, _) => false,
    };
    let (t0, t1) = (t.stage(0), t.stage(1));
    let zero = later_or_never(t0, t1).then_some(t0).flatten();
    let one = (t1.is_some() && !later_or_never(t0, t1)).then_some(t1).flatten();
    assert!(zero.is_none() || one.is_none(), "psi halts on both indices for {}", t.to_text());
    let clock = ClockedTable { stages: alloc::vec![zero, one] };
    let values = clock.non_halting().into_iter().map(Term::Nat).collect();
    Ok(Psi { clock, values })
}

/// The multifunction `t -> {0,1} minus halts of psi(t)` over every
/// two-index table with stages up to `bound`.
pub fn psi_fn(bound: u64) -> Result<BilayerFn, BilayerError> {
    let mut cells = Vec::new();
    for t in ClockedTable::all(2, bound) {
        cells.push((t.to_term(), Term::Star, psi_table(&t)?.values));
    }
    BilayerFn::new("psi", cells, nat_set(0..2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::error;
    use crate::solver::validate_triple;

    fn table(stages: &[Option<u64>]) -> ClockedTable {
        ClockedTable::new(stages.to_vec()).unwrap()
    }

    #[test]
    fn text_form_round_trips() {
        let t = table(&[Some(3), None]);
        assert_eq!(t.to_text(), "stages: [3, never]");
        assert_eq!(ClockedTable::parse_text("stages: [3, never]").unwrap(), t);
        assert!(ClockedTable::parse_text("stages: [0]").is_err());
        assert!(ClockedTable::parse_text("[1]").is_err());
    }

    #[test]
    fn llpo_cells() {
        assert_eq!(llpo_cell(1, &table(&[Some(3), None])).unwrap(), nat_set([1]));
        assert_eq!(llpo_cell(1, &table(&[None, None, None])).unwrap(), nat_set(0..3));
        assert!(llpo_cell(1, &table(&[Some(1), Some(2)])).is_err());
        let f = llpo(1, 2, 4).unwrap();
        assert_eq!(f.dom_pub().count(), 9);
    }

    #[test]
    fn reduction_examples() {
        let r = llpo_reduction(1, 2).unwrap();
        let t = table(&[Some(3), None]).to_term();
        assert_eq!(r.secret(&t, &Term::Star), Some(Term::set([0])));
        assert_eq!(r.outer(&t, &Term::Nat(1)), Some(Term::Nat(1)));
        assert_eq!(r.outer(&t, &Term::Nat(2)), Some(Term::Nat(1)));
        let never = table(&[None, None]).to_term();
        assert_eq!(r.secret(&never, &Term::Star), Some(Term::set([2])));
        let short = llpo_reduction(1, 2).unwrap().with_patience(10);
        assert_eq!(short.outer(&never, &Term::Nat(2)), None);
    }

    #[test]
    fn reduction_validates() {
        for k in 2..=3 {
            for m in 1..k.min(3) {
                let source = llpo(m, k, 4).unwrap();
                let target = error(m, k + 1).unwrap();
                validate_triple(&source, &target, &llpo_reduction(m, k).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn psi_examples() {
        let p = psi_table(&table(&[Some(2), Some(2)])).unwrap();
        assert_eq!(p.clock, table(&[Some(2), None]));
        assert_eq!(p.values, nat_set([1]));
        assert_eq!(psi_table(&table(&[None, Some(5)])).unwrap().values, nat_set([0]));
        assert_eq!(psi_table(&table(&[None, None])).unwrap().values, nat_set([0, 1]));
        for t in ClockedTable::all(2, 4) {
            assert!(psi_table(&t).unwrap().clock.halting().len() <= 1);
        }
    }
}
