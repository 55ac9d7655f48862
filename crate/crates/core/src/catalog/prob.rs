//! Probabilistic computation with bounded error, over finitely many oracles.
//!
//! A [`StagedMachine`] runs one program on every oracle `alpha` in
//! `{0,1}^T` and records, per oracle, the stage at which it halts and the
//! value it outputs. The uniform measure becomes counting measure divided by
//! `2^T`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use itertools::Itertools;

use crate::bilayer::{nat_set, precondition, BilayerError, BilayerFn, ValueSet};
use crate::catalog::errors::{ceil_div, collapse_chain, easy_direction, verified, ChainError};
use crate::combinators::{compose, family_dispatch, keyed_sum, lift_triple};
use crate::engine::{ArthurMove, ArthurStrategy, NimueStrategy, NimueView, Verified, Witness};
use crate::families::error;
use crate::solver::TableTriple;
use crate::term::Term;

/// Per oracle, `(halting stage, value)` or `None` if the run never halts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StagedMachine {
    oracle_len: u32,
    runs: Vec<Option<(u64, u64)>>,
}

impl StagedMachine {
    pub fn new(oracle_len: u32, runs: Vec<Option<(u64, u64)>>) -> Result<Self, BilayerError> {
        if runs.len() as u64 != 1u64 << oracle_len {
            return Err(precondition(format!(
                "a machine on {oracle_len} oracle bits needs {} runs",
                1u64 << oracle_len
            )));
        }
        if runs.iter().flatten().any(|(s, _)| *s == 0) {
            return Err(precondition("halting stages start at 1"));
        }
        Ok(StagedMachine { oracle_len, runs })
    }

    /// Every oracle outputs `value` at stage 1.
    pub fn constant(oracle_len: u32, value: u64) -> Self {
        StagedMachine { oracle_len, runs: alloc::vec![Some((1, value)); 1 << oracle_len] }
    }

    /// Oracle `alpha` outputs `floor(alpha * q / 2^T)` at stage 1, so each of
    /// the values `0..q-1` gets measure `1/q` when `q` divides `2^T`.
    pub fn splitting(oracle_len: u32, q: u64) -> Self {
        let size = 1u64 << oracle_len;
        StagedMachine { oracle_len, runs: (0..size).map(|a| Some((1, a * q / size))).collect() }
    }

    pub fn oracle_len(&self) -> u32 {
        self.oracle_len
    }

    pub fn oracles(&self) -> u64 {
        1 << self.oracle_len
    }

    pub fn run(&self, alpha: u64) -> Option<(u64, u64)> {
        self.runs.get(alpha as usize).copied().flatten()
    }

    /// The value of oracle `alpha` by stage `s`, if any.
    pub fn value_by(&self, alpha: u64, s: u64) -> Option<u64> {
        self.run(alpha).filter(|(h, _)| *h <= s).map(|(_, v)| v)
    }

    pub fn halting(&self) -> Vec<u64> {
        (0..self.oracles()).filter(|&a| self.run(a).is_some()).collect()
    }

    /// Every machine with stages in `1..=bound` (or never) and values below
    /// `values`.
    pub fn all(oracle_len: u32, bound: u64, values: u64) -> impl Iterator<Item = StagedMachine> {
        let options: Vec<Option<(u64, u64)>> = core::iter::once(None)
            .chain((1..=bound).flat_map(move |s| (0..values).map(move |v| Some((s, v)))))
            .collect();
        (0..1u64 << oracle_len)
            .map(move |_| options.clone())
            .multi_cartesian_product()
            .map(move |runs| StagedMachine { oracle_len, runs })
    }

    /// `(T, runs)` with `(stage, value)` per halting run and `*` otherwise.
    pub fn to_term(&self) -> Term {
        let runs = self.runs.iter().map(|r| match r {
            Some((s, v)) => Term::nat_tuple([*s, *v]),
            None => Term::Star,
        });
        Term::tuple([Term::Nat(u64::from(self.oracle_len)), Term::tuple(runs)])
    }

    pub fn from_term(t: &Term) -> Option<Self> {
        let [len, runs] = t.as_tuple()? else {
            return None;
        };
        let oracle_len = u32::try_from(len.as_nat()?).ok().filter(|l| *l < 32)?;
        let runs = runs
            .as_tuple()?
            .iter()
            .map(|r| match r {
                Term::Star => Some(None),
                r => match r.as_nat_tuple()?.as_slice() {
                    [s, v] => Some(Some((*s, *v))),
                    _ => None,
                },
            })
            .collect::<Option<Vec<_>>>()?;
        StagedMachine::new(oracle_len, runs).ok()
    }

    /// One row per oracle, one column per stage `1..=bound`: `01: . 1 1`.
    pub fn to_text(&self, bound: u64) -> String {
        let mut out = String::new();
        for alpha in 0..self.oracles() {
            let cells = (1..=bound).map(|s| self.value_by(alpha, s).map_or(String::from("."), |v| format!("{v}")));
            out.push_str(&format!("{}: {}\n", self.oracle_bits(alpha), cells.format(" ")));
        }
        out
    }

    fn oracle_bits(&self, alpha: u64) -> String {
        (0..self.oracle_len).rev().map(|i| if alpha >> i & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn parse_text(text: &str) -> Result<Self, BilayerError> {
        let syntax = |line: usize, message: String| BilayerError::Syntax { line, column: 1, message };
        let mut runs = Vec::new();
        let mut oracle_len = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line_no = i + 1;
            let (bits, cells) = line.split_once(':').ok_or_else(|| syntax(line_no, "expected `bits: cells`".into()))?;
            let bits = bits.trim();
            let width = bits.len() as u32;
            if *oracle_len.get_or_insert(width) != width {
                return Err(syntax(line_no, "oracle rows differ in length".into()));
            }
            let alpha = if bits.is_empty() {
                0
            } else {
                u64::from_str_radix(bits, 2).map_err(|_| syntax(line_no, format!("`{bits}` is not a bit string")))?
            };
            if alpha != runs.len() as u64 {
                return Err(syntax(line_no, format!("expected the row for oracle {}", runs.len())));
            }
            let mut run = None;
            for (s, cell) in cells.split_whitespace().enumerate() {
                let stage = s as u64 + 1;
                let value = match cell {
                    "." => None,
                    v => Some(v.parse::<u64>().map_err(|_| syntax(line_no, format!("bad cell `{v}`")))?),
                };
                match (run, value) {
                    (None, Some(v)) => run = Some((stage, v)),
                    (Some((_, v0)), Some(v)) if v0 == v => {}
                    (None, None) => {}
                    _ => return Err(syntax(line_no, "a value, once output, must persist".into())),
                }
            }
            runs.push(run);
        }
        StagedMachine::new(oracle_len.unwrap_or(0), runs)
    }
}

/// Arthur's view of a machine: the oracle count and stage probes.
#[derive(Clone, Debug)]
pub struct MachineProbe {
    machine: StagedMachine,
}

impl MachineProbe {
    pub fn observe(public: &Term) -> Option<Self> {
        StagedMachine::from_term(public).map(|machine| MachineProbe { machine })
    }

    pub fn oracle_len(&self) -> u32 {
        self.machine.oracle_len
    }

    pub fn value_by(&self, alpha: u64, s: u64) -> Option<u64> {
        self.machine.value_by(alpha, s)
    }
}

/// Whether `A` (a set of oracles) has measure at least `1 - p/q`.
pub fn measure_ok(oracle_len: u32, p: u64, q: u64, size: u64) -> bool {
    size * q >= (q - p) << oracle_len
}

/// The cell of the error-`p/q` problem at `(machine | A)`.
pub fn prob_error_cell(machine: &StagedMachine, p: u64, q: u64, a: &[u64]) -> Result<ValueSet, BilayerError> {
    if !measure_ok(machine.oracle_len, p, q, a.len() as u64) {
        return Err(precondition(format!("{} oracles are below measure 1 - {p}/{q}", a.len())));
    }
    a.iter()
        .map(|&alpha| {
            machine
                .run(alpha)
                .map(|(_, v)| Term::Nat(v))
                .ok_or_else(|| precondition(format!("oracle {alpha} is in A but never halts")))
        })
        .collect()
}

/// Run a machine on a random oracle, allowing error `p/q`: public inputs are
/// machines with stages up to `bound` and values below `max(q, 2)`, secrets
/// are sets of halting oracles of measure at least `1 - p/q`.
pub fn prob_error(oracle_len: u32, p: u64, q: u64, bound: u64) -> Result<BilayerFn, BilayerError> {
    if p > q || q == 0 {
        return Err(precondition(format!("prob_error needs p <= q, got {p}/{q}")));
    }
    let values = q.max(2);
    let mut cells = Vec::new();
    for machine in StagedMachine::all(oracle_len, bound, values) {
        let public = machine.to_term();
        for a in machine.halting().into_iter().powerset() {
            if measure_ok(oracle_len, p, q, a.len() as u64) {
                let cell = prob_error_cell(&machine, p, q, &a)?;
                cells.push((public.clone(), Term::Set(a), cell));
            }
        }
    }
    BilayerFn::new(format!("prob_error({oracle_len},{p}/{q})"), cells, nat_set(0..values))
}

/// How stage `s` lays out `qr` answers: value `j` owns the block
/// `start..start+len`, where `len/(qr)` is the measure of oracles that
/// output `j` by stage `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub scale: u64,
    pub blocks: Vec<(u64, u64, u64)>,
}

impl Layout {
    pub fn at_stage(probe: &MachineProbe, q: u64, s: u64) -> Layout {
        let size = 1u64 << probe.oracle_len();
        let mut counts: alloc::collections::BTreeMap<u64, u64> = alloc::collections::BTreeMap::new();
        for alpha in 0..size {
            if let Some(v) = probe.value_by(alpha, s) {
                *counts.entry(v).or_default() += 1;
            }
        }
        let scale = (1..=size).find(|r| counts.values().all(|c| (q * r * c).is_multiple_of(size))).unwrap_or(size);
        let mut start = 0;
        let blocks = counts
            .into_iter()
            .map(|(v, c)| {
                let len = q * scale * c / size;
                let block = (v, start, len);
                start += len;
                block
            })
            .collect();
        Layout { scale, blocks }
    }

    fn value_of(&self, answer: u64) -> Option<u64> {
        self.blocks.iter().find(|(_, start, len)| (*start..start + len).contains(&answer)).map(|(v, _, _)| *v)
    }
}

/// The scales any stage may use: powers of two dividing `2^T / gcd(2^T, q)`.
pub fn scales(oracle_len: u32, q: u64) -> Vec<u64> {
    let size = 1u64 << oracle_len;
    let top = size / num_integer::gcd(size, q);
    (0..=oracle_len).map(|i| 1u64 << i).filter(|r| top.is_multiple_of(*r)).collect()
}

/// The family `(r, *) -> error(pr, qr)` the strategy queries.
pub fn scaled_errors(oracle_len: u32, p: u64, q: u64) -> Result<BilayerFn, BilayerError> {
    let members: Vec<(Term, BilayerFn)> = scales(oracle_len, q)
        .into_iter()
        .map(|r| Ok((Term::Nat(r), error(p * r, q * r)?)))
        .collect::<Result<_, BilayerError>>()?;
    let refs: Vec<(Term, &BilayerFn)> = members.iter().map(|(k, f)| (k.clone(), f)).collect();
    keyed_sum(format!("scaled_error({p}/{q})"), &refs)
}

/// The reduction of [`prob_error`] to the scaled error family.
///
/// At round `s` (stage `s+1`) Arthur lays out the values seen so far as
/// blocks of answers to `error(pr, qr)` and asks it. An answer inside the
/// block of `j` ends the game with `j`; any other answer moves on. Nimue
/// forbids the block of `j` when `A` has no oracle with value `j` yet, and
/// the unassigned answers when every oracle of `A` has already halted.
#[derive(Clone, Debug)]
pub struct ProbErrorStrategy {
    p: u64,
    q: u64,
}

pub fn prob_error_strategy(p: u64, q: u64) -> Result<ProbErrorStrategy, BilayerError> {
    if p == 0 || p >= q {
        return Err(precondition(format!("prob_error_strategy needs 0 < p < q, got {p}/{q}")));
    }
    Ok(ProbErrorStrategy { p, q })
}

impl ProbErrorStrategy {
    /// The forbidden answers at round `round`, padded to exactly `pr`.
    pub fn forbidden(&self, machine: &StagedMachine, a: &[u64], round: u64) -> Vec<u64> {
        let s = round + 1;
        let layout = Layout::at_stage(&MachineProbe { machine: machine.clone() }, self.q, s);
        let total = self.q * layout.scale;
        let mut b = Vec::new();
        for &(v, start, len) in &layout.blocks {
            if !a.iter().any(|&alpha| machine.value_by(alpha, s) == Some(v)) {
                b.extend(start..start + len);
            }
        }
        let assigned: u64 = layout.blocks.iter().map(|(_, _, len)| len).sum();
        if a.iter().all(|&alpha| machine.value_by(alpha, s).is_some()) {
            b.extend(assigned..total);
        }
        let quota = self.p * layout.scale;
        assert!(b.len() as u64 <= quota, "forbade {} of {total} answers, more than {quota}", b.len());
        let mut pad = (0..total).filter(|x| !b.contains(x)).collect::<Vec<_>>().into_iter();
        while (b.len() as u64) < quota {
            b.push(pad.next().expect("quota is below the answer count"));
        }
        b.sort_unstable();
        b
    }
}

impl ArthurStrategy for ProbErrorStrategy {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        let probe = MachineProbe::observe(first)?;
        let round = answers.len() as u64;
        if let Some(last) = answers.last() {
            let layout = Layout::at_stage(&probe, self.q, round);
            if let Some(v) = layout.value_of(last.as_nat()?) {
                return Some(ArthurMove::Terminate(Term::Nat(v)));
            }
        }
        let layout = Layout::at_stage(&probe, self.q, round + 1);
        Some(ArthurMove::Query(Term::tuple([Term::Nat(layout.scale), Term::Star])))
    }

    fn state_key(&self, _first: &Term, answers: &[Term]) -> Term {
        // Only the round number and the latest answer matter.
        Term::tuple([Term::Nat(answers.len() as u64), answers.last().cloned().unwrap_or(Term::Star)])
    }
}

impl NimueStrategy for ProbErrorStrategy {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let machine = StagedMachine::from_term(view.first)?;
        let a = view.first_secret.as_set()?;
        Some(Term::Set(self.forbidden(&machine, a, view.rounds.len() as u64)))
    }

    fn state_key(&self, _first: &Term, _first_secret: &Term, answers: &[Term]) -> Term {
        Term::Nat(answers.len() as u64)
    }
}

/// `error(pr, qr) <= error(p, q)` for every scale `r`, gathered over the
/// scaled family.
pub fn scaled_errors_witness(oracle_len: u32, p: u64, q: u64) -> Result<Verified, ChainError> {
    let source = Arc::new(scaled_errors(oracle_len, p, q)?);
    let target = Arc::new(error(p, q)?);
    let mut members = Vec::new();
    for r in scales(oracle_len, q) {
        let chain = collapse_chain(p * r, q * r)?;
        let member = if p == 1 {
            chain
        } else {
            let l = ceil_div(q, p);
            let easy = lift_triple(chain.target.clone(), target.clone(), easy_direction(p, q, l)?);
            verified(compose(&chain, &verified(easy)?)?)?
        };
        members.push((Term::Nat(r), member));
    }
    let refs: Vec<(Term, &Verified)> = members.iter().map(|(k, w)| (k.clone(), w)).collect();
    verified(family_dispatch(source, &refs)?)
}

/// `prob_error(T, p/q) <= error(p, q)` over machines with stages up to
/// `bound`: the staged strategy composed with the scaled chains.
pub fn prob_error_witness(oracle_len: u32, p: u64, q: u64, bound: u64) -> Result<Verified, ChainError> {
    let strategy = Arc::new(prob_error_strategy(p, q)?);
    let staged = Witness {
        source: Arc::new(prob_error(oracle_len, p, q, bound)?),
        target: Arc::new(scaled_errors(oracle_len, p, q)?),
        arthur: strategy.clone(),
        nimue: strategy,
        depth: bound as usize,
    };
    let staged = verified(staged)?;
    verified(compose(&staged, &scaled_errors_witness(oracle_len, p, q)?)?)
}

/// `error(p,q) <=1 prob_error(T, p/q)` through the splitting machine; needs
/// `q` to divide `2^T`.
pub fn error_to_prob_error(oracle_len: u32, p: u64, q: u64) -> Result<TableTriple, BilayerError> {
    let size = 1u64 << oracle_len;
    if q == 0 || !size.is_multiple_of(q) || p >= q {
        return Err(precondition(format!("the splitting machine needs q | 2^T and p < q, got {p}/{q}")));
    }
    let machine = StagedMachine::splitting(oracle_len, q);
    let mut triple = TableTriple::default();
    triple.inner.insert(Term::Star, machine.to_term());
    for v in 0..q {
        triple.outer.insert((Term::Star, Term::Nat(v)), Term::Nat(v));
    }
    for wrong in (0..q).combinations(p as usize) {
        let a = (0..size).filter(|&alpha| !wrong.contains(&(alpha * q / size))).collect();
        triple.secret.insert((Term::Star, Term::Set(wrong)), Term::Set(a));
    }
    Ok(triple)
}
