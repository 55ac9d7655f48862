//! Finite tables of bilayer functions: partial multifunctions of a public
//! and a secret input.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

use crate::term::{render_set, ParseTermError, Reader, Term};

pub type ValueSet = BTreeSet<Term>;

/// A finite partial multifunction `n ↦ f(n)` with no secret layer.
pub type MultiFn = BTreeMap<Term, ValueSet>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BilayerError {
    #[error("{0}: the public domain is empty")]
    EmptyDomain(String),
    #[error("{name}: value {value} at ({public} | {secret}) is outside the output alphabet")]
    OutsideAlphabet { name: String, public: String, secret: String, value: String },
    #[error("{0}")]
    Precondition(String),
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
}

pub(crate) fn precondition(msg: impl Into<String>) -> BilayerError {
    BilayerError::Precondition(msg.into())
}

/// Anything that can answer "what is the cell at `(public | secret)`".
///
/// `None` means the pair is outside the domain. Lazily evaluated functions
/// (game closures) implement this without materializing their tables.
pub trait CellOracle {
    fn cell_values(&self, public: &Term, secret: &Term) -> Option<ValueSet>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilayerFn {
    name: String,
    cells: BTreeMap<Term, BTreeMap<Term, ValueSet>>,
    alphabet: ValueSet,
}

impl BilayerFn {
    /// Builds a function from explicit cells and a declared output alphabet.
    pub fn new<I>(name: impl Into<String>, cells: I, alphabet: ValueSet) -> Result<Self, BilayerError>
    where
        I: IntoIterator<Item = (Term, Term, ValueSet)>,
    {
        let name = name.into();
        let mut table: BTreeMap<Term, BTreeMap<Term, ValueSet>> = BTreeMap::new();
        for (public, secret, values) in cells {
            if let Some(bad) = values.iter().find(|v| !alphabet.contains(v)) {
                return Err(BilayerError::OutsideAlphabet {
                    name,
                    public: public.render(),
                    secret: secret.render(),
                    value: bad.render(),
                });
            }
            table.entry(public).or_default().insert(secret, values);
        }
        if table.is_empty() {
            return Err(BilayerError::EmptyDomain(name));
        }
        Ok(BilayerFn { name, cells: table, alphabet })
    }

    /// Builds a function whose alphabet is the union of its cells.
    pub fn from_cells<I>(name: impl Into<String>, cells: I) -> Result<Self, BilayerError>
    where
        I: IntoIterator<Item = (Term, Term, ValueSet)>,
    {
        let cells: Vec<_> = cells.into_iter().collect();
        let alphabet = cells.iter().flat_map(|(_, _, v)| v.iter().cloned()).collect();
        Self::new(name, cells, alphabet)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn alphabet(&self) -> &ValueSet {
        &self.alphabet
    }

    pub fn dom_pub(&self) -> impl Iterator<Item = &Term> + '_ {
        self.cells.keys()
    }

    pub fn has_public(&self, public: &Term) -> bool {
        self.cells.contains_key(public)
    }

    /// Secrets `c` with `(public | c)` in the domain, in canonical order.
    pub fn secrets<'a>(&'a self, public: &Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.cells.get(public).into_iter().flat_map(|row| row.keys())
    }

    pub fn row(&self, public: &Term) -> Option<&BTreeMap<Term, ValueSet>> {
        self.cells.get(public)
    }

    pub fn cell(&self, public: &Term, secret: &Term) -> Option<&ValueSet> {
        self.cells.get(public)?.get(secret)
    }

    pub fn contains(&self, public: &Term, secret: &Term) -> bool {
        self.cell(public, secret).is_some()
    }

    /// Every value Merlin could ever give for `public`, over all secrets.
    pub fn answers(&self, public: &Term) -> ValueSet {
        self.cells.get(public).map(|row| row.values().flat_map(|v| v.iter().cloned()).collect()).unwrap_or_default()
    }

    /// All secrets used anywhere in the table.
    pub fn all_secrets(&self) -> BTreeSet<Term> {
        self.cells.values().flat_map(|row| row.keys().cloned()).collect()
    }

    /// A function is basic when its only public input is `*`.
    pub fn is_basic(&self) -> bool {
        self.cells.len() == 1 && self.cells.contains_key(&Term::Star)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term, &ValueSet)> + '_ {
        self.cells.iter().flat_map(|(p, row)| row.iter().map(move |(s, v)| (p, s, v)))
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One `PUB | SEC -> {v,...}` line per cell, in canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, s, v) in self.iter() {
            let _ = writeln!(out, "{} | {} -> {}", p, s, render_set(v));
        }
        out
    }

    /// Reads the format produced by [`BilayerFn::to_text`]. Blank lines and
    /// lines starting with `#` are skipped; the alphabet is the union of the
    /// cells.
    pub fn parse_text(name: impl Into<String>, text: &str) -> Result<Self, BilayerError> {
        let mut cells = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let indent = line.len() - line.trim_start().len();
            let cell = parse_cell_line(trimmed).map_err(|e| BilayerError::Syntax {
                line: idx + 1,
                column: indent + e.offset + 1,
                message: e.message.to_string(),
            })?;
            cells.push(cell);
        }
        Self::from_cells(name, cells)
    }
}

impl CellOracle for BilayerFn {
    fn cell_values(&self, public: &Term, secret: &Term) -> Option<ValueSet> {
        self.cell(public, secret).cloned()
    }
}

/// Parses `PUB | SEC -> {v,...}`.
pub fn parse_cell_line(line: &str) -> Result<(Term, Term, ValueSet), ParseTermError> {
    let mut r = Reader::new(line);
    let public = r.term()?;
    r.expect(" | ")?;
    let secret = r.term()?;
    r.expect(" -> ")?;
    let values = parse_value_set_from(&mut r)?;
    if !r.at_end() {
        return Err(ParseTermError { offset: r.pos(), message: "trailing input" });
    }
    Ok((public, secret, values))
}

/// Parses a `{v,...}` set of terms, requiring strictly increasing order.
pub fn parse_value_set(text: &str) -> Result<ValueSet, ParseTermError> {
    let mut r = Reader::new(text);
    let values = parse_value_set_from(&mut r)?;
    if !r.at_end() {
        return Err(ParseTermError { offset: r.pos(), message: "trailing input" });
    }
    Ok(values)
}

fn parse_value_set_from(r: &mut Reader<'_>) -> Result<ValueSet, ParseTermError> {
    r.expect("{")?;
    let mut values: Vec<Term> = Vec::new();
    if r.eat("}") {
        return Ok(ValueSet::new());
    }
    loop {
        let at = r.pos();
        let v = r.term()?;
        if values.last().is_some_and(|last| *last >= v) {
            return Err(ParseTermError { offset: at, message: "values must be strictly increasing" });
        }
        values.push(v);
        if r.eat("}") {
            return Ok(values.into_iter().collect());
        }
        r.expect(",")?;
    }
}

/// `h` refines `g` when it is defined wherever `g` is and never answers
/// outside `g`.
pub fn refines(h: &MultiFn, g: &MultiFn) -> bool {
    g.iter().all(|(n, allowed)| h.get(n).is_some_and(|chosen| chosen.is_subset(allowed)))
}

/// Collects naturals into a value set.
pub fn nat_set<I: IntoIterator<Item = u64>>(items: I) -> ValueSet {
    items.into_iter().map(Term::Nat).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BilayerFn {
        BilayerFn::new(
            "s",
            [
                (Term::Star, Term::set([0]), nat_set([1])),
                (Term::Star, Term::set([1]), nat_set([0])),
                (Term::Nat(3), Term::Star, ValueSet::new()),
            ],
            nat_set([0, 1]),
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let f = sample();
        let text = f.to_text();
        assert_eq!(text, "* | {0} -> {1}\n* | {1} -> {0}\n3 | * -> {}\n");
        let g = BilayerFn::parse_text("s", &text).unwrap();
        assert_eq!(g.to_text(), text);
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn rejects_values_outside_alphabet() {
        let err = BilayerFn::new("x", [(Term::Star, Term::Star, nat_set([2]))], nat_set([0])).unwrap_err();
        assert!(matches!(err, BilayerError::OutsideAlphabet { .. }));
        let err = BilayerFn::new("x", [], nat_set([0])).unwrap_err();
        assert!(matches!(err, BilayerError::EmptyDomain(_)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = BilayerFn::parse_text("x", "* | * -> {0}\n  * | * -> {1,0}\n").unwrap_err();
        assert_eq!(
            err,
            BilayerError::Syntax { line: 2, column: 15, message: "values must be strictly increasing".into() }
        );
    }

    #[test]
    fn answers_union_and_basic() {
        let f = sample();
        assert_eq!(f.answers(&Term::Star), nat_set([0, 1]));
        assert!(!f.is_basic());
        assert!(f.answers(&Term::Nat(9)).is_empty());
    }

    #[test]
    fn refinement() {
        let g: MultiFn = [(Term::Nat(0), nat_set([1, 2]))].into_iter().collect();
        let choice: MultiFn = [(Term::Nat(0), nat_set([2])), (Term::Nat(1), nat_set([0]))].into_iter().collect();
        let bad: MultiFn = [(Term::Nat(0), nat_set([5]))].into_iter().collect();
        assert!(refines(&g, &g));
        assert!(refines(&choice, &g));
        assert!(!refines(&bad, &g));
        assert!(!refines(&MultiFn::new(), &g));
    }
}
