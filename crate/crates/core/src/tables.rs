//! Strategies given as finite lookup tables, with a term encoding so a
//! strategy can itself be a public input or a secret.
//!
//! An Arthur table maps visible histories `(x0,x1,...)` to moves; its code
//! is the tuple of rows `((x0,...),inl u)` or `((x0,...),inr v)` in
//! canonical order. A Nimue table maps `(x0,c0,(x1,...))` to a secret; its
//! code is the tuple of rows `((x0,c0,(x1,...)),z)`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

use crate::engine::{ArthurMove, ArthurStrategy, NimueStrategy, NimueView};
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("malformed strategy code: {0}")]
    Malformed(&'static str),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArthurTable {
    rows: BTreeMap<Vec<Term>, ArthurMove>,
}

impl ArthurTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// `history` starts with `x0`.
    pub fn insert(&mut self, history: Vec<Term>, mv: ArthurMove) -> Option<ArthurMove> {
        self.rows.insert(history, mv)
    }

    pub fn remove(&mut self, history: &[Term]) -> Option<ArthurMove> {
        self.rows.remove(history)
    }

    pub fn get(&self, history: &[Term]) -> Option<&ArthurMove> {
        self.rows.get(history)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Vec<Term>, &ArthurMove)> + '_ {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Longest chain of queries along the table's rows.
    pub fn query_depth(&self) -> usize {
        self.rows.iter().filter(|(_, mv)| matches!(mv, ArthurMove::Query(_))).map(|(h, _)| h.len()).max().unwrap_or(0)
    }

    pub fn to_term(&self) -> Term {
        Term::Tuple(self.rows.iter().map(|(h, mv)| Term::tuple([Term::Tuple(h.clone()), mv.to_term()])).collect())
    }

    pub fn from_term(code: &Term) -> Result<Self, TableError> {
        let rows = code.as_tuple().ok_or(TableError::Malformed("an Arthur code is a tuple of rows"))?;
        let mut table = ArthurTable::new();
        let mut previous: Option<&Term> = None;
        for row in rows {
            let [history, mv] = row.as_tuple().ok_or(TableError::Malformed("row is not a pair"))? else {
                return Err(TableError::Malformed("row is not a pair"));
            };
            if previous.is_some_and(|p| p >= history) {
                return Err(TableError::Malformed("rows are not in canonical order"));
            }
            previous = Some(history);
            let history = history.as_tuple().ok_or(TableError::Malformed("history is not a tuple"))?;
            if history.is_empty() {
                return Err(TableError::Malformed("history lacks the opening move"));
            }
            let mv = ArthurMove::from_term(mv).ok_or(TableError::Malformed("move is neither inl nor inr"))?;
            table.insert(history.to_vec(), mv);
        }
        Ok(table)
    }

    /// One `(x0,...) -> query u` or `(x0,...) -> terminate v` line per row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (h, mv) in &self.rows {
            let _ = writeln!(out, "{} -> {}", Term::Tuple(h.clone()), mv);
        }
        out
    }

    pub fn parse_line(&mut self, line: &str) -> Result<(), String> {
        let (history, mv) = line.split_once(" -> ").ok_or("expected `history -> move`")?;
        let history: Term = history.parse().map_err(|e: crate::ParseTermError| e.to_string())?;
        let history = history.as_tuple().ok_or("history must be a tuple")?.to_vec();
        if history.is_empty() {
            return Err("history lacks the opening move".into());
        }
        let mv = if let Some(u) = mv.strip_prefix("query ") {
            ArthurMove::Query(u.parse().map_err(|e: crate::ParseTermError| e.to_string())?)
        } else if let Some(v) = mv.strip_prefix("terminate ") {
            ArthurMove::Terminate(v.parse().map_err(|e: crate::ParseTermError| e.to_string())?)
        } else {
            return Err("expected `query` or `terminate`".into());
        };
        if self.rows.insert(history, mv).is_some() {
            return Err("duplicate history".into());
        }
        Ok(())
    }
}

impl ArthurStrategy for ArthurTable {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        let mut key = Vec::with_capacity(answers.len() + 1);
        key.push(first.clone());
        key.extend_from_slice(answers);
        self.rows.get(&key).cloned()
    }
}

/// Key of a Nimue table row.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NimueKey {
    pub first: Term,
    pub first_secret: Term,
    pub answers: Vec<Term>,
}

impl NimueKey {
    fn to_term(&self) -> Term {
        Term::tuple([self.first.clone(), self.first_secret.clone(), Term::Tuple(self.answers.clone())])
    }

    fn from_term(t: &Term) -> Option<Self> {
        let [first, first_secret, answers] = t.as_tuple()? else {
            return None;
        };
        Some(NimueKey {
            first: first.clone(),
            first_secret: first_secret.clone(),
            answers: answers.as_tuple()?.to_vec(),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NimueTable {
    rows: BTreeMap<NimueKey, Term>,
}

impl NimueTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: NimueKey, secret: Term) -> Option<Term> {
        self.rows.insert(key, secret)
    }

    pub fn remove(&mut self, key: &NimueKey) -> Option<Term> {
        self.rows.remove(key)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&NimueKey, &Term)> + '_ {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_term(&self) -> Term {
        Term::Tuple(self.rows.iter().map(|(k, z)| Term::tuple([k.to_term(), z.clone()])).collect())
    }

    pub fn from_term(code: &Term) -> Result<Self, TableError> {
        let rows = code.as_tuple().ok_or(TableError::Malformed("a Nimue code is a tuple of rows"))?;
        let mut table = NimueTable::new();
        let mut previous: Option<&Term> = None;
        for row in rows {
            let [key, z] = row.as_tuple().ok_or(TableError::Malformed("row is not a pair"))? else {
                return Err(TableError::Malformed("row is not a pair"));
            };
            if previous.is_some_and(|p| p >= key) {
                return Err(TableError::Malformed("rows are not in canonical order"));
            }
            previous = Some(key);
            let key = NimueKey::from_term(key).ok_or(TableError::Malformed("bad Nimue row key"))?;
            table.insert(key, z.clone());
        }
        Ok(table)
    }

    /// One `(x0,c0,(x1,...)) -> z` line per row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, z) in &self.rows {
            let _ = writeln!(out, "{} -> {}", k.to_term(), z);
        }
        out
    }

    pub fn parse_line(&mut self, line: &str) -> Result<(), String> {
        let (key, z) = line.split_once(" -> ").ok_or("expected `key -> secret`")?;
        let key: Term = key.parse().map_err(|e: crate::ParseTermError| e.to_string())?;
        let key = NimueKey::from_term(&key).ok_or("key must be (x0,c0,(x1,...))")?;
        let z: Term = z.parse().map_err(|e: crate::ParseTermError| e.to_string())?;
        if self.rows.insert(key, z).is_some() {
            return Err("duplicate key".into());
        }
        Ok(())
    }
}

impl NimueStrategy for NimueTable {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let key =
            NimueKey { first: view.first.clone(), first_secret: view.first_secret.clone(), answers: view.answers() };
        self.rows.get(&key).cloned()
    }
}

/// Parses a strategy file with an `arthur` section and a `nimue` section.
pub fn parse_strategy_file(text: &str) -> Result<(ArthurTable, NimueTable), TableError> {
    let mut arthur = ArthurTable::new();
    let mut nimue = NimueTable::new();
    let mut section = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| TableError::Syntax { line: idx + 1, message };
        match line {
            "arthur" => section = Some(true),
            "nimue" => section = Some(false),
            _ => match section {
                Some(true) => arthur.parse_line(line).map_err(err)?,
                Some(false) => nimue.parse_line(line).map_err(err)?,
                None => return Err(err("rows must follow an `arthur` or `nimue` header".into())),
            },
        }
    }
    Ok((arthur, nimue))
}

pub fn strategy_file_text(arthur: &ArthurTable, nimue: &NimueTable) -> String {
    let mut out = String::from("arthur\n");
    out.push_str(&arthur.to_text());
    out.push_str("nimue\n");
    out.push_str(&nimue.to_text());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (ArthurTable, NimueTable) {
        let mut a = ArthurTable::new();
        a.insert(alloc::vec![Term::Star], ArthurMove::Query(Term::Star));
        a.insert(alloc::vec![Term::Star, Term::Nat(1)], ArthurMove::Terminate(Term::Nat(1)));
        let mut n = NimueTable::new();
        n.insert(NimueKey { first: Term::Star, first_secret: Term::set([0]), answers: Vec::new() }, Term::set([0]));
        (a, n)
    }

    #[test]
    fn codes_round_trip() {
        let (a, n) = sample();
        assert_eq!(a.to_term().render(), "(((*),inl *),((*,1),inr 1))");
        assert_eq!(ArthurTable::from_term(&a.to_term()).unwrap(), a);
        assert_eq!(n.to_term().render(), "(((*,{0},()),{0}))");
        assert_eq!(NimueTable::from_term(&n.to_term()).unwrap(), n);
        assert_eq!(a.query_depth(), 1);
    }

    #[test]
    fn text_round_trips() {
        let (a, n) = sample();
        let text = strategy_file_text(&a, &n);
        assert_eq!(text, "arthur\n(*) -> query *\n(*,1) -> terminate 1\nnimue\n(*,{0},()) -> {0}\n");
        assert_eq!(parse_strategy_file(&text).unwrap(), (a, n));
    }

    #[test]
    fn malformed_codes_are_rejected() {
        assert!(ArthurTable::from_term(&Term::Nat(3)).is_err());
        let swapped = Term::tuple([
            Term::tuple([Term::tuple([Term::Star, Term::Nat(1)]), Term::inr(Term::Nat(1))]),
            Term::tuple([Term::tuple([Term::Star]), Term::inl(Term::Star)]),
        ]);
        assert!(ArthurTable::from_term(&swapped).is_err());
        let bad_move = Term::tuple([Term::tuple([Term::tuple([Term::Star]), Term::Nat(0)])]);
        assert!(ArthurTable::from_term(&bad_move).is_err());
        assert!(NimueTable::from_term(&Term::tuple([Term::Star])).is_err());
        assert!(parse_strategy_file("(*) -> query *\n").is_err());
    }
}
