//! Structured values used for public inputs, secrets, oracle answers and
//! strategy codes.
//!
//! Every [`Term`] has exactly one canonical text form:
//!
//! ```text
//! term := NAT | "*" | "()" | "(" term ("," term)* ")"
//!       | "{}" | "{" NAT ("," NAT)* "}" | "inl " term | "inr " term
//! ```
//!
//! Set elements are strictly increasing and no whitespace appears except the
//! single space after `inl`/`inr`. The text form is used as an enumeration
//! key, so `parse(render(t)) == t` and `render` is injective.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// The symbol `*`.
    Star,
    Nat(u64),
    Tuple(Vec<Term>),
    /// Finite set of naturals, kept strictly sorted.
    Set(Vec<u64>),
    Inl(Box<Term>),
    Inr(Box<Term>),
}

impl Term {
    pub fn nat(n: u64) -> Self {
        Term::Nat(n)
    }

    pub fn tuple<I: IntoIterator<Item = Term>>(items: I) -> Self {
        Term::Tuple(items.into_iter().collect())
    }

    /// Builds a set term, sorting and deduplicating the elements.
    pub fn set<I: IntoIterator<Item = u64>>(items: I) -> Self {
        let mut v: Vec<u64> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Term::Set(v)
    }

    pub fn inl(t: Term) -> Self {
        Term::Inl(Box::new(t))
    }

    pub fn inr(t: Term) -> Self {
        Term::Inr(Box::new(t))
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Term::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Term]> {
        match self {
            Term::Tuple(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&[u64]> {
        match self {
            Term::Set(items) => Some(items),
            _ => None,
        }
    }

    /// Splits a tagged term into `(tag, inner)` with `inl = 0`, `inr = 1`.
    pub fn as_tagged(&self) -> Option<(u8, &Term)> {
        match self {
            Term::Inl(t) => Some((0, t)),
            Term::Inr(t) => Some((1, t)),
            _ => None,
        }
    }

    /// Tuple of naturals, the common shape of hit lists and block lists.
    pub fn nat_tuple<I: IntoIterator<Item = u64>>(items: I) -> Self {
        Term::Tuple(items.into_iter().map(Term::Nat).collect())
    }

    pub fn as_nat_tuple(&self) -> Option<Vec<u64>> {
        self.as_tuple()?.iter().map(Term::as_nat).collect()
    }

    pub fn render(&self) -> String {
        alloc::format!("{self}")
    }
}

impl From<u64> for Term {
    fn from(n: u64) -> Self {
        Term::Nat(n)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Star => f.write_str("*"),
            Term::Nat(n) => write!(f, "{n}"),
            Term::Tuple(items) => {
                f.write_str("(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            Term::Set(items) => {
                f.write_str("{")?;
                for (i, n) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{n}")?;
                }
                f.write_str("}")
            }
            Term::Inl(t) => write!(f, "inl {t}"),
            Term::Inr(t) => write!(f, "inr {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term syntax error at byte {offset}: {message}")]
pub struct ParseTermError {
    pub offset: usize,
    pub message: &'static str,
}

/// Recursive-descent reader over the canonical grammar.
pub(crate) struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Reader { src: src.as_bytes(), pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn err(&self, message: &'static str) -> ParseTermError {
        ParseTermError { offset: self.pos, message }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    pub(crate) fn eat(&mut self, lit: &str) -> bool {
        if self.src[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, lit: &'static str) -> Result<(), ParseTermError> {
        if self.eat(lit) {
            return Ok(());
        }
        let message = match lit {
            " | " => "expected ` | `",
            " -> " => "expected ` -> `",
            " = " => "expected ` = `",
            "{" => "expected `{`",
            "," => "expected `,`",
            " " => "expected a space",
            _ => "unexpected input",
        };
        Err(self.err(message))
    }

    fn nat(&mut self) -> Result<u64, ParseTermError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a natural number"));
        }
        let digits = &self.src[start..self.pos];
        if digits.len() > 1 && digits[0] == b'0' {
            return Err(ParseTermError { offset: start, message: "leading zero" });
        }
        let text = core::str::from_utf8(digits).map_err(|_| self.err("bad digits"))?;
        text.parse().map_err(|_| ParseTermError { offset: start, message: "number out of range" })
    }

    pub(crate) fn term(&mut self) -> Result<Term, ParseTermError> {
        match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                Ok(Term::Star)
            }
            Some(b'0'..=b'9') => self.nat().map(Term::Nat),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                if self.eat(")") {
                    return Ok(Term::Tuple(items));
                }
                loop {
                    items.push(self.term()?);
                    if self.eat(")") {
                        return Ok(Term::Tuple(items));
                    }
                    self.expect(",")?;
                }
            }
            Some(b'{') => {
                self.pos += 1;
                let mut items: Vec<u64> = Vec::new();
                if self.eat("}") {
                    return Ok(Term::Set(items));
                }
                loop {
                    let at = self.pos;
                    let n = self.nat()?;
                    if items.last().is_some_and(|&last| last >= n) {
                        return Err(ParseTermError { offset: at, message: "set elements must be strictly increasing" });
                    }
                    items.push(n);
                    if self.eat("}") {
                        return Ok(Term::Set(items));
                    }
                    self.expect(",")?;
                }
            }
            Some(b'i') => {
                if self.eat("inl ") {
                    Ok(Term::inl(self.term()?))
                } else if self.eat("inr ") {
                    Ok(Term::inr(self.term()?))
                } else {
                    Err(self.err("expected `inl ` or `inr `"))
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

impl FromStr for Term {
    type Err = ParseTermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut r = Reader::new(s);
        let t = r.term()?;
        if !r.at_end() {
            return Err(r.err("trailing input"));
        }
        Ok(t)
    }
}

/// Renders a value set the way cell lines and reports show it: `{a,b}`.
pub fn render_set<'a, I: IntoIterator<Item = &'a Term>>(items: I) -> String {
    let mut out = String::from("{");
    for (i, t) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&t.render());
    }
    out.push('}');
    out
}
