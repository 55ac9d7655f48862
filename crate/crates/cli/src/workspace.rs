//! Workspace files: named bilayer functions and strategies.
//!
//! ```text
//! # comment
//! budget 2000000
//! output out
//! def e = error(1,3)
//! def j = join(e, error(1,2))
//! def f = fn {
//!   * | 0 -> {1,2}
//! }
//! strategy s = triple {
//!   H * = *
//! }
//! strategy w = collapse_chain(2,4)
//! ```
//!
//! The full grammar is in `docs/workspace.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use bilayer_core::catalog::prob::{error_to_prob_error, scaled_errors};
use bilayer_core::catalog::{
    collapse_chain, denerror, denerror_reduction, easy_direction, llpo, llpo_reduction, prob_error,
    prob_error_strategy, prob_error_witness, psi_fn, Consolidation,
};
use bilayer_core::combinators::{join, meet, ClosureFn, LiftedOneQuery};
use bilayer_core::engine::{CopyStrategy, SharedArthur, SharedNimue, Verified};
use bilayer_core::families::{avoid, error, error_hard, id_fn};
use bilayer_core::solver::TableTriple;
use bilayer_core::tables::{parse_strategy_file, strategy_file_text, TableError};
use bilayer_core::{BilayerError, BilayerFn};

/// A position in the workspace file, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct Diagnostic {
    pub pos: Option<Pos>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "line {}, column {}: {}", p.line, p.column, self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl Diagnostic {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { pos: Some(pos), message: message.into() }
    }
}

/// A strategy pair ready to play, with the depth it is meant for when that
/// is known.
#[derive(Clone)]
pub struct StrategyDef {
    pub kind: String,
    pub arthur: SharedArthur,
    pub nimue: SharedNimue,
    pub depth: Option<usize>,
    /// `(format, text)` when the strategy is given by tables: format
    /// `tables` or `triple`.
    pub text: Option<(&'static str, String)>,
}

impl fmt::Debug for StrategyDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrategyDef").field("kind", &self.kind).field("depth", &self.depth).finish_non_exhaustive()
    }
}

impl StrategyDef {
    fn triple(kind: String, triple: TableTriple) -> Self {
        let text = Some(("triple", triple.to_text()));
        let lifted = Arc::new(LiftedOneQuery(triple));
        StrategyDef { kind, arthur: lifted.clone(), nimue: lifted, depth: Some(1), text }
    }

    fn verified(kind: String, w: Verified) -> Self {
        StrategyDef { kind, arthur: w.arthur.clone(), nimue: w.nimue.clone(), depth: Some(w.depth), text: None }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Workspace {
    /// Functions in definition order.
    pub functions: Vec<(String, Arc<BilayerFn>)>,
    pub strategies: BTreeMap<String, StrategyDef>,
    pub budget: Option<u64>,
    pub output: Option<PathBuf>,
}

impl Workspace {
    pub fn function(&self, name: &str) -> Option<&Arc<BilayerFn>> {
        self.functions.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    fn taken(&self, name: &str) -> bool {
        self.function(name).is_some() || self.strategies.contains_key(name)
    }

    /// Resolves a command-line argument: a defined name or a constructor
    /// expression such as `error(1,3)`.
    pub fn resolve_function(&self, text: &str) -> Result<Arc<BilayerFn>, Diagnostic> {
        if let Some(f) = self.function(text) {
            return Ok(f.clone());
        }
        let expr = parse_expr(text, Pos { line: 1, column: 1 }).map_err(|e| argument(text, e))?;
        self.eval_function(&expr).map(Arc::new).map_err(|e| argument(text, e))
    }

    pub fn resolve_strategy(&self, text: &str) -> Result<StrategyDef, Diagnostic> {
        if let Some(s) = self.strategies.get(text) {
            return Ok(s.clone());
        }
        let expr = parse_expr(text, Pos { line: 1, column: 1 }).map_err(|e| argument(text, e))?;
        self.eval_strategy(&expr).map_err(|e| argument(text, e))
    }

    fn eval_function(&self, expr: &Expr) -> Result<BilayerFn, Diagnostic> {
        let (name, args, pos) = match expr {
            Expr::Name(name, pos) => {
                return self
                    .function(name)
                    .map(|f| (**f).clone())
                    .ok_or_else(|| Diagnostic::at(*pos, format!("unknown function `{name}`")));
            }
            Expr::Call(name, args, pos) => (name.as_str(), args, *pos),
            Expr::Nat(_, pos) | Expr::List(_, pos) => return Err(Diagnostic::at(*pos, "expected a function")),
        };
        let built = match name {
            "error" => {
                let [m, k] = nats::<2>(name, args, pos)?;
                error(m, k)
            }
            "error_hard" => {
                let [m, k, n] = nats::<3>(name, args, pos)?;
                error_hard(m, k, n)
            }
            "id" | "id_fn" => {
                let [n] = nats::<1>(name, args, pos)?;
                id_fn(n)
            }
            "avoid" => {
                arity(name, args, 2, pos)?;
                let Expr::List(g, _) = &args[0] else {
                    return Err(Diagnostic::at(args[0].pos(), "avoid expects a list such as [1,_,0]"));
                };
                avoid(g, nat(&args[1])?)
            }
            "join" | "meet" => {
                arity(name, args, 2, pos)?;
                let f = self.eval_function(&args[0])?;
                let g = self.eval_function(&args[1])?;
                if name == "join" {
                    join(&f, &g)
                } else {
                    meet(&f, &g)
                }
            }
            "llpo" => {
                let [m, k, bound] = nats::<3>(name, args, pos)?;
                llpo(m, k, bound)
            }
            "psi" => {
                let [bound] = nats::<1>(name, args, pos)?;
                psi_fn(bound)
            }
            "prob_error" => {
                let [t, p, q, bound] = nats::<4>(name, args, pos)?;
                prob_error(small(t, &args[0])?, p, q, bound)
            }
            "scaled_errors" => {
                let [t, p, q] = nats::<3>(name, args, pos)?;
                scaled_errors(small(t, &args[0])?, p, q)
            }
            "denerror" => {
                let [l] = nats::<1>(name, args, pos)?;
                denerror(l)
            }
            "closure" => {
                arity(name, args, 2, pos)?;
                let h = Arc::new(self.eval_function(&args[0])?);
                let d = nat(&args[1])? as usize;
                let mut c = ClosureFn::new(h, d);
                if let Some(b) = self.budget {
                    c = c.with_budget(b);
                }
                return c.materialize().map_err(|e| Diagnostic::at(pos, e.to_string()));
            }
            _ => return Err(Diagnostic::at(pos, format!("unknown constructor `{name}`"))),
        };
        built.map_err(|e| precondition(pos, e))
    }

    fn eval_strategy(&self, expr: &Expr) -> Result<StrategyDef, Diagnostic> {
        let (name, args, pos) = match expr {
            Expr::Name(name, pos) if name == "copy" => (name.as_str(), NO_ARGS, *pos),
            Expr::Name(name, pos) => {
                return self
                    .strategies
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Diagnostic::at(*pos, format!("unknown strategy `{name}`")));
            }
            Expr::Call(name, args, pos) => (name.as_str(), args.as_slice(), *pos),
            Expr::Nat(_, pos) | Expr::List(_, pos) => return Err(Diagnostic::at(*pos, "expected a strategy")),
        };
        let kind = expr.to_string();
        let chain =
            |r: Result<Verified, bilayer_core::catalog::ChainError>| r.map_err(|e| Diagnostic::at(pos, e.to_string()));
        match name {
            "copy" => {
                arity(name, args, 0, pos)?;
                let s = Arc::new(CopyStrategy);
                Ok(StrategyDef { kind, arthur: s.clone(), nimue: s, depth: Some(1), text: None })
            }
            "easy_direction" => {
                let [m, k, l] = nats::<3>(name, args, pos)?;
                Ok(StrategyDef::triple(kind, easy_direction(m, k, l).map_err(|e| precondition(pos, e))?))
            }
            "denerror_reduction" => {
                let [l] = nats::<1>(name, args, pos)?;
                Ok(StrategyDef::triple(kind, denerror_reduction(l).map_err(|e| precondition(pos, e))?))
            }
            "error_to_prob_error" => {
                let [t, p, q] = nats::<3>(name, args, pos)?;
                let triple = error_to_prob_error(small(t, &args[0])?, p, q).map_err(|e| precondition(pos, e))?;
                Ok(StrategyDef::triple(kind, triple))
            }
            "llpo_reduction" => {
                let [m, k] = nats::<2>(name, args, pos)?;
                let r = Arc::new(LiftedOneQuery(llpo_reduction(m, k).map_err(|e| precondition(pos, e))?));
                Ok(StrategyDef { kind, arthur: r.clone(), nimue: r, depth: Some(1), text: None })
            }
            "prob_error_strategy" => {
                let [p, q] = nats::<2>(name, args, pos)?;
                let s = Arc::new(prob_error_strategy(p, q).map_err(|e| precondition(pos, e))?);
                Ok(StrategyDef { kind, arthur: s.clone(), nimue: s, depth: None, text: None })
            }
            "collapse_chain" => {
                let [m, k] = nats::<2>(name, args, pos)?;
                Ok(StrategyDef::verified(kind, chain(collapse_chain(m, k))?))
            }
            "consolidation" => {
                let [m, k, n] = nats::<3>(name, args, pos)?;
                let c = Consolidation::new(m, k, n).map_err(|e| precondition(pos, e))?;
                let w = c.witness().map_err(|e| precondition(pos, e))?;
                let depth = Some(w.depth);
                Ok(StrategyDef { kind, arthur: w.arthur, nimue: w.nimue, depth, text: None })
            }
            "prob_error_witness" => {
                let [t, p, q, bound] = nats::<4>(name, args, pos)?;
                Ok(StrategyDef::verified(kind, chain(prob_error_witness(small(t, &args[0])?, p, q, bound))?))
            }
            _ => Err(Diagnostic::at(pos, format!("unknown strategy constructor `{name}`"))),
        }
    }
}

const NO_ARGS: &[Expr] = &[];

fn argument(text: &str, e: Diagnostic) -> Diagnostic {
    let column = e.pos.map_or(String::new(), |p| format!(", column {}", p.column));
    Diagnostic { pos: None, message: format!("in `{text}`{column}: {}", e.message) }
}

fn precondition(pos: Pos, e: BilayerError) -> Diagnostic {
    Diagnostic::at(pos, e.to_string())
}

fn arity(name: &str, args: &[Expr], n: usize, pos: Pos) -> Result<(), Diagnostic> {
    if args.len() == n {
        Ok(())
    } else {
        Err(Diagnostic::at(pos, format!("`{name}` takes {n} arguments, got {}", args.len())))
    }
}

fn nat(e: &Expr) -> Result<u64, Diagnostic> {
    match e {
        Expr::Nat(n, _) => Ok(*n),
        other => Err(Diagnostic::at(other.pos(), "expected a number")),
    }
}

fn nats<const N: usize>(name: &str, args: &[Expr], pos: Pos) -> Result<[u64; N], Diagnostic> {
    arity(name, args, N, pos)?;
    let mut out = [0; N];
    for (slot, a) in out.iter_mut().zip(args) {
        *slot = nat(a)?;
    }
    Ok(out)
}

fn small(n: u64, e: &Expr) -> Result<u32, Diagnostic> {
    u32::try_from(n)
        .ok()
        .filter(|&t| t <= 16)
        .ok_or_else(|| Diagnostic::at(e.pos(), "oracle length must be at most 16"))
}

/// Parsed constructor syntax.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Expr {
    Name(String, Pos),
    Nat(u64, Pos),
    List(Vec<Option<u64>>, Pos),
    Call(String, Vec<Expr>, Pos),
}

impl Expr {
    fn pos(&self) -> Pos {
        match self {
            Expr::Name(_, p) | Expr::Nat(_, p) | Expr::List(_, p) | Expr::Call(_, _, p) => *p,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Name(n, _) => f.write_str(n),
            Expr::Nat(n, _) => write!(f, "{n}"),
            Expr::List(items, _) => {
                let items: Vec<String> = items.iter().map(|v| v.map_or("_".into(), |v| v.to_string())).collect();
                write!(f, "[{}]", items.join(","))
            }
            Expr::Call(n, args, _) => {
                let args: Vec<String> = args.iter().map(Expr::to_string).collect();
                write!(f, "{n}({})", args.join(","))
            }
        }
    }
}

struct ExprParser {
    chars: Vec<char>,
    i: usize,
    origin: Pos,
}

fn parse_expr(src: &str, origin: Pos) -> Result<Expr, Diagnostic> {
    let mut p = ExprParser { chars: src.chars().collect(), i: 0, origin };
    let e = p.expr()?;
    p.skip_ws();
    if p.i < p.chars.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

impl ExprParser {
    fn pos(&self) -> Pos {
        Pos { line: self.origin.line, column: self.origin.column + self.i }
    }

    fn err(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::at(self.pos(), message)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.i).is_some_and(|c| c.is_whitespace()) {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.i).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u64, Diagnostic> {
        let pos = self.pos();
        let start = self.i;
        while self.chars.get(self.i).is_some_and(char::is_ascii_digit) {
            self.i += 1;
        }
        let digits: String = self.chars[start..self.i].iter().collect();
        digits.parse().map_err(|_| Diagnostic::at(pos, "number out of range"))
    }

    fn ident(&mut self) -> String {
        let start = self.i;
        while self.chars.get(self.i).is_some_and(|&c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            self.i += 1;
        }
        self.chars[start..self.i].iter().collect()
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        let c = self.peek().ok_or_else(|| self.err("expected an expression"))?;
        let pos = self.pos();
        if c.is_ascii_digit() {
            return Ok(Expr::Nat(self.number()?, pos));
        }
        if c == '[' {
            self.i += 1;
            let mut items = Vec::new();
            if !self.eat(']') {
                loop {
                    match self.peek() {
                        Some('_') => {
                            self.i += 1;
                            items.push(None);
                        }
                        Some(d) if d.is_ascii_digit() => items.push(Some(self.number()?)),
                        _ => return Err(self.err("expected a number or `_`")),
                    }
                    if self.eat(']') {
                        break;
                    }
                    if !self.eat(',') {
                        return Err(self.err("expected `,` or `]`"));
                    }
                }
            }
            return Ok(Expr::List(items, pos));
        }
        if !(c.is_ascii_alphabetic() || c == '_') {
            return Err(self.err(format!("unexpected `{c}`")));
        }
        let name = self.ident();
        if !self.eat('(') {
            return Ok(Expr::Name(name, pos));
        }
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                args.push(self.expr()?);
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return Err(self.err("expected `,` or `)`"));
                }
            }
        }
        Ok(Expr::Call(name, args, pos))
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Parses and resolves a workspace file; stops at the first error.
pub fn parse_workspace(text: &str) -> Result<Workspace, Diagnostic> {
    let mut ws = Workspace::default();
    let lines: Vec<&str> = text.lines().collect();
    let mut idx = 0;
    while idx < lines.len() {
        let raw = lines[idx];
        let line_no = idx + 1;
        idx += 1;
        let indent = raw.len() - raw.trim_start().len();
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |offset: usize| Pos { line: line_no, column: indent + offset + 1 };
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest_offset = line.len() - rest.len();
        match keyword {
            "budget" => {
                let n = rest.trim().parse().map_err(|_| Diagnostic::at(at(rest_offset), "expected a number"))?;
                ws.budget = Some(n);
            }
            "output" => {
                if rest.trim().is_empty() {
                    return Err(Diagnostic::at(at(rest_offset), "expected a directory"));
                }
                ws.output = Some(PathBuf::from(rest.trim()));
            }
            "def" | "strategy" => {
                let (name, body) =
                    rest.split_once('=').ok_or_else(|| Diagnostic::at(at(rest_offset), "expected `NAME = ...`"))?;
                let name = name.trim();
                if !is_name(name) {
                    return Err(Diagnostic::at(at(rest_offset), format!("`{name}` is not a valid name")));
                }
                if ws.taken(name) {
                    return Err(Diagnostic::at(at(rest_offset), format!("`{name}` is already defined")));
                }
                let body_offset = line.len() - body.len() + (body.len() - body.trim_start().len());
                let body = body.trim();
                let block_kind = body.strip_suffix('{').map(str::trim);
                if let Some(kind) = block_kind {
                    let start = idx;
                    while idx < lines.len() && lines[idx].trim() != "}" {
                        idx += 1;
                    }
                    if idx == lines.len() {
                        return Err(Diagnostic::at(at(line.len() - 1), "unclosed `{`"));
                    }
                    let block = lines[start..idx].join("\n");
                    idx += 1;
                    let pos = at(body_offset);
                    if keyword == "def" {
                        let f = block_function(kind, name, &block, start, pos)?;
                        ws.functions.push((name.to_string(), Arc::new(f)));
                    } else {
                        let s = block_strategy(kind, &block, start, pos)?;
                        ws.strategies.insert(name.to_string(), s);
                    }
                    continue;
                }
                let expr = parse_expr(body, at(body_offset))?;
                if keyword == "def" {
                    let f = ws.eval_function(&expr)?.renamed(name);
                    ws.functions.push((name.to_string(), Arc::new(f)));
                } else {
                    let s = ws.eval_strategy(&expr)?;
                    ws.strategies.insert(name.to_string(), s);
                }
            }
            _ => return Err(Diagnostic::at(at(0), format!("unknown statement `{keyword}`"))),
        }
    }
    Ok(ws)
}

fn block_function(kind: &str, name: &str, block: &str, start: usize, pos: Pos) -> Result<BilayerFn, Diagnostic> {
    if kind != "fn" {
        return Err(Diagnostic::at(pos, format!("unknown block `{kind}`; functions use `fn {{`")));
    }
    BilayerFn::parse_text(name, block).map_err(|e| match e {
        BilayerError::Syntax { line, column, message } => Diagnostic::at(Pos { line: start + line, column }, message),
        other => Diagnostic::at(pos, other.to_string()),
    })
}

fn block_strategy(kind: &str, block: &str, start: usize, pos: Pos) -> Result<StrategyDef, Diagnostic> {
    let table_err = |e: TableError| match e {
        TableError::Syntax { line, message } => Diagnostic::at(Pos { line: start + line, column: 1 }, message),
        other => Diagnostic::at(pos, other.to_string()),
    };
    match kind {
        "table" => {
            let (arthur, nimue) = parse_strategy_file(block).map_err(table_err)?;
            let depth = Some(arthur.query_depth());
            let text = Some(("tables", strategy_file_text(&arthur, &nimue)));
            Ok(StrategyDef { kind: "table".into(), arthur: Arc::new(arthur), nimue: Arc::new(nimue), depth, text })
        }
        "triple" => Ok(StrategyDef::triple("triple".into(), TableTriple::parse_text(block).map_err(table_err)?)),
        _ => Err(Diagnostic::at(pos, format!("unknown block `{kind}`; strategies use `table {{` or `triple {{`"))),
    }
}
