//! Bounded exhaustive searches for reductions.
//!
//! [`solve_one_query`] looks for a triple `(H, K, L)`: Arthur sends `H(n)`,
//! Nimue sends `L(n, c)` and Arthur maps every possible answer `m` to
//! `K(n, m)`. [`solve_lt`] decides the existence of a winning Arthur–Nimue
//! pair within a query budget by backward induction over Arthur's knowledge:
//! at a visible history Arthur only knows the set of openings `c0` that are
//! still consistent with it, and the game below a history depends on nothing
//! else.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

use crate::bilayer::{BilayerFn, CellOracle, ValueSet};
use crate::engine::{ArthurMove, DEFAULT_BUDGET};
use crate::tables::TableError;
use crate::tables::{ArthurTable, NimueKey, NimueTable};
use crate::term::{ParseTermError, Reader, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("search budget of {budget} positions exceeded")]
    Budget { budget: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Found,
    Exhausted,
}

impl SearchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Found => "found",
            SearchMode::Exhausted => "exhausted",
        }
    }
}

/// What a search looked at. `depth` is 1 for one-query searches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub mode: SearchMode,
    pub depth: usize,
    /// Arthur moves tried (queries and terminations).
    pub arthur_moves: u64,
    /// Inner-game positions examined.
    pub positions: u64,
}

#[derive(Clone, Debug)]
pub struct Search<W> {
    pub witness: Option<W>,
    pub certificate: Certificate,
}

/// Any object giving the three maps of a one-query reduction.
pub trait OneQuery {
    /// `H(n)`: the public input sent to the target.
    fn inner(&self, public: &Term) -> Option<Term>;
    /// `K(n, m)`: the value reported after answer `m`.
    fn outer(&self, public: &Term, answer: &Term) -> Option<Term>;
    /// `L(n, c)`: Nimue's secret for the target.
    fn secret(&self, public: &Term, secret: &Term) -> Option<Term>;
}

/// A one-query reduction given by finite tables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TableTriple {
    pub inner: BTreeMap<Term, Term>,
    pub outer: BTreeMap<(Term, Term), Term>,
    pub secret: BTreeMap<(Term, Term), Term>,
}

impl OneQuery for TableTriple {
    fn inner(&self, public: &Term) -> Option<Term> {
        self.inner.get(public).cloned()
    }

    fn outer(&self, public: &Term, answer: &Term) -> Option<Term> {
        self.outer.get(&(public.clone(), answer.clone())).cloned()
    }

    fn secret(&self, public: &Term, secret: &Term) -> Option<Term> {
        self.secret.get(&(public.clone(), secret.clone())).cloned()
    }
}

impl TableTriple {
    /// `H n = u`, `K n m = v` and `L n c = z` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, u) in &self.inner {
            let _ = writeln!(out, "H {n} = {u}");
        }
        for ((n, m), v) in &self.outer {
            let _ = writeln!(out, "K {n} {m} = {v}");
        }
        for ((n, c), z) in &self.secret {
            let _ = writeln!(out, "L {n} {c} = {z}");
        }
        out
    }

    /// Reads the format written by [`TableTriple::to_text`]. Blank lines and
    /// `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<Self, TableError> {
        let mut triple = TableTriple::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TableError::Syntax { line: idx + 1, message };
            let fresh = triple.parse_line(line).map_err(|e| err(format!("column {}: {}", e.offset + 1, e.message)))?;
            if !fresh {
                return Err(err("duplicate entry".into()));
            }
        }
        Ok(triple)
    }

    fn parse_line(&mut self, line: &str) -> Result<bool, ParseTermError> {
        let mut r = Reader::new(line);
        let fresh = if r.eat("H ") {
            let n = r.term()?;
            r.expect(" = ")?;
            self.inner.insert(n, r.term()?).is_none()
        } else if r.eat("K ") || r.eat("L ") {
            let outer = line.starts_with('K');
            let n = r.term()?;
            r.expect(" ")?;
            let m = r.term()?;
            r.expect(" = ")?;
            let v = r.term()?;
            let map = if outer { &mut self.outer } else { &mut self.secret };
            map.insert((n, m), v).is_none()
        } else {
            return Err(ParseTermError { offset: 0, message: "expected `H`, `K` or `L`" });
        };
        if !r.at_end() {
            return Err(ParseTermError { offset: r.pos(), message: "trailing input" });
        }
        Ok(fresh)
    }
}

/// Why a triple fails at some instance of the source.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TripleFailure {
    #[error("H is undefined at {public}")]
    InnerUndefined { public: Term },
    #[error("L is undefined at ({public} | {secret})")]
    SecretUndefined { public: Term, secret: Term },
    #[error("({query} | {target_secret}) is outside the target's domain, reached from ({public} | {secret})")]
    OutsideTarget { public: Term, secret: Term, query: Term, target_secret: Term },
    #[error("K({public}, {answer}) is undefined, reached from ({public} | {secret})")]
    OuterUndefined { public: Term, secret: Term, answer: Term },
    #[error("K({public}, {answer}) = {value} is not in the source cell at ({public} | {secret})")]
    WrongValue { public: Term, secret: Term, answer: Term, value: Term },
}

/// Checks the triple invariant at every instance of `source`.
pub fn validate_triple(
    source: &BilayerFn,
    target: &dyn CellOracle,
    triple: &dyn OneQuery,
) -> Result<u64, TripleFailure> {
    validate_triple_on(source.iter().map(|(p, s, v)| (p.clone(), s.clone(), v.clone())), target, triple)
}

/// Checks the triple invariant on the given instances; returns how many
/// target answers were checked.
pub fn validate_triple_on<I>(instances: I, target: &dyn CellOracle, triple: &dyn OneQuery) -> Result<u64, TripleFailure>
where
    I: IntoIterator<Item = (Term, Term, ValueSet)>,
{
    let mut checked = 0;
    for (n, c, allowed) in instances {
        let u = triple.inner(&n).ok_or_else(|| TripleFailure::InnerUndefined { public: n.clone() })?;
        let z = triple
            .secret(&n, &c)
            .ok_or_else(|| TripleFailure::SecretUndefined { public: n.clone(), secret: c.clone() })?;
        let Some(answers) = target.cell_values(&u, &z) else {
            return Err(TripleFailure::OutsideTarget { public: n, secret: c, query: u, target_secret: z });
        };
        for m in answers {
            checked += 1;
            let Some(v) = triple.outer(&n, &m) else {
                return Err(TripleFailure::OuterUndefined { public: n, secret: c, answer: m });
            };
            if !allowed.contains(&v) {
                return Err(TripleFailure::WrongValue { public: n, secret: c, answer: m, value: v });
            }
        }
    }
    Ok(checked)
}

/// Searches for a one-query reduction of `f` to `g`.
///
/// Each public input of `f` is solved on its own, trying `H(n)` in canonical
/// order, then `K(n, .)` by depth-first search over answers (values
/// ascending, "unused" last), and finally taking the least feasible `L(n, c)`.
pub fn solve_one_query(f: &BilayerFn, g: &BilayerFn, budget: u64) -> Result<Search<TableTriple>, SolveError> {
    let mut stats = Stats { arthur_moves: 0, positions: 0, budget };
    let mut triple = TableTriple::default();
    for n in f.dom_pub() {
        let cells: Vec<(&Term, &ValueSet)> = f.row(n).into_iter().flat_map(|r| r.iter()).collect();
        let mut found = false;
        for u in g.dom_pub() {
            stats.arthur_moves += 1;
            if let Some((outer, secrets)) = one_query_at(f, g, &cells, u, &mut stats)? {
                triple.inner.insert(n.clone(), u.clone());
                for (m, v) in outer {
                    triple.outer.insert((n.clone(), m), v);
                }
                for (c, z) in secrets {
                    triple.secret.insert((n.clone(), c), z);
                }
                found = true;
                break;
            }
        }
        if !found {
            return Ok(Search { witness: None, certificate: stats.certificate(SearchMode::Exhausted, 1) });
        }
    }
    Ok(Search { witness: Some(triple), certificate: stats.certificate(SearchMode::Found, 1) })
}

struct Stats {
    arthur_moves: u64,
    positions: u64,
    budget: u64,
}

impl Stats {
    fn tick(&mut self) -> Result<(), SolveError> {
        self.positions += 1;
        if self.positions > self.budget {
            Err(SolveError::Budget { budget: self.budget })
        } else {
            Ok(())
        }
    }

    fn certificate(&self, mode: SearchMode, depth: usize) -> Certificate {
        Certificate { mode, depth, arthur_moves: self.arthur_moves, positions: self.positions }
    }
}

type OuterAndSecrets = (Vec<(Term, Term)>, Vec<(Term, Term)>);

fn one_query_at(
    f: &BilayerFn,
    g: &BilayerFn,
    cells: &[(&Term, &ValueSet)],
    u: &Term,
    stats: &mut Stats,
) -> Result<Option<OuterAndSecrets>, SolveError> {
    let row: Vec<(&Term, &ValueSet)> = g.row(u).into_iter().flat_map(|r| r.iter()).collect();
    let answers: Vec<Term> = g.answers(u).into_iter().collect();
    let index: BTreeMap<&Term, usize> = answers.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let zcells: Vec<Vec<usize>> = row.iter().map(|(_, cell)| cell.iter().map(|m| index[m]).collect()).collect();
    let mut choice: Vec<Option<&Term>> = Vec::with_capacity(answers.len());
    let options: Vec<Option<&Term>> = f.alphabet().iter().map(Some).chain([None]).collect();
    let search = OneQuerySearch { cells, zcells: &zcells, options: &options };
    if !search.dfs(&mut choice, answers.len(), stats)? {
        return Ok(None);
    }
    let outer = answers.iter().zip(&choice).filter_map(|(m, v)| v.map(|v| (m.clone(), v.clone()))).collect();
    let secrets = cells
        .iter()
        .map(|(c, allowed)| {
            let z = (0..row.len())
                .find(|&zi| search.feasible(&choice, zi, allowed))
                .expect("a complete assignment leaves every secret feasible");
            ((*c).clone(), row[z].0.clone())
        })
        .collect();
    Ok(Some((outer, secrets)))
}

struct OneQuerySearch<'a, 'b> {
    cells: &'a [(&'b Term, &'b ValueSet)],
    zcells: &'a [Vec<usize>],
    options: &'a [Option<&'b Term>],
}

impl<'b> OneQuerySearch<'_, 'b> {
    /// Secret `zi` stays usable for a source cell if every answer assigned
    /// so far maps into the cell.
    fn feasible(&self, choice: &[Option<&Term>], zi: usize, allowed: &ValueSet) -> bool {
        self.zcells[zi].iter().all(|&mi| match choice.get(mi) {
            None => true,
            Some(None) => false,
            Some(Some(v)) => allowed.contains(*v),
        })
    }

    fn all_feasible(&self, choice: &[Option<&Term>]) -> bool {
        self.cells.iter().all(|(_, allowed)| (0..self.zcells.len()).any(|zi| self.feasible(choice, zi, allowed)))
    }

    fn dfs(&self, choice: &mut Vec<Option<&'b Term>>, total: usize, stats: &mut Stats) -> Result<bool, SolveError> {
        stats.tick()?;
        if !self.all_feasible(choice) {
            return Ok(false);
        }
        if choice.len() == total {
            return Ok(true);
        }
        for option in self.options {
            choice.push(*option);
            if self.dfs(choice, total, stats)? {
                return Ok(true);
            }
            choice.pop();
        }
        Ok(false)
    }
}

/// A winning pair found by [`solve_lt`], as tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TablePair {
    pub arthur: ArthurTable,
    pub nimue: NimueTable,
}

/// Decides whether Arthur and Nimue win `G(f, g)` with at most `depth`
/// queries, returning canonical winning tables when they do.
///
/// Moves are tried Terminate-before-Query, values and public inputs in
/// canonical order, so repeated runs return the same tables.
pub fn solve_lt(f: &BilayerFn, g: &BilayerFn, depth: usize, budget: u64) -> Result<Search<TablePair>, SolveError> {
    let mut stats = Stats { arthur_moves: 0, positions: 0, budget };
    let queries = QueryMenu::new(g);
    let mut pair = TablePair { arthur: ArthurTable::new(), nimue: NimueTable::new() };
    for x0 in f.dom_pub() {
        let secrets: Vec<(&Term, &ValueSet)> = f.row(x0).into_iter().flat_map(|r| r.iter()).collect();
        let mut solver =
            BeliefSolver { f_alphabet: f.alphabet(), secrets: &secrets, queries: &queries, memo: BTreeMap::new() };
        let all: Vec<u32> = (0..secrets.len() as u32).collect();
        if !solver.win(&all, depth, &mut stats)? {
            return Ok(Search { witness: None, certificate: stats.certificate(SearchMode::Exhausted, depth) });
        }
        solver.materialize(x0, &all, depth, &mut Vec::new(), &mut pair);
    }
    Ok(Search { witness: Some(pair), certificate: stats.certificate(SearchMode::Found, depth) })
}

/// Per target public input: the secrets worth considering, i.e. one secret
/// for each inclusion-minimal cell (a smaller cell only helps Nimue).
struct QueryMenu {
    entries: Vec<QueryEntry>,
}

struct QueryEntry {
    public: Term,
    answers: Vec<Term>,
    /// (secret, answer indices of its cell)
    secrets: Vec<(Term, Vec<usize>)>,
}

impl QueryMenu {
    fn new(g: &BilayerFn) -> Self {
        let entries = g
            .dom_pub()
            .map(|u| {
                let answers: Vec<Term> = g.answers(u).into_iter().collect();
                let index: BTreeMap<&Term, usize> = answers.iter().enumerate().map(|(i, m)| (m, i)).collect();
                let mut cells: Vec<(&Term, BTreeSet<usize>)> = g
                    .row(u)
                    .into_iter()
                    .flat_map(|r| r.iter())
                    .map(|(z, cell)| (z, cell.iter().map(|m| index[m]).collect()))
                    .collect();
                let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
                cells.retain(|(_, cell)| seen.insert(cell.clone()));
                let minimal: Vec<(Term, Vec<usize>)> = cells
                    .iter()
                    .filter(|(_, cell)| !cells.iter().any(|(_, other)| other != cell && other.is_subset(cell)))
                    .map(|(z, cell)| ((*z).clone(), cell.iter().copied().collect()))
                    .collect();
                QueryEntry { public: u.clone(), answers, secrets: minimal }
            })
            .collect();
        QueryMenu { entries }
    }
}

#[derive(Clone, Debug)]
enum Plan {
    Terminate(Term),
    /// Query entry index and the chosen secret index for each live opening.
    Query {
        entry: usize,
        assignment: Vec<usize>,
    },
}

struct BeliefSolver<'a> {
    f_alphabet: &'a ValueSet,
    secrets: &'a [(&'a Term, &'a ValueSet)],
    queries: &'a QueryMenu,
    memo: BTreeMap<(Vec<u32>, usize), Option<Plan>>,
}

impl BeliefSolver<'_> {
    fn known_loss(&self, live: &[u32], rem: usize) -> bool {
        matches!(self.memo.get(&(live.to_vec(), rem)), Some(None))
    }

    /// Can Arthur and Nimue win when the openings `live` are still possible
    /// and `rem` queries remain?
    fn win(&mut self, live: &[u32], rem: usize, stats: &mut Stats) -> Result<bool, SolveError> {
        if live.is_empty() {
            return Ok(true);
        }
        if let Some(known) = self.memo.get(&(live.to_vec(), rem)) {
            return Ok(known.is_some());
        }
        stats.tick()?;
        let plan = self.find_plan(live, rem, stats)?;
        let won = plan.is_some();
        self.memo.insert((live.to_vec(), rem), plan);
        Ok(won)
    }

    fn find_plan(&mut self, live: &[u32], rem: usize, stats: &mut Stats) -> Result<Option<Plan>, SolveError> {
        for v in self.f_alphabet {
            stats.arthur_moves += 1;
            if live.iter().all(|&c| self.secrets[c as usize].1.contains(v)) {
                return Ok(Some(Plan::Terminate(v.clone())));
            }
        }
        if rem == 0 {
            return Ok(None);
        }
        for entry in 0..self.queries.entries.len() {
            stats.arthur_moves += 1;
            let width = self.queries.entries[entry].answers.len();
            let mut assignment = Vec::with_capacity(live.len());
            let mut children = alloc::vec![Vec::new(); width];
            if self.assign(live, rem, entry, &mut assignment, &mut children, stats)? {
                return Ok(Some(Plan::Query { entry, assignment }));
            }
        }
        Ok(None)
    }

    /// Chooses Nimue's secret for each live opening in turn. `children[x]`
    /// holds the openings under which Merlin may answer `x`.
    fn assign(
        &mut self,
        live: &[u32],
        rem: usize,
        entry: usize,
        assignment: &mut Vec<usize>,
        children: &mut Vec<Vec<u32>>,
        stats: &mut Stats,
    ) -> Result<bool, SolveError> {
        stats.tick()?;
        if assignment.len() == live.len() {
            for child in children.iter().filter(|c| !c.is_empty()) {
                if !self.win(child, rem - 1, stats)? {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        let c = live[assignment.len()];
        for zi in 0..self.queries.entries[entry].secrets.len() {
            let cell = self.queries.entries[entry].secrets[zi].1.clone();
            for &x in &cell {
                children[x].push(c);
            }
            // Growing a child set can only hurt, so a known loss prunes.
            let doomed = cell.iter().any(|&x| self.known_loss(&children[x], rem - 1));
            if !doomed {
                assignment.push(zi);
                if self.assign(live, rem, entry, assignment, children, stats)? {
                    for &x in &cell {
                        children[x].pop();
                    }
                    return Ok(true);
                }
                assignment.pop();
            }
            for &x in &cell {
                children[x].pop();
            }
        }
        Ok(false)
    }

    fn materialize(&self, x0: &Term, live: &[u32], rem: usize, answers: &mut Vec<Term>, pair: &mut TablePair) {
        if live.is_empty() {
            return;
        }
        let plan = self.memo.get(&(live.to_vec(), rem)).cloned().flatten().expect("winning states keep their plan");
        let mut history = alloc::vec![x0.clone()];
        history.extend(answers.iter().cloned());
        match plan {
            Plan::Terminate(v) => {
                pair.arthur.insert(history, ArthurMove::Terminate(v));
            }
            Plan::Query { entry, assignment } => {
                let q = &self.queries.entries[entry];
                pair.arthur.insert(history, ArthurMove::Query(q.public.clone()));
                let mut children = alloc::vec![Vec::new(); q.answers.len()];
                for (&c, &zi) in live.iter().zip(&assignment) {
                    let key = NimueKey {
                        first: x0.clone(),
                        first_secret: self.secrets[c as usize].0.clone(),
                        answers: answers.clone(),
                    };
                    pair.nimue.insert(key, q.secrets[zi].0.clone());
                    for &x in &q.secrets[zi].1 {
                        children[x].push(c);
                    }
                }
                for (x, child) in children.iter().enumerate() {
                    if !child.is_empty() {
                        answers.push(q.answers[x].clone());
                        self.materialize(x0, child, rem - 1, answers, pair);
                        answers.pop();
                    }
                }
            }
        }
    }
}

/// One entry of the reducibility matrix.
#[derive(Clone, Debug)]
pub enum Relation {
    Reducible { pair: TablePair, certificate: Certificate },
    NotAtDepth { certificate: Certificate },
    Budget { budget: u64 },
}

impl Relation {
    pub fn is_reducible(&self) -> bool {
        matches!(self, Relation::Reducible { .. })
    }
}

#[derive(Clone, Debug)]
pub struct PosetMatrix {
    pub names: Vec<String>,
    pub depth: usize,
    /// `cells[i][j]` answers "does item i reduce to item j".
    pub cells: Vec<Vec<Relation>>,
}

/// A failure of reflexivity or transitivity among the reducible entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderViolation {
    NotReflexive(usize),
    NotTransitive { lower: usize, middle: usize, upper: usize },
}

/// Solves every ordered pair of items at the given depth.
pub fn poset(items: &[BilayerFn], depth: usize, budget: u64) -> PosetMatrix {
    let cells = items.iter().map(|f| items.iter().map(|g| relation(f, g, depth, budget)).collect()).collect();
    PosetMatrix { names: items.iter().map(|f| String::from(f.name())).collect(), depth, cells }
}

/// Solves one cell of the matrix.
pub fn relation(f: &BilayerFn, g: &BilayerFn, depth: usize, budget: u64) -> Relation {
    match solve_lt(f, g, depth, budget) {
        Ok(Search { witness: Some(pair), certificate }) => Relation::Reducible { pair, certificate },
        Ok(Search { witness: None, certificate }) => Relation::NotAtDepth { certificate },
        Err(SolveError::Budget { budget }) => Relation::Budget { budget },
    }
}

impl PosetMatrix {
    pub fn reducible(&self, i: usize, j: usize) -> bool {
        self.cells[i][j].is_reducible()
    }

    /// Reflexivity and transitivity of the reducible entries, checked.
    pub fn violations(&self) -> Vec<OrderViolation> {
        let n = self.names.len();
        let mut out = Vec::new();
        for i in 0..n {
            if !self.reducible(i, i) {
                out.push(OrderViolation::NotReflexive(i));
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.reducible(i, j) && self.reducible(j, k) && !self.reducible(i, k) {
                        out.push(OrderViolation::NotTransitive { lower: i, middle: j, upper: k });
                    }
                }
            }
        }
        out
    }

    fn strictly_below(&self, i: usize, j: usize) -> bool {
        self.reducible(i, j) && !self.reducible(j, i)
    }

    /// Hasse diagram with arrows from the stronger item to the weaker one:
    /// `A -> B` means B reduces to A. Mutually reducible items are joined by
    /// a single two-way edge.
    pub fn to_dot(&self) -> String {
        let n = self.names.len();
        let mut out = String::from("digraph {\n");
        for name in &self.names {
            let _ = writeln!(out, "  {};", dot_id(name));
        }
        for upper in 0..n {
            for lower in 0..n {
                if !self.strictly_below(lower, upper) {
                    continue;
                }
                let covered = (0..n).any(|k| self.strictly_below(lower, k) && self.strictly_below(k, upper));
                if !covered {
                    let _ = writeln!(out, "  {} -> {};", dot_id(&self.names[upper]), dot_id(&self.names[lower]));
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.reducible(i, j) && self.reducible(j, i) {
                    let _ = writeln!(out, "  {} -> {} [dir=both];", dot_id(&self.names[i]), dot_id(&self.names[j]));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Convenience wrapper with the default budget.
pub fn solve_lt_default(f: &BilayerFn, g: &BilayerFn, depth: usize) -> Result<Search<TablePair>, SolveError> {
    solve_lt(f, g, depth, DEFAULT_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::verify_winning;
    use crate::families::{error, id_fn};

    #[test]
    fn triple_text_round_trips() {
        let triple =
            solve_one_query(&error(1, 3).unwrap(), &error(1, 2).unwrap(), DEFAULT_BUDGET).unwrap().witness.unwrap();
        assert_eq!(TableTriple::parse_text(&triple.to_text()), Ok(triple));
        assert!(TableTriple::parse_text("H * = *\nH * = 1\n").is_err());
        assert!(matches!(TableTriple::parse_text("\nQ 1 = 2"), Err(TableError::Syntax { line: 2, .. })));
    }

    #[test]
    fn one_query_error_examples() {
        let e13 = error(1, 3).unwrap();
        let e12 = error(1, 2).unwrap();
        let found = solve_one_query(&e13, &e12, DEFAULT_BUDGET).unwrap();
        let triple = found.witness.expect("error(1,3) reduces to error(1,2)");
        assert_eq!(triple.inner[&Term::Star], Term::Star);
        assert_eq!(validate_triple(&e13, &e12, &triple), Ok(3));
        for j in 0..3 {
            let l = triple.secret[&(Term::Star, Term::set([j]))].clone();
            assert_eq!(l, Term::set([if j < 2 { j } else { 0 }]));
        }
        for m in 0..2 {
            assert_eq!(triple.outer[&(Term::Star, Term::Nat(m))], Term::Nat(m));
        }
        assert_eq!(found.certificate.mode, SearchMode::Found);
        let none = solve_one_query(&e12, &e13, DEFAULT_BUDGET).unwrap();
        assert!(none.witness.is_none());
        assert_eq!(none.certificate.mode, SearchMode::Exhausted);
    }

    #[test]
    fn one_query_is_reflexive() {
        for f in [id_fn(2).unwrap(), error(1, 3).unwrap(), error(2, 3).unwrap()] {
            let t = solve_one_query(&f, &f, DEFAULT_BUDGET).unwrap().witness.unwrap();
            validate_triple(&f, &f, &t).unwrap();
        }
    }

    #[test]
    fn budget_is_reported() {
        let e13 = error(1, 3).unwrap();
        let e12 = error(1, 2).unwrap();
        assert_eq!(solve_one_query(&e13, &e12, 2).unwrap_err(), SolveError::Budget { budget: 2 });
        assert!(matches!(solve_lt(&e12, &e13, 3, 5), Err(SolveError::Budget { .. })));
    }

    #[test]
    fn lt_examples() {
        let e13 = error(1, 3).unwrap();
        let e12 = error(1, 2).unwrap();
        let found = solve_lt(&e13, &e12, 2, DEFAULT_BUDGET).unwrap();
        let pair = found.witness.unwrap();
        assert!(verify_winning(&e13, &e12, &pair.arthur, &pair.nimue, 2).is_winning());
        let none = solve_lt(&e12, &e13, 3, DEFAULT_BUDGET).unwrap();
        assert!(none.witness.is_none());
        assert_eq!(none.certificate.depth, 3);
        assert!(none.certificate.positions > 0);
        let same = solve_lt(&e12, &e12, 1, DEFAULT_BUDGET).unwrap().witness.unwrap();
        assert!(verify_winning(&e12, &e12, &same.arthur, &same.nimue, 1).is_winning());
    }

    #[test]
    fn identity_needs_no_queries() {
        let id = id_fn(2).unwrap();
        let e = error(1, 3).unwrap();
        let pair = solve_lt(&id, &e, 0, DEFAULT_BUDGET).unwrap().witness.unwrap();
        assert!(pair.nimue.is_empty());
        assert!(solve_lt(&e, &id, 2, DEFAULT_BUDGET).unwrap().witness.is_none());
    }

    #[test]
    fn chain_dot() {
        let items = [id_fn(2).unwrap(), error(1, 3).unwrap(), error(1, 2).unwrap()];
        let m = poset(&items, 2, DEFAULT_BUDGET);
        assert!(m.violations().is_empty());
        assert!(m.reducible(0, 1) && m.reducible(1, 2) && !m.reducible(2, 1));
        assert_eq!(
            m.to_dot(),
            "digraph {\n  \"id(2)\";\n  \"error(1,3)\";\n  \"error(1,2)\";\n  \"error(1,3)\" -> \"id(2)\";\n  \"error(1,2)\" -> \"error(1,3)\";\n}\n"
        );
    }
}
