//! Operations on bilayer functions and on strategies.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use spin::Mutex;
use thiserror::Error;

use crate::bilayer::{precondition, BilayerError, BilayerFn, CellOracle, MultiFn, ValueSet};
use crate::engine::{
    explore_openings, Arena, ArthurMove, ArthurStrategy, Exploration, NimueStrategy, NimueView, Round, SharedArthur,
    SharedNimue, Verified, Witness, DEFAULT_BUDGET,
};
use crate::solver::{OneQuery, TableTriple};
use crate::tables::{ArthurTable, NimueKey, NimueTable, TableError};
use crate::term::Term;

/// Disjoint union: `inl n` asks `f`, `inr n` asks `g`. Secrets carry the
/// same tag as their public input.
pub fn join(f: &BilayerFn, g: &BilayerFn) -> Result<BilayerFn, BilayerError> {
    let left = f.iter().map(|(n, c, v)| (Term::inl(n.clone()), Term::inl(c.clone()), v.clone()));
    let right = g.iter().map(|(n, c, v)| (Term::inr(n.clone()), Term::inr(c.clone()), v.clone()));
    let alphabet = f.alphabet().union(g.alphabet()).cloned().collect();
    BilayerFn::new(format!("join({},{})", f.name(), g.name()), left.chain(right), alphabet)
}

/// Product of instances whose values are the tagged union of both cells.
pub fn meet(f: &BilayerFn, g: &BilayerFn) -> Result<BilayerFn, BilayerError> {
    let mut cells = Vec::new();
    for (m, c, a) in f.iter() {
        for (n, d, b) in g.iter() {
            let values = a.iter().map(|x| Term::inl(x.clone())).chain(b.iter().map(|y| Term::inr(y.clone()))).collect();
            cells.push((Term::tuple([m.clone(), n.clone()]), Term::tuple([c.clone(), d.clone()]), values));
        }
    }
    let alphabet = f
        .alphabet()
        .iter()
        .map(|x| Term::inl(x.clone()))
        .chain(g.alphabet().iter().map(|y| Term::inr(y.clone())))
        .collect();
    BilayerFn::new(format!("meet({},{})", f.name(), g.name()), cells, alphabet)
}

/// `(f | g)(n | c) = f(n) x g(* | c)` for a basic `g`.
pub fn pair(name: impl Into<String>, f: &MultiFn, g: &BilayerFn) -> Result<BilayerFn, BilayerError> {
    if !g.is_basic() {
        return Err(precondition(format!(
            "pair needs a basic second argument, {} has public inputs besides *",
            g.name()
        )));
    }
    let mut cells = Vec::new();
    for (n, outputs) in f {
        for c in g.secrets(&Term::Star) {
            let answers = g.cell(&Term::Star, c).expect("secret listed by the row");
            let values =
                outputs.iter().flat_map(|a| answers.iter().map(move |b| Term::tuple([a.clone(), b.clone()]))).collect();
            cells.push((n.clone(), c.clone(), values));
        }
    }
    BilayerFn::from_cells(name, cells)
}

/// A one-query reduction played as a depth-1 strategy: query `H(x0)` with
/// secret `L(x0, c0)`, then terminate with `K(x0, x1)`.
#[derive(Clone, Debug)]
pub struct LiftedOneQuery<T>(pub T);

impl<T: OneQuery + Send + Sync> ArthurStrategy for LiftedOneQuery<T> {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        match answers {
            [] => self.0.inner(first).map(ArthurMove::Query),
            [m, ..] => self.0.outer(first, m).map(ArthurMove::Terminate),
        }
    }
}

impl<T: OneQuery + Send + Sync> NimueStrategy for LiftedOneQuery<T> {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        self.0.secret(view.first, view.first_secret)
    }
}

/// Wraps a one-query reduction of `source` to `target` as a depth-1 witness.
pub fn lift_triple<T>(source: Arc<BilayerFn>, target: Arc<BilayerFn>, triple: T) -> Witness
where
    T: OneQuery + Send + Sync + 'static,
{
    let strategy = Arc::new(LiftedOneQuery(triple));
    Witness { source, target, arthur: strategy.clone(), nimue: strategy, depth: 1 }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("the first witness targets {outer_target} but the second starts from {inner_source}")]
    Mismatch { outer_target: String, inner_source: String },
}

/// Chains a verified witness for `G(f, g)` with one for `G(g, h)` into a
/// witness for `G(f, h)`.
///
/// Every outer query `(u | z)` to `g` becomes an inner play of `G(g, h)` in
/// which Merlin opened with `(u | z)`; the inner termination value is handed
/// back to the outer strategies as Merlin's answer. The result uses at most
/// `d0 * d1` queries. Verifying it is the caller's choice.
pub fn compose(outer: &Verified, inner: &Verified) -> Result<Witness, ComposeError> {
    if !Arc::ptr_eq(&outer.target, &inner.source) && *outer.target != *inner.source {
        return Err(ComposeError::Mismatch {
            outer_target: String::from(outer.target.name()),
            inner_source: String::from(inner.source.name()),
        });
    }
    let strategy = Arc::new(Composite {
        outer_arthur: outer.arthur.clone(),
        outer_nimue: outer.nimue.clone(),
        inner_arthur: inner.arthur.clone(),
        inner_nimue: inner.nimue.clone(),
        outer_depth: outer.depth,
        arthur_memo: Memo::new(),
        nimue_memo: Memo::new(),
    });
    Ok(Witness {
        source: outer.source.clone(),
        target: inner.target.clone(),
        arthur: strategy.clone(),
        nimue: strategy,
        depth: outer.depth * inner.depth,
    })
}

/// Prefix-keyed memo shared by the strategy calls of one composite.
///
/// Explorations ask for every prefix of a history before the history
/// itself, so each state is derived from its parent in one step. The memo
/// is dropped wholesale once it grows past `MEMO_LIMIT` entries.
struct Memo<K, V> {
    map: Mutex<BTreeMap<K, V>>,
}

const MEMO_LIMIT: usize = 1 << 15;

impl<K: Ord, V: Clone> Memo<K, V> {
    fn new() -> Self {
        Memo { map: Mutex::new(BTreeMap::new()) }
    }

    fn get(&self, key: &K) -> Option<V> {
        self.map.lock().get(key).cloned()
    }

    fn put(&self, key: K, value: V) {
        let mut map = self.map.lock();
        if map.len() >= MEMO_LIMIT {
            map.clear();
        }
        map.insert(key, value);
    }
}

/// Where the composite play stands after some answers.
#[derive(Clone)]
enum Stage {
    /// The composite move is final: a termination or a stall.
    Done(Option<ArthurMove>),
    /// The inner play for the outer query `query` started at answer index
    /// `start` and is now asking `next`.
    Inner { outer: Vec<Round>, query: Term, secret: Option<Term>, start: usize, next: Term },
}

struct Composite {
    outer_arthur: SharedArthur,
    outer_nimue: SharedNimue,
    inner_arthur: SharedArthur,
    inner_nimue: SharedNimue,
    outer_depth: usize,
    arthur_memo: Memo<(Term, Vec<Term>), Stage>,
    nimue_memo: Memo<(Term, Term, Vec<Term>), Stage>,
}

impl Composite {
    /// Starts outer rounds until some inner play asks a query. `secret` is
    /// `None` when only Arthur's view is being tracked.
    fn open(&self, first: &Term, first_secret: Option<&Term>, mut outer: Vec<Round>, at: usize) -> Stage {
        for _ in outer.len()..=self.outer_depth {
            let answers: Vec<Term> = outer.iter().map(|r| r.answer.clone()).collect();
            let query = match self.outer_arthur.next(first, &answers) {
                Some(ArthurMove::Query(u)) => u,
                other => return Stage::Done(other),
            };
            let secret = match first_secret {
                Some(c) => {
                    let view = NimueView { first, first_secret: c, rounds: &outer, query: &query };
                    match self.outer_nimue.next(&view) {
                        Some(z) => Some(z),
                        None => return Stage::Done(None),
                    }
                }
                None => None,
            };
            match self.inner_arthur.next(&query, &[]) {
                Some(ArthurMove::Query(w)) => return Stage::Inner { outer, query, secret, start: at, next: w },
                Some(ArthurMove::Terminate(v)) => {
                    let secret = secret.unwrap_or(Term::Star);
                    outer.push(Round { query, secret, answer: v });
                }
                None => return Stage::Done(None),
            }
        }
        Stage::Done(None)
    }

    /// The stage after `answers`, given the stage after all but the last.
    fn step(&self, first: &Term, first_secret: Option<&Term>, parent: Stage, answers: &[Term]) -> Stage {
        let Stage::Inner { mut outer, query, secret, start, .. } = parent else {
            return Stage::Done(None);
        };
        match self.inner_arthur.next(&query, &answers[start..]) {
            Some(ArthurMove::Query(w)) => Stage::Inner { outer, query, secret, start, next: w },
            Some(ArthurMove::Terminate(v)) => {
                outer.push(Round { query, secret: secret.unwrap_or(Term::Star), answer: v });
                self.open(first, first_secret, outer, answers.len())
            }
            None => Stage::Done(None),
        }
    }

    fn arthur_stage(&self, first: &Term, answers: &[Term]) -> Stage {
        let key = (first.clone(), answers.to_vec());
        if let Some(stage) = self.arthur_memo.get(&key) {
            return stage;
        }
        let stage = match answers.split_last() {
            None => self.open(first, None, Vec::new(), 0),
            Some((_, prefix)) => {
                let parent = self.arthur_stage(first, prefix);
                self.step(first, None, parent, answers)
            }
        };
        self.arthur_memo.put(key, stage.clone());
        stage
    }

    fn nimue_stage(&self, first: &Term, first_secret: &Term, answers: &[Term]) -> Stage {
        let key = (first.clone(), first_secret.clone(), answers.to_vec());
        if let Some(stage) = self.nimue_memo.get(&key) {
            return stage;
        }
        let stage = match answers.split_last() {
            None => self.open(first, Some(first_secret), Vec::new(), 0),
            Some((_, prefix)) => {
                let parent = self.nimue_stage(first, first_secret, prefix);
                self.step(first, Some(first_secret), parent, answers)
            }
        };
        self.nimue_memo.put(key, stage.clone());
        stage
    }
}

impl Composite {
    /// Outer progress, the pending outer query and the inner Arthur's state.
    fn arthur_key(&self, first: &Term, stage: &Stage, answers: &[Term]) -> Term {
        let Stage::Inner { outer, query, start, .. } = stage else {
            return Term::Star;
        };
        let outer_answers: Vec<Term> = outer.iter().map(|r| r.answer.clone()).collect();
        Term::Tuple(alloc::vec![
            Term::Nat(outer.len() as u64),
            self.outer_arthur.state_key(first, &outer_answers),
            query.clone(),
            self.inner_arthur.state_key(query, &answers[*start..]),
        ])
    }
}

impl ArthurStrategy for Composite {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        match self.arthur_stage(first, answers) {
            Stage::Done(mv) => mv,
            Stage::Inner { next, .. } => Some(ArthurMove::Query(next)),
        }
    }

    fn state_key(&self, first: &Term, answers: &[Term]) -> Term {
        self.arthur_key(first, &self.arthur_stage(first, answers), answers)
    }
}

impl NimueStrategy for Composite {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let answers = view.answers();
        let Stage::Inner { query, secret, start, .. } = self.nimue_stage(view.first, view.first_secret, &answers)
        else {
            return None;
        };
        let secret = secret?;
        let inner =
            NimueView { first: &query, first_secret: &secret, rounds: &view.rounds[start..], query: view.query };
        self.inner_nimue.next(&inner)
    }

    fn state_key(&self, first: &Term, first_secret: &Term, answers: &[Term]) -> Term {
        let stage = self.nimue_stage(first, first_secret, answers);
        let Stage::Inner { outer, query, secret: Some(secret), start, .. } = &stage else {
            return Term::Star;
        };
        let outer_answers: Vec<Term> = outer.iter().map(|r| r.answer.clone()).collect();
        // Nimue's stage also runs both Arthurs, so their states are included.
        Term::Tuple(alloc::vec![
            self.arthur_key(first, &stage, answers),
            self.outer_nimue.state_key(first, first_secret, &outer_answers),
            secret.clone(),
            self.inner_nimue.state_key(query, secret, &answers[*start..]),
        ])
    }
}

/// How a dispatching source names its branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    /// `inl`/`inr` tags on both the public input and the secret, as in
    /// [`join`].
    Tagged,
    /// Public inputs `(key,n)`; secrets are passed through unchanged.
    Keyed,
}

/// Routes each opening of a sum of functions to the witness for its branch.
struct Dispatch {
    branching: Branching,
    branches: BTreeMap<Term, (SharedArthur, SharedNimue)>,
}

impl Dispatch {
    fn split<'t>(&self, public: &'t Term) -> Option<(Term, &'t Term)> {
        match self.branching {
            Branching::Tagged => public.as_tagged().map(|(tag, n)| (Term::Nat(u64::from(tag)), n)),
            Branching::Keyed => match public.as_tuple()? {
                [key, n] => Some((key.clone(), n)),
                _ => None,
            },
        }
    }

    fn unwrap_secret<'t>(&self, key: &Term, secret: &'t Term) -> Option<&'t Term> {
        match self.branching {
            Branching::Tagged => match secret.as_tagged()? {
                (tag, c) if Term::Nat(u64::from(tag)) == *key => Some(c),
                _ => None,
            },
            Branching::Keyed => Some(secret),
        }
    }
}

impl ArthurStrategy for Dispatch {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        let (key, n) = self.split(first)?;
        self.branches.get(&key)?.0.next(n, answers)
    }

    fn state_key(&self, first: &Term, answers: &[Term]) -> Term {
        match self.split(first).and_then(|(key, n)| Some((self.branches.get(&key)?, n))) {
            Some((branch, n)) => branch.0.state_key(n, answers),
            None => Term::Star,
        }
    }
}

impl NimueStrategy for Dispatch {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let (key, n) = self.split(view.first)?;
        let c = self.unwrap_secret(&key, view.first_secret)?;
        let inner = NimueView { first: n, first_secret: c, rounds: view.rounds, query: view.query };
        self.branches.get(&key)?.1.next(&inner)
    }

    fn state_key(&self, first: &Term, first_secret: &Term, answers: &[Term]) -> Term {
        let branch = self
            .split(first)
            .and_then(|(key, n)| Some((self.branches.get(&key)?, n, self.unwrap_secret(&key, first_secret)?)));
        match branch {
            Some((branch, n, c)) => {
                Term::Tuple(alloc::vec![branch.0.state_key(n, answers), branch.1.state_key(n, c, answers)])
            }
            None => Term::Star,
        }
    }
}

/// Combines witnesses `A <= T` and `B <= T` into `join(A, B) <= T`.
pub fn join_dispatch(left: &Verified, right: &Verified) -> Result<Witness, ComposeError> {
    if *left.target != *right.target {
        return Err(ComposeError::Mismatch {
            outer_target: String::from(left.target.name()),
            inner_source: String::from(right.target.name()),
        });
    }
    let source = join(&left.source, &right.source).expect("joining two valid functions");
    let branches = [
        (Term::Nat(0), (left.arthur.clone(), left.nimue.clone())),
        (Term::Nat(1), (right.arthur.clone(), right.nimue.clone())),
    ]
    .into_iter()
    .collect();
    let strategy = Arc::new(Dispatch { branching: Branching::Tagged, branches });
    Ok(Witness {
        source: Arc::new(source),
        target: left.target.clone(),
        arthur: strategy.clone(),
        nimue: strategy,
        depth: left.depth.max(right.depth),
    })
}

/// The keyed sum of a family: public inputs `(key,n)` ask the member `key`.
pub fn keyed_sum(name: impl Into<String>, members: &[(Term, &BilayerFn)]) -> Result<BilayerFn, BilayerError> {
    let mut cells = Vec::new();
    let mut alphabet = ValueSet::new();
    for (key, f) in members {
        alphabet.extend(f.alphabet().iter().cloned());
        cells.extend(f.iter().map(|(n, c, v)| (Term::tuple([key.clone(), n.clone()]), c.clone(), v.clone())));
    }
    BilayerFn::new(name, cells, alphabet)
}

/// Combines witnesses `F_key <= T` into `keyed_sum(F) <= T`.
pub fn family_dispatch(source: Arc<BilayerFn>, members: &[(Term, &Verified)]) -> Result<Witness, ComposeError> {
    let target = members.first().map(|(_, w)| w.target.clone()).expect("a family has at least one member");
    for (_, w) in members {
        if *w.target != *target {
            return Err(ComposeError::Mismatch {
                outer_target: String::from(target.name()),
                inner_source: String::from(w.target.name()),
            });
        }
    }
    let depth = members.iter().map(|(_, w)| w.depth).max().unwrap_or(0);
    let branches = members.iter().map(|(k, w)| (k.clone(), (w.arthur.clone(), w.nimue.clone()))).collect();
    let strategy = Arc::new(Dispatch { branching: Branching::Keyed, branches });
    Ok(Witness { source, target, arthur: strategy.clone(), nimue: strategy, depth })
}

/// The game closure of `h` at a fixed depth: public inputs are Arthur tables
/// for the restricted game `G(h)`, secrets are Nimue tables, and the value
/// of a winning pair is the set of values Arthur can terminate with.
///
/// Cells are evaluated on demand; [`ClosureFn::materialize`] enumerates the
/// pairs whose termination values lie in `values`.
#[derive(Clone, Debug)]
pub struct ClosureFn {
    h: Arc<BilayerFn>,
    depth: usize,
    values: ValueSet,
    budget: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("enumerating the closure exceeded {0} strategy pairs")]
    Budget(u64),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Bilayer(#[from] BilayerError),
}

impl ClosureFn {
    /// Termination values default to the alphabet of `h`.
    pub fn new(h: Arc<BilayerFn>, depth: usize) -> Self {
        let values = h.alphabet().clone();
        ClosureFn { h, depth, values, budget: DEFAULT_BUDGET }
    }

    pub fn with_values(mut self, values: ValueSet) -> Self {
        self.values = values;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn base(&self) -> &Arc<BilayerFn> {
        &self.h
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &ValueSet {
        &self.values
    }

    /// The value of `(tau | eta)`, or `None` when the codes are malformed or
    /// the pair does not win the restricted game within the depth.
    pub fn evaluate(&self, tau: &Term, eta: &Term) -> Option<ValueSet> {
        let arthur = ArthurTable::from_term(tau).ok()?;
        let nimue = NimueTable::from_term(eta).ok()?;
        self.evaluate_tables(&arthur, &nimue)
    }

    pub fn evaluate_tables(&self, arthur: &ArthurTable, nimue: &NimueTable) -> Option<ValueSet> {
        let mut values = ValueSet::new();
        let mut lost = false;
        let openings = [(Term::Star, Term::Star)];
        let result =
            explore_openings(Arena::Restricted, &openings, &self.h, arthur, nimue, self.depth, self.budget, |path| {
                if !path.outcome.is_arthur_nimue_win() {
                    lost = true;
                    return ControlFlow::Break(());
                }
                if let Some(v) = path.outcome.termination_value() {
                    values.insert(v.clone());
                }
                ControlFlow::Continue(())
            });
        match result {
            Exploration::Complete { .. } if !lost => Some(values),
            _ => None,
        }
    }

    /// Lists every winning pair whose Arthur table terminates only with
    /// values from `values`, built along reachable histories only.
    pub fn materialize(&self) -> Result<BilayerFn, ClosureError> {
        let mut arthurs = Vec::new();
        let mut partial = ArthurTable::new();
        let mut pending = alloc::vec![Vec::new()];
        let mut count = 0u64;
        self.arthur_tables(&mut partial, &mut pending, &mut arthurs, &mut count)?;
        let mut cells = Vec::new();
        for tau in &arthurs {
            let mut nimues = Vec::new();
            let mut partial = NimueTable::new();
            let mut pending = alloc::vec![Vec::new()];
            self.nimue_tables(tau, &mut partial, &mut pending, &mut nimues, &mut count)?;
            for eta in nimues {
                if let Some(values) = self.evaluate_tables(tau, &eta) {
                    cells.push((tau.to_term(), eta.to_term(), values));
                }
            }
        }
        Ok(BilayerFn::new(format!("closure({},{})", self.h.name(), self.depth), cells, self.values.clone())?)
    }

    fn bump(&self, count: &mut u64) -> Result<(), ClosureError> {
        *count += 1;
        if *count > self.budget {
            Err(ClosureError::Budget(self.budget))
        } else {
            Ok(())
        }
    }

    /// `pending` holds answer histories still needing a move.
    fn arthur_tables(
        &self,
        partial: &mut ArthurTable,
        pending: &mut Vec<Vec<Term>>,
        out: &mut Vec<ArthurTable>,
        count: &mut u64,
    ) -> Result<(), ClosureError> {
        self.bump(count)?;
        let Some(answers) = pending.pop() else {
            out.push(partial.clone());
            return Ok(());
        };
        let mut history = alloc::vec![Term::Star];
        history.extend(answers.iter().cloned());
        for v in &self.values {
            partial.insert(history.clone(), ArthurMove::Terminate(v.clone()));
            self.arthur_tables(partial, pending, out, count)?;
        }
        if answers.len() < self.depth {
            for u in self.h.dom_pub() {
                partial.insert(history.clone(), ArthurMove::Query(u.clone()));
                let added: Vec<Vec<Term>> = self
                    .h
                    .answers(u)
                    .into_iter()
                    .rev()
                    .map(|x| {
                        let mut next = answers.clone();
                        next.push(x);
                        next
                    })
                    .collect();
                let before = pending.len();
                pending.extend(added);
                self.arthur_tables(partial, pending, out, count)?;
                pending.truncate(before);
            }
        }
        partial.remove(&history);
        pending.push(answers);
        Ok(())
    }

    fn nimue_tables(
        &self,
        tau: &ArthurTable,
        partial: &mut NimueTable,
        pending: &mut Vec<Vec<Term>>,
        out: &mut Vec<NimueTable>,
        count: &mut u64,
    ) -> Result<(), ClosureError> {
        self.bump(count)?;
        let Some(answers) = pending.pop() else {
            out.push(partial.clone());
            return Ok(());
        };
        match tau.next(&Term::Star, &answers) {
            Some(ArthurMove::Query(u)) if self.h.has_public(&u) => {
                let key = NimueKey { first: Term::Star, first_secret: Term::Star, answers: answers.clone() };
                for z in self.h.secrets(&u) {
                    partial.insert(key.clone(), z.clone());
                    let cell = self.h.cell(&u, z).expect("listed secret");
                    let before = pending.len();
                    pending.extend(cell.iter().rev().map(|x| {
                        let mut next = answers.clone();
                        next.push(x.clone());
                        next
                    }));
                    self.nimue_tables(tau, partial, pending, out, count)?;
                    pending.truncate(before);
                }
                partial.remove(&key);
            }
            _ => self.nimue_tables(tau, partial, pending, out, count)?,
        }
        pending.push(answers);
        Ok(())
    }
}

impl CellOracle for ClosureFn {
    fn cell_values(&self, public: &Term, secret: &Term) -> Option<ValueSet> {
        self.evaluate(public, secret)
    }
}

/// Turns a verified witness for `G(g, h)` at depth `d` into a one-query
/// reduction of `g` to the closure of `h` at depth `d`.
///
/// `H(n)` is Arthur's strategy after the opening `n`, `L(n, c)` is Nimue's
/// strategy after the opening `(n | c)`, and `K(n, u) = u`. Both tables are
/// recorded along every play of the witness.
pub fn oq_from_lt(witness: &Verified) -> (TableTriple, ClosureFn) {
    let closure = ClosureFn::new(witness.target.clone(), witness.depth).with_values(witness.source.alphabet().clone());
    let mut triple = TableTriple::default();
    for n in witness.source.dom_pub() {
        let openings: Vec<(Term, Term)> = witness.source.secrets(n).map(|c| (n.clone(), c.clone())).collect();
        let mut arthur = ArthurTable::new();
        let mut nimues: BTreeMap<Term, NimueTable> = BTreeMap::new();
        let mut values = ValueSet::new();
        explore_openings(
            Arena::Source(&witness.source),
            &openings,
            &witness.target,
            &*witness.arthur,
            &*witness.nimue,
            witness.depth,
            u64::MAX,
            |path| {
                let answers: Vec<Term> = path.rounds.iter().map(|r| r.answer.clone()).collect();
                for i in 0..=answers.len() {
                    let mut history = alloc::vec![Term::Star];
                    history.extend(answers[..i].iter().cloned());
                    if let Some(mv) = witness.arthur.next(n, &answers[..i]) {
                        arthur.insert(history, mv);
                    }
                }
                let table = nimues.entry(path.first_secret.clone()).or_default();
                for (i, r) in path.rounds.iter().enumerate() {
                    let key = NimueKey { first: Term::Star, first_secret: Term::Star, answers: answers[..i].to_vec() };
                    table.insert(key, r.secret.clone());
                }
                if let Some(v) = path.outcome.termination_value() {
                    values.insert(v.clone());
                }
                ControlFlow::Continue(())
            },
        );
        triple.inner.insert(n.clone(), arthur.to_term());
        for v in values {
            triple.outer.insert((n.clone(), v.clone()), v);
        }
        for (c, table) in nimues {
            triple.secret.insert((n.clone(), c), table.to_term());
        }
        for c in witness.source.secrets(n) {
            triple.secret.entry((n.clone(), c.clone())).or_insert_with(|| NimueTable::new().to_term());
        }
    }
    (triple, closure)
}

/// Reads a one-query reduction of `g` to a closure of `h` back as a strategy
/// pair for `G(g, h)`: Arthur follows the table `H(n)` and reports `K(n, u)`
/// where the table would terminate with `u`; Nimue follows `L(n, c)`.
pub fn lt_from_oq(source: Arc<BilayerFn>, closure: &ClosureFn, triple: &TableTriple) -> Result<Witness, TableError> {
    let mut arthurs = BTreeMap::new();
    for (n, code) in &triple.inner {
        arthurs.insert(n.clone(), ArthurTable::from_term(code)?);
    }
    let mut nimues = BTreeMap::new();
    for (key, code) in &triple.secret {
        nimues.insert(key.clone(), NimueTable::from_term(code)?);
    }
    let strategy = Arc::new(Interpreted { arthurs, outer: triple.outer.clone(), nimues });
    Ok(Witness {
        source,
        target: closure.base().clone(),
        arthur: strategy.clone(),
        nimue: strategy,
        depth: closure.depth(),
    })
}

struct Interpreted {
    arthurs: BTreeMap<Term, ArthurTable>,
    outer: BTreeMap<(Term, Term), Term>,
    nimues: BTreeMap<(Term, Term), NimueTable>,
}

impl ArthurStrategy for Interpreted {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        match self.arthurs.get(first)?.next(&Term::Star, answers)? {
            ArthurMove::Query(u) => Some(ArthurMove::Query(u)),
            ArthurMove::Terminate(u) => self.outer.get(&(first.clone(), u)).cloned().map(ArthurMove::Terminate),
        }
    }
}

impl NimueStrategy for Interpreted {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let table = self.nimues.get(&(view.first.clone(), view.first_secret.clone()))?;
        let inner = NimueView { first: &Term::Star, first_secret: &Term::Star, rounds: view.rounds, query: view.query };
        table.next(&inner)
    }
}

/// The closure of a closure at depth 1 reduces in one query to the closure.
///
/// An instance `(tau | eta)` of the outer closure either terminates at once,
/// or queries an inner strategy `sigma`, receives one of its values `x` and
/// terminates with `w(x)`. `H` rewrites `sigma` so that each termination `x`
/// becomes `w(x)`; `L` hands over the inner Nimue table that `eta` supplied
/// with the query; `K` is the identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct FlattenClosure;

fn opening_row() -> Vec<Term> {
    alloc::vec![Term::Star]
}

impl OneQuery for FlattenClosure {
    fn inner(&self, public: &Term) -> Option<Term> {
        let outer = ArthurTable::from_term(public).ok()?;
        match outer.get(&opening_row())? {
            ArthurMove::Terminate(v) => {
                let mut t = ArthurTable::new();
                t.insert(opening_row(), ArthurMove::Terminate(v.clone()));
                Some(t.to_term())
            }
            ArthurMove::Query(sigma) => {
                let sigma = ArthurTable::from_term(sigma).ok()?;
                let mut flat = ArthurTable::new();
                for (history, mv) in sigma.rows() {
                    let mv = match mv {
                        ArthurMove::Terminate(x) => {
                            match outer.get(&[Term::Star, x.clone()]) {
                                Some(ArthurMove::Terminate(w)) => ArthurMove::Terminate(w.clone()),
                                // Not reachable when (tau | eta) wins.
                                _ => mv.clone(),
                            }
                        }
                        query => query.clone(),
                    };
                    flat.insert(history.clone(), mv);
                }
                Some(flat.to_term())
            }
        }
    }

    fn outer(&self, _public: &Term, answer: &Term) -> Option<Term> {
        Some(answer.clone())
    }

    fn secret(&self, public: &Term, secret: &Term) -> Option<Term> {
        let outer = ArthurTable::from_term(public).ok()?;
        match outer.get(&opening_row())? {
            ArthurMove::Terminate(_) => Some(NimueTable::new().to_term()),
            ArthurMove::Query(_) => {
                let eta = NimueTable::from_term(secret).ok()?;
                let key = NimueKey { first: Term::Star, first_secret: Term::Star, answers: Vec::new() };
                let z = eta.rows().find(|(k, _)| **k == key).map(|(_, z)| z.clone());
                z
            }
        }
    }
}

/// The one-query reduction of a function to itself.
pub fn identity_triple(f: &BilayerFn) -> TableTriple {
    let mut triple = TableTriple::default();
    for n in f.dom_pub() {
        triple.inner.insert(n.clone(), n.clone());
        for v in f.answers(n) {
            triple.outer.insert((n.clone(), v.clone()), v);
        }
        for c in f.secrets(n) {
            triple.secret.insert((n.clone(), c.clone()), c.clone());
        }
    }
    triple
}
