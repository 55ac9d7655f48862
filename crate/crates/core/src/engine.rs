//! The referee for the reduction game `G(f, g)`.
//!
//! Merlin opens with an instance `(x0 | c0)` of `f`. Each round Arthur either
//! terminates with a value or queries a public input `u` of `g`; Nimue then
//! supplies a secret `z` with `(u | z)` in the domain of `g`, and Merlin
//! answers with some `x` in `g(u | z)`. Arthur sees only `x0, x1, ...`.
//! Arthur and Nimue win if Arthur terminates with a value in `f(x0 | c0)` or
//! Merlin breaks a rule first. A Merlin facing an empty cell is stuck, which
//! counts as a Merlin violation.
//!
//! Depth bounds the number of queries; terminating is free.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::ControlFlow;

use thiserror::Error;

use crate::bilayer::BilayerFn;
use crate::term::{ParseTermError, Reader, Term};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArthurMove {
    Query(Term),
    Terminate(Term),
}

impl ArthurMove {
    /// `inl u` for a query, `inr v` for termination.
    pub fn to_term(&self) -> Term {
        match self {
            ArthurMove::Query(u) => Term::inl(u.clone()),
            ArthurMove::Terminate(v) => Term::inr(v.clone()),
        }
    }

    pub fn from_term(t: &Term) -> Option<Self> {
        match t {
            Term::Inl(u) => Some(ArthurMove::Query((**u).clone())),
            Term::Inr(v) => Some(ArthurMove::Terminate((**v).clone())),
            _ => None,
        }
    }
}

impl fmt::Display for ArthurMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArthurMove::Query(u) => write!(f, "query {u}"),
            ArthurMove::Terminate(v) => write!(f, "terminate {v}"),
        }
    }
}

/// One completed query round: Arthur's query, Nimue's secret, Merlin's answer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Round {
    pub query: Term,
    pub secret: Term,
    pub answer: Term,
}

/// Arthur decides from Merlin's visible moves only.
///
/// `first` is `x0` and `answers` are `x1, x2, ...`. `None` means Arthur has
/// nothing to say, which loses.
pub trait ArthurStrategy: Send + Sync {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove>;

    /// A summary of the history such that equal summaries (for the same
    /// `first`) lead to identical moves on identical future answers. The
    /// whole history is always a valid choice.
    fn state_key(&self, first: &Term, answers: &[Term]) -> Term {
        let _ = first;
        Term::Tuple(answers.to_vec())
    }
}

/// Everything Nimue may read when Arthur has just queried `query`.
#[derive(Clone, Copy, Debug)]
pub struct NimueView<'a> {
    pub first: &'a Term,
    pub first_secret: &'a Term,
    pub rounds: &'a [Round],
    pub query: &'a Term,
}

impl NimueView<'_> {
    pub fn answers(&self) -> Vec<Term> {
        self.rounds.iter().map(|r| r.answer.clone()).collect()
    }
}

pub trait NimueStrategy: Send + Sync {
    fn next(&self, view: &NimueView<'_>) -> Option<Term>;

    /// Same contract as [`ArthurStrategy::state_key`], for the opening
    /// `(first | first_secret)`.
    fn state_key(&self, first: &Term, first_secret: &Term, answers: &[Term]) -> Term {
        let _ = (first, first_secret);
        Term::Tuple(answers.to_vec())
    }
}

/// Everything Merlin may read when asked to answer `(query | secret)`.
#[derive(Clone, Copy, Debug)]
pub struct MerlinView<'a> {
    pub first: &'a Term,
    pub first_secret: &'a Term,
    pub rounds: &'a [Round],
    pub query: &'a Term,
    pub secret: &'a Term,
}

pub trait MerlinStrategy {
    fn first(&self) -> Option<(Term, Term)>;
    fn respond(&self, view: &MerlinView<'_>) -> Option<Term>;
}

pub type SharedArthur = Arc<dyn ArthurStrategy>;
pub type SharedNimue = Arc<dyn NimueStrategy>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    Arthur,
    Nimue,
    Merlin,
}

impl Player {
    pub fn as_str(self) -> &'static str {
        match self {
            Player::Arthur => "arthur",
            Player::Nimue => "nimue",
            Player::Merlin => "merlin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MerlinReason {
    /// Arthur terminated with a value outside `f(x0 | c0)`.
    WrongValue(Term),
    /// Arthur had no move.
    ArthurStalled,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    ArthurNimueWin(Term),
    MerlinWin(MerlinReason),
    RuleViolation { player: Player, round: usize },
    DepthExhausted,
}

impl Outcome {
    /// A Merlin violation (including being stuck) is a win for Arthur and
    /// Nimue.
    pub fn is_arthur_nimue_win(&self) -> bool {
        matches!(self, Outcome::ArthurNimueWin(_) | Outcome::RuleViolation { player: Player::Merlin, .. })
    }

    pub fn termination_value(&self) -> Option<&Term> {
        match self {
            Outcome::ArthurNimueWin(v) => Some(v),
            Outcome::MerlinWin(MerlinReason::WrongValue(v)) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::ArthurNimueWin(v) => write!(f, "win {v}"),
            Outcome::MerlinWin(MerlinReason::WrongValue(v)) => write!(f, "merlin-win wrong-value {v}"),
            Outcome::MerlinWin(MerlinReason::ArthurStalled) => f.write_str("merlin-win arthur-stalled"),
            Outcome::RuleViolation { player, round } => write!(f, "violation {} {round}", player.as_str()),
            Outcome::DepthExhausted => f.write_str("depth-exhausted"),
        }
    }
}

/// One line of a transcript. `round` follows the game's numbering: Merlin's
/// opening is round 0, Arthur and Nimue move in round `r` and Merlin answers
/// in round `r + 1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    MerlinOpen { public: Term, secret: Term },
    MerlinOpenPass,
    Arthur { round: usize, mv: ArthurMove },
    ArthurPass { round: usize },
    Nimue { round: usize, secret: Term },
    NimuePass { round: usize },
    Merlin { round: usize, answer: Term },
    MerlinPass { round: usize },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::MerlinOpen { public, secret } => write!(f, "round 0 merlin {public} | {secret}"),
            Event::MerlinOpenPass => f.write_str("round 0 merlin pass"),
            Event::Arthur { round, mv } => write!(f, "round {round} arthur {mv}"),
            Event::ArthurPass { round } => write!(f, "round {round} arthur pass"),
            Event::Nimue { round, secret } => write!(f, "round {round} nimue {secret}"),
            Event::NimuePass { round } => write!(f, "round {round} nimue pass"),
            Event::Merlin { round, answer } => write!(f, "round {round} merlin {answer}"),
            Event::MerlinPass { round } => write!(f, "round {round} merlin pass"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transcript {
    pub events: Vec<Event>,
    pub outcome: Outcome,
}

impl Transcript {
    /// The opening `(x0 | c0)`, if Merlin made one.
    pub fn opening(&self) -> Option<(&Term, &Term)> {
        match self.events.first() {
            Some(Event::MerlinOpen { public, secret }) => Some((public, secret)),
            _ => None,
        }
    }

    /// Merlin's answers after the opening, in order.
    pub fn answers(&self) -> Vec<Term> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Merlin { answer, .. } => Some(answer.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out.push_str("outcome ");
        out.push_str(&self.outcome.to_string());
        out.push('\n');
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, TranscriptError> {
        let mut events = Vec::new();
        let mut outcome = None;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if outcome.is_some() {
                return Err(TranscriptError::at(idx, "text after the outcome line"));
            }
            if let Some(rest) = line.strip_prefix("outcome ") {
                outcome = Some(parse_outcome(rest).map_err(|m| TranscriptError::at(idx, m))?);
            } else {
                events.push(parse_event(line).map_err(|m| TranscriptError::at(idx, m))?);
            }
        }
        let outcome =
            outcome.ok_or(TranscriptError { line: text.lines().count(), message: "missing outcome line".into() })?;
        Ok(Transcript { events, outcome })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transcript line {line}: {message}")]
pub struct TranscriptError {
    pub line: usize,
    pub message: String,
}

impl TranscriptError {
    fn at(idx: usize, message: impl Into<String>) -> Self {
        TranscriptError { line: idx + 1, message: message.into() }
    }
}

fn term_all(text: &str) -> Result<Term, String> {
    text.parse::<Term>().map_err(|e: ParseTermError| e.to_string())
}

fn parse_event(line: &str) -> Result<Event, String> {
    let rest = line.strip_prefix("round ").ok_or("expected `round`")?;
    let (num, rest) = rest.split_once(' ').ok_or("expected a round number")?;
    let round: usize = num.parse().map_err(|_| "bad round number")?;
    let (player, mv) = rest.split_once(' ').ok_or("expected a player and a move")?;
    match player {
        "merlin" if round == 0 => {
            if mv == "pass" {
                return Ok(Event::MerlinOpenPass);
            }
            let mut r = Reader::new(mv);
            let public = r.term().map_err(|e| e.to_string())?;
            r.expect(" | ").map_err(|e| e.to_string())?;
            let secret = r.term().map_err(|e| e.to_string())?;
            if !r.at_end() {
                return Err("trailing input".into());
            }
            Ok(Event::MerlinOpen { public, secret })
        }
        "merlin" if mv == "pass" => Ok(Event::MerlinPass { round }),
        "merlin" => Ok(Event::Merlin { round, answer: term_all(mv)? }),
        "arthur" if mv == "pass" => Ok(Event::ArthurPass { round }),
        "arthur" => {
            if let Some(u) = mv.strip_prefix("query ") {
                Ok(Event::Arthur { round, mv: ArthurMove::Query(term_all(u)?) })
            } else if let Some(v) = mv.strip_prefix("terminate ") {
                Ok(Event::Arthur { round, mv: ArthurMove::Terminate(term_all(v)?) })
            } else {
                Err("expected `query`, `terminate` or `pass`".into())
            }
        }
        "nimue" if mv == "pass" => Ok(Event::NimuePass { round }),
        "nimue" => Ok(Event::Nimue { round, secret: term_all(mv)? }),
        _ => Err("unknown player".into()),
    }
}

fn parse_outcome(text: &str) -> Result<Outcome, String> {
    if text == "depth-exhausted" {
        return Ok(Outcome::DepthExhausted);
    }
    if text == "merlin-win arthur-stalled" {
        return Ok(Outcome::MerlinWin(MerlinReason::ArthurStalled));
    }
    if let Some(v) = text.strip_prefix("merlin-win wrong-value ") {
        return Ok(Outcome::MerlinWin(MerlinReason::WrongValue(term_all(v)?)));
    }
    if let Some(v) = text.strip_prefix("win ") {
        return Ok(Outcome::ArthurNimueWin(term_all(v)?));
    }
    if let Some(rest) = text.strip_prefix("violation ") {
        let (player, round) = rest.split_once(' ').ok_or("expected player and round")?;
        let player = match player {
            "arthur" => Player::Arthur,
            "nimue" => Player::Nimue,
            "merlin" => Player::Merlin,
            _ => return Err("unknown player".into()),
        };
        let round = round.parse().map_err(|_| "bad round number")?;
        return Ok(Outcome::RuleViolation { player, round });
    }
    Err("unknown outcome".into())
}

/// What Merlin's opening must satisfy and what counts as a correct answer.
#[derive(Clone, Copy, Debug)]
pub enum Arena<'a> {
    /// The full game `G(f, g)`: openings range over `dom(f)` and Arthur must
    /// terminate inside `f(x0 | c0)`.
    Source(&'a BilayerFn),
    /// The restricted game `G(g)`: the only opening is `(* | *)` and any
    /// termination value wins.
    Restricted,
}

impl Arena<'_> {
    pub fn is_opening(&self, public: &Term, secret: &Term) -> bool {
        match self {
            Arena::Source(f) => f.contains(public, secret),
            Arena::Restricted => *public == Term::Star && *secret == Term::Star,
        }
    }

    pub fn openings(&self) -> Vec<(Term, Term)> {
        match self {
            Arena::Source(f) => f.iter().map(|(p, s, _)| (p.clone(), s.clone())).collect(),
            Arena::Restricted => alloc::vec![(Term::Star, Term::Star)],
        }
    }

    pub fn accepts(&self, public: &Term, secret: &Term, value: &Term) -> bool {
        match self {
            Arena::Source(f) => f.cell(public, secret).is_some_and(|c| c.contains(value)),
            Arena::Restricted => true,
        }
    }
}

/// Plays one game to the end.
pub fn play(
    f: &BilayerFn,
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    merlin: &dyn MerlinStrategy,
    depth: usize,
) -> Transcript {
    play_in(Arena::Source(f), g, arthur, nimue, merlin, depth)
}

pub fn play_in(
    arena: Arena<'_>,
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    merlin: &dyn MerlinStrategy,
    depth: usize,
) -> Transcript {
    let mut events = Vec::new();
    let done = |events: Vec<Event>, outcome| Transcript { events, outcome };
    let Some((first, first_secret)) = merlin.first() else {
        events.push(Event::MerlinOpenPass);
        return done(events, Outcome::RuleViolation { player: Player::Merlin, round: 0 });
    };
    events.push(Event::MerlinOpen { public: first.clone(), secret: first_secret.clone() });
    if !arena.is_opening(&first, &first_secret) {
        return done(events, Outcome::RuleViolation { player: Player::Merlin, round: 0 });
    }
    let mut rounds: Vec<Round> = Vec::new();
    let mut answers: Vec<Term> = Vec::new();
    loop {
        let round = rounds.len();
        let Some(mv) = arthur.next(&first, &answers) else {
            events.push(Event::ArthurPass { round });
            return done(events, Outcome::MerlinWin(MerlinReason::ArthurStalled));
        };
        events.push(Event::Arthur { round, mv: mv.clone() });
        let query = match mv {
            ArthurMove::Terminate(v) => {
                let outcome = if arena.accepts(&first, &first_secret, &v) {
                    Outcome::ArthurNimueWin(v)
                } else {
                    Outcome::MerlinWin(MerlinReason::WrongValue(v))
                };
                return done(events, outcome);
            }
            ArthurMove::Query(u) => u,
        };
        if round >= depth {
            return done(events, Outcome::DepthExhausted);
        }
        if !g.has_public(&query) {
            return done(events, Outcome::RuleViolation { player: Player::Arthur, round });
        }
        let view = NimueView { first: &first, first_secret: &first_secret, rounds: &rounds, query: &query };
        let Some(secret) = nimue.next(&view) else {
            events.push(Event::NimuePass { round });
            return done(events, Outcome::RuleViolation { player: Player::Nimue, round });
        };
        events.push(Event::Nimue { round, secret: secret.clone() });
        let Some(cell) = g.cell(&query, &secret) else {
            return done(events, Outcome::RuleViolation { player: Player::Nimue, round });
        };
        let view =
            MerlinView { first: &first, first_secret: &first_secret, rounds: &rounds, query: &query, secret: &secret };
        let answer = merlin.respond(&view);
        match answer {
            Some(x) => {
                events.push(Event::Merlin { round: round + 1, answer: x.clone() });
                if !cell.contains(&x) {
                    return done(events, Outcome::RuleViolation { player: Player::Merlin, round: round + 1 });
                }
                answers.push(x.clone());
                rounds.push(Round { query, secret, answer: x });
            }
            None => {
                events.push(Event::MerlinPass { round: round + 1 });
                return done(events, Outcome::RuleViolation { player: Player::Merlin, round: round + 1 });
            }
        }
    }
}

/// Merlin replaying a fixed opening and answer list.
#[derive(Clone, Debug)]
pub struct ScriptedMerlin {
    pub opening: Option<(Term, Term)>,
    pub answers: Vec<Term>,
}

impl ScriptedMerlin {
    pub fn from_transcript(t: &Transcript) -> Self {
        ScriptedMerlin { opening: t.opening().map(|(p, s)| (p.clone(), s.clone())), answers: t.answers() }
    }
}

impl MerlinStrategy for ScriptedMerlin {
    fn first(&self) -> Option<(Term, Term)> {
        self.opening.clone()
    }

    fn respond(&self, view: &MerlinView<'_>) -> Option<Term> {
        self.answers.get(view.rounds.len()).cloned()
    }
}

/// Arthur and Nimue replaying the moves recorded in a transcript.
#[derive(Clone, Debug)]
pub struct ScriptedPair {
    arthur: Vec<Option<ArthurMove>>,
    nimue: Vec<Option<Term>>,
}

impl ScriptedPair {
    pub fn from_transcript(t: &Transcript) -> Self {
        let mut arthur = Vec::new();
        let mut nimue = Vec::new();
        for e in &t.events {
            match e {
                Event::Arthur { mv, .. } => arthur.push(Some(mv.clone())),
                Event::ArthurPass { .. } => arthur.push(None),
                Event::Nimue { secret, .. } => nimue.push(Some(secret.clone())),
                Event::NimuePass { .. } => nimue.push(None),
                _ => {}
            }
        }
        ScriptedPair { arthur, nimue }
    }
}

impl ArthurStrategy for ScriptedPair {
    fn next(&self, _first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        self.arthur.get(answers.len()).cloned().flatten()
    }
}

impl NimueStrategy for ScriptedPair {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        self.nimue.get(view.rounds.len()).cloned().flatten()
    }
}

/// Re-runs the referee on the moves recorded in `t`.
pub fn replay(f: &BilayerFn, g: &BilayerFn, t: &Transcript, depth: usize) -> Transcript {
    let pair = ScriptedPair::from_transcript(t);
    let merlin = ScriptedMerlin::from_transcript(t);
    play(f, g, &pair, &pair, &merlin, depth)
}

/// Arthur queries `x0` and terminates with the answer; Nimue passes `c0`
/// along. Wins `G(f, f)` at depth 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct CopyStrategy;

impl ArthurStrategy for CopyStrategy {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        match answers {
            [] => Some(ArthurMove::Query(first.clone())),
            [x, ..] => Some(ArthurMove::Terminate(x.clone())),
        }
    }
}

impl NimueStrategy for CopyStrategy {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        Some(view.first_secret.clone())
    }
}

/// A finished play as seen by an exploration visitor.
#[derive(Clone, Debug)]
pub struct PlayPath<'a> {
    pub first: &'a Term,
    pub first_secret: &'a Term,
    pub rounds: &'a [Round],
    pub outcome: &'a Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exploration {
    /// Every branch was visited; `plays` leaves and `nodes` Arthur decisions.
    Complete { plays: u64, nodes: u64 },
    /// The visitor asked to stop.
    Stopped { plays: u64, nodes: u64 },
    /// More than `budget` Arthur decisions would be needed.
    BudgetExceeded { nodes: u64 },
}

/// Walks every play consistent with `(arthur, nimue)`, branching on every
/// opening and every legal Merlin answer in canonical order.
pub fn explore<V>(
    arena: Arena<'_>,
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    depth: usize,
    budget: u64,
    visit: V,
) -> Exploration
where
    V: FnMut(&PlayPath<'_>) -> ControlFlow<()>,
{
    let openings = arena.openings();
    explore_openings(arena, &openings, g, arthur, nimue, depth, budget, visit)
}

/// [`explore`] restricted to the given openings.
#[allow(clippy::too_many_arguments)]
pub fn explore_openings<V>(
    arena: Arena<'_>,
    openings: &[(Term, Term)],
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    depth: usize,
    budget: u64,
    mut visit: V,
) -> Exploration
where
    V: FnMut(&PlayPath<'_>) -> ControlFlow<()>,
{
    walk_openings(arena, openings, g, arthur, nimue, depth, budget, false, &mut visit)
}

#[allow(clippy::too_many_arguments)]
fn walk_openings<V>(
    arena: Arena<'_>,
    openings: &[(Term, Term)],
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    depth: usize,
    budget: u64,
    merge: bool,
    visit: &mut V,
) -> Exploration
where
    V: FnMut(&PlayPath<'_>) -> ControlFlow<()>,
{
    let mut walker =
        Walker { arena, g, arthur, nimue, depth, budget, plays: 0, nodes: 0, visit, merge, won: BTreeSet::new() };
    for (first, first_secret) in openings {
        walker.won.clear();
        let mut rounds = Vec::new();
        let mut answers = Vec::new();
        match walker.walk(first, first_secret, &mut rounds, &mut answers) {
            Walk::Continue => {}
            Walk::Stop => return Exploration::Stopped { plays: walker.plays, nodes: walker.nodes },
            Walk::Budget => return Exploration::BudgetExceeded { nodes: walker.nodes },
        }
    }
    Exploration::Complete { plays: walker.plays, nodes: walker.nodes }
}

enum Walk {
    Continue,
    Stop,
    Budget,
}

struct Walker<'a, 'v, V> {
    arena: Arena<'a>,
    g: &'a BilayerFn,
    arthur: &'a dyn ArthurStrategy,
    nimue: &'a dyn NimueStrategy,
    depth: usize,
    budget: u64,
    plays: u64,
    nodes: u64,
    visit: &'v mut V,
    /// Positions whose whole subtree is known to be won, when merging.
    merge: bool,
    won: BTreeSet<(usize, Term, Term)>,
}

impl<V> Walker<'_, '_, V>
where
    V: FnMut(&PlayPath<'_>) -> ControlFlow<()>,
{
    fn leaf(&mut self, first: &Term, first_secret: &Term, rounds: &[Round], outcome: Outcome) -> Walk {
        self.plays += 1;
        let path = PlayPath { first, first_secret, rounds, outcome: &outcome };
        match (self.visit)(&path) {
            ControlFlow::Continue(()) => Walk::Continue,
            ControlFlow::Break(()) => Walk::Stop,
        }
    }

    fn walk(&mut self, first: &Term, first_secret: &Term, rounds: &mut Vec<Round>, answers: &mut Vec<Term>) -> Walk {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Walk::Budget;
        }
        let round = rounds.len();
        let query = match self.arthur.next(first, answers) {
            None => return self.leaf(first, first_secret, rounds, Outcome::MerlinWin(MerlinReason::ArthurStalled)),
            Some(ArthurMove::Terminate(v)) => {
                let outcome = if self.arena.accepts(first, first_secret, &v) {
                    Outcome::ArthurNimueWin(v)
                } else {
                    Outcome::MerlinWin(MerlinReason::WrongValue(v))
                };
                return self.leaf(first, first_secret, rounds, outcome);
            }
            Some(ArthurMove::Query(u)) => u,
        };
        if round >= self.depth {
            return self.leaf(first, first_secret, rounds, Outcome::DepthExhausted);
        }
        let position = self.merge.then(|| {
            (round, self.arthur.state_key(first, answers), self.nimue.state_key(first, first_secret, answers))
        });
        if position.as_ref().is_some_and(|p| self.won.contains(p)) {
            return Walk::Continue;
        }
        if !self.g.has_public(&query) {
            return self.leaf(first, first_secret, rounds, Outcome::RuleViolation { player: Player::Arthur, round });
        }
        let view = NimueView { first, first_secret, rounds, query: &query };
        let cell = self.nimue.next(&view).and_then(|z| self.g.cell(&query, &z).map(|c| (z, c)));
        let Some((secret, cell)) = cell else {
            return self.leaf(first, first_secret, rounds, Outcome::RuleViolation { player: Player::Nimue, round });
        };
        if cell.is_empty() {
            let stuck = Outcome::RuleViolation { player: Player::Merlin, round: round + 1 };
            return self.leaf(first, first_secret, rounds, stuck);
        }
        for x in cell {
            rounds.push(Round { query: query.clone(), secret: secret.clone(), answer: x.clone() });
            answers.push(x.clone());
            let step = self.walk(first, first_secret, rounds, answers);
            rounds.pop();
            answers.pop();
            if !matches!(step, Walk::Continue) {
                return step;
            }
        }
        if let Some(p) = position {
            self.won.insert(p);
        }
        Walk::Continue
    }
}

/// Default cap on Arthur decisions examined by one verification.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every Merlin behavior loses. `plays` counts the plays walked; a play
    /// entering a position already shown to be won is not walked again.
    Winning {
        plays: u64,
    },
    /// A play Arthur and Nimue do not win, in canonical branch order.
    CounterPlay(Transcript),
    Inconclusive {
        nodes: u64,
    },
}

impl Verdict {
    pub fn is_winning(&self) -> bool {
        matches!(self, Verdict::Winning { .. })
    }
}

/// Checks `(arthur, nimue)` against every Merlin behavior in `G(f, g)`.
pub fn verify_winning(
    f: &BilayerFn,
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    depth: usize,
) -> Verdict {
    verify_winning_in(Arena::Source(f), g, arthur, nimue, depth, DEFAULT_BUDGET)
}

pub fn verify_winning_in(
    arena: Arena<'_>,
    g: &BilayerFn,
    arthur: &dyn ArthurStrategy,
    nimue: &dyn NimueStrategy,
    depth: usize,
    budget: u64,
) -> Verdict {
    let mut failure: Option<ScriptedMerlin> = None;
    let openings = arena.openings();
    let result = walk_openings(arena, &openings, g, arthur, nimue, depth, budget, true, &mut |path: &PlayPath<'_>| {
        if path.outcome.is_arthur_nimue_win() {
            ControlFlow::Continue(())
        } else {
            failure = Some(ScriptedMerlin {
                opening: Some((path.first.clone(), path.first_secret.clone())),
                answers: path.rounds.iter().map(|r| r.answer.clone()).collect(),
            });
            ControlFlow::Break(())
        }
    });
    match result {
        Exploration::Complete { plays, .. } => Verdict::Winning { plays },
        Exploration::BudgetExceeded { nodes } => Verdict::Inconclusive { nodes },
        Exploration::Stopped { .. } => {
            let merlin = failure.expect("a stopped exploration records its failing play");
            Verdict::CounterPlay(play_in(arena, g, arthur, nimue, &merlin, depth))
        }
    }
}

/// A claimed winning strategy pair for `G(source, target)`.
#[derive(Clone)]
pub struct Witness {
    pub source: Arc<BilayerFn>,
    pub target: Arc<BilayerFn>,
    pub arthur: SharedArthur,
    pub nimue: SharedNimue,
    pub depth: usize,
}

impl fmt::Debug for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Witness")
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .field("depth", &self.depth)
            .finish_non_exhaustive()
    }
}

/// A witness that has passed [`verify_winning`]. Only [`Witness::verify`]
/// creates one.
#[derive(Clone, Debug)]
pub struct Verified {
    witness: Witness,
    plays: u64,
}

impl Witness {
    pub fn verify(self) -> Result<Verified, Verdict> {
        self.verify_with_budget(DEFAULT_BUDGET)
    }

    pub fn verify_with_budget(self, budget: u64) -> Result<Verified, Verdict> {
        let verdict = verify_winning_in(
            Arena::Source(&self.source),
            &self.target,
            &*self.arthur,
            &*self.nimue,
            self.depth,
            budget,
        );
        match verdict {
            Verdict::Winning { plays } => Ok(Verified { witness: self, plays }),
            other => Err(other),
        }
    }
}

impl Verified {
    pub fn witness(&self) -> &Witness {
        &self.witness
    }

    pub fn plays(&self) -> u64 {
        self.plays
    }

    pub fn into_witness(self) -> Witness {
        self.witness
    }
}

impl core::ops::Deref for Verified {
    type Target = Witness;

    fn deref(&self) -> &Witness {
        &self.witness
    }
}
