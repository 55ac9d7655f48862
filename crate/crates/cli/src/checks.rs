//! Randomized checks of the referee: Arthur never sees secrets, transcripts
//! replay, and winning survives extra depth.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bilayer_core::engine::{
    play, replay, verify_winning_in, Arena, ArthurMove, ArthurStrategy, Event, MerlinStrategy, MerlinView,
    NimueStrategy, NimueView, ScriptedMerlin, Transcript, DEFAULT_BUDGET,
};
use bilayer_core::families::{error, id_fn};
use bilayer_core::solver::solve_lt;
use bilayer_core::{BilayerFn, Term};

use crate::report::CheckJson;

/// The functions `check` uses when none are named.
pub fn default_families() -> Vec<BilayerFn> {
    vec![id_fn(2).unwrap(), error(1, 2).unwrap(), error(1, 3).unwrap(), error(2, 3).unwrap()]
}

fn pick<T: Hash>(seed: u64, salt: &T, n: usize) -> usize {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    salt.hash(&mut h);
    (h.finish() % n as u64) as usize
}

/// Arthur choosing by hashing exactly what he may see.
struct NoisyArthur {
    seed: u64,
    queries: Vec<Term>,
    values: Vec<Term>,
}

impl NoisyArthur {
    fn new(seed: u64, f: &BilayerFn, g: &BilayerFn) -> Self {
        NoisyArthur { seed, queries: g.dom_pub().cloned().collect(), values: f.alphabet().iter().cloned().collect() }
    }
}

impl ArthurStrategy for NoisyArthur {
    fn next(&self, first: &Term, answers: &[Term]) -> Option<ArthurMove> {
        let i = pick(self.seed, &(first, answers), self.queries.len() + self.values.len());
        Some(match i.checked_sub(self.queries.len()) {
            None => ArthurMove::Query(self.queries[i].clone()),
            Some(j) => ArthurMove::Terminate(self.values[j].clone()),
        })
    }
}

struct NoisyNimue<'a> {
    seed: u64,
    g: &'a BilayerFn,
}

impl NimueStrategy for NoisyNimue<'_> {
    fn next(&self, view: &NimueView<'_>) -> Option<Term> {
        let secrets: Vec<&Term> = self.g.secrets(view.query).collect();
        (!secrets.is_empty()).then(|| {
            let salt = (view.first, view.first_secret, view.rounds, view.query);
            secrets[pick(self.seed, &salt, secrets.len())].clone()
        })
    }
}

struct NoisyMerlin<'a> {
    seed: u64,
    opening: (Term, Term),
    g: &'a BilayerFn,
}

impl MerlinStrategy for NoisyMerlin<'_> {
    fn first(&self) -> Option<(Term, Term)> {
        Some(self.opening.clone())
    }

    fn respond(&self, view: &MerlinView<'_>) -> Option<Term> {
        let cell: Vec<&Term> = self.g.cell(view.query, view.secret)?.iter().collect();
        (!cell.is_empty()).then(|| cell[pick(self.seed, &(view.rounds, view.query), cell.len())].clone())
    }
}

/// Arthur's moves, each paired with the answers seen before it.
fn arthur_view(t: &Transcript) -> Vec<(Vec<Term>, ArthurMove)> {
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for e in &t.events {
        match e {
            Event::Merlin { answer, .. } => seen.push(answer.clone()),
            Event::Arthur { mv, .. } => out.push((seen.clone(), mv.clone())),
            _ => {}
        }
    }
    out
}

struct Tally {
    name: &'static str,
    cases: u64,
    failures: u64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, cases: 0, failures: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            self.first_failure.get_or_insert_with(describe);
        }
    }

    fn done(self) -> CheckJson {
        CheckJson {
            name: self.name.into(),
            cases: self.cases,
            failures: self.failures,
            first_failure: self.first_failure,
        }
    }
}

struct Case<'a> {
    f: &'a BilayerFn,
    g: &'a BilayerFn,
    seed: u64,
    other: u64,
    depth: usize,
    extra: usize,
}

impl<'a> Case<'a> {
    fn draw(rng: &mut ChaCha8Rng, families: &'a [BilayerFn]) -> Self {
        Case {
            f: &families[rng.gen_range(0..families.len())],
            g: &families[rng.gen_range(0..families.len())],
            seed: rng.gen(),
            other: rng.gen(),
            depth: rng.gen_range(1..=3),
            extra: rng.gen_range(1..=2),
        }
    }

    fn label(&self) -> String {
        format!("{} vs {}, seed {}, depth {}", self.f.name(), self.g.name(), self.seed, self.depth)
    }

    fn merlin(&self) -> NoisyMerlin<'a> {
        let openings: Vec<(Term, Term)> = self.f.iter().map(|(p, s, _)| (p.clone(), s.clone())).collect();
        NoisyMerlin { seed: self.seed, opening: openings[pick(self.seed, &"open", openings.len())].clone(), g: self.g }
    }

    fn game(&self) -> Transcript {
        let arthur = NoisyArthur::new(self.seed, self.f, self.g);
        play(self.f, self.g, &arthur, &NoisyNimue { seed: self.seed, g: self.g }, &self.merlin(), self.depth)
    }

    /// Same public moves under another opening secret and another Nimue:
    /// Arthur must move identically wherever he has seen the same answers.
    fn hiding_holds(&self) -> bool {
        let first = self.game();
        let (public, _) = self.merlin().opening;
        let secrets: Vec<&Term> = self.f.secrets(&public).collect();
        let secret = secrets[pick(self.other, &"secret", secrets.len())].clone();
        let twin = ScriptedMerlin { opening: Some((public, secret)), answers: first.answers() };
        let arthur = NoisyArthur::new(self.seed, self.f, self.g);
        let second = play(self.f, self.g, &arthur, &NoisyNimue { seed: self.other, g: self.g }, &twin, self.depth);
        arthur_view(&first).iter().zip(&arthur_view(&second)).all(|(x, y)| x.0 != y.0 || x.1 == y.1)
    }

    fn replay_holds(&self) -> bool {
        let t = self.game();
        let Ok(parsed) = Transcript::parse_text(&t.to_text()) else {
            return false;
        };
        parsed == t && self.game() == t && replay(self.f, self.g, &parsed, self.depth) == t
    }

    fn monotone_holds(&self) -> bool {
        let wins = |a: &dyn ArthurStrategy, n: &dyn NimueStrategy, d: usize| {
            verify_winning_in(Arena::Source(self.f), self.g, a, n, d, DEFAULT_BUDGET).is_winning()
        };
        let arthur = NoisyArthur::new(self.seed, self.f, self.g);
        let nimue = NoisyNimue { seed: self.seed, g: self.g };
        let noisy = !wins(&arthur, &nimue, self.depth) || wins(&arthur, &nimue, self.depth + self.extra);
        let depth = self.depth.min(2);
        let solved = match solve_lt(self.f, self.g, depth, DEFAULT_BUDGET) {
            Ok(s) => s.witness.is_none_or(|p| wins(&p.arthur, &p.nimue, depth + self.extra)),
            Err(_) => true,
        };
        noisy && solved
    }
}

/// Runs `cases` random cases of each check over pairs from `families`.
pub fn engine_checks(families: &[BilayerFn], seed: u64, cases: u64) -> Vec<CheckJson> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hiding = Tally::new("information-hiding");
    let mut replays = Tally::new("replay");
    let mut monotone = Tally::new("depth-monotonicity");
    for _ in 0..cases {
        let case = Case::draw(&mut rng, families);
        hiding.record(case.hiding_holds(), || case.label());
        replays.record(case.replay_holds(), || case.label());
        monotone.record(case.monotone_holds(), || case.label());
    }
    vec![hiding.done(), replays.done(), monotone.done()]
}
