//! Engine invariants over pseudo-random players.

mod common;

use bilayer_core::engine::{
    play, replay, verify_winning, ArthurMove, CopyStrategy, Event, MerlinStrategy, ScriptedMerlin, Transcript,
    DEFAULT_BUDGET,
};
use bilayer_core::solver::solve_lt;
use bilayer_core::{BilayerFn, Term};
use common::{small_families, HashArthur, HashMerlin, HashNimue};
use proptest::prelude::*;

fn pair_of(i: usize, j: usize) -> (BilayerFn, BilayerFn) {
    let items = small_families();
    (items[i % items.len()].clone(), items[j % items.len()].clone())
}

/// Arthur's moves, each with the answers he had seen when making it.
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn arthur_ignores_secrets(i in 0usize..4, j in 0usize..4, seed: u64, other: u64, depth in 1usize..4) {
        let (f, g) = pair_of(i, j);
        let arthur = HashArthur::new(seed, &f, &g);
        let nimue = HashNimue { seed, g: g.clone() };
        let merlin = HashMerlin::new(seed, &f, &g);
        let first = play(&f, &g, &arthur, &nimue, &merlin, depth);
        // Same public opening and the same answers, but another secret and
        // another Nimue.
        let (public, _) = merlin.first().unwrap();
        let secrets: Vec<&Term> = f.secrets(&public).collect();
        let secret = secrets[common::pick(other, &"secret", secrets.len())].clone();
        let twin = ScriptedMerlin { opening: Some((public, secret)), answers: first.answers() };
        let second = play(&f, &g, &arthur, &HashNimue { seed: other, g: g.clone() }, &twin, depth);
        let (a, b) = (arthur_view(&first), arthur_view(&second));
        for (x, y) in a.iter().zip(&b) {
            if x.0 == y.0 {
                prop_assert_eq!(&x.1, &y.1);
            }
        }
    }

    #[test]
    fn transcripts_replay(i in 0usize..4, j in 0usize..4, seed: u64, depth in 1usize..4) {
        let (f, g) = pair_of(i, j);
        let arthur = HashArthur::new(seed, &f, &g);
        let nimue = HashNimue { seed, g: g.clone() };
        let merlin = HashMerlin::new(seed, &f, &g);
        let t = play(&f, &g, &arthur, &nimue, &merlin, depth);
        prop_assert_eq!(&play(&f, &g, &arthur, &nimue, &merlin, depth), &t);
        let parsed = Transcript::parse_text(&t.to_text()).unwrap();
        prop_assert_eq!(&parsed, &t);
        let again = replay(&f, &g, &parsed, depth);
        prop_assert_eq!(&again.outcome, &t.outcome);
        prop_assert_eq!(again.to_text(), t.to_text());
    }

    #[test]
    fn winning_survives_more_depth(i in 0usize..4, j in 0usize..4, seed: u64, depth in 1usize..3, extra in 1usize..3) {
        let (f, g) = pair_of(i, j);
        if let Some(pair) = solve_lt(&f, &g, depth, DEFAULT_BUDGET).unwrap().witness {
            prop_assert!(verify_winning(&f, &g, &pair.arthur, &pair.nimue, depth + extra).is_winning());
        }
        let arthur = HashArthur::new(seed, &f, &g);
        let nimue = HashNimue { seed, g: g.clone() };
        if verify_winning(&f, &g, &arthur, &nimue, depth).is_winning() {
            prop_assert!(verify_winning(&f, &g, &arthur, &nimue, depth + extra).is_winning());
        }
    }

    #[test]
    fn verified_pairs_beat_sampled_merlins(i in 0usize..4, j in 0usize..4, seed: u64) {
        let (f, g) = pair_of(i, j);
        if let Some(pair) = solve_lt(&f, &g, 2, DEFAULT_BUDGET).unwrap().witness {
            let merlin = HashMerlin::new(seed, &f, &g);
            let t = play(&f, &g, &pair.arthur, &pair.nimue, &merlin, 2);
            prop_assert!(t.outcome.is_arthur_nimue_win(), "{}", t.to_text());
        }
    }

    #[test]
    fn copy_wins_every_self_game(i in 0usize..4, seed: u64) {
        let (f, _) = pair_of(i, 0);
        let merlin = HashMerlin::new(seed, &f, &f);
        prop_assert!(play(&f, &f, &CopyStrategy, &CopyStrategy, &merlin, 1).outcome.is_arthur_nimue_win());
    }
}
