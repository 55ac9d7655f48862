//! Interactive play: a person types Merlin's moves.

use std::cell::RefCell;
use std::io::{BufRead, Write};

use bilayer_core::engine::{MerlinStrategy, MerlinView};
use bilayer_core::term::render_set;
use bilayer_core::{BilayerFn, Term};

/// How many legal openings are listed before the hint is shortened.
const HINT_LIMIT: usize = 12;

/// Merlin reading moves from `input` and prompting on `output`.
///
/// An opening that parses but lies outside the source domain is passed to
/// the referee, which rules it a violation at once. An answer outside the
/// queried cell is refused and asked for again. `pass` or end of input
/// leaves Merlin without a move.
pub struct HumanMerlin<'a, R, W> {
    source: &'a BilayerFn,
    target: &'a BilayerFn,
    io: RefCell<(R, W)>,
}

impl<'a, R: BufRead, W: Write> HumanMerlin<'a, R, W> {
    pub fn new(source: &'a BilayerFn, target: &'a BilayerFn, input: R, output: W) -> Self {
        HumanMerlin { source, target, io: RefCell::new((input, output)) }
    }

    pub fn into_inner(self) -> (R, W) {
        self.io.into_inner()
    }

    fn say(&self, text: &str) {
        let mut io = self.io.borrow_mut();
        let _ = io.1.write_all(text.as_bytes());
        let _ = io.1.flush();
    }

    /// One trimmed line, or `None` at end of input or on `pass`.
    fn ask(&self, prompt: &str) -> Option<String> {
        self.say(prompt);
        let mut line = String::new();
        let read = self.io.borrow_mut().0.read_line(&mut line).ok()?;
        let line = line.trim();
        (read > 0 && line != "pass").then(|| line.to_string())
    }
}

impl<R: BufRead, W: Write> MerlinStrategy for HumanMerlin<'_, R, W> {
    fn first(&self) -> Option<(Term, Term)> {
        let openings: Vec<String> = self.source.iter().map(|(p, s, _)| format!("{p} | {s}")).collect();
        let shown = openings.iter().take(HINT_LIMIT).cloned().collect::<Vec<_>>().join(", ");
        let more =
            if openings.len() > HINT_LIMIT { format!(", ... ({} in all)", openings.len()) } else { String::new() };
        self.say(&format!("You are Merlin. Open with an instance of {}: {shown}{more}\n", self.source.name()));
        loop {
            let line = self.ask("open> ")?;
            let Some((public, secret)) = line.split_once('|') else {
                self.say("write the opening as `PUBLIC | SECRET`\n");
                continue;
            };
            match (public.trim().parse::<Term>(), secret.trim().parse::<Term>()) {
                (Ok(p), Ok(s)) => return Some((p, s)),
                (Err(e), _) | (_, Err(e)) => self.say(&format!("cannot read that term: {e}\n")),
            }
        }
    }

    fn respond(&self, view: &MerlinView<'_>) -> Option<Term> {
        let cell = self.target.cell(view.query, view.secret)?;
        self.say(&format!(
            "round {}: Arthur asks {} about {}; Nimue chose secret {}. Legal answers: {}\n",
            view.rounds.len() + 1,
            self.target.name(),
            view.query,
            view.secret,
            render_set(cell)
        ));
        loop {
            let line = self.ask("answer> ")?;
            match line.parse::<Term>() {
                Ok(x) if cell.contains(&x) => return Some(x),
                Ok(x) => self.say(&format!(
                    "{x} is illegal: Merlin must answer with a value in {}({} | {}) = {}\n",
                    self.target.name(),
                    view.query,
                    view.secret,
                    render_set(cell)
                )),
                Err(e) => self.say(&format!("cannot read that term: {e}\n")),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bilayer_core::engine::{play, CopyStrategy, Outcome, Player};
    use bilayer_core::families::error;

    fn session(input: &str) -> (Outcome, String) {
        let f = error(1, 3).unwrap();
        let merlin = HumanMerlin::new(&f, &f, input.as_bytes(), Vec::new());
        let t = play(&f, &f, &CopyStrategy, &CopyStrategy, &merlin, 1);
        let (_, out) = merlin.into_inner();
        (t.outcome, String::from_utf8(out).unwrap())
    }

    #[test]
    fn out_of_domain_opening_is_an_immediate_violation() {
        let (outcome, _) = session("* | {7}\n");
        assert_eq!(outcome, Outcome::RuleViolation { player: Player::Merlin, round: 0 });
    }

    #[test]
    fn illegal_answers_are_refused() {
        let (outcome, out) = session("nonsense\n* | {0}\n0\n5\n2\n");
        assert_eq!(outcome, Outcome::ArthurNimueWin(Term::Nat(2)));
        assert!(out.contains("PUBLIC | SECRET"));
        assert_eq!(out.matches("is illegal").count(), 2, "{out}");
        assert!(out.contains("Legal answers: {1,2}"));
    }

    #[test]
    fn end_of_input_leaves_merlin_stuck() {
        let (outcome, _) = session("* | {1}\n");
        assert_eq!(outcome, Outcome::RuleViolation { player: Player::Merlin, round: 1 });
    }
}
