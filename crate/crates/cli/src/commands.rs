//! The subcommands, as functions from a workspace and arguments to a report.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use sha2::{Digest, Sha256};

use bilayer_core::engine::{
    play, replay, verify_winning_in, Arena, ScriptedMerlin, Transcript, Verdict, DEFAULT_BUDGET,
};
use bilayer_core::solver::{poset, solve_lt, solve_one_query, Relation, SolveError};
use bilayer_core::tables::strategy_file_text;
use bilayer_core::BilayerFn;

use crate::checks::{default_families, engine_checks};
use crate::play::HumanMerlin;
use crate::report::{CertificateJson, PosetJson, Report, TranscriptJson, VerdictKind, WitnessText};
use crate::workspace::{Diagnostic, StrategyDef, Workspace};

/// Where transcripts go when the workspace names no output directory.
pub const DEFAULT_OUTPUT: &str = "bilayer-out";

/// A workspace plus the settings every command shares.
#[derive(Debug, Default)]
pub struct Context {
    pub ws: Workspace,
    pub budget: u64,
    pub output: PathBuf,
}

impl Context {
    /// Flags override the workspace's `budget` and `output` lines.
    pub fn new(ws: Workspace, budget: Option<u64>, output: Option<PathBuf>) -> Self {
        let budget = budget.or(ws.budget).unwrap_or(DEFAULT_BUDGET);
        let output = output.or_else(|| ws.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
        Context { ws, budget, output }
    }

    fn pair(&self, source: &str, target: &str) -> Result<(Arc<BilayerFn>, Arc<BilayerFn>), Diagnostic> {
        Ok((self.ws.resolve_function(source)?, self.ws.resolve_function(target)?))
    }

    /// Writes `t` under `output/transcripts/<sha256 prefix>.txt`.
    pub fn save_transcript(&self, t: &Transcript) -> Result<PathBuf, Diagnostic> {
        let text = t.to_text();
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        let dir = self.output.join("transcripts");
        let path = dir.join(format!("{}.txt", &digest[..16]));
        std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> Diagnostic {
    Diagnostic { pos: None, message: format!("{}: {e}", path.display()) }
}

fn plain(message: impl Into<String>) -> Diagnostic {
    Diagnostic { pos: None, message: message.into() }
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn header(r: &mut Report, f: &BilayerFn, g: &BilayerFn, depth: Option<usize>, budget: u64) {
    r.source = Some(f.name().into());
    r.target = Some(g.name().into());
    r.depth = depth;
    r.budget = Some(budget);
}

fn transcript_json(t: &Transcript, path: Option<&Path>) -> TranscriptJson {
    TranscriptJson { path: path.map(|p| p.display().to_string()), outcome: t.outcome.to_string(), text: t.to_text() }
}

/// Searches for a reduction of `source` to `target` with at most `depth`
/// queries.
pub fn cmd_solve(cx: &Context, source: &str, target: &str, depth: usize) -> Result<Report, Diagnostic> {
    let (f, g) = cx.pair(source, target)?;
    let start = Instant::now();
    let mut r = match solve_lt(&f, &g, depth, cx.budget) {
        Ok(search) => {
            let mut r =
                Report::new("solve", if search.witness.is_some() { VerdictKind::Found } else { VerdictKind::None });
            r.certificate = Some((&search.certificate).into());
            r.witness =
                search.witness.map(|p| WitnessText { format: "tables", text: strategy_file_text(&p.arthur, &p.nimue) });
            r
        }
        Err(SolveError::Budget { .. }) => Report::new("solve", VerdictKind::Inconclusive),
    };
    header(&mut r, &f, &g, Some(depth), cx.budget);
    r.wall_ms = elapsed(start);
    Ok(r)
}

/// Searches for a one-query reduction.
pub fn cmd_oq(cx: &Context, source: &str, target: &str) -> Result<Report, Diagnostic> {
    let (f, g) = cx.pair(source, target)?;
    let start = Instant::now();
    let mut r = match solve_one_query(&f, &g, cx.budget) {
        Ok(search) => {
            let mut r =
                Report::new("oq", if search.witness.is_some() { VerdictKind::Found } else { VerdictKind::None });
            r.certificate = Some((&search.certificate).into());
            r.witness = search.witness.map(|t| WitnessText { format: "triple", text: t.to_text() });
            r
        }
        Err(SolveError::Budget { .. }) => Report::new("oq", VerdictKind::Inconclusive),
    };
    header(&mut r, &f, &g, Some(1), cx.budget);
    r.wall_ms = elapsed(start);
    Ok(r)
}

fn strategy_depth(s: &StrategyDef, depth: Option<usize>) -> Result<usize, Diagnostic> {
    depth.or(s.depth).ok_or_else(|| plain(format!("strategy `{}` has no natural depth; pass --depth", s.kind)))
}

/// Checks a strategy against every Merlin, or, given a transcript, replays
/// Merlin's recorded moves against it and compares.
pub fn cmd_verify(
    cx: &Context,
    source: &str,
    target: &str,
    strategy: &str,
    depth: Option<usize>,
    transcript: Option<&Path>,
) -> Result<Report, Diagnostic> {
    let (f, g) = cx.pair(source, target)?;
    let s = cx.ws.resolve_strategy(strategy)?;
    let depth = strategy_depth(&s, depth)?;
    let start = Instant::now();
    let mut r = if let Some(path) = transcript {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let recorded = Transcript::parse_text(&text).map_err(|e| plain(format!("{}: {e}", path.display())))?;
        let again = play(&f, &g, &*s.arthur, &*s.nimue, &ScriptedMerlin::from_transcript(&recorded), depth);
        let kind = if again == recorded { VerdictKind::Replayed } else { VerdictKind::Mismatch };
        let mut r = Report::new("verify", kind);
        r.transcript = Some(transcript_json(&again, Some(path)));
        r
    } else {
        match verify_winning_in(Arena::Source(&f), &g, &*s.arthur, &*s.nimue, depth, cx.budget) {
            Verdict::Winning { plays } => {
                let mut r = Report::new("verify", VerdictKind::Winning);
                r.plays = Some(plays);
                r
            }
            Verdict::CounterPlay(t) => {
                let path = cx.save_transcript(&t)?;
                let mut r = Report::new("verify", VerdictKind::Counterplay);
                r.transcript = Some(transcript_json(&t, Some(&path)));
                r
            }
            Verdict::Inconclusive { nodes } => {
                let mut r = Report::new("verify", VerdictKind::Inconclusive);
                r.nodes = Some(nodes);
                r
            }
        }
    };
    if let Some((format, text)) = &s.text {
        r.witness = Some(WitnessText { format, text: text.clone() });
    }
    header(&mut r, &f, &g, Some(depth), cx.budget);
    r.wall_ms = elapsed(start);
    Ok(r)
}

/// The reducibility matrix and its Hasse diagram.
pub fn cmd_poset(cx: &Context, names: &[String], depth: usize) -> Result<Report, Diagnostic> {
    if names.is_empty() {
        return Err(plain("poset needs at least one function"));
    }
    let mut items: Vec<Arc<BilayerFn>> = Vec::new();
    for name in names {
        let f = cx.ws.resolve_function(name)?;
        if items.iter().any(|g| g.name() == f.name()) {
            return Err(plain(format!("`{name}` names {} twice", f.name())));
        }
        items.push(f);
    }
    let start = Instant::now();
    let items: Vec<BilayerFn> = items.iter().map(|f| (**f).clone()).collect();
    let m = poset(&items, depth, cx.budget);
    let budgeted = m.cells.iter().flatten().any(|c| matches!(c, Relation::Budget { .. }));
    let mut r = Report::new("poset", if budgeted { VerdictKind::Inconclusive } else { VerdictKind::Computed });
    r.depth = Some(depth);
    r.budget = Some(cx.budget);
    r.poset = Some(PosetJson::new(&m));
    r.wall_ms = elapsed(start);
    Ok(r)
}

/// An interactive game with the person at `input`/`output` as Merlin.
/// Without a strategy the pair is solved first.
#[allow(clippy::too_many_arguments)]
pub fn cmd_play<R: BufRead, W: Write>(
    cx: &Context,
    source: &str,
    target: &str,
    strategy: Option<&str>,
    depth: Option<usize>,
    input: R,
    output: W,
    save_as: Option<&Path>,
) -> Result<Report, Diagnostic> {
    let (f, g) = cx.pair(source, target)?;
    let start = Instant::now();
    let (s, depth) = match strategy {
        Some(name) => {
            let s = cx.ws.resolve_strategy(name)?;
            let d = strategy_depth(&s, depth)?;
            (s, d)
        }
        None => {
            let depth = depth.unwrap_or(1);
            let search = solve_lt(&f, &g, depth, cx.budget).map_err(|e| plain(e.to_string()))?;
            let pair = search.witness.ok_or_else(|| {
                plain(format!("{} does not reduce to {} with {depth} queries; nothing to play", f.name(), g.name()))
            })?;
            let text = Some(("tables", strategy_file_text(&pair.arthur, &pair.nimue)));
            let s = StrategyDef {
                kind: "solved".into(),
                arthur: Arc::new(pair.arthur),
                nimue: Arc::new(pair.nimue),
                depth: Some(depth),
                text,
            };
            (s, depth)
        }
    };
    let merlin = HumanMerlin::new(&f, &g, input, output);
    let t = play(&f, &g, &*s.arthur, &*s.nimue, &merlin, depth);
    let (_, mut output) = merlin.into_inner();
    let _ = writeln!(output, "{}", t.to_text());
    let path = cx.save_transcript(&t)?;
    if let Some(extra) = save_as {
        std::fs::write(extra, t.to_text()).map_err(|e| io_error(extra, e))?;
    }
    let mut r = Report::new("play", VerdictKind::Finished);
    r.transcript = Some(transcript_json(&t, Some(&path)));
    header(&mut r, &f, &g, Some(depth), cx.budget);
    r.wall_ms = elapsed(start);
    Ok(r)
}

/// Re-referees a transcript move for move.
pub fn cmd_replay(cx: &Context, source: &str, target: &str, path: &Path, depth: usize) -> Result<Report, Diagnostic> {
    let (f, g) = cx.pair(source, target)?;
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let recorded = Transcript::parse_text(&text).map_err(|e| plain(format!("{}: {e}", path.display())))?;
    let start = Instant::now();
    let again = replay(&f, &g, &recorded, depth);
    let mut r = Report::new("replay", if again == recorded { VerdictKind::Replayed } else { VerdictKind::Mismatch });
    r.transcript = Some(transcript_json(&again, Some(path)));
    header(&mut r, &f, &g, Some(depth), cx.budget);
    r.wall_ms = elapsed(start);
    Ok(r)
}

/// Randomized referee checks over the named functions, or a default family.
pub fn cmd_check(cx: &Context, names: &[String], seed: u64, cases: u64) -> Result<Report, Diagnostic> {
    let families = if names.is_empty() {
        default_families()
    } else {
        names.iter().map(|n| cx.ws.resolve_function(n).map(|f| (*f).clone())).collect::<Result<_, _>>()?
    };
    let start = Instant::now();
    let checks = engine_checks(&families, seed, cases);
    let ok = checks.iter().all(|c| c.failures == 0);
    let mut r = Report::new("check", if ok { VerdictKind::Passed } else { VerdictKind::Failed });
    r.checks = checks;
    r.wall_ms = elapsed(start);
    Ok(r)
}

/// A short human-readable account of a report.
pub fn summary(r: &Report) -> String {
    let mut out = String::new();
    let verdict = serde_json::to_value(r.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    match (&r.source, &r.target) {
        (Some(f), Some(g)) => out.push_str(&format!("{}: {f} vs {g}: {verdict}", r.command)),
        _ => out.push_str(&format!("{}: {verdict}", r.command)),
    }
    if let Some(d) = r.depth {
        out.push_str(&format!(" (depth {d})"));
    }
    out.push('\n');
    if let Some(CertificateJson { mode, depth, arthur_moves, positions }) = &r.certificate {
        out.push_str(&format!(
            "certificate: {mode} at depth {depth}, {arthur_moves} Arthur moves, {positions} positions\n"
        ));
    }
    if let Some(p) = r.plays {
        out.push_str(&format!("plays walked: {p}\n"));
    }
    if let Some(n) = r.nodes {
        out.push_str(&format!("budget ran out after {n} nodes\n"));
    }
    if let Some(w) = &r.witness {
        out.push_str(&w.text);
    }
    if let Some(t) = &r.transcript {
        out.push_str(&format!("outcome: {}\n", t.outcome));
        if let Some(p) = &t.path {
            out.push_str(&format!("transcript: {p}\n"));
        }
    }
    if let Some(p) = &r.poset {
        for v in &p.violations {
            out.push_str(&format!("order violation: {v}\n"));
        }
        out.push_str(&p.dot);
    }
    for c in &r.checks {
        out.push_str(&format!("{}: {} cases, {} failures\n", c.name, c.cases, c.failures));
        if let Some(first) = &c.first_failure {
            out.push_str(&format!("  first failure: {first}\n"));
        }
    }
    out
}
