//! The acceptance suite. Each criterion prints one PASS or FAIL line; the
//! process exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bilayer::checks::{default_families, engine_checks};
use bilayer::{Context, VerdictKind, Workspace};
use bilayer_core::catalog::density::{denerror, denerror_reduction, lower_density, PeriodicSet};
use bilayer_core::catalog::errors::ceil_div;
use bilayer_core::catalog::prob::{error_to_prob_error, measure_ok};
use bilayer_core::catalog::{
    collapse_chain, easy_direction, llpo, llpo_reduction, prob_error, prob_error_witness, psi_fn, StagedMachine,
};
use bilayer_core::combinators::{compose, lt_from_oq, oq_from_lt, ClosureFn, FlattenClosure};
use bilayer_core::engine::{Verified, Witness, DEFAULT_BUDGET};
use bilayer_core::families::{error, id_fn};
use bilayer_core::solver::{solve_lt, solve_one_query, validate_triple, SearchMode};
use bilayer_core::trees::{cenzer_hinman, extract_monochromatic, BranchingBound, Coloring, LabeledTree, Node};
use bilayer_core::{BilayerFn, Term};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn family_four() -> Vec<Arc<BilayerFn>> {
    [id_fn(2), error(1, 2), error(1, 3), error(2, 3)].into_iter().map(|f| Arc::new(f.unwrap())).collect()
}

/// The witness `solve_lt` finds at exactly this depth, verified.
fn solved(f: &Arc<BilayerFn>, g: &Arc<BilayerFn>, depth: usize) -> Result<Option<Verified>, String> {
    let search = solve_lt(f, g, depth, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let Some(pair) = search.witness else { return Ok(None) };
    let w = Witness {
        source: f.clone(),
        target: g.clone(),
        arthur: Arc::new(pair.arthur),
        nimue: Arc::new(pair.nimue),
        depth,
    };
    w.verify().map(Some).map_err(|v| format!("solver witness {} -> {} fails: {v:?}", f.name(), g.name()))
}

fn reflexive_transitive() -> Outcome {
    let fams = family_four();
    let mut found: BTreeMap<(usize, usize), Verified> = BTreeMap::new();
    for (i, f) in fams.iter().enumerate() {
        for (j, g) in fams.iter().enumerate() {
            for depth in 1..=2 {
                if let Some(w) = solved(f, g, depth)? {
                    found.insert((i, j), w);
                    break;
                }
            }
        }
        ensure(found.contains_key(&(i, i)), || format!("{} does not reduce to itself", f.name()))?;
    }
    let mut composed = 0;
    for (&(i, j), outer) in &found {
        for (&(_, k), inner) in found.range((j, 0)..=(j, usize::MAX)) {
            let bound = outer.depth * inner.depth;
            let w = compose(outer, inner).map_err(|e| e.to_string())?;
            ensure(w.depth <= bound, || format!("composite depth {} over {bound}", w.depth))?;
            w.verify().map_err(|v| format!("{} -> {} -> {}: {v:?}", fams[i].name(), fams[j].name(), fams[k].name()))?;
            composed += 1;
        }
    }
    Ok(format!("{} reducible pairs, {composed} composites verified", found.len()))
}

/// Whether `error(1,l)` reduces to `error(m,k)` in one query, by trying every
/// outer map. The only public input is `*`, so the query is fixed; the outer
/// map sends each answer to a value or leaves it undefined (`None`), and for
/// every wrong value `j` some `m`-set of wrong answers must keep Merlin away
/// from answers that map to `j` or to nothing.
fn one_query_by_enumeration(m: u64, k: u64, l: u64) -> bool {
    let subsets: Vec<u64> = (0u64..1 << k).filter(|s| u64::from(s.count_ones()) == m).collect();
    let maps = (l + 1).pow(k as u32);
    (0..maps).any(|code| {
        let outer: Vec<Option<u64>> = (0..k)
            .map(|u| {
                let digit = code / (l + 1).pow(u as u32) % (l + 1);
                (digit < l).then_some(digit)
            })
            .collect();
        (0..l).all(|wrong| {
            subsets.iter().any(|&hits| {
                (0..k).filter(|u| hits >> u & 1 == 0).all(|u| outer[u as usize].is_some_and(|v| v != wrong))
            })
        })
    })
}

fn easy_direction_table() -> Outcome {
    let (mut positive, mut negative) = (0, 0);
    for k in 2..=5u64 {
        for m in 1..k {
            let target = error(m, k).unwrap();
            for l in 2..=4u64 {
                let source = error(1, l).unwrap();
                let expected = one_query_by_enumeration(m, k, l);
                ensure(expected == (ceil_div(k, m) <= l), || format!("enumeration disagrees at ({m},{k},{l})"))?;
                let search = solve_one_query(&source, &target, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
                if expected {
                    let triple = easy_direction(m, k, l).map_err(|e| e.to_string())?;
                    validate_triple(&source, &target, &triple).map_err(|e| format!("({m},{k},{l}): {e}"))?;
                    ensure(search.witness.is_some(), || format!("solver misses ({m},{k},{l})"))?;
                    positive += 1;
                } else {
                    ensure(search.witness.is_none() && search.certificate.mode == SearchMode::Exhausted, || {
                        format!("({m},{k},{l}) should be exhausted-none")
                    })?;
                    negative += 1;
                }
            }
        }
    }
    Ok(format!("{positive} triples validated, {negative} exhausted-none"))
}

fn collapse_chains() -> Outcome {
    let cases = [(2, 4, 2), (2, 5, 3), (3, 5, 2), (2, 6, 3), (3, 6, 2)];
    let mut plays = Vec::new();
    for (m, k, l) in cases {
        ensure(ceil_div(k, m) == l, || format!("ceil({k}/{m}) != {l}"))?;
        let chain = collapse_chain(m, k).map_err(|e| format!("({m},{k}): {e}"))?;
        let target = error(1, l).unwrap();
        ensure(*chain.target == target, || format!("({m},{k}) targets {}", chain.target.name()))?;
        let again = chain.witness().clone().verify().map_err(|v| format!("({m},{k}) re-verification: {v:?}"))?;
        plays.push(format!("{}->{}: {} plays", chain.source.name(), target.name(), again.plays()));
    }
    Ok(plays.join(", "))
}

fn separation_certificates() -> Outcome {
    let mut out = Vec::new();
    for l in [2, 3] {
        let (f, g) = (error(1, l).unwrap(), error(1, l + 1).unwrap());
        let search = solve_lt(&f, &g, 3, DEFAULT_BUDGET).map_err(|e| format!("l = {l}: {e}"))?;
        let c = &search.certificate;
        ensure(search.witness.is_none() && c.mode == SearchMode::Exhausted && c.depth == 3, || {
            format!("l = {l}: expected exhausted-none at depth 3, got {c:?}")
        })?;
        out.push(format!("{}: {} Arthur moves, {} positions", f.name(), c.arthur_moves, c.positions));
    }
    Ok(out.join("; "))
}

fn llpo_catalog() -> Outcome {
    let bound = 4;
    let mut checked = 0;
    for k in 2..=3u64 {
        for m in 1..=2u64.min(k - 1) {
            let source = llpo(m, k, bound).unwrap();
            // Choose which h <= m indices halt, each at one of `bound` stages.
            let choose = |h: u64| (0..h).fold(1, |acc, i| acc * (k - i) / (i + 1));
            let tables: u64 = (0..=m).map(|h| choose(h) * bound.pow(h as u32)).sum();
            ensure(source.dom_pub().count() as u64 == tables, || format!("llpo({m},{k}) has the wrong domain"))?;
            let reduction = llpo_reduction(m, k).unwrap();
            checked += validate_triple(&source, &error(m, k + 1).unwrap(), &reduction)
                .map_err(|e| format!("llpo({m},{k}): {e}"))?;
        }
    }
    let (psi, lp) = (psi_fn(bound).unwrap(), llpo(1, 2, bound).unwrap());
    for (f, g) in [(&psi, &lp), (&lp, &psi)] {
        let search = solve_one_query(f, g, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let triple = search.witness.ok_or_else(|| format!("no one-query reduction {} -> {}", f.name(), g.name()))?;
        validate_triple(f, g, &triple).map_err(|e| e.to_string())?;
    }
    Ok(format!("{checked} answers checked, psi and llpo(1,2) one-query equivalent"))
}

fn closure_laws() -> Outcome {
    let h = Arc::new(error(1, 2).unwrap());
    let mut witnesses = Vec::new();
    for f in family_four() {
        for depth in 1..=2 {
            witnesses.extend(solved(&f, &h, depth)?);
        }
    }
    for (m, k) in [(2, 4), (3, 5), (3, 6)] {
        witnesses.push(collapse_chain(m, k).map_err(|e| e.to_string())?);
    }
    for w in &witnesses {
        let label = format!("{} at depth {}", w.source.name(), w.depth);
        let (triple, closure) = oq_from_lt(w);
        validate_triple(&w.source, &closure, &triple).map_err(|e| format!("{label}: {e}"))?;
        let back = lt_from_oq(w.source.clone(), &closure, &triple).map_err(|e| format!("{label}: {e}"))?;
        back.verify().map_err(|v| format!("{label} after the round trip: {v:?}"))?;
    }
    let once = Arc::new(ClosureFn::new(h.clone(), 1).materialize().map_err(|e| e.to_string())?);
    let twice = ClosureFn::new(once, 1).materialize().map_err(|e| e.to_string())?;
    let cells = validate_triple(&twice, &ClosureFn::new(h, 1), &FlattenClosure).map_err(|e| e.to_string())?;
    Ok(format!("{} round trips, {} doubled-closure instances ({cells} answers)", witnesses.len(), twice.len()))
}

struct TreeCase {
    tree: LabeledTree,
    bound: BranchingBound,
    colors: u32,
    coloring: Coloring,
}

/// A uniform tree where each interior node `t` has between `colors * b(t)`
/// and one more children, `b(t)` drawn from `1..=3`.
fn random_case(rng: &mut ChaCha8Rng) -> TreeCase {
    let colors = rng.gen_range(1..=3u32);
    let height = rng.gen_range(1..=4usize);
    let mut bound = BranchingBound::constant(1);
    let mut nodes: Vec<Node> = vec![Vec::new()];
    let mut level: Vec<Node> = vec![Vec::new()];
    for _ in 0..height {
        let mut next = Vec::new();
        for t in &level {
            let b = rng.gen_range(1..=3u32);
            bound.overrides.insert(t.clone(), b);
            for child in 0..colors * b + rng.gen_range(0..=1u32) {
                let mut c = t.clone();
                c.push(child);
                next.push(c);
            }
        }
        nodes.extend(next.iter().cloned());
        level = next;
    }
    let coloring = level.iter().map(|leaf| (leaf.clone(), rng.gen_range(0..colors))).collect();
    TreeCase { tree: LabeledTree::from_nodes(nodes).unwrap(), bound, colors, coloring }
}

/// The four postconditions: a subtree, `b`-fat, the same height with all
/// leaves at the bottom, and leaves of one color.
fn postconditions(case: &TreeCase, out: &LabeledTree, color: u32) -> Result<(), String> {
    ensure(out.nodes().all(|t| case.tree.contains(t)), || "not a subtree".into())?;
    for t in out.nodes() {
        let children = out.successors(t).len() as u64;
        ensure(children == 0 || children >= case.bound.get(t), || format!("{t:?} has {children} children"))?;
    }
    let height = case.tree.height();
    ensure(out.leaves().all(|l| l.len() == height), || "leaves above the bottom".into())?;
    ensure(out.leaves().all(|l| case.coloring.get(l) == Some(&color)), || "leaves of another color".into())
}

fn fat_trees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfa7);
    let mut constant = 0;
    for i in 0..1000 {
        let mut case = random_case(&mut rng);
        let out = extract_monochromatic(&case.tree, &case.bound, case.colors, &case.coloring)
            .map_err(|e| format!("instance {i}: {e}"))?;
        postconditions(&case, &out.tree, out.color).map_err(|e| format!("instance {i}: {e}"))?;
        // The constant case: every node has at least colors*(b-1)+1 children.
        let least =
            case.tree.nodes().filter(|t| !case.tree.successors(t).is_empty()).map(|t| case.tree.successors(t).len());
        let least = least.min().unwrap_or(0) as u32;
        if least > case.colors {
            let m = (least - 1) / case.colors;
            let out =
                cenzer_hinman(&case.tree, m, case.colors, &case.coloring).map_err(|e| format!("instance {i}: {e}"))?;
            case.bound = BranchingBound::constant(m + 1);
            postconditions(&case, &out.tree, out.color).map_err(|e| format!("instance {i}, constant: {e}"))?;
            constant += 1;
        }
    }
    Ok(format!("1000 instances, {constant} also as constant-branching"))
}

fn prob_error_equivalence() -> Outcome {
    let mut out = Vec::new();
    for oracle_len in [1u32, 2] {
        let source = prob_error(oracle_len, 1, 2, 3).unwrap();
        let witness = prob_error_witness(oracle_len, 1, 2, 3).map_err(|e| format!("T = {oracle_len}: {e}"))?;
        let again = witness.witness().clone().verify().map_err(|v| format!("T = {oracle_len}: {v:?}"))?;
        ensure(*again.source == source, || "witness source differs".into())?;
        let splitting = error_to_prob_error(oracle_len, 1, 2).map_err(|e| e.to_string())?;
        validate_triple(&error(1, 2).unwrap(), &source, &splitting).map_err(|e| e.to_string())?;
        // Constant machines always halt, so every qualifying set is a secret.
        let oracles = 1u64 << oracle_len;
        for value in 0..2 {
            let machine = StagedMachine::constant(oracle_len, value).to_term();
            let secrets = (0u64..1 << oracles).filter(|s| measure_ok(oracle_len, 1, 2, u64::from(s.count_ones())));
            for bits in secrets {
                let a = Term::Set((0..oracles).filter(|x| bits >> x & 1 == 1).collect());
                let cell = source.cell(&machine, &a).ok_or_else(|| format!("missing cell for constant {value}"))?;
                ensure(cell.len() == 1 && cell.contains(&Term::Nat(value)), || format!("constant {value}: {cell:?}"))?;
            }
        }
        out.push(format!("T = {oracle_len}: {} instances, {} plays", source.len(), again.plays()));
    }
    Ok(out.join("; "))
}

fn density() -> Outcome {
    let mut checked = 0;
    for l in 2..=4 {
        let triple = denerror_reduction(l).map_err(|e| e.to_string())?;
        checked += validate_triple(&error(1, l).unwrap(), &denerror(l).unwrap(), &triple)
            .map_err(|e| format!("l = {l}: {e}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xde5);
    for _ in 0..50 {
        let prefix: Vec<bool> = (0..rng.gen_range(0..6)).map(|_| rng.gen()).collect();
        let period: Vec<bool> = (0..rng.gen_range(1..9)).map(|_| rng.gen()).collect();
        let set = PeriodicSet::new(prefix.clone(), period.clone()).map_err(|e| e.to_string())?;
        let start = prefix.len() as u64;
        let window = 10 * period.len() as u64;
        let members = (start..start + window).filter(|&x| set.contains(x)).count() as u64;
        let exact = lower_density(&set);
        ensure(*exact.numer() * window == members * *exact.denom(), || {
            format!("{}: {exact} vs {members}/{window}", set.to_text())
        })?;
    }
    Ok(format!("{checked} answers checked, 50 densities agree"))
}

fn poset_figure() -> Outcome {
    let cx = Context::new(Workspace::default(), None, None);
    let names: Vec<String> = ["id_fn(2)", "error(1,4)", "error(1,3)", "error(1,2)"].map(String::from).to_vec();
    let report = cmd_poset(&cx, &names)?;
    ensure(report.verdict == VerdictKind::Computed, || format!("verdict {:?}", report.verdict))?;
    let dot = report.poset.map(|p| p.dot).unwrap_or_default();
    let golden = include_str!("golden/poset_error_chain.dot");
    ensure(dot == golden, || format!("DOT differs from the golden file:\n{dot}"))?;
    Ok("DOT matches the golden file".into())
}

fn cmd_poset(cx: &Context, names: &[String]) -> Result<bilayer::Report, String> {
    bilayer::commands::cmd_poset(cx, names, 2).map_err(|d| d.to_string())
}

fn engine_invariants() -> Outcome {
    let checks = engine_checks(&default_families(), 0, 200);
    let summary: Vec<String> =
        checks.iter().map(|c| format!("{} {}/{}", c.name, c.cases - c.failures, c.cases)).collect();
    ensure(checks.len() == 3 && checks.iter().all(|c| c.cases == 200 && c.failures == 0), || format!("{checks:?}"))?;
    Ok(summary.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("reflexivity and transitivity", reflexive_transitive),
        ("easy-direction table", easy_direction_table),
        ("collapse chains", collapse_chains),
        ("bounded-depth separations", separation_certificates),
        ("llpo catalog", llpo_catalog),
        ("game-closure laws", closure_laws),
        ("fat-tree extraction", fat_trees),
        ("prob_error equivalence", prob_error_equivalence),
        ("density", density),
        ("poset figure", poset_figure),
        ("engine invariants", engine_invariants),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
