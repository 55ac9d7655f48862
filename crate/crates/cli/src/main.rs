use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bilayer::commands::{self, io_error, Context};
use bilayer::{parse_workspace, Diagnostic, Report, Workspace};

/// Explore reductions between bilayer functions.
///
/// FUNCTION and STRATEGY arguments are names from the workspace or
/// constructor expressions such as `error(1,3)` or `collapse_chain(2,4)`.
/// Exit codes: 0 success, 1 diagnostics or a failed check, 2 budget
/// exhausted.
#[derive(Parser, Debug)]
#[command(name = "bilayer", version)]
struct Cli {
    /// Workspace file with `def` and `strategy` lines.
    #[arg(short, long, global = true)]
    workspace: Option<PathBuf>,
    /// Search or verification budget; overrides the workspace.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Output directory for saved transcripts; overrides the workspace.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write the JSON report here (`-` for standard output).
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a reduction with at most --depth queries.
    Solve {
        source: String,
        target: String,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Search for a one-query reduction and print its H/K/L tables.
    Oq { source: String, target: String },
    /// Check a strategy against every Merlin, or replay a transcript
    /// against it.
    Verify {
        source: String,
        target: String,
        strategy: String,
        #[arg(long)]
        depth: Option<usize>,
        /// Replay Merlin's moves from this transcript instead.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Reducibility matrix and Hasse diagram (A -> B means B reduces to A).
    Poset {
        #[arg(required = true)]
        functions: Vec<String>,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// Write the DOT graph here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Play Merlin at the terminal against a strategy, or against a
    /// solved pair when none is given.
    Play {
        source: String,
        target: String,
        strategy: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        /// Also save the transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Re-referee a saved transcript.
    Replay {
        source: String,
        target: String,
        transcript: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Randomized referee checks: information hiding, replay and depth
    /// monotonicity.
    Check {
        functions: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: u64,
    },
    /// Print a function's cells.
    Show { function: String },
}

fn load(path: Option<&Path>) -> Result<Workspace, Diagnostic> {
    let Some(path) = path else {
        return Ok(Workspace::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_workspace(&text).map_err(|d| {
        let at = d.pos.map_or(String::new(), |p| format!("{}:{}:", p.line, p.column));
        Diagnostic { pos: None, message: format!("{}:{at} {}", path.display(), d.message) }
    })
}

fn write(path: &Path, text: &str) -> Result<(), Diagnostic> {
    if path == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(path, text).map_err(|e| io_error(path, e))
    }
}

fn run(cli: Cli) -> Result<Report, Diagnostic> {
    let cx = Context::new(load(cli.workspace.as_deref())?, cli.budget, cli.output);
    let report = match cli.command {
        Command::Solve { source, target, depth } => commands::cmd_solve(&cx, &source, &target, depth)?,
        Command::Oq { source, target } => commands::cmd_oq(&cx, &source, &target)?,
        Command::Verify { source, target, strategy, depth, transcript } => {
            commands::cmd_verify(&cx, &source, &target, &strategy, depth, transcript.as_deref())?
        }
        Command::Poset { functions, depth, dot } => {
            let r = commands::cmd_poset(&cx, &functions, depth)?;
            if let (Some(path), Some(p)) = (dot, &r.poset) {
                write(&path, &p.dot)?;
            }
            r
        }
        Command::Play { source, target, strategy, depth, transcript } => {
            let stdin = std::io::stdin().lock();
            let stdout = std::io::stdout();
            commands::cmd_play(&cx, &source, &target, strategy.as_deref(), depth, stdin, stdout, transcript.as_deref())?
        }
        Command::Replay { source, target, transcript, depth } => {
            commands::cmd_replay(&cx, &source, &target, &transcript, depth)?
        }
        Command::Check { functions, seed, cases } => commands::cmd_check(&cx, &functions, seed, cases)?,
        Command::Show { function } => {
            let f = cx.ws.resolve_function(&function)?;
            print!("{}", f.to_text());
            return Ok(Report::new("show", bilayer::VerdictKind::Computed));
        }
    };
    if let Some(path) = &cli.json {
        write(path, &report.to_json())?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.json.as_deref() == Some(Path::new("-"));
    match run(cli) {
        Ok(report) => {
            if !quiet && report.command != "show" {
                print!("{}", commands::summary(&report));
            }
            ExitCode::from(report.verdict.exit_code() as u8)
        }
        Err(d) => {
            eprintln!("error: {d}");
            ExitCode::from(1)
        }
    }
}
