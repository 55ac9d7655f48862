//! Command-line workbench for bilayer functions: workspace files, the
//! subcommands behind the `bilayer` binary, JSON reports and interactive
//! play.

pub mod checks;
pub mod commands;
pub mod play;
pub mod report;
pub mod workspace;

pub use commands::Context;
pub use report::{Report, VerdictKind};
pub use workspace::{parse_workspace, Diagnostic, Workspace};
