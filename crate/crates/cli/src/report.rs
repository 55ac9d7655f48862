//! JSON reports, schema `bilayer-report/1` (see `docs/report.schema.json`).

use serde::Serialize;

use bilayer_core::solver::{Certificate, OrderViolation, PosetMatrix, Relation};

pub const SCHEMA: &str = "bilayer-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Found,
    None,
    Inconclusive,
    Winning,
    Counterplay,
    Replayed,
    Mismatch,
    Computed,
    Passed,
    Failed,
    Finished,
}

impl VerdictKind {
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::Inconclusive => 2,
            VerdictKind::Counterplay | VerdictKind::Mismatch | VerdictKind::Failed => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessText {
    /// `tables` or `triple`.
    pub format: &'static str,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateJson {
    pub mode: &'static str,
    pub depth: usize,
    pub arthur_moves: u64,
    pub positions: u64,
}

impl From<&Certificate> for CertificateJson {
    fn from(c: &Certificate) -> Self {
        CertificateJson { mode: c.mode.as_str(), depth: c.depth, arthur_moves: c.arthur_moves, positions: c.positions }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptJson {
    pub path: Option<String>,
    pub outcome: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellJson {
    /// `reducible`, `not-at-depth` or `inconclusive`.
    pub relation: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PosetJson {
    pub names: Vec<String>,
    pub depth: usize,
    /// `matrix[i][j]`: does `names[i]` reduce to `names[j]`.
    pub matrix: Vec<Vec<CellJson>>,
    pub violations: Vec<String>,
    pub dot: String,
}

impl PosetJson {
    pub fn new(m: &PosetMatrix) -> Self {
        let matrix = m
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| match r {
                        Relation::Reducible { certificate, .. } => {
                            CellJson { relation: "reducible", certificate: Some(certificate.into()) }
                        }
                        Relation::NotAtDepth { certificate } => {
                            CellJson { relation: "not-at-depth", certificate: Some(certificate.into()) }
                        }
                        Relation::Budget { .. } => CellJson { relation: "inconclusive", certificate: None },
                    })
                    .collect()
            })
            .collect();
        let name = |i: usize| &m.names[i];
        let violations = m
            .violations()
            .into_iter()
            .map(|v| match v {
                OrderViolation::NotReflexive(i) => format!("{} does not reduce to itself", name(i)),
                OrderViolation::NotTransitive { lower, middle, upper } => format!(
                    "{} <= {} <= {} but not {} <= {}",
                    name(lower),
                    name(middle),
                    name(upper),
                    name(lower),
                    name(upper)
                ),
            })
            .collect();
        PosetJson { names: m.names.clone(), depth: m.depth, matrix, violations, dot: m.to_dot() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckJson {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessText>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
    /// Plays walked by verification.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plays: Option<u64>,
    /// Nodes visited before a budget ran out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<TranscriptJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poset: Option<PosetJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckJson>,
    pub wall_ms: f64,
}

impl Report {
    pub fn new(command: &'static str, verdict: VerdictKind) -> Self {
        Report {
            schema: SCHEMA,
            command,
            verdict,
            source: None,
            target: None,
            depth: None,
            budget: None,
            witness: None,
            certificate: None,
            plays: None,
            nodes: None,
            transcript: None,
            poset: None,
            checks: Vec::new(),
            wall_ms: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}
