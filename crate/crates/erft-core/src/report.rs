//! Machine-readable report types shared with the command-line front end.
//!
//! The run-report JSON schema is stable:
//!
//! ```json
//! {
//!   "circuit": "mz_phi0",
//!   "engine": "toy",
//!   "kind": "exact",
//!   "outcomes": { "D_a": "1/1" },
//!   "meta": { "seed": 7, "trials": 1000, "version": "0.1.0" }
//! }
//! ```
//!
//! Exact probabilities are always `"num/den"` strings, never floats;
//! estimated and quantum probabilities are JSON numbers. The timestamp is
//! omitted entirely in deterministic mode so reports are byte-stable.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dsl::Circuit;
use crate::outcome::{OutcomeDistribution, RenderedMass};

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl ReportMeta {
    pub fn new() -> Self {
        ReportMeta {
            seed: None,
            trials: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
        }
    }
}

impl Default for ReportMeta {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub circuit: String,
    pub engine: String,
    pub kind: String,
    pub outcomes: BTreeMap<String, serde_json::Value>,
    pub meta: ReportMeta,
}

/// Builds a run report; exact masses render as `"num/den"` strings.
pub fn run_report(
    circuit: &Circuit,
    engine: &str,
    dist: &OutcomeDistribution,
    meta: ReportMeta,
) -> RunReport {
    let names = circuit.mode_names();
    let outcomes = dist
        .rendered(&names)
        .into_iter()
        .map(|(label, mass)| {
            let value = match mass {
                RenderedMass::Exact(p) => serde_json::Value::String(p.num_den_string()),
                RenderedMass::Real(x) => serde_json::json!(x),
            };
            (label, value)
        })
        .collect();
    RunReport {
        circuit: circuit.name.clone(),
        engine: engine.to_string(),
        kind: dist.kind_label().to_string(),
        outcomes,
        meta,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub outcome: String,
    /// Toy probability as an exact `num/den` string.
    pub toy: String,
    /// Quantum reference probability.
    pub quantum: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub circuit: String,
    pub tolerance: f64,
    pub rows: Vec<ComparisonRow>,
    /// `"pass"` when every difference is within tolerance.
    pub verdict: String,
    pub meta: ReportMeta,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

/// Per-outcome comparison of the toy engine against the quantum reference.
pub fn compare_report(
    circuit: &Circuit,
    toy: &OutcomeDistribution,
    quantum: &OutcomeDistribution,
    tolerance: f64,
    meta: ReportMeta,
) -> ComparisonReport {
    let names = circuit.mode_names();
    let mut transcripts: Vec<_> = toy.support().into_iter().cloned().collect();
    for t in quantum.support() {
        if !transcripts.contains(t) {
            transcripts.push(t.clone());
        }
    }
    transcripts.sort();
    let zero = crate::prob::Prob::zero();
    let rows: Vec<ComparisonRow> = transcripts
        .iter()
        .map(|t| {
            let toy_exact = toy
                .exact_weights()
                .and_then(|m| m.get(t))
                .unwrap_or(&zero)
                .clone();
            let q = quantum.prob_f64(t);
            ComparisonRow {
                outcome: t.render(&names),
                toy: toy_exact.num_den_string(),
                quantum: q,
                abs_diff: (toy_exact.to_f64() - q).abs(),
            }
        })
        .collect();
    let verdict = if rows.iter().all(|r| r.abs_diff <= tolerance) {
        "pass"
    } else {
        "fail"
    };
    ComparisonReport {
        circuit: circuit.name.clone(),
        tolerance,
        rows,
        verdict: verdict.to_string(),
        meta,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub circuit: String,
    pub trials: u64,
    pub seed: u64,
    pub taint_findings: Vec<String>,
    pub probes_checked: usize,
    /// Maximum exact TV deviation over all probes, as `num/den`.
    pub max_probe_deviation: String,
    pub verdict: String,
    pub meta: ReportMeta,
}
