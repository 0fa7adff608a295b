//! Python bindings for the toy field theory simulator.
//!
//! Exposes circuit parsing plus the main operations: exact and sampled toy
//! runs, the quantum reference, conditioning, the comparison verdict, and
//! the locality audits. Exact probabilities cross the boundary as
//! `"num/den"` strings so nothing is lost to floats; sampled and quantum
//! probabilities are floats.
//!
//! ```python
//! import erft_py
//! c = erft_py.Circuit.from_file("scenarios/mz_phi0.ifc")
//! assert c.run_exact() == {"D_a": "1/1"}
//! ```

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use erft_core::audit::{admissible_probes, no_signalling_check, taint_trace};
use erft_core::dsl;
use erft_core::ensemble;
use erft_core::ontology::ModeId;
use erft_core::outcome::{OutcomeDistribution, OutcomePattern, RenderedMass, TranscriptEntry};
use erft_core::prob::Prob;
use erft_core::quantum;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An interferometer circuit plus every operation the engines offer on it.
#[pyclass(module = "erft_py", skip_from_py_object)]
#[derive(Clone)]
struct Circuit {
    inner: dsl::Circuit,
}

fn exact_map(dist: &OutcomeDistribution, names: &[String]) -> BTreeMap<String, String> {
    dist.rendered(names)
        .into_iter()
        .map(|(label, mass)| {
            let text = match mass {
                RenderedMass::Exact(p) => p.num_den_string(),
                RenderedMass::Real(x) => x.to_string(),
            };
            (label, text)
        })
        .collect()
}

fn float_map(dist: &OutcomeDistribution, names: &[String]) -> BTreeMap<String, f64> {
    dist.support()
        .into_iter()
        .map(|t| (t.render(names), dist.prob_f64(t)))
        .collect()
}

/// Parses an entry label like `"b=0"`, `"absorbed@b"`, or `"diverted@b"`
/// back into a transcript entry.
fn parse_entry(c: &dsl::Circuit, label: &str) -> PyResult<TranscriptEntry> {
    let mode_of = |name: &str| -> PyResult<ModeId> {
        c.mode_id(name)
            .ok_or_else(|| value_err(format!("unknown mode '{name}'")))
    };
    if let Some(name) = label.strip_prefix("absorbed@") {
        return Ok(TranscriptEntry::Absorbed {
            mode: mode_of(name)?,
        });
    }
    if let Some(name) = label.strip_prefix("diverted@") {
        return Ok(TranscriptEntry::Diverted {
            mode: mode_of(name)?,
        });
    }
    if let Some((name, value)) = label.split_once('=') {
        let value: u8 = value
            .parse()
            .map_err(|_| value_err(format!("bad outcome value in '{label}'")))?;
        return Ok(TranscriptEntry::Outcome {
            mode: mode_of(name)?,
            value,
        });
    }
    Err(value_err(format!(
        "cannot parse entry '{label}' (expected mode=0, mode=1, absorbed@mode, or diverted@mode)"
    )))
}

#[pymethods]
impl Circuit {
    /// Parse circuit text.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = dsl::parse(text).map_err(value_err)?;
        Ok(Circuit { inner })
    }

    /// Read and parse a circuit file.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::from_text(&text)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn modes(&self) -> Vec<String> {
        self.inner.mode_names()
    }

    /// Canonical byte-stable serialization.
    fn serialize(&self) -> String {
        dsl::serialize(&self.inner)
    }

    /// Validation findings; empty means runnable.
    fn validate(&self) -> Vec<String> {
        dsl::validate(&self.inner)
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    /// Exact toy distribution as `{label: "num/den"}`.
    fn run_exact(&self) -> PyResult<BTreeMap<String, String>> {
        let d = ensemble::run_exact(&self.inner).map_err(value_err)?;
        Ok(exact_map(&d, &self.inner.mode_names()))
    }

    /// Exact toy distribution as floats.
    fn run_exact_float(&self) -> PyResult<BTreeMap<String, f64>> {
        let d = ensemble::run_exact(&self.inner).map_err(value_err)?;
        Ok(float_map(&d, &self.inner.mode_names()))
    }

    /// Exact toy distribution computed by brute-force enumeration over
    /// initial ontic states and coins (the independent route).
    fn run_exact_enumerated(&self) -> PyResult<BTreeMap<String, String>> {
        let d = ensemble::run_exact_enumerated(&self.inner).map_err(value_err)?;
        Ok(exact_map(&d, &self.inner.mode_names()))
    }

    /// Quantum reference distribution as floats.
    fn run_quantum(&self) -> PyResult<BTreeMap<String, f64>> {
        let d = quantum::run_quantum(&self.inner).map_err(value_err)?;
        Ok(float_map(&d, &self.inner.mode_names()))
    }

    /// Empirical frequencies over seeded i.i.d. trials.
    #[pyo3(signature = (trials, seed = 0))]
    fn run_ensemble(&self, trials: u64, seed: u64) -> PyResult<BTreeMap<String, f64>> {
        let d = ensemble::run_ensemble(&self.inner, trials, seed).map_err(value_err)?;
        Ok(float_map(&d, &self.inner.mode_names()))
    }

    /// One reproducible trial: the transcript label and the ontic
    /// trajectory snapshots.
    #[pyo3(signature = (trial_index, seed = 0))]
    fn run_trial(&self, trial_index: u64, seed: u64) -> PyResult<(String, Vec<String>)> {
        let record = ensemble::run_trial(&self.inner, trial_index, seed).map_err(value_err)?;
        let names = self.inner.mode_names();
        Ok((
            record.transcript.render(&names),
            record.trajectory.iter().map(ToString::to_string).collect(),
        ))
    }

    /// Exact toy distribution conditioned on `(position, entry_label)`
    /// constraints, e.g. `[(0, "b=0")]`.
    fn run_exact_conditioned(
        &self,
        constraints: Vec<(usize, String)>,
    ) -> PyResult<BTreeMap<String, String>> {
        let d = ensemble::run_exact(&self.inner).map_err(value_err)?;
        let pattern = self.pattern(&constraints)?;
        let conditioned = d.condition(&pattern).map_err(value_err)?;
        Ok(exact_map(&conditioned, &self.inner.mode_names()))
    }

    /// Quantum distribution conditioned the same way.
    fn run_quantum_conditioned(
        &self,
        constraints: Vec<(usize, String)>,
    ) -> PyResult<BTreeMap<String, f64>> {
        let d = quantum::run_quantum(&self.inner).map_err(value_err)?;
        let pattern = self.pattern(&constraints)?;
        let conditioned = d.condition(&pattern).map_err(value_err)?;
        Ok(float_map(&conditioned, &self.inner.mode_names()))
    }

    /// Compares toy and quantum per outcome; returns
    /// `(verdict, max_abs_diff)`.
    #[pyo3(signature = (tolerance = 1e-9))]
    fn compare(&self, tolerance: f64) -> PyResult<(String, f64)> {
        let toy = ensemble::run_exact(&self.inner).map_err(value_err)?;
        let q = quantum::run_quantum(&self.inner).map_err(value_err)?;
        let report = erft_core::report::compare_report(
            &self.inner,
            &toy,
            &q,
            tolerance,
            erft_core::report::ReportMeta::new(),
        );
        let max = report
            .rows
            .iter()
            .map(|r| r.abs_diff)
            .fold(0.0f64, f64::max);
        Ok((report.verdict, max))
    }

    /// Locality audit: `(taint_findings, probes_checked, max_deviation)`.
    #[pyo3(signature = (trials = 1000, seed = 0))]
    fn audit(&self, trials: u64, seed: u64) -> PyResult<(Vec<String>, usize, String)> {
        let taint = taint_trace(&self.inner, trials, seed).map_err(value_err)?;
        let probes = admissible_probes(&self.inner).map_err(value_err)?;
        let mut max_deviation = Prob::zero();
        let count = probes.len();
        for probe in &probes {
            let outcome = no_signalling_check(probe).map_err(value_err)?;
            if outcome.deviation > max_deviation {
                max_deviation = outcome.deviation;
            }
        }
        Ok((
            taint
                .findings
                .iter()
                .map(|f| f.render(&self.inner))
                .collect(),
            count,
            max_deviation.num_den_string(),
        ))
    }

    /// Convergence ladder: `(trial_counts, tv_distances)`.
    #[pyo3(signature = (trial_counts, seed = 0))]
    fn converge(&self, trial_counts: Vec<u64>, seed: u64) -> PyResult<(Vec<u64>, Vec<f64>)> {
        let report = ensemble::convergence_experiment(&self.inner, &trial_counts, seed)
            .map_err(value_err)?;
        Ok((report.trial_counts, report.tv_distances))
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(name='{}', modes={:?}, elements={})",
            self.inner.name,
            self.inner.mode_names(),
            self.inner.elements.len()
        )
    }
}

impl Circuit {
    fn pattern(&self, constraints: &[(usize, String)]) -> PyResult<OutcomePattern> {
        let mut pattern = OutcomePattern::default();
        for (position, label) in constraints {
            pattern
                .entries
                .push((*position, parse_entry(&self.inner, label)?));
        }
        Ok(pattern)
    }
}

/// Module-level convenience mirroring `Circuit.from_text`.
#[pyfunction]
fn parse(text: &str) -> PyResult<Circuit> {
    Circuit::from_text(text)
}

#[pymodule]
fn erft_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Circuit>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
