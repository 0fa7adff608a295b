//! Simulation of a discrete epistemically restricted field-mode theory for
//! Mach-Zehnder-style interferometer circuits.
//!
//! Modes carry an occupation bit and a binary phase; epistemic states are
//! exact distributions over joint ontic states. The crate provides:
//!
//! - the ontic/epistemic state spaces and their validity checks
//!   ([`ontology`]),
//! - local deterministic transformations and measurement instruments with
//!   explicit randomization coins ([`dynamics`]),
//! - a circuit description language with parser, validator, canonical
//!   serializer and derived causal DAG ([`dsl`]),
//! - exact and sampled circuit semantics, conditioning and convergence
//!   experiments ([`ensemble`]),
//! - an exact single-excitation quantum reference simulator for the same
//!   circuits ([`quantum`]),
//! - mechanical locality audits: variable-access tracing and no-signalling
//!   probes ([`audit`]),
//! - machine-readable report types shared with the command-line front end
//!   ([`report`]).
//!
//! ```
//! use erft_core::dsl::parse;
//! use erft_core::ensemble::run_exact;
//! use erft_core::quantum::run_quantum;
//!
//! let circuit = parse(
//!     "circuit mz { modes a,b; source excite a; bs a b; phase a 0; bs a b; detect a,b; }",
//! )
//! .unwrap();
//!
//! // The toy engine sends the excitation back to its input port with
//! // certainty, and the quantum reference agrees.
//! let toy = run_exact(&circuit).unwrap();
//! let labels: Vec<String> = toy
//!     .rendered(&circuit.mode_names())
//!     .into_iter()
//!     .map(|(label, mass)| format!("{label}: {mass}"))
//!     .collect();
//! assert_eq!(labels, vec!["D_a: 1/1"]);
//!
//! let quantum = run_quantum(&circuit).unwrap();
//! for t in toy.support() {
//!     assert!((toy.prob_f64(t) - quantum.prob_f64(t)).abs() < 1e-9);
//! }
//! ```

pub mod audit;
pub mod dsl;
pub mod dynamics;
pub mod ensemble;
pub mod ontology;
pub mod outcome;
pub mod prob;
pub mod quantum;
pub mod report;
pub mod rng;
pub mod trace;

mod exec;

pub use prob::Prob;
