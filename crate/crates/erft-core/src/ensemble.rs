//! Exact and sampled circuit semantics.
//!
//! [`run_exact`] evolves the epistemic state through the circuit, branching
//! at instruments and summing over randomization coins symbolically, so
//! every probability is an exact rational. [`run_exact_enumerated`] computes
//! the same distribution by brute force over every initial ontic state and
//! coin word; the two must agree exactly, and the acceptance suite checks
//! that they do. [`run_ensemble`] samples i.i.d. trials from per-trial keyed
//! randomness, which makes results independent of execution order and
//! parallelism.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dsl::{validate, Circuit, Finding};
use crate::exec;
use crate::ontology::{EpistemicState, JointOnticState};
use crate::outcome::{OutcomeDistribution, Transcript};
use crate::rng::CoinStream;
use crate::trace::NoopSink;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("circuit failed validation: {}", format_findings(.0))]
    InvalidCircuit(Vec<Finding>),
    #[error("enumeration over {bits} bits exceeds the {max}-bit limit")]
    EnumerationTooLarge { bits: u32, max: u32 },
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("trial-count list must be nonempty and strictly increasing")]
    BadTrialList,
}

fn format_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Validates or reports every finding at once.
pub fn check_runnable(c: &Circuit) -> Result<(), EngineError> {
    let findings = validate(c);
    if findings.is_empty() {
        Ok(())
    } else {
        Err(EngineError::InvalidCircuit(findings))
    }
}

/// Exact outcome distribution via epistemic-state evolution.
pub fn run_exact(c: &Circuit) -> Result<OutcomeDistribution, EngineError> {
    check_runnable(c)?;
    Ok(OutcomeDistribution::Exact(exec::run_epistemic(c)))
}

/// Exact outcome distribution via exhaustive enumeration of initial ontic
/// states and coins. Independent of the epistemic route by construction.
pub fn run_exact_enumerated(c: &Circuit) -> Result<OutcomeDistribution, EngineError> {
    check_runnable(c)?;
    let bits = exec::bit_budget(c);
    if bits > exec::MAX_ENUMERATION_BITS {
        return Err(EngineError::EnumerationTooLarge {
            bits,
            max: exec::MAX_ENUMERATION_BITS,
        });
    }
    Ok(OutcomeDistribution::Exact(exec::run_enumerated(c)))
}

/// Every epistemic state any exact-run branch passes through, for invariant
/// checks over the reachable set.
pub fn reachable_epistemic_states(c: &Circuit) -> Result<Vec<EpistemicState>, EngineError> {
    check_runnable(c)?;
    let mut states = Vec::new();
    exec::run_epistemic_observed(c, |s| states.push(s.clone()));
    Ok(states)
}

/// Full record of a single sampled trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// Joint ontic state before the first element and after each element.
    pub trajectory: Vec<JointOnticState>,
    pub transcript: Transcript,
    /// Beamsplitter applications that saw two excitations (never happens
    /// for validated single-source circuits).
    pub sector2_events: u32,
}

/// Samples one trial from the stream keyed by `(master_seed, trial_index)`.
pub fn run_trial(
    c: &Circuit,
    trial_index: u64,
    master_seed: u64,
) -> Result<TrialRecord, EngineError> {
    check_runnable(c)?;
    Ok(run_trial_unchecked(c, trial_index, master_seed))
}

pub(crate) fn run_trial_unchecked(c: &Circuit, trial_index: u64, master_seed: u64) -> TrialRecord {
    let mut bits = CoinStream::for_trial(master_seed, trial_index);
    let run = exec::run_ontic(c, &mut bits, &mut NoopSink, true);
    TrialRecord {
        trial_index,
        trajectory: run.trajectory,
        transcript: run.transcript,
        sector2_events: run.sector2_events,
    }
}

/// Empirical outcome distribution over `trials` independent trials.
///
/// Trials may run in any order and on any number of workers; because each
/// trial's randomness is keyed by its index and aggregation is integer
/// counting, the result is bit-identical regardless of scheduling.
pub fn run_ensemble(
    c: &Circuit,
    trials: u64,
    master_seed: u64,
) -> Result<OutcomeDistribution, EngineError> {
    check_runnable(c)?;
    if trials == 0 {
        return Err(EngineError::ZeroTrials);
    }
    let counts = (0..trials)
        .into_par_iter()
        .fold(BTreeMap::<Transcript, u64>::new, |mut acc, index| {
            let mut bits = CoinStream::for_trial(master_seed, index);
            let run = exec::run_ontic(c, &mut bits, &mut NoopSink, false);
            *acc.entry(run.transcript).or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut left, right| {
            for (t, n) in right {
                *left.entry(t).or_insert(0) += n;
            }
            left
        });
    Ok(OutcomeDistribution::Estimated { counts, trials })
}

/// Total-variation distances between empirical frequencies and the exact
/// distribution at a ladder of trial counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub circuit: String,
    pub seed: u64,
    pub trial_counts: Vec<u64>,
    pub tv_distances: Vec<f64>,
}

/// Runs the ladder of ensembles against `run_exact` and reports per-N TV
/// distance. The list must be nonempty and strictly increasing.
pub fn convergence_experiment(
    c: &Circuit,
    trial_counts: &[u64],
    master_seed: u64,
) -> Result<ConvergenceReport, EngineError> {
    if trial_counts.is_empty()
        || trial_counts.windows(2).any(|w| w[0] >= w[1])
        || trial_counts[0] == 0
    {
        return Err(EngineError::BadTrialList);
    }
    let exact = run_exact(c)?;
    let mut tv_distances = Vec::with_capacity(trial_counts.len());
    for &n in trial_counts {
        let empirical = run_ensemble(c, n, master_seed)?;
        tv_distances.push(empirical.tv_f64(&exact));
    }
    Ok(ConvergenceReport {
        circuit: c.name.clone(),
        seed: master_seed,
        trial_counts: trial_counts.to_vec(),
        tv_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::ontology::{validate_epistemic, ModeId};
    use crate::outcome::{Fate, OutcomePattern, Terminal, TranscriptEntry};
    use crate::prob::Prob;

    fn mz(phase: &str) -> Circuit {
        parse(&format!(
            "circuit mz {{ modes a,b; source excite a; bs a b; phase a {phase}; bs a b; detect a,b; }}"
        ))
        .unwrap()
    }

    fn mz_measure_b() -> Circuit {
        parse(
            "circuit mzm { modes a,b; source excite a; bs a b; phase a 0; measure b nondestructive; bs a b; detect a,b; }",
        )
        .unwrap()
    }

    fn mz_block() -> Circuit {
        parse("circuit mzb { modes a,b; source excite a; bs a b; block b; bs a b; detect a,b; }")
            .unwrap()
    }

    #[test]
    fn interferometer_with_zero_phase_is_a_point_mass_on_the_input_port() {
        let d = run_exact(&mz("0")).unwrap();
        let weights = d.exact_weights().unwrap();
        assert_eq!(weights.len(), 1);
        let (t, p) = weights.iter().next().unwrap();
        assert!(p.is_one());
        assert_eq!(t.terminal, Terminal::Detector(ModeId(0)));
        assert!(t.entries.is_empty());
    }

    #[test]
    fn interferometer_with_pi_phase_switches_ports() {
        let d = run_exact(&mz("pi")).unwrap();
        let weights = d.exact_weights().unwrap();
        assert_eq!(weights.len(), 1);
        assert_eq!(
            weights.keys().next().unwrap().terminal,
            Terminal::Detector(ModeId(1))
        );
    }

    #[test]
    fn which_path_measurement_spreads_mass_evenly() {
        let d = run_exact(&mz_measure_b()).unwrap();
        let weights = d.exact_weights().unwrap();
        assert_eq!(weights.len(), 4);
        for (t, p) in weights {
            assert_eq!(p, &Prob::ratio(1, 4));
            assert_eq!(t.entries.len(), 1);
        }
    }

    #[test]
    fn conditioning_on_the_empty_arm_still_erases_interference() {
        let d = run_exact(&mz_measure_b()).unwrap();
        let pattern = OutcomePattern::entry(
            0,
            TranscriptEntry::Outcome {
                mode: ModeId(1),
                value: 0,
            },
        );
        let conditioned = d.condition(&pattern).unwrap();
        let weights = conditioned.exact_weights().unwrap();
        assert_eq!(weights.len(), 2);
        for p in weights.values() {
            assert_eq!(p, &Prob::half());
        }
    }

    #[test]
    fn blocked_arm_has_the_interaction_free_signature() {
        let fates = run_exact(&mz_block()).unwrap().fate_marginal();
        let map = fates.exact().unwrap().clone();
        assert_eq!(map.get(&Fate::Absorbed(ModeId(1))), Some(&Prob::half()));
        assert_eq!(
            map.get(&Fate::Detected(ModeId(0))),
            Some(&Prob::ratio(1, 4))
        );
        assert_eq!(
            map.get(&Fate::Detected(ModeId(1))),
            Some(&Prob::ratio(1, 4))
        );
        // without the blocker, the second detector is silent
        let unblocked = run_exact(&mz("0")).unwrap().fate_marginal();
        assert_eq!(unblocked.prob_f64(&Fate::Detected(ModeId(1))), 0.0);
    }

    #[test]
    fn epistemic_and_enumerated_routes_agree_exactly() {
        for circuit in [mz("0"), mz("pi"), mz_measure_b(), mz_block()] {
            let a = run_exact(&circuit).unwrap();
            let b = run_exact_enumerated(&circuit).unwrap();
            assert_eq!(a, b, "routes disagree on {}", circuit.name);
        }
    }

    #[test]
    fn mirror_removal_diverts_half_the_ensemble() {
        let c = parse(
            "circuit mr { modes a,b; source excite a; bs a b; divert b; fresh c; bs a c; detect a,c; }",
        )
        .unwrap();
        let d = run_exact(&c).unwrap();
        let fates = d.fate_marginal();
        let map = fates.exact().unwrap();
        assert_eq!(map.get(&Fate::Diverted(ModeId(1))), Some(&Prob::half()));
        assert_eq!(
            map.get(&Fate::Detected(ModeId(0))),
            Some(&Prob::ratio(1, 4))
        );
        assert_eq!(
            map.get(&Fate::Detected(ModeId(2))),
            Some(&Prob::ratio(1, 4))
        );
        assert_eq!(run_exact_enumerated(&c).unwrap(), d);
    }

    #[test]
    fn reachable_states_satisfy_the_epistemic_restriction() {
        for circuit in [mz("0"), mz("pi"), mz_measure_b(), mz_block()] {
            for state in reachable_epistemic_states(&circuit).unwrap() {
                let report = validate_epistemic(&state);
                assert!(
                    report.all_ok(),
                    "reachable state violates restriction in {}: {:?}",
                    circuit.name,
                    report.violations
                );
            }
        }
    }

    #[test]
    fn trials_are_reproducible_and_deterministic() {
        let c = mz_measure_b();
        let a = run_trial(&c, 5, 99).unwrap();
        let b = run_trial(&c, 5, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sector2_events, 0);
        // the point-mass circuit always lands on its detector
        for index in 0..50 {
            let record = run_trial(&mz("0"), index, 1).unwrap();
            assert_eq!(record.transcript.terminal, Terminal::Detector(ModeId(0)));
        }
    }

    #[test]
    fn ensembles_match_exact_distributions_at_scale() {
        let c = mz_measure_b();
        let exact = run_exact(&c).unwrap();
        let empirical = run_ensemble(&c, 20_000, 11).unwrap();
        assert!(empirical.tv_f64(&exact) < 0.02);
    }

    #[test]
    fn sampling_a_point_mass_circuit_gives_frequency_one() {
        let d = run_ensemble(&mz("0"), 1_000, 21).unwrap();
        match d {
            OutcomeDistribution::Estimated { ref counts, trials } => {
                assert_eq!(trials, 1_000);
                assert_eq!(counts.len(), 1);
                let (t, n) = counts.iter().next().unwrap();
                assert_eq!(*n, 1_000);
                assert_eq!(t.terminal, Terminal::Detector(ModeId(0)));
            }
            _ => panic!("expected an estimate"),
        }
    }

    #[test]
    fn single_trial_ensemble_is_a_point_frequency_table() {
        let c = mz("0");
        let d = run_ensemble(&c, 1, 3).unwrap();
        match d {
            OutcomeDistribution::Estimated { ref counts, trials } => {
                assert_eq!(trials, 1);
                assert_eq!(counts.values().sum::<u64>(), 1);
            }
            _ => panic!("expected an estimate"),
        }
        assert!(matches!(
            run_ensemble(&c, 0, 3),
            Err(EngineError::ZeroTrials)
        ));
    }

    #[test]
    fn convergence_ladder_shrinks_for_the_measured_interferometer() {
        let report = convergence_experiment(&mz_measure_b(), &[100, 1_000, 10_000], 5).unwrap();
        assert_eq!(report.tv_distances.len(), 3);
        let last = *report.tv_distances.last().unwrap();
        assert!(last <= 3.0 * (4.0f64 / 10_000.0).sqrt(), "final TV {last}");
        assert!(matches!(
            convergence_experiment(&mz_measure_b(), &[], 5),
            Err(EngineError::BadTrialList)
        ));
        assert!(matches!(
            convergence_experiment(&mz_measure_b(), &[100, 100], 5),
            Err(EngineError::BadTrialList)
        ));
    }

    #[test]
    fn convergence_is_flat_zero_for_point_masses() {
        let report = convergence_experiment(&mz("0"), &[10, 100], 7).unwrap();
        assert_eq!(report.tv_distances, vec![0.0, 0.0]);
    }

    #[test]
    fn fresh_only_circuits_run_from_the_empty_configuration() {
        let c = parse("circuit fresh_only { fresh f; source excite f; detect f; }").unwrap();
        let d = run_exact(&c).unwrap();
        let weights = d.exact_weights().unwrap();
        assert_eq!(weights.len(), 1);
        assert_eq!(
            weights.keys().next().unwrap().terminal,
            Terminal::Detector(ModeId(0))
        );
        assert_eq!(run_exact_enumerated(&c).unwrap(), d);
        assert_eq!(
            crate::quantum::run_quantum(&c)
                .unwrap()
                .prob_f64(weights.keys().next().unwrap()),
            1.0
        );
    }

    #[test]
    fn invalid_circuits_are_rejected_before_running() {
        let c = parse("circuit bad { modes a,b; source excite a; bs a b; }").unwrap();
        assert!(matches!(run_exact(&c), Err(EngineError::InvalidCircuit(_))));
        assert!(matches!(
            run_ensemble(&c, 10, 0),
            Err(EngineError::InvalidCircuit(_))
        ));
    }
}
