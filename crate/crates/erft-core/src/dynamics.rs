//! Deterministic transformations and measurement instruments.
//!
//! Transformations are bijections on the joint ontic space; a mode that no
//! element touches keeps both its occupation and its phase. Measurements of
//! occupation number read the occupation deterministically and randomize the
//! measured mode's phase regardless of the outcome; the destructive variant
//! additionally absorbs the excitation when present. Randomization coins are
//! explicit arguments so exact engines can sum over them.
//!
//! The beamsplitter rule routes by the phase product of its two ports: in
//! the one-excitation sector the excitation hops exactly when
//! `s_i * s_j = -1`, and phases are never altered. Both occupied and both
//! empty ports are fixed points, which makes the map an involution.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ontology::{EpistemicState, JointOnticState, ModeId, ModeOnticState, Sign};
use crate::prob::Prob;
use crate::trace::{AccessSink, ModeVar, NoopSink, Var};

/// Phase-shift angles the toy dynamics admits. Anything outside {0, pi} is
/// unrepresentable here by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseAngle {
    Zero,
    Pi,
}

impl PhaseAngle {
    pub fn radians(self) -> f64 {
        match self {
            PhaseAngle::Zero => 0.0,
            PhaseAngle::Pi => std::f64::consts::PI,
        }
    }
}

/// A deterministic dynamical law acting on declared modes only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transformation {
    Beamsplitter { i: ModeId, j: ModeId },
    PhaseShift { mode: ModeId, angle: PhaseAngle },
    Identity,
}

/// An occupation-number measurement on a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instrument {
    Nondestructive(ModeId),
    Destructive(ModeId),
}

impl Instrument {
    pub fn mode(&self) -> ModeId {
        match self {
            Instrument::Nondestructive(m) | Instrument::Destructive(m) => *m,
        }
    }

    pub fn is_destructive(&self) -> bool {
        matches!(self, Instrument::Destructive(_))
    }
}

/// The fair bit consumed by one phase randomization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coin {
    Heads,
    Tails,
}

impl Coin {
    pub fn sign(self) -> Sign {
        match self {
            Coin::Heads => Sign::Plus,
            Coin::Tails => Sign::Minus,
        }
    }

    pub fn from_bit(bit: bool) -> Coin {
        if bit {
            Coin::Heads
        } else {
            Coin::Tails
        }
    }
}

/// One branch of an epistemic measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementResult {
    pub outcome: u8,
    pub probability: Prob,
    pub post_state: EpistemicState,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },
    #[error("beamsplitter ports must differ (got {0} twice)")]
    DegenerateBeamsplitter(ModeId),
}

fn check_mode(m: ModeId, modes: usize) -> Result<(), DynamicsError> {
    if m.0 < modes {
        Ok(())
    } else {
        Err(DynamicsError::ModeOutOfRange { index: m.0, modes })
    }
}

/// Outcome of one ontic-level beamsplitter application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsSector {
    /// Both ports occupied: defined as identity, but flagged because the
    /// one-excitation analysis does not cover it.
    pub dual_occupancy: bool,
}

/// Applies a beamsplitter through a mode-access layer, so callers can record
/// exactly which variables the rule touches.
pub(crate) fn beamsplitter_step(
    state: &mut JointOnticState,
    i: ModeId,
    j: ModeId,
    element: usize,
    sink: &mut dyn AccessSink,
) -> BsSector {
    let ni = read_occ(state, i, element, sink);
    let nj = read_occ(state, j, element, sink);
    match (ni, nj) {
        (true, true) => BsSector {
            dual_occupancy: true,
        },
        (false, false) => BsSector {
            dual_occupancy: false,
        },
        _ => {
            let si = read_phase(state, i, element, sink);
            let sj = read_phase(state, j, element, sink);
            if si * sj == Sign::Minus {
                write_occ(state, i, nj, element, sink);
                write_occ(state, j, ni, element, sink);
            }
            BsSector {
                dual_occupancy: false,
            }
        }
    }
}

pub(crate) fn phase_step(
    state: &mut JointOnticState,
    m: ModeId,
    angle: PhaseAngle,
    element: usize,
    sink: &mut dyn AccessSink,
) {
    if angle == PhaseAngle::Pi {
        let s = read_phase(state, m, element, sink);
        write_phase(state, m, s.flip(), element, sink);
    }
}

pub(crate) fn measure_step(
    state: &mut JointOnticState,
    instrument: Instrument,
    coin: Coin,
    element: usize,
    sink: &mut dyn AccessSink,
) -> u8 {
    let m = instrument.mode();
    let n = read_occ(state, m, element, sink);
    write_phase(state, m, coin.sign(), element, sink);
    if instrument.is_destructive() && n {
        write_occ(state, m, false, element, sink);
    }
    u8::from(n)
}

fn read_occ(state: &JointOnticState, m: ModeId, element: usize, sink: &mut dyn AccessSink) -> bool {
    sink.read(
        element,
        ModeVar {
            mode: m,
            var: Var::Occupation,
        },
    );
    state.modes()[m.0].occupied
}

fn read_phase(
    state: &JointOnticState,
    m: ModeId,
    element: usize,
    sink: &mut dyn AccessSink,
) -> Sign {
    sink.read(
        element,
        ModeVar {
            mode: m,
            var: Var::Phase,
        },
    );
    state.modes()[m.0].phase
}

fn write_occ(
    state: &mut JointOnticState,
    m: ModeId,
    value: bool,
    element: usize,
    sink: &mut dyn AccessSink,
) {
    sink.write(
        element,
        ModeVar {
            mode: m,
            var: Var::Occupation,
        },
    );
    let old = state.modes()[m.0];
    state.set(m, ModeOnticState::new(value, old.phase));
}

fn write_phase(
    state: &mut JointOnticState,
    m: ModeId,
    value: Sign,
    element: usize,
    sink: &mut dyn AccessSink,
) {
    sink.write(
        element,
        ModeVar {
            mode: m,
            var: Var::Phase,
        },
    );
    let old = state.modes()[m.0];
    state.set(m, ModeOnticState::new(old.occupied, value));
}

/// Applies a transformation to a joint ontic state.
pub fn apply_transformation_ontic(
    state: &JointOnticState,
    t: &Transformation,
) -> Result<JointOnticState, DynamicsError> {
    let modes = state.len();
    let mut out = state.clone();
    match *t {
        Transformation::Identity => {}
        Transformation::PhaseShift { mode, angle } => {
            check_mode(mode, modes)?;
            phase_step(&mut out, mode, angle, 0, &mut NoopSink);
        }
        Transformation::Beamsplitter { i, j } => {
            check_mode(i, modes)?;
            check_mode(j, modes)?;
            if i == j {
                return Err(DynamicsError::DegenerateBeamsplitter(i));
            }
            beamsplitter_step(&mut out, i, j, 0, &mut NoopSink);
        }
    }
    Ok(out)
}

/// Exact image distribution under the (bijective) transformation.
pub fn pushforward(
    p: &EpistemicState,
    t: &Transformation,
) -> Result<EpistemicState, DynamicsError> {
    let mut weights: BTreeMap<JointOnticState, Prob> = BTreeMap::new();
    for (state, w) in p.weights() {
        let image = apply_transformation_ontic(state, t)?;
        let entry = weights.entry(image).or_insert_with(Prob::zero);
        *entry += w;
    }
    Ok(EpistemicState::from_weights_unchecked(
        p.mode_count(),
        weights,
    ))
}

/// Nondestructive occupation measurement on one ontic state: the outcome is
/// the occupation itself, and only the measured mode's phase is disturbed.
pub fn measure_nondestructive_ontic(
    state: &JointOnticState,
    m: ModeId,
    coin: Coin,
) -> Result<(u8, JointOnticState), DynamicsError> {
    check_mode(m, state.len())?;
    let mut out = state.clone();
    let outcome = measure_step(
        &mut out,
        Instrument::Nondestructive(m),
        coin,
        0,
        &mut NoopSink,
    );
    Ok((outcome, out))
}

/// Destructive occupation measurement: absorbs the excitation if present and
/// leaves the mode in vacuum with a randomized phase.
pub fn measure_destructive_ontic(
    state: &JointOnticState,
    m: ModeId,
    coin: Coin,
) -> Result<(u8, JointOnticState), DynamicsError> {
    check_mode(m, state.len())?;
    let mut out = state.clone();
    let outcome = measure_step(&mut out, Instrument::Destructive(m), coin, 0, &mut NoopSink);
    Ok((outcome, out))
}

fn measure_epistemic(
    p: &EpistemicState,
    instrument: Instrument,
) -> Result<Vec<MeasurementResult>, DynamicsError> {
    let m = instrument.mode();
    check_mode(m, p.mode_count())?;
    let mut results = Vec::new();
    for outcome in [0u8, 1u8] {
        // Select the subensemble consistent with the outcome.
        let selected: Vec<(&JointOnticState, &Prob)> = p
            .weights()
            .filter(|(s, _)| s.modes()[m.0].occupation() == outcome)
            .collect();
        let probability: Prob = selected.iter().map(|(_, w)| *w).sum();
        if probability.is_zero() {
            continue;
        }
        // Condition, then mix the two coin branches: the measured mode's
        // phase marginal becomes uniform and independent, and the
        // destructive variant pins its occupation to vacuum.
        let mut weights: BTreeMap<JointOnticState, Prob> = BTreeMap::new();
        for (state, w) in selected {
            let conditioned = w / &probability;
            let split = conditioned / Prob::ratio(2, 1);
            let n_after = if instrument.is_destructive() {
                false
            } else {
                state.modes()[m.0].occupied
            };
            for sign in [Sign::Plus, Sign::Minus] {
                let mut post = state.clone();
                post.set(m, ModeOnticState::new(n_after, sign));
                let entry = weights.entry(post).or_insert_with(Prob::zero);
                *entry += &split;
            }
        }
        results.push(MeasurementResult {
            outcome,
            probability,
            post_state: EpistemicState::from_weights_unchecked(p.mode_count(), weights),
        });
    }
    Ok(results)
}

/// Epistemic branches of a nondestructive measurement, one per outcome with
/// nonzero probability.
pub fn measure_nondestructive_epistemic(
    p: &EpistemicState,
    m: ModeId,
) -> Result<Vec<MeasurementResult>, DynamicsError> {
    measure_epistemic(p, Instrument::Nondestructive(m))
}

/// Epistemic branches of a destructive measurement.
pub fn measure_destructive_epistemic(
    p: &EpistemicState,
    m: ModeId,
) -> Result<Vec<MeasurementResult>, DynamicsError> {
    measure_epistemic(p, Instrument::Destructive(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{make_source_state, make_vacuum_state, validate_epistemic};

    fn joint(states: &[(u8, Sign)]) -> JointOnticState {
        JointOnticState::new(
            states
                .iter()
                .map(|&(n, s)| ModeOnticState::new(n == 1, s))
                .collect(),
        )
    }

    fn bs() -> Transformation {
        Transformation::Beamsplitter {
            i: ModeId(0),
            j: ModeId(1),
        }
    }

    #[test]
    fn beamsplitter_rule_table_one_excitation() {
        // Excitation stays when the phase product is +1, hops when it is -1;
        // phases never move.
        let cases = [
            (
                joint(&[(1, Sign::Plus), (0, Sign::Plus)]),
                joint(&[(1, Sign::Plus), (0, Sign::Plus)]),
            ),
            (
                joint(&[(1, Sign::Plus), (0, Sign::Minus)]),
                joint(&[(0, Sign::Plus), (1, Sign::Minus)]),
            ),
            (
                joint(&[(1, Sign::Minus), (0, Sign::Plus)]),
                joint(&[(0, Sign::Minus), (1, Sign::Plus)]),
            ),
            (
                joint(&[(1, Sign::Minus), (0, Sign::Minus)]),
                joint(&[(1, Sign::Minus), (0, Sign::Minus)]),
            ),
            (
                joint(&[(0, Sign::Plus), (1, Sign::Minus)]),
                joint(&[(1, Sign::Plus), (0, Sign::Minus)]),
            ),
            (
                joint(&[(0, Sign::Minus), (1, Sign::Minus)]),
                joint(&[(0, Sign::Minus), (1, Sign::Minus)]),
            ),
        ];
        for (input, expect) in cases {
            assert_eq!(apply_transformation_ontic(&input, &bs()).unwrap(), expect);
        }
    }

    #[test]
    fn beamsplitter_is_an_involutive_bijection_on_the_full_two_mode_space() {
        let mut images = std::collections::BTreeSet::new();
        for state in all_two_mode_states() {
            let once = apply_transformation_ontic(&state, &bs()).unwrap();
            let twice = apply_transformation_ontic(&once, &bs()).unwrap();
            assert_eq!(twice, state, "not an involution at {state}");
            images.insert(once);
        }
        assert_eq!(images.len(), 16, "not a bijection");
    }

    #[test]
    fn transformations_conserve_occupation_and_leave_foreign_modes_alone() {
        let transforms = [
            bs(),
            Transformation::PhaseShift {
                mode: ModeId(0),
                angle: PhaseAngle::Pi,
            },
            Transformation::PhaseShift {
                mode: ModeId(1),
                angle: PhaseAngle::Zero,
            },
            Transformation::Identity,
        ];
        for state in all_three_mode_states() {
            for t in &transforms {
                let out = apply_transformation_ontic(&state, t).unwrap();
                assert_eq!(out.excitation_count(), state.excitation_count());
                // mode 2 is outside every declared mode set above
                assert_eq!(out.modes()[2], state.modes()[2]);
            }
        }
    }

    #[test]
    fn phase_pi_flips_only_the_target_sign() {
        let input = joint(&[(1, Sign::Plus), (0, Sign::Minus)]);
        let t = Transformation::PhaseShift {
            mode: ModeId(0),
            angle: PhaseAngle::Pi,
        };
        assert_eq!(
            apply_transformation_ontic(&input, &t).unwrap(),
            joint(&[(1, Sign::Minus), (0, Sign::Minus)])
        );
    }

    #[test]
    fn dual_occupancy_sector_is_identity() {
        for sa in [Sign::Plus, Sign::Minus] {
            for sb in [Sign::Plus, Sign::Minus] {
                let input = joint(&[(1, sa), (1, sb)]);
                assert_eq!(apply_transformation_ontic(&input, &bs()).unwrap(), input);
                let vac = joint(&[(0, sa), (0, sb)]);
                assert_eq!(apply_transformation_ontic(&vac, &bs()).unwrap(), vac);
            }
        }
    }

    #[test]
    fn beamsplitter_rejects_bad_modes() {
        let state = joint(&[(1, Sign::Plus), (0, Sign::Plus)]);
        assert!(apply_transformation_ontic(
            &state,
            &Transformation::Beamsplitter {
                i: ModeId(0),
                j: ModeId(5)
            }
        )
        .is_err());
        assert_eq!(
            apply_transformation_ontic(
                &state,
                &Transformation::Beamsplitter {
                    i: ModeId(1),
                    j: ModeId(1)
                }
            ),
            Err(DynamicsError::DegenerateBeamsplitter(ModeId(1)))
        );
    }

    #[test]
    fn pushforward_of_source_routes_by_phase_product() {
        let source = make_source_state(2, ModeId(0)).unwrap();
        let pushed = pushforward(&source, &bs()).unwrap();
        assert_eq!(pushed.support_size(), 4);
        for (state, w) in pushed.weights() {
            assert_eq!(w, &Prob::ratio(1, 4));
            let t = state.modes()[0].phase * state.modes()[1].phase;
            let in_first = state.modes()[0].occupied;
            assert_eq!(in_first, t == Sign::Plus);
        }
    }

    #[test]
    fn pushforward_identity_and_involution() {
        let source = make_source_state(2, ModeId(0)).unwrap();
        assert_eq!(
            pushforward(&source, &Transformation::Identity).unwrap(),
            source
        );
        let twice = pushforward(&pushforward(&source, &bs()).unwrap(), &bs()).unwrap();
        assert_eq!(twice, source);
    }

    #[test]
    fn nondestructive_ontic_measurement_reads_occupation_and_randomizes_phase() {
        let x = joint(&[(1, Sign::Minus), (0, Sign::Minus)]);
        let (outcome, post) = measure_nondestructive_ontic(&x, ModeId(0), Coin::Heads).unwrap();
        assert_eq!(outcome, 1);
        assert_eq!(post, joint(&[(1, Sign::Plus), (0, Sign::Minus)]));

        let (outcome, post) = measure_nondestructive_ontic(&x, ModeId(1), Coin::Tails).unwrap();
        assert_eq!(outcome, 0);
        assert_eq!(post, joint(&[(1, Sign::Minus), (0, Sign::Minus)]));
    }

    #[test]
    fn ontic_measurement_leaves_other_modes_bitwise_identical() {
        for state in all_two_mode_states() {
            for coin in [Coin::Heads, Coin::Tails] {
                let (outcome, post) =
                    measure_nondestructive_ontic(&state, ModeId(0), coin).unwrap();
                assert_eq!(outcome, state.modes()[0].occupation());
                assert_eq!(post.modes()[1], state.modes()[1]);
                assert_eq!(post.modes()[0].occupied, state.modes()[0].occupied);
                assert_eq!(post.modes()[0].phase, coin.sign());
            }
        }
    }

    #[test]
    fn destructive_ontic_measurement_absorbs() {
        let x = joint(&[(1, Sign::Minus), (0, Sign::Plus)]);
        let (outcome, post) = measure_destructive_ontic(&x, ModeId(0), Coin::Tails).unwrap();
        assert_eq!(outcome, 1);
        assert_eq!(post, joint(&[(0, Sign::Minus), (0, Sign::Plus)]));

        let (outcome, post) = measure_destructive_ontic(&x, ModeId(1), Coin::Heads).unwrap();
        assert_eq!(outcome, 0);
        assert_eq!(post, joint(&[(1, Sign::Minus), (0, Sign::Plus)]));
    }

    #[test]
    fn epistemic_measurement_after_beamsplitter_is_fifty_fifty() {
        let source = make_source_state(2, ModeId(0)).unwrap();
        let pushed = pushforward(&source, &bs()).unwrap();
        let branches = measure_nondestructive_epistemic(&pushed, ModeId(1)).unwrap();
        assert_eq!(branches.len(), 2);
        for branch in &branches {
            assert_eq!(branch.probability, Prob::half());
            let report = validate_epistemic(&branch.post_state);
            assert!(report.all_ok(), "violations: {:?}", report.violations);
        }
    }

    #[test]
    fn epistemic_measurement_on_vacuum_is_a_single_branch() {
        let vacuum = make_vacuum_state(2).unwrap();
        let branches = measure_nondestructive_epistemic(&vacuum, ModeId(0)).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].outcome, 0);
        assert_eq!(branches[0].probability, Prob::one());
        assert_eq!(branches[0].post_state, vacuum);
    }

    #[test]
    fn destructive_epistemic_branches_after_beamsplitter() {
        let source = make_source_state(2, ModeId(0)).unwrap();
        let pushed = pushforward(&source, &bs()).unwrap();
        let branches = measure_destructive_epistemic(&pushed, ModeId(1)).unwrap();
        assert_eq!(branches.len(), 2);
        for branch in &branches {
            assert_eq!(branch.probability, Prob::half());
            // measured mode ends in vacuum on both branches
            for (state, _) in branch.post_state.weights() {
                assert!(!state.modes()[1].occupied);
            }
            assert!(validate_epistemic(&branch.post_state).all_ok());
        }
    }

    #[test]
    fn epistemic_branch_equals_coin_mixture_of_ontic_branches() {
        // Brute-force equivalence: conditioning the ontic rule on the
        // outcome and averaging over coins must reproduce the epistemic
        // instrument, state by state.
        let source = make_source_state(2, ModeId(0)).unwrap();
        let states = [
            source.clone(),
            pushforward(&source, &bs()).unwrap(),
            make_vacuum_state(2).unwrap(),
        ];
        for p in &states {
            for m in [ModeId(0), ModeId(1)] {
                for destructive in [false, true] {
                    let branches = if destructive {
                        measure_destructive_epistemic(p, m).unwrap()
                    } else {
                        measure_nondestructive_epistemic(p, m).unwrap()
                    };
                    for branch in branches {
                        let mut expect: BTreeMap<JointOnticState, Prob> = BTreeMap::new();
                        for (state, w) in p.weights() {
                            if state.modes()[m.0].occupation() != branch.outcome {
                                continue;
                            }
                            for coin in [Coin::Heads, Coin::Tails] {
                                let (_, post) = if destructive {
                                    measure_destructive_ontic(state, m, coin).unwrap()
                                } else {
                                    measure_nondestructive_ontic(state, m, coin).unwrap()
                                };
                                let share = &(w / &branch.probability) / &Prob::ratio(2, 1);
                                *expect.entry(post).or_insert_with(Prob::zero) += &share;
                            }
                        }
                        expect.retain(|_, w| !w.is_zero());
                        let expected =
                            EpistemicState::from_weights_unchecked(p.mode_count(), expect);
                        assert_eq!(branch.post_state, expected);
                    }
                }
            }
        }
    }

    fn all_two_mode_states() -> Vec<JointOnticState> {
        let mut out = Vec::new();
        for bits in 0..16u8 {
            out.push(JointOnticState::new(vec![
                ModeOnticState::new(bits & 1 == 1, Sign::from_bit(bits & 2 != 0)),
                ModeOnticState::new(bits & 4 != 0, Sign::from_bit(bits & 8 != 0)),
            ]));
        }
        out
    }

    fn all_three_mode_states() -> Vec<JointOnticState> {
        let mut out = Vec::new();
        for bits in 0..64u8 {
            out.push(JointOnticState::new(vec![
                ModeOnticState::new(bits & 1 == 1, Sign::from_bit(bits & 2 != 0)),
                ModeOnticState::new(bits & 4 != 0, Sign::from_bit(bits & 8 != 0)),
                ModeOnticState::new(bits & 16 != 0, Sign::from_bit(bits & 32 != 0)),
            ]));
        }
        out
    }
}
