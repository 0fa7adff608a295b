//! Ontic and epistemic state spaces for field modes.
//!
//! The systems of the theory are modes, not particles. Each mode carries an
//! occupation number in `{0, 1}` and a phase encoded as a sign in `{+1, -1}`
//! (phase angles 0 and pi). A joint ontic state is one configuration of all
//! live modes; an epistemic state is an exact probability distribution over
//! joint ontic states, stored sparsely on its support.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::prob::Prob;

/// Index of a mode within the current live-mode list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(pub usize);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Phase of a mode, restricted to the two-element group {0, pi} and encoded
/// multiplicatively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Group product: `(+)(+) = +`, `(+)(-) = -`, `(-)(-) = +`.
impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// Complete physical state of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeOnticState {
    pub occupied: bool,
    pub phase: Sign,
}

impl ModeOnticState {
    pub fn new(occupied: bool, phase: Sign) -> Self {
        ModeOnticState { occupied, phase }
    }

    pub fn vacuum(phase: Sign) -> Self {
        ModeOnticState {
            occupied: false,
            phase,
        }
    }

    pub fn occupation(&self) -> u8 {
        u8::from(self.occupied)
    }
}

impl fmt::Display for ModeOnticState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.occupation(), self.phase)
    }
}

/// Joint ontic state of all live modes, ordered by mode index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointOnticState(Vec<ModeOnticState>);

impl JointOnticState {
    pub fn new(modes: Vec<ModeOnticState>) -> Self {
        JointOnticState(modes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn modes(&self) -> &[ModeOnticState] {
        &self.0
    }

    pub fn get(&self, m: ModeId) -> Option<ModeOnticState> {
        self.0.get(m.0).copied()
    }

    pub fn set(&mut self, m: ModeId, value: ModeOnticState) {
        self.0[m.0] = value;
    }

    /// Total occupation over all live modes.
    pub fn excitation_count(&self) -> usize {
        self.0.iter().filter(|m| m.occupied).count()
    }

    pub fn push(&mut self, value: ModeOnticState) {
        self.0.push(value);
    }

    /// Drops a mode slot, shifting later indices down by one.
    pub fn remove(&mut self, m: ModeId) -> ModeOnticState {
        self.0.remove(m.0)
    }
}

impl fmt::Display for JointOnticState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "]")
    }
}

/// Exact probability distribution over joint ontic states; only nonzero
/// weights are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpistemicState {
    modes: usize,
    weights: BTreeMap<JointOnticState, Prob>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },
    #[error("mode count must be at least 1")]
    EmptyModeSet,
    #[error("mode count {0} exceeds the supported enumeration limit of {MAX_MODES}")]
    TooManyModes(usize),
    #[error("weights do not form a distribution: {0}")]
    NotADistribution(String),
}

/// Joint spaces are enumerated explicitly (4^k states), so mode counts are
/// capped well above anything the circuit layer produces.
pub const MAX_MODES: usize = 12;

impl EpistemicState {
    /// Builds a distribution from explicit weights, checking support
    /// positivity, matching mode counts, and exact normalization.
    pub fn from_weights(weights: BTreeMap<JointOnticState, Prob>) -> Result<Self, OntologyError> {
        let mut iter = weights.keys();
        let first = iter
            .next()
            .ok_or_else(|| OntologyError::NotADistribution("empty support".into()))?;
        let modes = first.len();
        for state in weights.keys() {
            if state.len() != modes {
                return Err(OntologyError::NotADistribution(format!(
                    "support states disagree on mode count ({} vs {})",
                    state.len(),
                    modes
                )));
            }
        }
        if weights.values().any(Prob::is_zero) {
            return Err(OntologyError::NotADistribution(
                "stored support contains a zero weight".into(),
            ));
        }
        let total: Prob = weights.values().sum();
        if !total.is_one() {
            return Err(OntologyError::NotADistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(EpistemicState { modes, weights })
    }

    /// Internal constructor for operations that guarantee the invariants.
    pub(crate) fn from_weights_unchecked(
        modes: usize,
        weights: BTreeMap<JointOnticState, Prob>,
    ) -> Self {
        debug_assert!(weights.keys().all(|s| s.len() == modes));
        debug_assert!(weights.values().sum::<Prob>().is_one());
        EpistemicState { modes, weights }
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = (&JointOnticState, &Prob)> {
        self.weights.iter()
    }

    pub fn weight_of(&self, state: &JointOnticState) -> Prob {
        self.weights.get(state).cloned().unwrap_or_else(Prob::zero)
    }

    /// Point mass on a single joint ontic state (useful in tests; such a
    /// state violates the epistemic restriction and `validate_epistemic`
    /// reports that).
    pub fn point_mass(state: JointOnticState) -> Self {
        let modes = state.len();
        let mut weights = BTreeMap::new();
        weights.insert(state, Prob::one());
        EpistemicState { modes, weights }
    }
}

/// Result of checking the epistemic-restriction surrogates on a state.
///
/// The restriction itself is qualitative (no agent can pin down the ontic
/// state); the testable surrogates are exact normalization, a uniform phase
/// marginal on every mode, a `2^-k` ceiling on any single weight for `k`
/// live modes, and dyadic weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub normalized: bool,
    pub phase_marginals_uniform: Vec<bool>,
    pub max_weight_bound_ok: bool,
    pub weights_dyadic: bool,
    pub violations: Vec<String>,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_mode(m: ModeId, modes: usize) -> Result<(), OntologyError> {
    if m.0 < modes {
        Ok(())
    } else {
        Err(OntologyError::ModeOutOfRange { index: m.0, modes })
    }
}

fn enumerate_phase_assignments(
    mode_count: usize,
    occupied: impl Fn(usize) -> bool,
) -> BTreeMap<JointOnticState, Prob> {
    let weight = Prob::pow2_neg(mode_count as u32);
    let mut weights = BTreeMap::new();
    for bits in 0..(1u64 << mode_count) {
        let modes = (0..mode_count)
            .map(|i| ModeOnticState::new(occupied(i), Sign::from_bit(bits >> i & 1 == 1)))
            .collect();
        weights.insert(JointOnticState::new(modes), weight.clone());
    }
    weights
}

/// Preparation with one excitation in `excited` and every phase maximally
/// unknown: support `2^mode_count`, each weight `2^-mode_count`.
pub fn make_source_state(
    mode_count: usize,
    excited: ModeId,
) -> Result<EpistemicState, OntologyError> {
    if mode_count == 0 {
        return Err(OntologyError::EmptyModeSet);
    }
    if mode_count > MAX_MODES {
        return Err(OntologyError::TooManyModes(mode_count));
    }
    check_mode(excited, mode_count)?;
    let weights = enumerate_phase_assignments(mode_count, |i| i == excited.0);
    Ok(EpistemicState::from_weights_unchecked(mode_count, weights))
}

/// Preparation with every mode unoccupied and every phase maximally unknown.
pub fn make_vacuum_state(mode_count: usize) -> Result<EpistemicState, OntologyError> {
    if mode_count == 0 {
        return Err(OntologyError::EmptyModeSet);
    }
    if mode_count > MAX_MODES {
        return Err(OntologyError::TooManyModes(mode_count));
    }
    let weights = enumerate_phase_assignments(mode_count, |_| false);
    Ok(EpistemicState::from_weights_unchecked(mode_count, weights))
}

/// Checks the epistemic-restriction surrogates. Reports, never fails.
pub fn validate_epistemic(state: &EpistemicState) -> ValidityReport {
    let mut violations = Vec::new();

    let total: Prob = state.weights.values().sum();
    let normalized = total.is_one();
    if !normalized {
        violations.push(format!("weights sum to {total}, not 1"));
    }

    let half = Prob::half();
    let mut phase_marginals_uniform = Vec::with_capacity(state.modes);
    for m in 0..state.modes {
        let plus: Prob = state
            .weights
            .iter()
            .filter(|(s, _)| s.modes()[m].phase == Sign::Plus)
            .map(|(_, w)| w)
            .sum();
        let uniform = plus == half;
        if !uniform {
            violations.push(format!(
                "phase marginal of mode {m} is ({plus}, ..) rather than (1/2, 1/2)"
            ));
        }
        phase_marginals_uniform.push(uniform);
    }

    let bound = Prob::pow2_neg(state.modes as u32);
    let max_weight = state
        .weights
        .values()
        .max()
        .cloned()
        .unwrap_or_else(Prob::zero);
    let max_weight_bound_ok = max_weight <= bound;
    if !max_weight_bound_ok {
        violations.push(format!(
            "max weight {max_weight} exceeds the 2^-{} knowledge bound",
            state.modes
        ));
    }

    let weights_dyadic = state.weights.values().all(Prob::is_dyadic);
    if !weights_dyadic {
        violations.push("a stored weight has a non-power-of-two denominator".into());
    }

    ValidityReport {
        normalized,
        phase_marginals_uniform,
        max_weight_bound_ok,
        weights_dyadic,
        violations,
    }
}

/// Exact marginal distribution of a single mode.
pub fn marginal(
    state: &EpistemicState,
    m: ModeId,
) -> Result<BTreeMap<ModeOnticState, Prob>, OntologyError> {
    check_mode(m, state.modes)?;
    let mut out: BTreeMap<ModeOnticState, Prob> = BTreeMap::new();
    for (joint, w) in &state.weights {
        let entry = out.entry(joint.modes()[m.0]).or_insert_with(Prob::zero);
        *entry += w;
    }
    out.retain(|_, w| !w.is_zero());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(occ: bool, sign: Sign) -> ModeOnticState {
        ModeOnticState::new(occ, sign)
    }

    #[test]
    fn source_state_two_modes_enumerates_four_phase_assignments() {
        let state = make_source_state(2, ModeId(0)).unwrap();
        assert_eq!(state.support_size(), 4);
        let quarter = Prob::ratio(1, 4);
        for (joint, w) in state.weights() {
            assert_eq!(w, &quarter);
            assert!(joint.modes()[0].occupied);
            assert!(!joint.modes()[1].occupied);
        }
        // all four sign combinations present
        let signs: Vec<(Sign, Sign)> = state
            .weights()
            .map(|(j, _)| (j.modes()[0].phase, j.modes()[1].phase))
            .collect();
        assert_eq!(signs.len(), 4);
        for a in [Sign::Plus, Sign::Minus] {
            for b in [Sign::Plus, Sign::Minus] {
                assert!(signs.contains(&(a, b)));
            }
        }
    }

    #[test]
    fn source_state_single_mode() {
        let state = make_source_state(1, ModeId(0)).unwrap();
        assert_eq!(state.support_size(), 2);
        assert_eq!(
            state.weight_of(&JointOnticState::new(vec![s(true, Sign::Plus)])),
            Prob::half()
        );
        assert_eq!(
            state.weight_of(&JointOnticState::new(vec![s(true, Sign::Minus)])),
            Prob::half()
        );
    }

    #[test]
    fn source_state_three_modes_middle_excited() {
        let state = make_source_state(3, ModeId(1)).unwrap();
        assert_eq!(state.support_size(), 8);
        let eighth = Prob::pow2_neg(3);
        for (joint, w) in state.weights() {
            assert_eq!(w, &eighth);
            let occ: Vec<u8> = joint.modes().iter().map(|m| m.occupation()).collect();
            assert_eq!(occ, vec![0, 1, 0]);
        }
    }

    #[test]
    fn source_state_rejects_out_of_range_excitation() {
        assert_eq!(
            make_source_state(2, ModeId(2)),
            Err(OntologyError::ModeOutOfRange { index: 2, modes: 2 })
        );
    }

    #[test]
    fn vacuum_state_single_mode_and_empty_rejection() {
        let state = make_vacuum_state(1).unwrap();
        assert_eq!(state.support_size(), 2);
        assert_eq!(
            state.weight_of(&JointOnticState::new(vec![s(false, Sign::Plus)])),
            Prob::half()
        );
        assert_eq!(make_vacuum_state(0), Err(OntologyError::EmptyModeSet));
    }

    #[test]
    fn vacuum_state_two_modes() {
        let state = make_vacuum_state(2).unwrap();
        assert_eq!(state.support_size(), 4);
        for (joint, w) in state.weights() {
            assert_eq!(w, &Prob::ratio(1, 4));
            assert_eq!(joint.excitation_count(), 0);
        }
    }

    #[test]
    fn constructors_pass_validation() {
        for state in [
            make_source_state(2, ModeId(0)).unwrap(),
            make_source_state(3, ModeId(2)).unwrap(),
            make_vacuum_state(1).unwrap(),
            make_vacuum_state(4).unwrap(),
        ] {
            let report = validate_epistemic(&state);
            assert!(report.all_ok(), "violations: {:?}", report.violations);
            assert!(report.normalized);
            assert!(report.max_weight_bound_ok);
            assert!(report.weights_dyadic);
            assert!(report.phase_marginals_uniform.iter().all(|&ok| ok));
        }
    }

    #[test]
    fn point_mass_violates_the_restriction() {
        let state = EpistemicState::point_mass(JointOnticState::new(vec![
            s(true, Sign::Plus),
            s(false, Sign::Plus),
        ]));
        let report = validate_epistemic(&state);
        assert!(report.normalized);
        assert!(!report.max_weight_bound_ok);
        assert_eq!(report.phase_marginals_uniform, vec![false, false]);
        assert!(!report.all_ok());
    }

    #[test]
    fn marginals_of_source_state() {
        let state = make_source_state(2, ModeId(0)).unwrap();
        let ma = marginal(&state, ModeId(0)).unwrap();
        assert_eq!(ma.get(&s(true, Sign::Plus)), Some(&Prob::half()));
        assert_eq!(ma.get(&s(true, Sign::Minus)), Some(&Prob::half()));
        assert_eq!(ma.len(), 2);

        let mb = marginal(&state, ModeId(1)).unwrap();
        assert_eq!(mb.get(&s(false, Sign::Plus)), Some(&Prob::half()));
        assert_eq!(mb.get(&s(false, Sign::Minus)), Some(&Prob::half()));

        assert!(marginal(&state, ModeId(5)).is_err());
    }

    #[test]
    fn marginal_of_point_mass() {
        let state = EpistemicState::point_mass(JointOnticState::new(vec![
            s(true, Sign::Minus),
            s(false, Sign::Plus),
        ]));
        let ma = marginal(&state, ModeId(0)).unwrap();
        assert_eq!(ma.len(), 1);
        assert_eq!(ma.get(&s(true, Sign::Minus)), Some(&Prob::one()));
    }

    #[test]
    fn from_weights_enforces_normalization() {
        let mut weights = BTreeMap::new();
        weights.insert(
            JointOnticState::new(vec![s(true, Sign::Plus)]),
            Prob::half(),
        );
        assert!(matches!(
            EpistemicState::from_weights(weights),
            Err(OntologyError::NotADistribution(_))
        ));
    }
}
