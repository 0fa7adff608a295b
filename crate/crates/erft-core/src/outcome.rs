//! Outcome transcripts and distributions over them.
//!
//! A trial's observable record is a transcript: one entry per instrument
//! encountered (occupation readouts, absorptions, diversions) plus exactly
//! one terminal label (a detector or "none"). Distributions over
//! transcripts come in three storages: exact rationals from the toy
//! engine, reals from the quantum reference, and raw counts from sampling.
//! Conditioning selects the subensemble consistent with a partial outcome
//! pattern and renormalizes; exact stays exact.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ontology::ModeId;
use crate::prob::Prob;

/// One instrument entry in a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TranscriptEntry {
    /// Occupation readout: `mode=0` or `mode=1` (nondestructive finds).
    Outcome { mode: ModeId, value: u8 },
    /// Destructive measurement found and absorbed the excitation.
    Absorbed { mode: ModeId },
    /// The excitation left the circuit with a diverted mode.
    Diverted { mode: ModeId },
}

/// Terminal label of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Terminal {
    Detector(ModeId),
    None,
}

/// Full outcome record of one trial: ordered instrument entries plus the
/// terminal detection label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    pub terminal: Terminal,
}

impl Transcript {
    pub fn render(&self, mode_names: &[String]) -> String {
        let mut parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| render_entry(e, mode_names))
            .collect();
        parts.push(render_terminal(&self.terminal, mode_names));
        parts.join(",")
    }
}

fn render_entry(entry: &TranscriptEntry, names: &[String]) -> String {
    match entry {
        TranscriptEntry::Outcome { mode, value } => format!("{}={}", names[mode.0], value),
        TranscriptEntry::Absorbed { mode } => format!("absorbed@{}", names[mode.0]),
        TranscriptEntry::Diverted { mode } => format!("diverted@{}", names[mode.0]),
    }
}

fn render_terminal(terminal: &Terminal, names: &[String]) -> String {
    match terminal {
        Terminal::Detector(m) => format!("D_{}", names[m.0]),
        Terminal::None => "none".into(),
    }
}

/// Where the excitation ended up: the coarsest view of a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fate {
    Absorbed(ModeId),
    Diverted(ModeId),
    Detected(ModeId),
    Undetected,
}

impl Fate {
    pub fn of(t: &Transcript) -> Fate {
        for entry in &t.entries {
            match entry {
                TranscriptEntry::Absorbed { mode } => return Fate::Absorbed(*mode),
                TranscriptEntry::Diverted { mode } => return Fate::Diverted(*mode),
                TranscriptEntry::Outcome { .. } => {}
            }
        }
        match t.terminal {
            Terminal::Detector(m) => Fate::Detected(m),
            Terminal::None => Fate::Undetected,
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        match self {
            Fate::Absorbed(m) => format!("absorbed@{}", names[m.0]),
            Fate::Diverted(m) => format!("diverted@{}", names[m.0]),
            Fate::Detected(m) => format!("D_{}", names[m.0]),
            Fate::Undetected => "none".into(),
        }
    }
}

/// A partial outcome assignment: constraints on specific instrument
/// positions and optionally on the terminal label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutcomePattern {
    pub entries: Vec<(usize, TranscriptEntry)>,
    pub terminal: Option<Terminal>,
}

impl OutcomePattern {
    pub fn entry(position: usize, entry: TranscriptEntry) -> Self {
        OutcomePattern {
            entries: vec![(position, entry)],
            terminal: None,
        }
    }

    pub fn matches(&self, t: &Transcript) -> bool {
        self.entries
            .iter()
            .all(|(pos, want)| t.entries.get(*pos) == Some(want))
            && self.terminal.is_none_or(|want| t.terminal == want)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OutcomeError {
    #[error("conditioning pattern has zero probability")]
    ZeroProbabilityPattern,
}

/// Probability mass over transcripts.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeDistribution {
    /// Exact rational weights (toy engine).
    Exact(BTreeMap<Transcript, Prob>),
    /// Real weights (quantum reference; exact up to float rounding).
    Real(BTreeMap<Transcript, f64>),
    /// Empirical counts over `trials` samples.
    Estimated {
        counts: BTreeMap<Transcript, u64>,
        trials: u64,
    },
}

impl OutcomeDistribution {
    pub fn kind_label(&self) -> &'static str {
        match self {
            OutcomeDistribution::Exact(_) => "exact",
            OutcomeDistribution::Real(_) => "exact",
            OutcomeDistribution::Estimated { .. } => "estimated",
        }
    }

    pub fn support(&self) -> Vec<&Transcript> {
        match self {
            OutcomeDistribution::Exact(m) => m.keys().collect(),
            OutcomeDistribution::Real(m) => m.keys().collect(),
            OutcomeDistribution::Estimated { counts, .. } => counts.keys().collect(),
        }
    }

    pub fn prob_f64(&self, t: &Transcript) -> f64 {
        match self {
            OutcomeDistribution::Exact(m) => m.get(t).map_or(0.0, Prob::to_f64),
            OutcomeDistribution::Real(m) => m.get(t).copied().unwrap_or(0.0),
            OutcomeDistribution::Estimated { counts, trials } => {
                counts.get(t).copied().unwrap_or(0) as f64 / *trials as f64
            }
        }
    }

    pub fn exact_weights(&self) -> Option<&BTreeMap<Transcript, Prob>> {
        match self {
            OutcomeDistribution::Exact(m) => Some(m),
            _ => None,
        }
    }

    /// Selects the subensemble consistent with `pattern` and renormalizes.
    pub fn condition(&self, pattern: &OutcomePattern) -> Result<OutcomeDistribution, OutcomeError> {
        match self {
            OutcomeDistribution::Exact(map) => {
                let selected: BTreeMap<Transcript, Prob> = map
                    .iter()
                    .filter(|(t, _)| pattern.matches(t))
                    .map(|(t, p)| (t.clone(), p.clone()))
                    .collect();
                let total: Prob = selected.values().sum();
                if total.is_zero() {
                    return Err(OutcomeError::ZeroProbabilityPattern);
                }
                Ok(OutcomeDistribution::Exact(
                    selected
                        .into_iter()
                        .map(|(t, p)| (t, &p / &total))
                        .collect(),
                ))
            }
            OutcomeDistribution::Real(map) => {
                let selected: BTreeMap<Transcript, f64> = map
                    .iter()
                    .filter(|(t, _)| pattern.matches(t))
                    .map(|(t, p)| (t.clone(), *p))
                    .collect();
                let total: f64 = selected.values().sum();
                if total <= 0.0 {
                    return Err(OutcomeError::ZeroProbabilityPattern);
                }
                Ok(OutcomeDistribution::Real(
                    selected.into_iter().map(|(t, p)| (t, p / total)).collect(),
                ))
            }
            OutcomeDistribution::Estimated { counts, .. } => {
                let selected: BTreeMap<Transcript, u64> = counts
                    .iter()
                    .filter(|(t, _)| pattern.matches(t))
                    .map(|(t, n)| (t.clone(), *n))
                    .collect();
                let subtotal: u64 = selected.values().sum();
                if subtotal == 0 {
                    return Err(OutcomeError::ZeroProbabilityPattern);
                }
                Ok(OutcomeDistribution::Estimated {
                    counts: selected,
                    trials: subtotal,
                })
            }
        }
    }

    /// Projects transcripts through `f`, accumulating mass per image. The
    /// projection must not depend on anything outside the transcript.
    pub fn project<K: Ord>(&self, f: impl Fn(&Transcript) -> K) -> ProjectedDistribution<K> {
        match self {
            OutcomeDistribution::Exact(map) => {
                let mut out: BTreeMap<K, Prob> = BTreeMap::new();
                for (t, p) in map {
                    *out.entry(f(t)).or_insert_with(Prob::zero) += p;
                }
                ProjectedDistribution::Exact(out)
            }
            OutcomeDistribution::Real(map) => {
                let mut out: BTreeMap<K, f64> = BTreeMap::new();
                for (t, p) in map {
                    *out.entry(f(t)).or_insert(0.0) += p;
                }
                ProjectedDistribution::Real(out)
            }
            OutcomeDistribution::Estimated { counts, trials } => {
                let mut out: BTreeMap<K, f64> = BTreeMap::new();
                for (t, n) in counts {
                    *out.entry(f(t)).or_insert(0.0) += *n as f64 / *trials as f64;
                }
                ProjectedDistribution::Real(out)
            }
        }
    }

    /// Marginal over where the excitation ended up.
    pub fn fate_marginal(&self) -> ProjectedDistribution<Fate> {
        self.project(Fate::of)
    }

    /// Keeps only the listed entry positions (and optionally the terminal),
    /// marginalizing everything else out.
    pub fn marginalize_positions(
        &self,
        keep: &[usize],
        keep_terminal: bool,
    ) -> ProjectedDistribution<(Vec<Option<TranscriptEntry>>, Option<Terminal>)> {
        self.project(|t| {
            let entries = keep.iter().map(|&i| t.entries.get(i).copied()).collect();
            let terminal = keep_terminal.then_some(t.terminal);
            (entries, terminal)
        })
    }

    /// Total-variation distance to another distribution, in floats.
    pub fn tv_f64(&self, other: &OutcomeDistribution) -> f64 {
        let mut keys: Vec<&Transcript> = self.support();
        for t in other.support() {
            if !keys.contains(&t) {
                keys.push(t);
            }
        }
        0.5 * keys
            .into_iter()
            .map(|t| (self.prob_f64(t) - other.prob_f64(t)).abs())
            .sum::<f64>()
    }

    /// Exact total-variation distance between two exact distributions.
    pub fn tv_exact(&self, other: &OutcomeDistribution) -> Option<Prob> {
        let (a, b) = (self.exact_weights()?, other.exact_weights()?);
        let mut total = Prob::zero();
        for (t, p) in a {
            let q = b.get(t).cloned().unwrap_or_else(Prob::zero);
            total += &p.abs_diff(&q);
        }
        for (t, q) in b {
            if !a.contains_key(t) {
                total += &q.abs_diff(&Prob::zero());
            }
        }
        Some(total / Prob::ratio(2, 1))
    }

    /// Rendered label -> mass, for reports.
    pub fn rendered(&self, mode_names: &[String]) -> Vec<(String, RenderedMass)> {
        match self {
            OutcomeDistribution::Exact(map) => map
                .iter()
                .map(|(t, p)| (t.render(mode_names), RenderedMass::Exact(p.clone())))
                .collect(),
            OutcomeDistribution::Real(map) => map
                .iter()
                .map(|(t, p)| (t.render(mode_names), RenderedMass::Real(*p)))
                .collect(),
            OutcomeDistribution::Estimated { counts, trials } => counts
                .iter()
                .map(|(t, n)| {
                    (
                        t.render(mode_names),
                        RenderedMass::Real(*n as f64 / *trials as f64),
                    )
                })
                .collect(),
        }
    }
}

/// Result of projecting a distribution onto a coarser outcome space.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectedDistribution<K: Ord> {
    Exact(BTreeMap<K, Prob>),
    Real(BTreeMap<K, f64>),
}

impl<K: Ord + Clone> ProjectedDistribution<K> {
    pub fn prob_f64(&self, key: &K) -> f64 {
        match self {
            ProjectedDistribution::Exact(m) => m.get(key).map_or(0.0, Prob::to_f64),
            ProjectedDistribution::Real(m) => m.get(key).copied().unwrap_or(0.0),
        }
    }

    pub fn exact(&self) -> Option<&BTreeMap<K, Prob>> {
        match self {
            ProjectedDistribution::Exact(m) => Some(m),
            ProjectedDistribution::Real(_) => None,
        }
    }

    /// Exact TV distance between two exact projections.
    pub fn tv_exact(&self, other: &ProjectedDistribution<K>) -> Option<Prob> {
        let (a, b) = (self.exact()?, other.exact()?);
        let mut total = Prob::zero();
        let mut keys: Vec<&K> = a.keys().collect();
        for k in b.keys() {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        for k in keys {
            let p = a.get(k).cloned().unwrap_or_else(Prob::zero);
            let q = b.get(k).cloned().unwrap_or_else(Prob::zero);
            total += &p.abs_diff(&q);
        }
        Some(total / Prob::ratio(2, 1))
    }

    pub fn tv_f64(&self, other: &ProjectedDistribution<K>) -> f64 {
        let mut keys: Vec<K> = match self {
            ProjectedDistribution::Exact(m) => m.keys().cloned().collect(),
            ProjectedDistribution::Real(m) => m.keys().cloned().collect(),
        };
        let other_keys: Vec<K> = match other {
            ProjectedDistribution::Exact(m) => m.keys().cloned().collect(),
            ProjectedDistribution::Real(m) => m.keys().cloned().collect(),
        };
        for k in other_keys {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        0.5 * keys
            .into_iter()
            .map(|k| (self.prob_f64(&k) - other.prob_f64(&k)).abs())
            .sum::<f64>()
    }
}

/// A probability formatted for reporting: exact masses stay `num/den`,
/// everything else is a float.
#[derive(Debug, Clone, PartialEq)]
pub enum RenderedMass {
    Exact(Prob),
    Real(f64),
}

impl fmt::Display for RenderedMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderedMass::Exact(p) => write!(f, "{p}"),
            RenderedMass::Real(x) => write!(f, "{x}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(entries: Vec<TranscriptEntry>, terminal: Terminal) -> Transcript {
        Transcript { entries, terminal }
    }

    fn blocked_mz_exact() -> OutcomeDistribution {
        let mut map = BTreeMap::new();
        map.insert(
            t(
                vec![TranscriptEntry::Absorbed { mode: ModeId(1) }],
                Terminal::None,
            ),
            Prob::half(),
        );
        map.insert(
            t(
                vec![TranscriptEntry::Outcome {
                    mode: ModeId(1),
                    value: 0,
                }],
                Terminal::Detector(ModeId(0)),
            ),
            Prob::ratio(1, 4),
        );
        map.insert(
            t(
                vec![TranscriptEntry::Outcome {
                    mode: ModeId(1),
                    value: 0,
                }],
                Terminal::Detector(ModeId(1)),
            ),
            Prob::ratio(1, 4),
        );
        OutcomeDistribution::Exact(map)
    }

    #[test]
    fn rendering_labels() {
        let names = vec!["a".to_string(), "b".to_string()];
        let tr = t(
            vec![TranscriptEntry::Outcome {
                mode: ModeId(1),
                value: 0,
            }],
            Terminal::Detector(ModeId(0)),
        );
        assert_eq!(tr.render(&names), "b=0,D_a");
        let tr = t(
            vec![TranscriptEntry::Absorbed { mode: ModeId(1) }],
            Terminal::None,
        );
        assert_eq!(tr.render(&names), "absorbed@b,none");
    }

    #[test]
    fn conditioning_on_pass_outcome_renormalizes_exactly() {
        let d = blocked_mz_exact();
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
    fn conditioning_on_absorption_gives_a_point_mass() {
        let d = blocked_mz_exact();
        let pattern = OutcomePattern::entry(0, TranscriptEntry::Absorbed { mode: ModeId(1) });
        let conditioned = d.condition(&pattern).unwrap();
        let weights = conditioned.exact_weights().unwrap();
        assert_eq!(weights.len(), 1);
        assert!(weights.values().next().unwrap().is_one());
    }

    #[test]
    fn conditioning_on_full_support_is_identity_and_idempotent() {
        let d = blocked_mz_exact();
        let pattern = OutcomePattern::default();
        assert_eq!(d.condition(&pattern).unwrap(), d);
        let pattern = OutcomePattern::entry(
            0,
            TranscriptEntry::Outcome {
                mode: ModeId(1),
                value: 0,
            },
        );
        let once = d.condition(&pattern).unwrap();
        let twice = once.condition(&pattern).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_probability_pattern_is_a_domain_error() {
        let d = blocked_mz_exact();
        let pattern = OutcomePattern::entry(
            0,
            TranscriptEntry::Outcome {
                mode: ModeId(1),
                value: 1,
            },
        );
        assert_eq!(
            d.condition(&pattern),
            Err(OutcomeError::ZeroProbabilityPattern)
        );
    }

    #[test]
    fn fate_marginal_collapses_terminal_detail() {
        let d = blocked_mz_exact();
        let fates = d.fate_marginal();
        let map = fates.exact().unwrap();
        assert_eq!(map.get(&Fate::Absorbed(ModeId(1))), Some(&Prob::half()));
        assert_eq!(
            map.get(&Fate::Detected(ModeId(0))),
            Some(&Prob::ratio(1, 4))
        );
        assert_eq!(
            map.get(&Fate::Detected(ModeId(1))),
            Some(&Prob::ratio(1, 4))
        );
    }

    #[test]
    fn tv_between_exact_distributions_is_exact() {
        let d = blocked_mz_exact();
        let pattern = OutcomePattern::entry(
            0,
            TranscriptEntry::Outcome {
                mode: ModeId(1),
                value: 0,
            },
        );
        let conditioned = d.condition(&pattern).unwrap();
        let tv = d.tv_exact(&conditioned).unwrap();
        assert_eq!(tv, Prob::half());
        assert_eq!(d.tv_exact(&d), Some(Prob::zero()));
    }

    #[test]
    fn condition_commutes_with_marginalizing_unobserved_positions() {
        let d = blocked_mz_exact();
        let pattern = OutcomePattern::entry(
            0,
            TranscriptEntry::Outcome {
                mode: ModeId(1),
                value: 0,
            },
        );
        // condition then project to terminal
        let a = d.condition(&pattern).unwrap().project(|t| t.terminal);
        // project to (entry0, terminal), condition on entry0, re-project
        let joint = d.marginalize_positions(&[0], true);
        let map = joint.exact().unwrap();
        let want = Some(TranscriptEntry::Outcome {
            mode: ModeId(1),
            value: 0,
        });
        let total: Prob = map
            .iter()
            .filter(|((e, _), _)| e[0] == want)
            .map(|(_, p)| p)
            .sum();
        let mut out = BTreeMap::new();
        for ((entries, terminal), p) in map {
            if entries[0] == want {
                let key = terminal.unwrap();
                *out.entry(key).or_insert_with(Prob::zero) += &(p / &total);
            }
        }
        assert_eq!(a.exact().unwrap(), &out);
    }

    #[test]
    fn estimated_distributions_condition_on_counts() {
        let mut counts = BTreeMap::new();
        counts.insert(
            t(
                vec![TranscriptEntry::Outcome {
                    mode: ModeId(0),
                    value: 0,
                }],
                Terminal::None,
            ),
            30u64,
        );
        counts.insert(
            t(
                vec![TranscriptEntry::Outcome {
                    mode: ModeId(0),
                    value: 1,
                }],
                Terminal::Detector(ModeId(0)),
            ),
            70u64,
        );
        let d = OutcomeDistribution::Estimated {
            counts,
            trials: 100,
        };
        let pattern = OutcomePattern {
            entries: vec![],
            terminal: Some(Terminal::None),
        };
        let conditioned = d.condition(&pattern).unwrap();
        match conditioned {
            OutcomeDistribution::Estimated { trials, ref counts } => {
                assert_eq!(trials, 30);
                assert_eq!(counts.len(), 1);
            }
            _ => panic!("conditioning an estimate should stay an estimate"),
        }
    }
}
