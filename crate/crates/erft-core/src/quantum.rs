//! Exact single-excitation quantum reference simulator.
//!
//! States live in the span of the vacuum and the one-excitation basis
//! vectors of the live modes. The beamsplitter is the real Hadamard
//! convention `(a_i, a_j) -> ((a_i + a_j)/sqrt2, (a_i - a_j)/sqrt2)`,
//! paired with the toy rule so that a zero-phase interferometer returns the
//! excitation to its input port. Phase shifters accept any angle here; the
//! toy engine is the restricted one. Measurement branches follow the Born
//! rule, and the outcome-0 update is identical for destructive and
//! nondestructive measurements.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::dsl::{Circuit, Element, ModeOrigin};
use crate::ensemble::{check_runnable, EngineError};
use crate::ontology::ModeId;
use crate::outcome::{OutcomeDistribution, Terminal, Transcript, TranscriptEntry};

/// Branches with probability below this are numerically zero and dropped.
const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },
    #[error("beamsplitter ports must differ")]
    DegenerateBeamsplitter,
}

/// Amplitudes over `{vacuum} + {one excitation in mode m}`; index 0 is the
/// vacuum, index `1 + m` is mode `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// Pure vacuum over `modes` live modes.
    pub fn vacuum(modes: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); modes + 1];
        amps[0] = Complex64::new(1.0, 0.0);
        QuantumState { amps }
    }

    /// One excitation in mode `m`.
    pub fn single_excitation(modes: usize, m: ModeId) -> Result<Self, QuantumError> {
        let mut state = QuantumState::vacuum(modes);
        check_mode(&state, m)?;
        state.amps[0] = Complex64::new(0.0, 0.0);
        state.amps[1 + m.0] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn mode_count(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn vacuum_amplitude(&self) -> Complex64 {
        self.amps[0]
    }

    pub fn amplitude(&self, m: ModeId) -> Complex64 {
        self.amps[1 + m.0]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn renormalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        for a in &mut self.amps {
            *a /= norm;
        }
        self
    }
}

fn check_mode(q: &QuantumState, m: ModeId) -> Result<(), QuantumError> {
    if m.0 < q.mode_count() {
        Ok(())
    } else {
        Err(QuantumError::ModeOutOfRange {
            index: m.0,
            modes: q.mode_count(),
        })
    }
}

/// 50-50 beamsplitter on modes `i` and `j` (real Hadamard convention).
pub fn apply_bs(q: &QuantumState, i: ModeId, j: ModeId) -> Result<QuantumState, QuantumError> {
    check_mode(q, i)?;
    check_mode(q, j)?;
    if i == j {
        return Err(QuantumError::DegenerateBeamsplitter);
    }
    let mut out = q.clone();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let (ai, aj) = (q.amps[1 + i.0], q.amps[1 + j.0]);
    out.amps[1 + i.0] = (ai + aj) * inv_sqrt2;
    out.amps[1 + j.0] = (ai - aj) * inv_sqrt2;
    Ok(out)
}

/// Phase shift by any angle `phi` (radians) on mode `m`.
pub fn apply_phase(q: &QuantumState, m: ModeId, phi: f64) -> Result<QuantumState, QuantumError> {
    check_mode(q, m)?;
    let mut out = q.clone();
    out.amps[1 + m.0] *= Complex64::from_polar(1.0, phi);
    Ok(out)
}

/// One branch of an occupation measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumBranch {
    pub outcome: u8,
    pub probability: f64,
    pub post_state: QuantumState,
}

/// Occupation measurement on mode `m`. Outcome 1 leaves `|1_m>` behind a
/// nondestructive device and the vacuum behind a destructive one; outcome 0
/// projects the mode's amplitude out, identically for both kinds.
pub fn measure_occupation(
    q: &QuantumState,
    m: ModeId,
    destructive: bool,
) -> Result<Vec<QuantumBranch>, QuantumError> {
    check_mode(q, m)?;
    let mut branches = Vec::new();
    let p1 = q.amplitude(m).norm_sqr();
    if p1 > PRUNE_EPS {
        let post = if destructive {
            QuantumState::vacuum(q.mode_count())
        } else {
            QuantumState::single_excitation(q.mode_count(), m)?
        };
        branches.push(QuantumBranch {
            outcome: 1,
            probability: p1,
            post_state: post,
        });
    }
    let p0 = 1.0 - p1;
    if p0 > PRUNE_EPS {
        let mut post = q.clone();
        post.amps[1 + m.0] = Complex64::new(0.0, 0.0);
        branches.push(QuantumBranch {
            outcome: 0,
            probability: p0,
            post_state: post.renormalized(),
        });
    }
    Ok(branches)
}

struct QuantumRunBranch {
    prob: f64,
    state: QuantumState,
    entries: Vec<TranscriptEntry>,
}

/// Live-mode map mirroring the toy engines: divert removes a slot, fresh
/// appends one.
struct LiveSlots {
    ids: Vec<ModeId>,
}

impl LiveSlots {
    fn initial(c: &Circuit) -> Self {
        LiveSlots {
            ids: c
                .modes
                .iter()
                .enumerate()
                .filter(|(_, d)| d.origin != ModeOrigin::Fresh)
                .map(|(i, _)| ModeId(i))
                .collect(),
        }
    }

    fn slot_of(&self, id: ModeId) -> ModeId {
        ModeId(
            self.ids
                .iter()
                .position(|&m| m == id)
                .expect("validated circuit references a live mode"),
        )
    }
}

fn drop_slot(q: &QuantumState, slot: ModeId) -> QuantumState {
    let mut amps = q.amps.clone();
    amps.remove(1 + slot.0);
    QuantumState { amps }
}

/// Exact branch-tree evaluation of a circuit under the quantum reference
/// semantics. Transcript structure matches the toy engines exactly.
pub fn run_quantum(c: &Circuit) -> Result<OutcomeDistribution, EngineError> {
    check_runnable(c)?;
    let mut live = LiveSlots::initial(c);
    let mut branches = vec![QuantumRunBranch {
        prob: 1.0,
        state: QuantumState::vacuum(live.ids.len()),
        entries: Vec::new(),
    }];
    let mut results: BTreeMap<Transcript, f64> = BTreeMap::new();

    for element in &c.elements {
        match element {
            Element::Source { mode } => {
                let slot = live.slot_of(*mode);
                for branch in &mut branches {
                    // the source injects the excitation into the vacuum
                    let vac = branch.state.amps[0];
                    let old = branch.state.amps[1 + slot.0];
                    branch.state.amps[0] = old;
                    branch.state.amps[1 + slot.0] = vac;
                }
            }
            Element::Beamsplitter { a, b } => {
                let (sa, sb) = (live.slot_of(*a), live.slot_of(*b));
                for branch in &mut branches {
                    branch.state =
                        apply_bs(&branch.state, sa, sb).expect("validated circuit modes");
                }
            }
            Element::PhaseShift { mode, angle } => {
                let slot = live.slot_of(*mode);
                for branch in &mut branches {
                    branch.state = apply_phase(&branch.state, slot, angle.radians())
                        .expect("validated circuit modes");
                }
            }
            Element::Measure { mode, destructive } => {
                let slot = live.slot_of(*mode);
                let mut next = Vec::new();
                for branch in branches {
                    for sub in measure_occupation(&branch.state, slot, *destructive)
                        .expect("validated circuit modes")
                    {
                        let mut entries = branch.entries.clone();
                        entries.push(if *destructive && sub.outcome == 1 {
                            TranscriptEntry::Absorbed { mode: *mode }
                        } else {
                            TranscriptEntry::Outcome {
                                mode: *mode,
                                value: sub.outcome,
                            }
                        });
                        next.push(QuantumRunBranch {
                            prob: branch.prob * sub.probability,
                            state: sub.post_state,
                            entries,
                        });
                    }
                }
                branches = next;
            }
            Element::Divert { mode } => {
                // A which-path detection by the environment: nothing later
                // touches the diverted mode, so branching here equals
                // branching at circuit end.
                let slot = live.slot_of(*mode);
                live.ids.remove(slot.0);
                let mut next = Vec::new();
                for branch in branches {
                    let p1 = branch.state.amplitude(slot).norm_sqr();
                    if p1 > PRUNE_EPS {
                        let mut entries = branch.entries.clone();
                        entries.push(TranscriptEntry::Diverted { mode: *mode });
                        next.push(QuantumRunBranch {
                            prob: branch.prob * p1,
                            state: QuantumState::vacuum(branch.state.mode_count() - 1),
                            entries,
                        });
                    }
                    let p0 = 1.0 - p1;
                    if p0 > PRUNE_EPS {
                        let mut post = branch.state.clone();
                        post.amps[1 + slot.0] = Complex64::new(0.0, 0.0);
                        let post = drop_slot(&post.renormalized(), slot);
                        let mut entries = branch.entries.clone();
                        entries.push(TranscriptEntry::Outcome {
                            mode: *mode,
                            value: 0,
                        });
                        next.push(QuantumRunBranch {
                            prob: branch.prob * p0,
                            state: post,
                            entries,
                        });
                    }
                }
                branches = next;
            }
            Element::Fresh { mode } => {
                live.ids.push(*mode);
                for branch in &mut branches {
                    branch.state.amps.push(Complex64::new(0.0, 0.0));
                }
            }
            Element::Detect { modes } => {
                for branch in &branches {
                    let mut remaining = 1.0;
                    for m in modes {
                        let slot = live.slot_of(*m);
                        let p = branch.state.amplitude(slot).norm_sqr();
                        remaining -= p;
                        if p > PRUNE_EPS {
                            let transcript = Transcript {
                                entries: branch.entries.clone(),
                                terminal: Terminal::Detector(*m),
                            };
                            *results.entry(transcript).or_insert(0.0) += branch.prob * p;
                        }
                    }
                    if remaining > PRUNE_EPS {
                        let transcript = Transcript {
                            entries: branch.entries.clone(),
                            terminal: Terminal::None,
                        };
                        *results.entry(transcript).or_insert(0.0) += branch.prob * remaining;
                    }
                }
            }
            Element::CrossPhase { .. } => {
                // The nonlocal audit fixture has no quantum counterpart;
                // treat it as the identity so comparisons stay defined.
            }
        }
    }

    Ok(OutcomeDistribution::Real(results))
}
