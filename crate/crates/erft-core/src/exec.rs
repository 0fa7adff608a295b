//! Circuit execution shared by the toy engines.
//!
//! Three engines interpret the same element list: a sampled ontic trial
//! (one joint ontic state, coins from a bit source), the exact epistemic
//! branch tree, and exhaustive enumeration over every initial phase
//! assignment and coin word. All of them keep a live-mode map from state
//! slots to circuit mode ids: `divert` removes a slot, `fresh` appends one.
//! Transcript entries always carry circuit mode ids.
//!
//! Callers are responsible for validating circuits first; these functions
//! assume the structural invariants hold.

use std::collections::BTreeMap;

use crate::dsl::{Circuit, Element, ModeOrigin};
use crate::dynamics::{
    beamsplitter_step, measure_step, phase_step, pushforward, Coin, Instrument, Transformation,
};
use crate::ontology::{EpistemicState, JointOnticState, ModeId, ModeOnticState, Sign};
use crate::outcome::{Terminal, Transcript, TranscriptEntry};
use crate::prob::Prob;
use crate::rng::{BitSource, FixedBits};
use crate::trace::{AccessSink, ModeVar, NoopSink, Var};

/// Slot -> circuit-mode-id map for the currently live modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LiveModes {
    ids: Vec<ModeId>,
}

impl LiveModes {
    pub(crate) fn initial(c: &Circuit) -> Self {
        let ids = c
            .modes
            .iter()
            .enumerate()
            .filter(|(_, d)| d.origin != ModeOrigin::Fresh)
            .map(|(i, _)| ModeId(i))
            .collect();
        LiveModes { ids }
    }

    pub(crate) fn count(&self) -> usize {
        self.ids.len()
    }

    fn slot_of(&self, id: ModeId) -> ModeId {
        ModeId(
            self.ids
                .iter()
                .position(|&m| m == id)
                .expect("validated circuit references a live mode"),
        )
    }

    fn remove(&mut self, id: ModeId) -> ModeId {
        let slot = self.slot_of(id);
        self.ids.remove(slot.0);
        slot
    }

    fn push(&mut self, id: ModeId) -> ModeId {
        self.ids.push(id);
        ModeId(self.ids.len() - 1)
    }
}

/// Rewrites slot indices recorded by the dynamics steppers into circuit
/// mode ids before forwarding them to the outer sink.
struct SlotSink<'a> {
    inner: &'a mut dyn AccessSink,
    slots: Vec<ModeId>,
}

impl AccessSink for SlotSink<'_> {
    fn read(&mut self, element: usize, var: ModeVar) {
        self.inner.read(
            element,
            ModeVar {
                mode: self.slots[var.mode.0],
                var: var.var,
            },
        );
    }
    fn write(&mut self, element: usize, var: ModeVar) {
        self.inner.write(
            element,
            ModeVar {
                mode: self.slots[var.mode.0],
                var: var.var,
            },
        );
    }
}

/// Result of a single ontic trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct OnticRun {
    pub transcript: Transcript,
    pub trajectory: Vec<JointOnticState>,
    pub sector2_events: u32,
}

/// Number of fair bits one trial consumes: one initial phase per declared
/// mode, one per fresh preparation, one coin per measurement.
pub(crate) fn bit_budget(c: &Circuit) -> u32 {
    let initial = c
        .modes
        .iter()
        .filter(|d| d.origin != ModeOrigin::Fresh)
        .count();
    let extra = c
        .elements
        .iter()
        .filter(|e| matches!(e, Element::Fresh { .. } | Element::Measure { .. }))
        .count();
    (initial + extra) as u32
}

/// Runs one ontic trial, drawing every random bit from `bits` in a fixed
/// order and reporting every variable access to `sink`.
pub(crate) fn run_ontic(
    c: &Circuit,
    bits: &mut dyn BitSource,
    sink: &mut dyn AccessSink,
    keep_trajectory: bool,
) -> OnticRun {
    let mut live = LiveModes::initial(c);
    let mut state = JointOnticState::new(
        (0..live.count())
            .map(|_| ModeOnticState::vacuum(Sign::from_bit(bits.bit())))
            .collect(),
    );
    let mut trajectory = Vec::new();
    if keep_trajectory {
        trajectory.push(state.clone());
    }
    let mut entries = Vec::new();
    let mut terminal = Terminal::None;
    let mut sector2_events = 0u32;

    for (idx, element) in c.elements.iter().enumerate() {
        match element {
            Element::Source { mode } => {
                let slot = live.slot_of(*mode);
                sink.write(
                    idx,
                    ModeVar {
                        mode: *mode,
                        var: Var::Occupation,
                    },
                );
                let phase = state.modes()[slot.0].phase;
                state.set(slot, ModeOnticState::new(true, phase));
            }
            Element::Beamsplitter { a, b } => {
                let (sa, sb) = (live.slot_of(*a), live.slot_of(*b));
                let mut slot_sink = SlotSink {
                    inner: sink,
                    slots: live.ids.clone(),
                };
                let sector = beamsplitter_step(&mut state, sa, sb, idx, &mut slot_sink);
                sector2_events += u32::from(sector.dual_occupancy);
            }
            Element::PhaseShift { mode, angle } => {
                let slot = live.slot_of(*mode);
                let mut slot_sink = SlotSink {
                    inner: sink,
                    slots: live.ids.clone(),
                };
                phase_step(&mut state, slot, *angle, idx, &mut slot_sink);
            }
            Element::Measure { mode, destructive } => {
                let slot = live.slot_of(*mode);
                let coin = Coin::from_bit(bits.bit());
                let instrument = if *destructive {
                    Instrument::Destructive(slot)
                } else {
                    Instrument::Nondestructive(slot)
                };
                let mut slot_sink = SlotSink {
                    inner: sink,
                    slots: live.ids.clone(),
                };
                let outcome = measure_step(&mut state, instrument, coin, idx, &mut slot_sink);
                entries.push(if *destructive && outcome == 1 {
                    TranscriptEntry::Absorbed { mode: *mode }
                } else {
                    TranscriptEntry::Outcome {
                        mode: *mode,
                        value: outcome,
                    }
                });
            }
            Element::Divert { mode } => {
                let slot = live.slot_of(*mode);
                sink.read(
                    idx,
                    ModeVar {
                        mode: *mode,
                        var: Var::Occupation,
                    },
                );
                let carried = state.modes()[slot.0].occupied;
                entries.push(if carried {
                    TranscriptEntry::Diverted { mode: *mode }
                } else {
                    TranscriptEntry::Outcome {
                        mode: *mode,
                        value: 0,
                    }
                });
                state.remove(slot);
                live.remove(*mode);
            }
            Element::Fresh { mode } => {
                sink.write(
                    idx,
                    ModeVar {
                        mode: *mode,
                        var: Var::Occupation,
                    },
                );
                sink.write(
                    idx,
                    ModeVar {
                        mode: *mode,
                        var: Var::Phase,
                    },
                );
                state.push(ModeOnticState::vacuum(Sign::from_bit(bits.bit())));
                live.push(*mode);
            }
            Element::Detect { modes } => {
                for m in modes {
                    let slot = live.slot_of(*m);
                    sink.read(
                        idx,
                        ModeVar {
                            mode: *m,
                            var: Var::Occupation,
                        },
                    );
                    if state.modes()[slot.0].occupied && terminal == Terminal::None {
                        terminal = Terminal::Detector(*m);
                    }
                }
            }
            Element::CrossPhase { target, control } => {
                // Deliberately nonlocal: reads a variable of a mode it does
                // not declare. The taint audit must catch this.
                let (ts, cs) = (live.slot_of(*target), live.slot_of(*control));
                sink.read(
                    idx,
                    ModeVar {
                        mode: *control,
                        var: Var::Phase,
                    },
                );
                let control_phase = state.modes()[cs.0].phase;
                if control_phase == Sign::Minus {
                    sink.read(
                        idx,
                        ModeVar {
                            mode: *target,
                            var: Var::Phase,
                        },
                    );
                    sink.write(
                        idx,
                        ModeVar {
                            mode: *target,
                            var: Var::Phase,
                        },
                    );
                    let old = state.modes()[ts.0];
                    state.set(ts, ModeOnticState::new(old.occupied, old.phase.flip()));
                }
            }
        }
        if keep_trajectory {
            trajectory.push(state.clone());
        }
    }

    OnticRun {
        transcript: Transcript { entries, terminal },
        trajectory,
        sector2_events,
    }
}

/// Exhaustive enumeration over all initial ontic states and coin values,
/// each word weighted `2^-bits`. This is the brute-force route the exact
/// epistemic engine is checked against.
pub(crate) fn run_enumerated(c: &Circuit) -> BTreeMap<Transcript, Prob> {
    let budget = bit_budget(c);
    assert!(
        budget <= MAX_ENUMERATION_BITS,
        "enumeration budget {budget} too large"
    );
    let mut counts: BTreeMap<Transcript, u64> = BTreeMap::new();
    for word in 0..(1u64 << budget) {
        let mut bits = FixedBits::new(word, budget);
        let run = run_ontic(c, &mut bits, &mut NoopSink, false);
        *counts.entry(run.transcript).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(t, n)| (t, Prob::ratio(n, 1u64 << budget)))
        .collect()
}

pub(crate) const MAX_ENUMERATION_BITS: u32 = 24;

struct EpistemicBranch {
    prob: Prob,
    state: EpistemicState,
    entries: Vec<TranscriptEntry>,
}

fn map_states(
    state: &EpistemicState,
    f: impl Fn(&JointOnticState) -> JointOnticState,
) -> EpistemicState {
    let mut weights: BTreeMap<JointOnticState, Prob> = BTreeMap::new();
    for (s, w) in state.weights() {
        *weights.entry(f(s)).or_insert_with(Prob::zero) += w;
    }
    EpistemicState::from_weights_unchecked(state.mode_count(), weights)
}

/// Conditions on `slot` having occupation `occupied`, renormalizes, then
/// marginalizes the slot out entirely. Returns `None` when the event has
/// zero probability.
fn condition_and_remove(
    state: &EpistemicState,
    slot: ModeId,
    occupied: bool,
) -> Option<(Prob, EpistemicState)> {
    let total: Prob = state
        .weights()
        .filter(|(s, _)| s.modes()[slot.0].occupied == occupied)
        .map(|(_, w)| w)
        .sum();
    if total.is_zero() {
        return None;
    }
    let mut weights: BTreeMap<JointOnticState, Prob> = BTreeMap::new();
    for (s, w) in state.weights() {
        if s.modes()[slot.0].occupied != occupied {
            continue;
        }
        let mut reduced = s.clone();
        reduced.remove(slot);
        *weights.entry(reduced).or_insert_with(Prob::zero) += &(w / &total);
    }
    Some((
        total,
        EpistemicState::from_weights_unchecked(state.mode_count() - 1, weights),
    ))
}

fn append_fresh(state: &EpistemicState) -> EpistemicState {
    let mut weights: BTreeMap<JointOnticState, Prob> = BTreeMap::new();
    for (s, w) in state.weights() {
        let half = w / &Prob::ratio(2, 1);
        for sign in [Sign::Plus, Sign::Minus] {
            let mut extended = s.clone();
            extended.push(ModeOnticState::vacuum(sign));
            weights.insert(extended, half.clone());
        }
    }
    EpistemicState::from_weights_unchecked(state.mode_count() + 1, weights)
}

fn uniform_phases(mode_count: usize) -> EpistemicState {
    if mode_count == 0 {
        // A circuit can start with no declared modes and introduce
        // everything via fresh statements; its initial state is the empty
        // configuration with certainty.
        EpistemicState::point_mass(JointOnticState::new(Vec::new()))
    } else {
        crate::ontology::make_vacuum_state(mode_count).expect("mode count within limits")
    }
}

/// Evolves the epistemic state through the circuit, branching at every
/// instrument and summing over randomization coins symbolically. Calls
/// `observe` on every branch state after every element, so invariants can
/// be checked on everything reachable.
pub(crate) fn run_epistemic_observed(
    c: &Circuit,
    mut observe: impl FnMut(&EpistemicState),
) -> BTreeMap<Transcript, Prob> {
    let mut live = LiveModes::initial(c);
    let mut branches = vec![EpistemicBranch {
        prob: Prob::one(),
        state: uniform_phases(live.count()),
        entries: Vec::new(),
    }];
    let mut results: BTreeMap<Transcript, Prob> = BTreeMap::new();

    for element in &c.elements {
        match element {
            Element::Source { mode } => {
                let slot = live.slot_of(*mode);
                for branch in &mut branches {
                    branch.state = map_states(&branch.state, |s| {
                        let mut out = s.clone();
                        let old = out.modes()[slot.0];
                        out.set(slot, ModeOnticState::new(true, old.phase));
                        out
                    });
                }
            }
            Element::Beamsplitter { a, b } => {
                let t = Transformation::Beamsplitter {
                    i: live.slot_of(*a),
                    j: live.slot_of(*b),
                };
                for branch in &mut branches {
                    branch.state = pushforward(&branch.state, &t).expect("validated circuit modes");
                }
            }
            Element::PhaseShift { mode, angle } => {
                let t = Transformation::PhaseShift {
                    mode: live.slot_of(*mode),
                    angle: *angle,
                };
                for branch in &mut branches {
                    branch.state = pushforward(&branch.state, &t).expect("validated circuit modes");
                }
            }
            Element::Measure { mode, destructive } => {
                let slot = live.slot_of(*mode);
                let mut next = Vec::new();
                for branch in branches {
                    let outcomes = if *destructive {
                        crate::dynamics::measure_destructive_epistemic(&branch.state, slot)
                    } else {
                        crate::dynamics::measure_nondestructive_epistemic(&branch.state, slot)
                    }
                    .expect("validated circuit modes");
                    for result in outcomes {
                        let mut entries = branch.entries.clone();
                        entries.push(if *destructive && result.outcome == 1 {
                            TranscriptEntry::Absorbed { mode: *mode }
                        } else {
                            TranscriptEntry::Outcome {
                                mode: *mode,
                                value: result.outcome,
                            }
                        });
                        next.push(EpistemicBranch {
                            prob: &branch.prob * &result.probability,
                            state: result.post_state,
                            entries,
                        });
                    }
                }
                branches = next;
            }
            Element::Divert { mode } => {
                let slot = live.remove(*mode);
                let mut next = Vec::new();
                for branch in branches {
                    for occupied in [true, false] {
                        if let Some((p, state)) =
                            condition_and_remove(&branch.state, slot, occupied)
                        {
                            let mut entries = branch.entries.clone();
                            entries.push(if occupied {
                                TranscriptEntry::Diverted { mode: *mode }
                            } else {
                                TranscriptEntry::Outcome {
                                    mode: *mode,
                                    value: 0,
                                }
                            });
                            next.push(EpistemicBranch {
                                prob: &branch.prob * &p,
                                state,
                                entries,
                            });
                        }
                    }
                }
                branches = next;
            }
            Element::Fresh { mode } => {
                live.push(*mode);
                for branch in &mut branches {
                    branch.state = append_fresh(&branch.state);
                }
            }
            Element::Detect { modes } => {
                let slots: Vec<(ModeId, ModeId)> =
                    modes.iter().map(|m| (*m, live.slot_of(*m))).collect();
                for branch in &branches {
                    let mut per_terminal: BTreeMap<Terminal, Prob> = BTreeMap::new();
                    for (s, w) in branch.state.weights() {
                        let terminal = slots
                            .iter()
                            .find(|(_, slot)| s.modes()[slot.0].occupied)
                            .map_or(Terminal::None, |(id, _)| Terminal::Detector(*id));
                        *per_terminal.entry(terminal).or_insert_with(Prob::zero) += w;
                    }
                    for (terminal, p) in per_terminal {
                        let transcript = Transcript {
                            entries: branch.entries.clone(),
                            terminal,
                        };
                        *results.entry(transcript).or_insert_with(Prob::zero) +=
                            &(&branch.prob * &p);
                    }
                }
            }
            Element::CrossPhase { target, control } => {
                let (ts, cs) = (live.slot_of(*target), live.slot_of(*control));
                for branch in &mut branches {
                    branch.state = map_states(&branch.state, |s| {
                        let mut out = s.clone();
                        if out.modes()[cs.0].phase == Sign::Minus {
                            let old = out.modes()[ts.0];
                            out.set(ts, ModeOnticState::new(old.occupied, old.phase.flip()));
                        }
                        out
                    });
                }
            }
        }
        for branch in &branches {
            observe(&branch.state);
        }
    }

    results
}

pub(crate) fn run_epistemic(c: &Circuit) -> BTreeMap<Transcript, Prob> {
    run_epistemic_observed(c, |_| {})
}
