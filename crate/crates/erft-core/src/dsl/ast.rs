//! Circuit abstract syntax and the canonical serializer.

use std::fmt::Write as _;

use crate::dynamics::PhaseAngle;
use crate::ontology::ModeId;

/// How a mode entered the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeOrigin {
    /// Listed in a `modes` statement.
    Declared,
    /// Introduced by a `fresh` statement.
    Fresh,
    /// Referenced without ever being declared; the validator flags these.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeDecl {
    pub name: String,
    pub origin: ModeOrigin,
}

/// One circuit element, in global temporal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Element {
    Source {
        mode: ModeId,
    },
    Beamsplitter {
        a: ModeId,
        b: ModeId,
    },
    PhaseShift {
        mode: ModeId,
        angle: PhaseAngle,
    },
    Measure {
        mode: ModeId,
        destructive: bool,
    },
    Divert {
        mode: ModeId,
    },
    Fresh {
        mode: ModeId,
    },
    Detect {
        modes: Vec<ModeId>,
    },
    /// Audit fixture with no grammar production: declares only `target`
    /// but secretly conditions on `control`'s phase. Exists so the taint
    /// audit has a guaranteed-nonlocal element to catch; the serializer
    /// renders it as a comment.
    CrossPhase {
        target: ModeId,
        control: ModeId,
    },
}

impl Element {
    /// The modes this element claims to act on. For `CrossPhase` the claim
    /// deliberately omits `control`; the locality audit exposes that.
    pub fn declared_modes(&self) -> Vec<ModeId> {
        match self {
            Element::Source { mode }
            | Element::PhaseShift { mode, .. }
            | Element::Measure { mode, .. }
            | Element::Divert { mode }
            | Element::Fresh { mode } => vec![*mode],
            Element::Beamsplitter { a, b } => vec![*a, *b],
            Element::Detect { modes } => modes.clone(),
            Element::CrossPhase { target, .. } => vec![*target],
        }
    }

    /// Elements that contribute an entry to the outcome transcript.
    pub fn is_instrument(&self) -> bool {
        matches!(self, Element::Measure { .. } | Element::Divert { .. })
    }
}

/// A parsed interferometer circuit: declared modes plus a temporally ordered
/// element list ending in the terminal detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub name: String,
    pub modes: Vec<ModeDecl>,
    pub elements: Vec<Element>,
}

impl Circuit {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_name(&self, m: ModeId) -> &str {
        &self.modes[m.0].name
    }

    pub fn mode_id(&self, name: &str) -> Option<ModeId> {
        self.modes.iter().position(|d| d.name == name).map(ModeId)
    }

    /// Mode names indexed by `ModeId`, for rendering outcome labels.
    pub fn mode_names(&self) -> Vec<String> {
        self.modes.iter().map(|d| d.name.clone()).collect()
    }

    /// Modes declared via `modes` statements, in id order.
    pub fn declared_mode_ids(&self) -> Vec<ModeId> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, d)| d.origin == ModeOrigin::Declared)
            .map(|(i, _)| ModeId(i))
            .collect()
    }

    /// Element indices that produce transcript entries, in order.
    pub fn instrument_positions(&self) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_instrument())
            .map(|(i, _)| i)
            .collect()
    }

    /// Transcript entry index of the instrument at `element_index`, if it
    /// is one.
    pub fn entry_index_of(&self, element_index: usize) -> Option<usize> {
        if !self.elements.get(element_index)?.is_instrument() {
            return None;
        }
        Some(
            self.elements[..element_index]
                .iter()
                .filter(|e| e.is_instrument())
                .count(),
        )
    }

    pub fn detect_modes(&self) -> Option<&[ModeId]> {
        self.elements.iter().rev().find_map(|e| match e {
            Element::Detect { modes } => Some(modes.as_slice()),
            _ => None,
        })
    }
}

/// Canonical text form. Output is byte-stable for a given circuit, parses
/// back to an equal circuit, and is a fixed point of `parse . serialize`.
/// Destructive measurements carry a `# block` marker documenting the sugar
/// they canonicalize.
pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit {} {{", c.name);
    let declared: Vec<&str> = c
        .modes
        .iter()
        .filter(|d| d.origin == ModeOrigin::Declared)
        .map(|d| d.name.as_str())
        .collect();
    if !declared.is_empty() {
        let _ = writeln!(out, "  modes {};", declared.join(", "));
    }
    for element in &c.elements {
        match element {
            Element::Source { mode } => {
                let _ = writeln!(out, "  source excite {};", c.mode_name(*mode));
            }
            Element::Beamsplitter { a, b } => {
                let _ = writeln!(out, "  bs {} {};", c.mode_name(*a), c.mode_name(*b));
            }
            Element::PhaseShift { mode, angle } => {
                let lit = match angle {
                    PhaseAngle::Zero => "0",
                    PhaseAngle::Pi => "pi",
                };
                let _ = writeln!(out, "  phase {} {};", c.mode_name(*mode), lit);
            }
            Element::Measure { mode, destructive } => {
                let name = c.mode_name(*mode);
                if *destructive {
                    let _ = writeln!(out, "  measure {name} destructive; # block {name}");
                } else {
                    let _ = writeln!(out, "  measure {name} nondestructive;");
                }
            }
            Element::Divert { mode } => {
                let _ = writeln!(out, "  divert {};", c.mode_name(*mode));
            }
            Element::Fresh { mode } => {
                let _ = writeln!(out, "  fresh {};", c.mode_name(*mode));
            }
            Element::Detect { modes } => {
                let names: Vec<&str> = modes.iter().map(|m| c.mode_name(*m)).collect();
                let _ = writeln!(out, "  detect {};", names.join(", "));
            }
            Element::CrossPhase { target, control } => {
                // Not expressible in the grammar; left as a marker so a
                // serialized fixture is visibly incomplete rather than
                // silently wrong.
                let _ = writeln!(
                    out,
                    "  # fixture: nonlocal phase on {} conditioned on {}",
                    c.mode_name(*target),
                    c.mode_name(*control)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}
