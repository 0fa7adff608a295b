//! Static circuit validation.
//!
//! Enforces the structural invariants the engines rely on: exactly one
//! source, a single terminal detect, every referenced mode declared or
//! introduced by `fresh` before use, no reference to a mode after it has
//! been diverted, and distinct beamsplitter ports. Also flags any circuit
//! that could put two excitations on one beamsplitter, since the dynamics
//! defines that sector only as a flagged identity.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{Circuit, Element, ModeOrigin};

/// One validation diagnostic, optionally tied to an element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub element: Option<usize>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.element {
            Some(idx) => write!(f, "element {}: {}", idx + 1, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn finding(element: impl Into<Option<usize>>, message: impl Into<String>) -> Finding {
    Finding {
        element: element.into(),
        message: message.into(),
    }
}

/// Checks every circuit invariant; returns an empty list for a runnable
/// circuit.
pub fn validate(c: &Circuit) -> Vec<Finding> {
    let mut findings = Vec::new();

    for decl in &c.modes {
        if decl.origin == ModeOrigin::Implicit {
            findings.push(finding(
                None,
                format!("reference to undeclared mode '{}'", decl.name),
            ));
        }
    }

    let source_count = c
        .elements
        .iter()
        .filter(|e| matches!(e, Element::Source { .. }))
        .count();
    if source_count == 0 {
        findings.push(finding(None, "missing source"));
    } else if source_count > 1 {
        findings.push(finding(None, format!("multiple sources ({source_count})")));
        if c.elements
            .iter()
            .any(|e| matches!(e, Element::Beamsplitter { .. }))
        {
            findings.push(finding(
                None,
                "multiple excitations could meet at a beamsplitter (undefined two-excitation sector)",
            ));
        }
    }

    let detect_count = c
        .elements
        .iter()
        .filter(|e| matches!(e, Element::Detect { .. }))
        .count();
    match detect_count {
        0 => findings.push(finding(None, "missing terminal detect")),
        1 => {
            if !matches!(c.elements.last(), Some(Element::Detect { .. })) {
                findings.push(finding(None, "detect must be the last element"));
            }
        }
        n => findings.push(finding(
            None,
            format!("detect appears {n} times, expected exactly once"),
        )),
    }

    // Liveness walk: declared modes are live from the start, fresh modes
    // only after their introduction, diverted modes never again.
    let mut live: BTreeSet<usize> = c
        .modes
        .iter()
        .enumerate()
        .filter(|(_, d)| d.origin != ModeOrigin::Fresh)
        .map(|(i, _)| i)
        .collect();
    let mut introduced: BTreeSet<usize> = live.clone();
    let mut diverted: BTreeSet<usize> = BTreeSet::new();

    for (idx, element) in c.elements.iter().enumerate() {
        if let Element::Fresh { mode } = element {
            match c.modes[mode.0].origin {
                ModeOrigin::Fresh if !introduced.contains(&mode.0) => {
                    live.insert(mode.0);
                    introduced.insert(mode.0);
                    continue;
                }
                _ => {
                    findings.push(finding(
                        idx,
                        format!("fresh re-introduces existing mode '{}'", c.mode_name(*mode)),
                    ));
                    continue;
                }
            }
        }

        for mode in element.declared_modes() {
            if diverted.contains(&mode.0) {
                findings.push(finding(
                    idx,
                    format!("mode '{}' referenced after divert", c.mode_name(mode)),
                ));
            } else if !introduced.contains(&mode.0) {
                findings.push(finding(
                    idx,
                    format!(
                        "mode '{}' used before fresh introduces it",
                        c.mode_name(mode)
                    ),
                ));
            }
        }

        match element {
            Element::Beamsplitter { a, b } if a == b => {
                findings.push(finding(
                    idx,
                    format!(
                        "beamsplitter ports must differ (got '{}' twice)",
                        c.mode_name(*a)
                    ),
                ));
            }
            Element::Divert { mode } => {
                diverted.insert(mode.0);
                live.remove(&mode.0);
            }
            Element::Detect { modes } => {
                let mut seen = BTreeSet::new();
                for m in modes {
                    if !seen.insert(m.0) {
                        findings.push(finding(
                            idx,
                            format!("duplicate detector mode '{}'", c.mode_name(*m)),
                        ));
                    }
                }
            }
            _ => {}
        }
    }

    findings
}
