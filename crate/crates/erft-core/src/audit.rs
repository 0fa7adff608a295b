//! Mechanical locality certification.
//!
//! Two audits back the locality claims. The taint trace runs sampled trials
//! through the instrumented ontic engine and reports any element that reads
//! or writes a variable of a mode outside its declared mode set. The
//! no-signalling check compares exact outcome marginals between a base
//! circuit and an intervened one at probe sites outside the intervention's
//! causal future; influence along the DAG is permitted physics, so probes
//! causally downstream of the intervention are rejected rather than tested.

use std::fmt;

use thiserror::Error;

use crate::dsl::{causal_dag, validate, Circuit, DagNode, Element, Finding};
use crate::dynamics::PhaseAngle;
use crate::ensemble::{run_exact, EngineError};
use crate::ontology::ModeId;
use crate::outcome::{Terminal, TranscriptEntry};
use crate::prob::Prob;
use crate::rng::CoinStream;
use crate::trace::{ElementAccess, ModeVar, RecordingSink, Var};

/// Aggregated per-element variable accesses over the audited trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessLog {
    pub per_element: Vec<ElementAccess>,
}

/// An element touched a variable of a mode it does not declare.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaintFinding {
    pub element: usize,
    pub mode: ModeId,
    pub var: Var,
    pub wrote: bool,
}

impl TaintFinding {
    pub fn render(&self, c: &Circuit) -> String {
        format!(
            "element {} {} undeclared variable ({}, {}) ",
            self.element + 1,
            if self.wrote { "wrote" } else { "read" },
            c.mode_name(self.mode),
            self.var.symbol()
        )
        .trim_end()
        .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaintReport {
    pub trials: u64,
    pub log: AccessLog,
    pub findings: Vec<TaintFinding>,
}

/// Runs `trials` instrumented trials and flags every off-mode access.
pub fn taint_trace(c: &Circuit, trials: u64, master_seed: u64) -> Result<TaintReport, EngineError> {
    let findings = validate(c);
    if !findings.is_empty() {
        return Err(EngineError::InvalidCircuit(findings));
    }
    let mut sink = RecordingSink::new(c.elements.len());
    for index in 0..trials {
        let mut bits = CoinStream::for_trial(master_seed, index);
        crate::exec::run_ontic(c, &mut bits, &mut sink, false);
    }
    let per_element = sink.into_per_element();

    let mut findings = Vec::new();
    for (idx, access) in per_element.iter().enumerate() {
        let declared = c.elements[idx].declared_modes();
        let off_mode = |mv: &ModeVar| !declared.contains(&mv.mode);
        for mv in access.reads.iter().filter(|mv| off_mode(mv)) {
            findings.push(TaintFinding {
                element: idx,
                mode: mv.mode,
                var: mv.var,
                wrote: false,
            });
        }
        for mv in access.writes.iter().filter(|mv| off_mode(mv)) {
            findings.push(TaintFinding {
                element: idx,
                mode: mv.mode,
                var: mv.var,
                wrote: true,
            });
        }
    }
    Ok(TaintReport {
        trials,
        log: AccessLog { per_element },
        findings,
    })
}

/// A change applied to a base circuit before re-running it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Intervention {
    /// Flip an existing phase shifter between 0 and pi.
    TogglePhase { element: usize },
    /// Splice a measurement in before the element at `position`.
    InsertMeasure {
        position: usize,
        mode: ModeId,
        destructive: bool,
    },
    /// Delete an existing measurement.
    RemoveMeasure { element: usize },
}

/// Observation site whose marginal is compared between base and intervened
/// runs. Identified against the base circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSite {
    /// Transcript entry of the instrument at this base element index.
    Instrument { element: usize },
    /// Whether the terminal detector on this mode fired.
    Detector { mode: ModeId },
}

impl fmt::Display for ProbeSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeSite::Instrument { element } => write!(f, "instrument@{}", element + 1),
            ProbeSite::Detector { mode } => write!(f, "detector@{mode}"),
        }
    }
}

/// A no-signalling experiment: one intervention, a set of probe sites that
/// must sit outside its causal future.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignallingProbe {
    pub circuit: Circuit,
    pub intervention: Intervention,
    pub sites: Vec<ProbeSite>,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("base circuit failed validation: {0:?}")]
    InvalidBase(Vec<Finding>),
    #[error("intervened circuit failed validation: {0:?}")]
    InvalidIntervention(Vec<Finding>),
    #[error("intervention targets element {0} which does not fit it")]
    UnsuitableElement(usize),
    #[error("probe site {site} is causally downstream of the intervention; influence along the circuit is physics, not signalling")]
    ProbeDownstream { site: String },
    #[error("probe site {site} is not an instrument or detector of the base circuit")]
    BadSite { site: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoSignallingReport {
    pub sites: Vec<ProbeSite>,
    /// Exact total-variation distance between the probe marginals.
    pub deviation: Prob,
}

fn apply_intervention(
    base: &Circuit,
    intervention: &Intervention,
) -> Result<(Circuit, Vec<Option<usize>>), AuditError> {
    let mut out = base.clone();
    let n = base.elements.len();
    match *intervention {
        Intervention::TogglePhase { element } => {
            match out.elements.get_mut(element) {
                Some(Element::PhaseShift { angle, .. }) => {
                    *angle = match angle {
                        PhaseAngle::Zero => PhaseAngle::Pi,
                        PhaseAngle::Pi => PhaseAngle::Zero,
                    };
                }
                _ => return Err(AuditError::UnsuitableElement(element)),
            }
            Ok((out, (0..n).map(Some).collect()))
        }
        Intervention::InsertMeasure {
            position,
            mode,
            destructive,
        } => {
            if position > n {
                return Err(AuditError::UnsuitableElement(position));
            }
            out.elements
                .insert(position, Element::Measure { mode, destructive });
            let map = (0..n)
                .map(|i| Some(if i < position { i } else { i + 1 }))
                .collect();
            Ok((out, map))
        }
        Intervention::RemoveMeasure { element } => {
            match out.elements.get(element) {
                Some(Element::Measure { .. }) => {}
                _ => return Err(AuditError::UnsuitableElement(element)),
            }
            out.elements.remove(element);
            let map = (0..n)
                .map(|i| match i.cmp(&element) {
                    std::cmp::Ordering::Less => Some(i),
                    std::cmp::Ordering::Equal => None,
                    std::cmp::Ordering::Greater => Some(i - 1),
                })
                .collect();
            Ok((out, map))
        }
    }
}

/// The DAG node whose causal future is off-limits for probes, in the
/// circuit that contains the intervention.
fn intervention_node(intervention: &Intervention, base_to_new: &[Option<usize>]) -> (bool, usize) {
    // returns (in_intervened_circuit, element index there or in base)
    match *intervention {
        Intervention::TogglePhase { element } => (
            true,
            base_to_new[element].expect("toggle keeps the element"),
        ),
        Intervention::InsertMeasure { position, .. } => (true, position),
        Intervention::RemoveMeasure { element } => (false, element),
    }
}

fn site_key_extractor(
    circuit: &Circuit,
    site: ProbeSite,
    base_to_new: Option<&[Option<usize>]>,
) -> Result<SiteExtractor, AuditError> {
    match site {
        ProbeSite::Instrument { element } => {
            let local = match base_to_new {
                Some(map) => map
                    .get(element)
                    .copied()
                    .flatten()
                    .ok_or(AuditError::BadSite {
                        site: site.to_string(),
                    })?,
                None => element,
            };
            let entry = circuit.entry_index_of(local).ok_or(AuditError::BadSite {
                site: site.to_string(),
            })?;
            Ok(SiteExtractor::Entry(entry))
        }
        ProbeSite::Detector { mode } => {
            let detected = circuit
                .detect_modes()
                .is_some_and(|modes| modes.contains(&mode));
            if !detected {
                return Err(AuditError::BadSite {
                    site: site.to_string(),
                });
            }
            Ok(SiteExtractor::DetectorFired(mode))
        }
    }
}

enum SiteExtractor {
    Entry(usize),
    DetectorFired(ModeId),
}

type SiteKey = Vec<SiteValue>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SiteValue {
    Entry(Option<TranscriptEntry>),
    Fired(bool),
}

fn project_sites(
    dist: &crate::outcome::OutcomeDistribution,
    extractors: &[SiteExtractor],
) -> crate::outcome::ProjectedDistribution<SiteKey> {
    dist.project(|t| {
        extractors
            .iter()
            .map(|e| match e {
                SiteExtractor::Entry(i) => SiteValue::Entry(t.entries.get(*i).copied()),
                SiteExtractor::DetectorFired(m) => {
                    SiteValue::Fired(t.terminal == Terminal::Detector(*m))
                }
            })
            .collect()
    })
}

/// Computes exact probe marginals for base and intervened circuits and
/// their exact total-variation distance. The preconditions reject probes
/// inside the intervention's causal future.
pub fn no_signalling_check(probe: &SignallingProbe) -> Result<NoSignallingReport, AuditError> {
    let base = &probe.circuit;
    let base_findings = validate(base);
    if !base_findings.is_empty() {
        return Err(AuditError::InvalidBase(base_findings));
    }
    let (intervened, base_to_new) = apply_intervention(base, &probe.intervention)?;
    let intervened_findings = validate(&intervened);
    if !intervened_findings.is_empty() {
        return Err(AuditError::InvalidIntervention(intervened_findings));
    }

    // Causal admissibility: probe sites must not be descendants of the
    // intervention node (nor the node itself).
    let (in_intervened, node_element) = intervention_node(&probe.intervention, &base_to_new);
    let dag_circuit = if in_intervened { &intervened } else { base };
    let dag = causal_dag(dag_circuit);
    let node = dag
        .node_index(DagNode::Element {
            index: node_element,
        })
        .expect("intervention node exists");
    let forbidden = dag.descendants(node);
    for site in &probe.sites {
        let site_node = match *site {
            ProbeSite::Instrument { element } => {
                let local = if in_intervened {
                    base_to_new
                        .get(element)
                        .copied()
                        .flatten()
                        .ok_or(AuditError::BadSite {
                            site: site.to_string(),
                        })?
                } else {
                    element
                };
                dag.node_index(DagNode::Element { index: local })
                    .ok_or(AuditError::BadSite {
                        site: site.to_string(),
                    })?
            }
            ProbeSite::Detector { mode } => {
                dag.node_index(DagNode::Detector { mode })
                    .ok_or(AuditError::BadSite {
                        site: site.to_string(),
                    })?
            }
        };
        if site_node == node || forbidden.contains(&site_node) {
            return Err(AuditError::ProbeDownstream {
                site: site.to_string(),
            });
        }
    }

    // Exact marginals on both sides.
    let base_dist = run_exact(base)?;
    let new_dist = run_exact(&intervened)?;
    let base_extractors: Vec<SiteExtractor> = probe
        .sites
        .iter()
        .map(|&s| site_key_extractor(base, s, None))
        .collect::<Result<_, _>>()?;
    let new_extractors: Vec<SiteExtractor> = probe
        .sites
        .iter()
        .map(|&s| site_key_extractor(&intervened, s, Some(&base_to_new)))
        .collect::<Result<_, _>>()?;

    let base_marginal = project_sites(&base_dist, &base_extractors);
    let new_marginal = project_sites(&new_dist, &new_extractors);
    let deviation = base_marginal
        .tv_exact(&new_marginal)
        .expect("toy exact runs produce exact distributions");

    Ok(NoSignallingReport {
        sites: probe.sites.clone(),
        deviation,
    })
}

/// Modes that are live just before `position`: declared modes not yet
/// diverted, plus fresh modes already introduced.
fn live_before(c: &Circuit, position: usize) -> Vec<ModeId> {
    let mut live: Vec<ModeId> = c
        .modes
        .iter()
        .enumerate()
        .filter(|(_, d)| d.origin != crate::dsl::ModeOrigin::Fresh)
        .map(|(i, _)| ModeId(i))
        .collect();
    for element in &c.elements[..position] {
        match element {
            Element::Divert { mode } => live.retain(|m| m != mode),
            Element::Fresh { mode } => live.push(*mode),
            _ => {}
        }
    }
    live
}

/// Generates the standard probe battery for a circuit: every phase toggle
/// and every single-measurement insertion, each probing every base
/// instrument and detector outside the intervention's causal future.
pub fn admissible_probes(c: &Circuit) -> Result<Vec<SignallingProbe>, AuditError> {
    let findings = validate(c);
    if !findings.is_empty() {
        return Err(AuditError::InvalidBase(findings));
    }
    let detect_index = c.elements.len() - 1;

    let mut interventions = Vec::new();
    for (idx, element) in c.elements.iter().enumerate() {
        if matches!(element, Element::PhaseShift { .. }) {
            interventions.push(Intervention::TogglePhase { element: idx });
        }
    }
    for position in 0..=detect_index {
        for mode in live_before(c, position) {
            for destructive in [false, true] {
                interventions.push(Intervention::InsertMeasure {
                    position,
                    mode,
                    destructive,
                });
            }
        }
    }
    for (idx, element) in c.elements.iter().enumerate() {
        if matches!(element, Element::Measure { .. }) {
            interventions.push(Intervention::RemoveMeasure { element: idx });
        }
    }

    let mut all_sites: Vec<ProbeSite> = c
        .instrument_positions()
        .into_iter()
        .map(|element| ProbeSite::Instrument { element })
        .collect();
    if let Some(modes) = c.detect_modes() {
        all_sites.extend(modes.iter().map(|&mode| ProbeSite::Detector { mode }));
    }

    let mut probes = Vec::new();
    for intervention in interventions {
        let Ok((intervened, base_to_new)) = apply_intervention(c, &intervention) else {
            continue;
        };
        if !validate(&intervened).is_empty() {
            continue;
        }
        let (in_intervened, node_element) = intervention_node(&intervention, &base_to_new);
        let dag_circuit = if in_intervened { &intervened } else { c };
        let dag = causal_dag(dag_circuit);
        let node = dag
            .node_index(DagNode::Element {
                index: node_element,
            })
            .expect("intervention node exists");
        let forbidden = dag.descendants(node);
        for &site in &all_sites {
            let site_node = match site {
                ProbeSite::Instrument { element } => {
                    let local = if in_intervened {
                        match base_to_new[element] {
                            Some(i) => i,
                            None => continue,
                        }
                    } else {
                        element
                    };
                    match dag.node_index(DagNode::Element { index: local }) {
                        Some(n) => n,
                        None => continue,
                    }
                }
                ProbeSite::Detector { mode } => match dag.node_index(DagNode::Detector { mode }) {
                    Some(n) => n,
                    None => continue,
                },
            };
            if site_node == node || forbidden.contains(&site_node) {
                continue;
            }
            probes.push(SignallingProbe {
                circuit: c.clone(),
                intervention: intervention.clone(),
                sites: vec![site],
            });
        }
    }
    Ok(probes)
}
