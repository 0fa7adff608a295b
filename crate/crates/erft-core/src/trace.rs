//! Variable-access tracing for the ontic engine.
//!
//! Every read and write of a mode variable flows through an [`AccessSink`],
//! so the locality audit can observe exactly which variables each circuit
//! element touched without changing the dynamics. The no-op sink keeps the
//! untraced path identical to the traced one.

use std::collections::BTreeSet;

use crate::ontology::ModeId;

/// Which ontic variable of a mode was touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    Occupation,
    Phase,
}

impl Var {
    pub fn symbol(self) -> &'static str {
        match self {
            Var::Occupation => "n",
            Var::Phase => "s",
        }
    }
}

/// A (mode, variable) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ModeVar {
    pub mode: ModeId,
    pub var: Var,
}

/// Observer of variable accesses, keyed by the executing element's index.
pub trait AccessSink {
    fn read(&mut self, element: usize, var: ModeVar);
    fn write(&mut self, element: usize, var: ModeVar);
}

/// Sink that records nothing.
pub struct NoopSink;

impl AccessSink for NoopSink {
    fn read(&mut self, _element: usize, _var: ModeVar) {}
    fn write(&mut self, _element: usize, _var: ModeVar) {}
}

/// Per-element sets of variables read and written, aggregated over trials.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementAccess {
    pub reads: BTreeSet<ModeVar>,
    pub writes: BTreeSet<ModeVar>,
}

/// Sink that accumulates accesses per element.
#[derive(Debug, Clone)]
pub struct RecordingSink {
    per_element: Vec<ElementAccess>,
}

impl RecordingSink {
    pub fn new(elements: usize) -> Self {
        RecordingSink {
            per_element: vec![ElementAccess::default(); elements],
        }
    }

    pub fn per_element(&self) -> &[ElementAccess] {
        &self.per_element
    }

    pub fn into_per_element(self) -> Vec<ElementAccess> {
        self.per_element
    }

    pub fn merge(&mut self, other: &RecordingSink) {
        assert_eq!(self.per_element.len(), other.per_element.len());
        for (mine, theirs) in self.per_element.iter_mut().zip(&other.per_element) {
            mine.reads.extend(theirs.reads.iter().copied());
            mine.writes.extend(theirs.writes.iter().copied());
        }
    }
}

impl AccessSink for RecordingSink {
    fn read(&mut self, element: usize, var: ModeVar) {
        self.per_element[element].reads.insert(var);
    }

    fn write(&mut self, element: usize, var: ModeVar) {
        self.per_element[element].writes.insert(var);
    }
}
