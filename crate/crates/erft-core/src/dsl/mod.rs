//! Textual description language for interferometer experiments.
//!
//! `.ifc` files describe a named circuit over declared modes as a single
//! global timeline of elements. [`parse`] builds the AST, [`validate`]
//! checks the semantic invariants, [`serialize`] renders the canonical
//! byte-stable form, and [`causal_dag`] derives the per-mode causal
//! structure used by the locality audit.

mod ast;
pub mod dag;
mod parse;
mod validate;

pub use ast::{serialize, Circuit, Element, ModeDecl, ModeOrigin};
pub use dag::{causal_dag, CausalDag, DagNode};
pub use parse::{parse, ParseError};
pub use validate::{validate, Finding};
