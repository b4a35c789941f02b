//! Runtime constraint generation and the incrementally maintained
//! evaluation tree.

mod rules;
mod template;
mod tree;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::constraint::ConstraintError;
use crate::domain::DomainSchema;

pub use rules::{
    generate_constraints, Binding, GeneratedConstraint, GenerationRule, Operand, Predicate, RangeKind, Scope,
};
pub use template::{specialize, Expr, Specialized, TemplateConstraint};
pub use tree::{worst_conflicts, EvaluationTree, Leaf, TreeSpec, ViolationRecord, DEFAULT_VIOLATION_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicError {
    #[error("attribute `{0}` is not bound")]
    MissingAttribute(String),
    #[error("template `{0}` produced a non-finite value")]
    NonFinite(String),
    #[error("instance does not match the domain schema: {0}")]
    SchemaMismatch(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("position {0} is out of range")]
    UnknownPosition(usize),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// A schedule object as seen by the constraint layer: derived attributes
/// plus the positions they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub name: String,
    pub kind: String,
    pub unit: usize,
    pub attrs: BTreeMap<String, f64>,
    pub depends_on: Vec<usize>,
}

/// A problem instantiation the evaluation tree can be built over.
///
/// The set of objects, their kinds, units and `depends_on` positions are
/// fixed for an instance; only attribute values change between calls.
pub trait Instance {
    fn schema(&self) -> &DomainSchema;
    fn position_count(&self) -> usize;
    fn units(&self) -> Vec<String>;
    fn object_count(&self) -> usize;
    /// Computes the object's attributes from the current instantiation.
    fn object(&self, idx: usize) -> ObjectRecord;
    /// Positions a repair should look at for a constraint of type
    /// `template` over `objects`.
    fn violation_positions(&self, template: &str, objects: &[usize]) -> Vec<usize> {
        let _ = template;
        objects.iter().flat_map(|&o| self.object(o).depends_on).collect()
    }
}
