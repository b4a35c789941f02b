//! Compare/concat constraint trees, their default rule bases and
//! satisfaction evaluation.

mod compare;
mod tree;

use thiserror::Error;

use crate::fuzzy::FuzzyError;

pub use compare::{
    default_ramp, deviation_variable, evaluate_compare, make_default_ruleset, satisfaction_variable,
    CompareConstraint, CompareOp, Dilatation, DEVIATION, DEVIATION_TERMS, MIN_RAMP, SATISFACTION,
    SATISFACTION_TERMS,
};
pub use tree::{
    evaluate_set, soften_harden, Bindings, ConcatConstraint, ConstraintNode, EvaluatedConstraint,
    SetOfConstraints, SetOfEvalConstraints,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("invalid constraint: {0}")]
    Invalid(String),
    #[error("constraint `{constraint}`: value {value} outside the variable universe")]
    OutOfUniverse { constraint: String, value: f64 },
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("factor {0} must be > 0")]
    NonPositiveFactor(f64),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}
