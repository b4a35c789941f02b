//! Fuzzy inference substrate: membership functions, linguistic variables,
//! fuzzification, rule firing, aggregation and defuzzification.
//!
//! Everything here is immutable after construction and pure.

mod membership;
mod ops;
mod rules;
mod variable;

use thiserror::Error;

pub use membership::MembershipFunction;
pub use ops::{
    aggregate, aggregate_with, defuzzify, weighted_toward_one, weighted_toward_zero, Aggregation,
    AndOp, Defuzzification, OperatorSet, OrOp, WeighingScheme,
};
pub use rules::{apply_rules, Atom, Connective, Degrees, Rule, RuleSet};
pub use variable::{fuzzify, FuzzyValue, LinguisticVariable, Universe};

pub(crate) use variable::possibility;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("invalid membership function: {0}")]
    InvalidMembership(String),
    #[error("invalid linguistic variable: {0}")]
    InvalidVariable(String),
    #[error("invalid rule set: {0}")]
    InvalidRuleSet(String),
    #[error("value {value} outside the universe of `{variable}`")]
    OutOfUniverse { variable: String, value: f64 },
    #[error("rule refers to unresolved {0}")]
    UnresolvedVariable(String),
    #[error("aggregation over an empty list")]
    EmptyInput,
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("score {score} / weight {weight} out of range")]
    InvalidScore { score: f64, weight: f64 },
    #[error("fuzzy set is identically zero")]
    DegenerateSet,
}
