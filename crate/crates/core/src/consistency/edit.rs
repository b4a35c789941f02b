use serde::{Deserialize, Serialize};

use super::ConsistencyError;
use crate::constraint::{soften_harden, ConstraintNode};
use crate::fuzzy::{Aggregation, OperatorSet};
use crate::kb::KnowledgeBase;

/// One change to a configuration. Constraint names match nodes of the
/// static sets and templates alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "snake_case")]
pub enum ConfigEdit {
    SetImportance { constraint: String, importance: f64 },
    ScaleImportances { factor: f64 },
    SetAggregation { aggregation: Aggregation },
    SetOperators { operators: OperatorSet },
    SetRamp { constraint: String, ramp: f64 },
    SetCompareValue { constraint: String, value: f64 },
    /// Ramp scaling of every untuned compare: above 1 softens, below 1
    /// hardens.
    Soften { factor: f64 },
}

fn check_positive(what: &str, x: f64) -> Result<(), ConsistencyError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConsistencyError::InvalidEdit(format!("{what} must be positive, got {x}")))
    }
}

/// Applies `f` to every node or template base named `name`; errors when
/// there is none.
fn for_named(
    kb: &mut KnowledgeBase,
    name: &str,
    mut node: impl FnMut(&mut ConstraintNode),
    mut template: impl FnMut(&mut crate::constraint::CompareConstraint),
) -> Result<(), ConsistencyError> {
    let mut hits = 0;
    for set in &mut kb.sets {
        set.for_each_node_mut(|n| {
            if n.name() == name {
                node(n);
                hits += 1;
            }
        });
    }
    for t in &mut kb.templates {
        if t.name == name {
            template(&mut t.base);
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(ConsistencyError::UnknownConstraint(name.into()));
    }
    Ok(())
}

pub fn apply_edits(kb: &KnowledgeBase, edits: &[ConfigEdit]) -> Result<KnowledgeBase, ConsistencyError> {
    let mut out = kb.clone();
    for e in edits {
        match e {
            ConfigEdit::SetImportance { constraint, importance } => {
                if !(*importance >= 0.0 && importance.is_finite()) {
                    return Err(ConsistencyError::InvalidEdit(format!("importance {importance}")));
                }
                for_named(&mut out, constraint, |n| n.set_importance(*importance), |c| c.importance = *importance)?;
            }
            ConfigEdit::ScaleImportances { factor } => {
                check_positive("scale factor", *factor)?;
                for set in &mut out.sets {
                    set.for_each_node_mut(|n| n.set_importance(n.importance() * factor));
                }
                for t in &mut out.templates {
                    t.base.importance *= factor;
                }
            }
            ConfigEdit::SetAggregation { aggregation } => {
                out.operator_set.aggregation = *aggregation;
                for set in &mut out.sets {
                    set.operator_set.aggregation = *aggregation;
                }
            }
            ConfigEdit::SetOperators { operators } => {
                out.operator_set = *operators;
                for set in &mut out.sets {
                    set.operator_set = *operators;
                }
            }
            ConfigEdit::SetRamp { constraint, ramp } => {
                check_positive("ramp", *ramp)?;
                for_named(
                    &mut out,
                    constraint,
                    |n| {
                        if let ConstraintNode::Compare(c) = n {
                            c.ramp_width = *ramp;
                        }
                    },
                    |c| c.ramp_width = *ramp,
                )?;
            }
            ConfigEdit::SetCompareValue { constraint, value } => {
                if !value.is_finite() {
                    return Err(ConsistencyError::InvalidEdit(format!("compare value {value}")));
                }
                for_named(
                    &mut out,
                    constraint,
                    |n| {
                        if let ConstraintNode::Compare(c) = n {
                            c.compare_value = *value;
                        }
                    },
                    |c| c.compare_value = *value,
                )?;
            }
            ConfigEdit::Soften { factor } => {
                check_positive("soften factor", *factor)?;
                for set in &mut out.sets {
                    *set = soften_harden(set, *factor).map_err(|e| ConsistencyError::InvalidEdit(e.to_string()))?;
                }
                for t in &mut out.templates {
                    if !t.base.tuned {
                        t.base.ramp_width *= factor;
                    }
                }
            }
        }
    }
    Ok(out)
}
