use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    deviation_variable, evaluate_compare, satisfaction_variable, CompareConstraint, ConstraintError,
    Dilatation,
};
use crate::fuzzy::{
    aggregate, weighted_toward_one, weighted_toward_zero, Connective, FuzzyValue,
    LinguisticVariable, OperatorSet, RuleSet,
};

pub type Bindings = BTreeMap<String, FuzzyValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatConstraint {
    pub name: String,
    #[serde(default = "one")]
    pub importance: f64,
    #[serde(default)]
    pub dilatation: Dilatation,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub comment: String,
    pub left: Box<ConstraintNode>,
    pub right: Box<ConstraintNode>,
    pub op: Connective,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintNode {
    Compare(CompareConstraint),
    Concat(ConcatConstraint),
}

impl ConstraintNode {
    pub fn concat(
        name: impl Into<String>,
        op: Connective,
        left: ConstraintNode,
        right: ConstraintNode,
    ) -> Self {
        ConstraintNode::Concat(ConcatConstraint {
            name: name.into(),
            importance: 1.0,
            dilatation: Dilatation::Fuzzy,
            comment: String::new(),
            left: Box::new(left),
            right: Box::new(right),
            op,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            ConstraintNode::Compare(c) => &c.name,
            ConstraintNode::Concat(c) => &c.name,
        }
    }

    pub fn importance(&self) -> f64 {
        match self {
            ConstraintNode::Compare(c) => c.importance,
            ConstraintNode::Concat(c) => c.importance,
        }
    }

    pub fn set_importance(&mut self, w: f64) {
        match self {
            ConstraintNode::Compare(c) => c.importance = w,
            ConstraintNode::Concat(c) => c.importance = w,
        }
    }

    /// Pre-order walk over all nodes.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ConstraintNode)) {
        f(self);
        if let ConstraintNode::Concat(c) = self {
            c.left.walk(f);
            c.right.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut ConstraintNode)) {
        f(self);
        if let ConstraintNode::Concat(c) = self {
            c.left.walk_mut(f);
            c.right.walk_mut(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetOfConstraints {
    pub name: String,
    pub roots: Vec<ConstraintNode>,
    /// Rule bases replacing the generated defaults, keyed by compare name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rulesets: BTreeMap<String, RuleSet>,
    #[serde(default)]
    pub operator_set: OperatorSet,
    #[serde(default)]
    pub parameter_set: Vec<LinguisticVariable>,
}

impl SetOfConstraints {
    pub fn new(name: impl Into<String>, roots: Vec<ConstraintNode>) -> Self {
        Self {
            name: name.into(),
            roots,
            rulesets: BTreeMap::new(),
            operator_set: OperatorSet::default(),
            parameter_set: Vec::new(),
        }
    }

    pub fn with_ops(mut self, ops: OperatorSet) -> Self {
        self.operator_set = ops;
        self
    }

    pub fn with_parameters(mut self, vars: Vec<LinguisticVariable>) -> Self {
        self.parameter_set = vars;
        self
    }

    pub fn compares(&self) -> Vec<&CompareConstraint> {
        let mut out = Vec::new();
        for r in &self.roots {
            r.walk(&mut |n| {
                if let ConstraintNode::Compare(c) = n {
                    out.push(c);
                }
            });
        }
        out
    }

    pub fn for_each_node_mut(&mut self, mut f: impl FnMut(&mut ConstraintNode)) {
        for r in &mut self.roots {
            r.walk_mut(&mut f);
        }
    }

    pub fn variable(&self, name: &str) -> Option<&LinguisticVariable> {
        self.parameter_set.iter().find(|v| v.name() == name)
    }

    /// Structural checks: non-empty, unique node names, every compare
    /// variable declared, every override rule base well formed.
    pub fn validate(&self) -> Result<(), ConstraintError> {
        if self.roots.is_empty() {
            return Err(ConstraintError::Invalid(format!("set `{}` has no constraints", self.name)));
        }
        let mut names = BTreeSet::new();
        let mut err = None;
        for r in &self.roots {
            r.walk(&mut |n| {
                if err.is_some() {
                    return;
                }
                if !names.insert(n.name().to_string()) {
                    err = Some(ConstraintError::Invalid(format!("duplicate constraint name `{}`", n.name())));
                    return;
                }
                match n {
                    ConstraintNode::Compare(c) => {
                        if let Err(e) = c.validate() {
                            err = Some(e);
                        } else if self.variable(&c.variable).is_none() {
                            err = Some(ConstraintError::Invalid(format!(
                                "`{}` refers to undeclared variable `{}`",
                                c.name, c.variable
                            )));
                        }
                    }
                    ConstraintNode::Concat(c) => {
                        if !(c.importance >= 0.0 && c.importance.is_finite()) {
                            err = Some(ConstraintError::Invalid(format!(
                                "{}: importance {} must be finite and >= 0",
                                c.name, c.importance
                            )));
                        }
                    }
                }
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
        let mut vars = BTreeSet::new();
        for v in &self.parameter_set {
            if !vars.insert(v.name()) {
                return Err(ConstraintError::Invalid(format!("duplicate variable `{}`", v.name())));
            }
        }
        for (name, rs) in &self.rulesets {
            if !self.compares().iter().any(|c| &c.name == name) {
                return Err(ConstraintError::Invalid(format!("rule base for unknown compare `{name}`")));
            }
            rs.validate(&[deviation_variable(), satisfaction_variable()])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedConstraint {
    pub name: String,
    pub importance: f64,
    pub score: f64,
    pub hard_violation: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<EvaluatedConstraint>,
}

impl EvaluatedConstraint {
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a EvaluatedConstraint)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetOfEvalConstraints {
    pub name: String,
    pub score: f64,
    pub valid: bool,
    pub roots: Vec<EvaluatedConstraint>,
}

impl SetOfEvalConstraints {
    pub fn find(&self, name: &str) -> Option<&EvaluatedConstraint> {
        let mut hit = None;
        for r in &self.roots {
            r.walk(&mut |e| {
                if hit.is_none() && e.name == name {
                    hit = Some(e);
                }
            });
        }
        hit
    }

    /// Names of the nodes crossing the hard barrier, in tree order.
    pub fn hard_violations(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for r in &self.roots {
            r.walk(&mut |e| {
                if e.hard_violation {
                    out.push(e.name.as_str());
                }
            });
        }
        out
    }

    /// Scores of every compare leaf, keyed by name.
    pub fn leaf_scores(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for r in &self.roots {
            r.walk(&mut |e| {
                if e.children.is_empty() {
                    out.insert(e.name.clone(), e.score);
                }
            });
        }
        out
    }
}

fn evaluate_node(
    s: &SetOfConstraints,
    node: &ConstraintNode,
    bindings: &Bindings,
) -> Result<EvaluatedConstraint, ConstraintError> {
    let ops = &s.operator_set;
    let (score, children) = match node {
        ConstraintNode::Compare(c) => {
            let v = bindings
                .get(&c.variable)
                .ok_or_else(|| ConstraintError::UnboundVariable(c.variable.clone()))?;
            let universe = s.variable(&c.variable).map(|v| v.universe());
            let score = evaluate_compare(c, v, ops, universe, s.rulesets.get(&c.name))?;
            (score, Vec::new())
        }
        ConstraintNode::Concat(c) => {
            let l = evaluate_node(s, &c.left, bindings)?;
            let r = evaluate_node(s, &c.right, bindings)?;
            let max_w = l.importance.max(r.importance);
            let (el, er) = if max_w > 0.0 {
                (l.importance / max_w, r.importance / max_w)
            } else {
                (1.0, 1.0)
            };
            let combined = match c.op {
                Connective::And => ops
                    .and_op
                    .apply(weighted_toward_one(l.score, el), weighted_toward_one(r.score, er)),
                Connective::Or => ops
                    .or_op
                    .apply(weighted_toward_zero(l.score, el), weighted_toward_zero(r.score, er)),
            }
            .clamp(0.0, 1.0);
            // a crisp concat only counts when fully satisfied
            let combined = if c.dilatation == Dilatation::Crisp && combined < 1.0 {
                0.0
            } else {
                combined
            };
            (combined, vec![l, r])
        }
    };
    let importance = node.importance();
    Ok(EvaluatedConstraint {
        name: node.name().to_string(),
        importance,
        score,
        hard_violation: score == 0.0 && importance > 0.0,
        children,
    })
}

/// Scores every node bottom-up and aggregates the roots by importance.
///
/// Scoring always completes; a set is invalid as soon as any node with
/// positive importance scores exactly zero, whatever the aggregation.
pub fn evaluate_set(s: &SetOfConstraints, bindings: &Bindings) -> Result<SetOfEvalConstraints, ConstraintError> {
    let roots = s
        .roots
        .iter()
        .map(|n| evaluate_node(s, n, bindings))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(f64, f64)> = roots.iter().map(|r| (r.score, r.importance)).collect();
    let score = aggregate(&s.operator_set, &pairs)?;
    let mut valid = true;
    for r in &roots {
        r.walk(&mut |e| valid &= !e.hard_violation);
    }
    Ok(SetOfEvalConstraints {
        name: s.name.clone(),
        score,
        valid,
        roots,
    })
}

/// Scales the ramp of every compare not flagged as tuned.
pub fn soften_harden(s: &SetOfConstraints, factor: f64) -> Result<SetOfConstraints, ConstraintError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(ConstraintError::NonPositiveFactor(factor));
    }
    let mut out = s.clone();
    out.for_each_node_mut(|n| {
        if let ConstraintNode::Compare(c) = n {
            if !c.tuned {
                c.ramp_width *= factor;
            }
        }
    });
    Ok(out)
}
