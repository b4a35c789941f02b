use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::membership::{crossing, sort_dedup};
use super::{FuzzyError, LinguisticVariable, MembershipFunction, OperatorSet, OrOp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub variable: String,
    pub term: String,
}

impl Atom {
    pub fn new(variable: impl Into<String>, term: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            term: term.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Connective {
    #[default]
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<Atom>,
    #[serde(default)]
    pub connective: Connective,
    pub consequent: Atom,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let joiner = match self.connective {
            Connective::And => " AND ",
            Connective::Or => " OR ",
        };
        let parts: Vec<String> = self
            .antecedent
            .iter()
            .map(|a| format!("{} is {}", a.variable, a.term))
            .collect();
        write!(
            f,
            "IF {} THEN {} is {}",
            parts.join(joiner),
            self.consequent.variable,
            self.consequent.term
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

/// Term degrees per variable, as produced by `fuzzify`.
pub type Degrees = BTreeMap<String, BTreeMap<String, f64>>;

impl RuleSet {
    /// Checks that the set is non-empty and that every atom names an existing
    /// variable and term.
    pub fn validate(&self, vars: &[&LinguisticVariable]) -> Result<(), FuzzyError> {
        if self.rules.is_empty() {
            return Err(FuzzyError::InvalidRuleSet("no rules".into()));
        }
        let lookup = |a: &Atom| -> Result<(), FuzzyError> {
            let var = vars
                .iter()
                .find(|v| v.name() == a.variable)
                .ok_or_else(|| FuzzyError::InvalidRuleSet(format!("unknown variable {}", a.variable)))?;
            var.term(&a.term).map(|_| ()).ok_or_else(|| {
                FuzzyError::InvalidRuleSet(format!("unknown term {}.{}", a.variable, a.term))
            })
        };
        for r in &self.rules {
            if r.antecedent.is_empty() {
                return Err(FuzzyError::InvalidRuleSet(format!("empty antecedent in `{r}`")));
            }
            r.antecedent.iter().try_for_each(lookup)?;
            lookup(&r.consequent)?;
        }
        Ok(())
    }

    pub fn contains_rule_text(&self, text: &str) -> bool {
        self.rules.iter().any(|r| r.to_string() == text)
    }
}

fn firing_strength(rule: &Rule, input: &Degrees, ops: &OperatorSet) -> Result<f64, FuzzyError> {
    let mut acc: Option<f64> = None;
    for atom in &rule.antecedent {
        let d = input
            .get(&atom.variable)
            .and_then(|t| t.get(&atom.term))
            .copied()
            .ok_or_else(|| FuzzyError::UnresolvedVariable(format!("{}.{}", atom.variable, atom.term)))?;
        acc = Some(match (acc, rule.connective) {
            (None, _) => d,
            (Some(a), Connective::And) => ops.and_op.apply(a, d),
            (Some(a), Connective::Or) => ops.or_op.apply(a, d),
        });
    }
    Ok(acc.unwrap_or(0.0))
}

/// Fires every rule concluding on `output` and returns the combined output
/// set over `output`'s universe.
///
/// Implication clips each consequent term at its firing strength; clipped
/// terms are joined with the operator set's `or`. With `max` the result is
/// exact. Probabilistic sum is not piecewise linear, so it is sampled on a
/// refined grid between breakpoints.
pub fn apply_rules(
    rs: &RuleSet,
    input: &Degrees,
    output: &LinguisticVariable,
    ops: &OperatorSet,
) -> Result<MembershipFunction, FuzzyError> {
    let mut clipped: Vec<(&MembershipFunction, f64)> = Vec::new();
    for rule in rs.rules.iter().filter(|r| r.consequent.variable == output.name()) {
        let strength = firing_strength(rule, input, ops)?;
        let term = output.term(&rule.consequent.term).ok_or_else(|| {
            FuzzyError::UnresolvedVariable(format!("{}.{}", output.name(), rule.consequent.term))
        })?;
        if strength > 0.0 {
            clipped.push((term, strength));
        }
    }
    let u = output.universe();
    if clipped.is_empty() {
        return MembershipFunction::zero(u.lo, u.hi);
    }

    let inside = |x: f64| x >= u.lo && x <= u.hi;
    let mut xs = vec![u.lo, u.hi];
    for (term, _) in &clipped {
        xs.extend(term.vertices().iter().map(|v| v.0).filter(|&x| inside(x)));
    }
    sort_dedup(&mut xs);
    // Clip points: where a term crosses its own firing level.
    let mut extra = Vec::new();
    for w in xs.windows(2) {
        for &(term, h) in &clipped {
            if let Some(x) = crossing(w[0], w[1], |x| term.degree(x) - h) {
                extra.push(x);
            }
        }
    }
    xs.extend(extra);
    sort_dedup(&mut xs);
    // Each clipped term is now affine on every interval; add pairwise crossings.
    let clip = |i: usize, x: f64| clipped[i].0.degree(x).min(clipped[i].1);
    let mut extra = Vec::new();
    for w in xs.windows(2) {
        for i in 0..clipped.len() {
            for j in i + 1..clipped.len() {
                if let Some(x) = crossing(w[0], w[1], |x| clip(i, x) - clip(j, x)) {
                    extra.push(x);
                }
            }
        }
    }
    xs.extend(extra);
    sort_dedup(&mut xs);

    if ops.or_op == OrOp::ProbabilisticSum && clipped.len() > 1 {
        const SUBDIV: usize = 16;
        let mut fine = Vec::with_capacity(xs.len() * SUBDIV);
        for w in xs.windows(2) {
            for k in 0..SUBDIV {
                fine.push(w[0] + (w[1] - w[0]) * k as f64 / SUBDIV as f64);
            }
        }
        fine.push(*xs.last().unwrap());
        xs = fine;
        sort_dedup(&mut xs);
    }

    let combine = |x: f64| {
        (0..clipped.len())
            .map(|i| clip(i, x))
            .fold(0.0, |a, b| ops.or_op.apply(a, b))
            .clamp(0.0, 1.0)
    };
    MembershipFunction::new(xs.into_iter().map(|x| (x, combine(x))).collect())
}
