//! Compare constraints and the default satisfaction pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::ConstraintError;
use crate::fuzzy::{
    apply_rules, defuzzify, fuzzify, possibility, Atom, Connective, Defuzzification, FuzzyValue,
    LinguisticVariable, MembershipFunction, OperatorSet, Rule, RuleSet, Universe,
};

pub const DEVIATION: &str = "deviation";
pub const SATISFACTION: &str = "satisfaction";

/// Deviation terms from the most negative to the most positive.
pub const DEVIATION_TERMS: [&str; 7] = [
    "negative_big",
    "negative_medium",
    "negative_small",
    "zero",
    "positive_small",
    "positive_medium",
    "positive_big",
];

/// Satisfaction terms from worst to best.
pub const SATISFACTION_TERMS: [&str; 5] = ["very_bad", "bad", "zero", "good", "very_good"];

/// Smallest ramp width, used when the compare value is zero.
pub const MIN_RAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "=")]
    Eq,
}

impl CompareOp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Le => lhs <= rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Le => "<=",
            CompareOp::Lt => "<",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
            CompareOp::Eq => "=",
        }
    }

    /// +1 if violations lie above the compare value, -1 if below, 0 for `=`.
    fn violation_sign(self) -> f64 {
        match self {
            CompareOp::Le | CompareOp::Lt => 1.0,
            CompareOp::Ge | CompareOp::Gt => -1.0,
            CompareOp::Eq => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dilatation {
    Crisp,
    #[default]
    Fuzzy,
    /// Crisp on the satisfied side, fuzzy ramp on the violating side.
    Mixed,
}

/// `variable op compare_value`, softened over `ramp_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCompare")]
pub struct CompareConstraint {
    pub name: String,
    pub importance: f64,
    pub dilatation: Dilatation,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub comment: String,
    pub variable: String,
    pub op: CompareOp,
    pub compare_value: f64,
    /// Violation magnitude at which satisfaction reaches zero.
    pub ramp_width: f64,
    /// Set once an expert has tuned this constraint by hand; global
    /// softening leaves tuned constraints alone.
    #[serde(default)]
    pub tuned: bool,
    /// Hand-tuned satisfaction over the oriented, ramp-normalized deviation.
    /// Replaces the rule pipeline when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<MembershipFunction>,
}

#[derive(Deserialize)]
struct RawCompare {
    name: String,
    #[serde(default = "one")]
    importance: f64,
    #[serde(default)]
    dilatation: Dilatation,
    #[serde(default)]
    comment: String,
    variable: String,
    op: CompareOp,
    compare_value: f64,
    #[serde(default)]
    ramp_width: Option<f64>,
    #[serde(default)]
    tuned: bool,
    #[serde(default)]
    curve: Option<MembershipFunction>,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawCompare> for CompareConstraint {
    type Error = ConstraintError;

    fn try_from(r: RawCompare) -> Result<Self, Self::Error> {
        let c = CompareConstraint {
            ramp_width: r.ramp_width.unwrap_or_else(|| default_ramp(r.compare_value)),
            name: r.name,
            importance: r.importance,
            dilatation: r.dilatation,
            comment: r.comment,
            variable: r.variable,
            op: r.op,
            compare_value: r.compare_value,
            tuned: r.tuned,
            curve: r.curve,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Half the magnitude of the compare value, floored at [`MIN_RAMP`].
pub fn default_ramp(compare_value: f64) -> f64 {
    (0.5 * compare_value.abs()).max(MIN_RAMP)
}

impl CompareConstraint {
    pub fn new(name: impl Into<String>, variable: impl Into<String>, op: CompareOp, value: f64) -> Self {
        Self {
            name: name.into(),
            importance: 1.0,
            dilatation: Dilatation::Fuzzy,
            comment: String::new(),
            variable: variable.into(),
            op,
            compare_value: value,
            ramp_width: default_ramp(value),
            tuned: false,
            curve: None,
        }
    }

    pub fn with_ramp(mut self, ramp: f64) -> Self {
        self.ramp_width = ramp;
        self
    }

    pub fn with_importance(mut self, importance: f64) -> Self {
        self.importance = importance;
        self
    }

    pub fn with_dilatation(mut self, d: Dilatation) -> Self {
        self.dilatation = d;
        self
    }

    pub fn with_curve(mut self, curve: MembershipFunction) -> Self {
        self.curve = Some(curve);
        self
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        if !(self.importance >= 0.0 && self.importance.is_finite()) {
            return Err(ConstraintError::Invalid(format!(
                "{}: importance {} must be finite and >= 0",
                self.name, self.importance
            )));
        }
        if !(self.ramp_width > 0.0 && self.ramp_width.is_finite()) {
            return Err(ConstraintError::Invalid(format!(
                "{}: ramp width {} must be > 0",
                self.name, self.ramp_width
            )));
        }
        if !self.compare_value.is_finite() {
            return Err(ConstraintError::Invalid(format!("{}: compare value not finite", self.name)));
        }
        Ok(())
    }

    /// Signed deviation `(x - compare_value) / ramp_width`.
    pub fn deviation(&self, x: f64) -> f64 {
        (x - self.compare_value) / self.ramp_width
    }

    /// Deviation measured in the violating direction (magnitude for `=`).
    pub fn oriented_deviation(&self, x: f64) -> f64 {
        let d = self.deviation(x);
        match self.op {
            CompareOp::Eq => d.abs(),
            op => op.violation_sign() * d,
        }
    }
}

impl fmt::Display for CompareConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.variable, self.op.symbol(), self.compare_value)
    }
}

/// The normalized deviation variable: seven equidistant triangles on
/// `[-1, 1]`, with shoulders at both ends.
pub fn deviation_variable() -> &'static LinguisticVariable {
    static VAR: OnceLock<LinguisticVariable> = OnceLock::new();
    VAR.get_or_init(|| {
        let terms = DEVIATION_TERMS.iter().enumerate().map(|(i, t)| {
            let k = i as f64 - 3.0;
            let c = k / 3.0;
            let a = if i == 0 { c } else { (k - 1.0) / 3.0 };
            let b = if i == DEVIATION_TERMS.len() - 1 { c } else { (k + 1.0) / 3.0 };
            (t.to_string(), MembershipFunction::triangle(a, c, b).expect("static term"))
        });
        LinguisticVariable::with_terms(DEVIATION, Universe { lo: -1.0, hi: 1.0 }, terms)
            .expect("static variable")
    })
}

/// The satisfaction output variable: five equidistant triangles on `[0, 1]`.
pub fn satisfaction_variable() -> &'static LinguisticVariable {
    static VAR: OnceLock<LinguisticVariable> = OnceLock::new();
    VAR.get_or_init(|| {
        let step = 0.25;
        let terms = SATISFACTION_TERMS.iter().enumerate().map(|(i, t)| {
            let c = step * i as f64;
            let a = if i == 0 { c } else { c - step };
            let b = if i == SATISFACTION_TERMS.len() - 1 { c } else { c + step };
            (t.to_string(), MembershipFunction::triangle(a, c, b).expect("static term"))
        });
        LinguisticVariable::with_terms(SATISFACTION, Universe { lo: 0.0, hi: 1.0 }, terms)
            .expect("static variable")
    })
}

/// Satisfaction term for a violation of the given size class, where 0 is the
/// boundary and 3 the full ramp.
fn violation_term(size: usize) -> &'static str {
    match size {
        0 => "very_good",
        1 => "zero",
        2 => "bad",
        _ => "very_bad",
    }
}

/// One rule per deviation term, mapping the deviation to satisfaction.
///
/// Terms on the satisfied side conclude `very_good`. On the violating side
/// small violations conclude `zero`, medium `bad`, big `very_bad`. For `=`
/// both sides violate, symmetrically in the magnitude.
pub fn make_default_ruleset(c: &CompareConstraint) -> RuleSet {
    let rules = DEVIATION_TERMS
        .iter()
        .enumerate()
        .map(|(i, term)| {
            // signed offset from the zero term: -3..=3
            let k = i as i64 - 3;
            let violating = match c.op.violation_sign() {
                s if s > 0.0 => k.max(0),
                s if s < 0.0 => (-k).max(0),
                _ => k.abs(),
            };
            Rule {
                antecedent: vec![Atom::new(DEVIATION, *term)],
                connective: Connective::And,
                consequent: Atom::new(SATISFACTION, violation_term(violating as usize)),
            }
        })
        .collect();
    RuleSet { rules }
}

/// Default rule sets only depend on the operator; build each once.
fn default_rules_for(op: CompareOp) -> &'static RuleSet {
    static CACHE: OnceLock<[RuleSet; 5]> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        [CompareOp::Le, CompareOp::Lt, CompareOp::Ge, CompareOp::Gt, CompareOp::Eq]
            .map(|op| make_default_ruleset(&CompareConstraint::new("", "", op, 0.0)))
    });
    let idx = match op {
        CompareOp::Le => 0,
        CompareOp::Lt => 1,
        CompareOp::Ge => 2,
        CompareOp::Gt => 3,
        CompareOp::Eq => 4,
    };
    &all[idx]
}

/// Defuzzified values of a lone `very_bad` and a lone `very_good`, which
/// anchor the rescaling of the defuzzified output onto `[0, 1]`.
fn anchors(method: Defuzzification) -> (f64, f64) {
    static CENTROID: OnceLock<(f64, f64)> = OnceLock::new();
    static MOM: OnceLock<(f64, f64)> = OnceLock::new();
    let cell = match method {
        Defuzzification::Centroid => &CENTROID,
        Defuzzification::MeanOfMaxima => &MOM,
    };
    *cell.get_or_init(|| {
        let out = satisfaction_variable();
        let at = |term: &str| {
            let rs = RuleSet {
                rules: vec![Rule {
                    antecedent: vec![Atom::new("anchor", "on")],
                    connective: Connective::And,
                    consequent: Atom::new(SATISFACTION, term),
                }],
            };
            let mut deg = BTreeMap::new();
            deg.insert("anchor".to_string(), BTreeMap::from([("on".to_string(), 1.0)]));
            let ops = OperatorSet::default();
            let set = apply_rules(&rs, &deg, out, &ops).expect("anchor rules");
            defuzzify(&set, method).expect("anchor set")
        };
        (at("very_bad"), at("very_good"))
    })
}

/// Degree of satisfaction of `c` for the bound value.
///
/// Fuzzy dilatation runs the rule pipeline on the ramp-normalized deviation:
/// fuzzify, fire `rules` (or the generated defaults), defuzzify, and rescale
/// so that a lone `very_bad` maps to 0 and a lone `very_good` to 1. Crisp
/// dilatation is a step at the compare value. A `curve` on the constraint
/// replaces the rule pipeline.
pub fn evaluate_compare(
    c: &CompareConstraint,
    binding: &FuzzyValue,
    ops: &OperatorSet,
    universe: Option<Universe>,
    rules: Option<&RuleSet>,
) -> Result<f64, ConstraintError> {
    if let Some(u) = universe {
        let (a, b) = match binding {
            FuzzyValue::Crisp(x) => (*x, *x),
            FuzzyValue::Distribution(d) => d.span(),
        };
        for x in [a, b] {
            if !u.contains(x) {
                return Err(ConstraintError::OutOfUniverse {
                    constraint: c.name.clone(),
                    value: x,
                });
            }
        }
    }

    match c.dilatation {
        Dilatation::Crisp => return Ok(crisp_score(c, binding)),
        Dilatation::Mixed => {
            if crisp_score(c, binding) == 1.0 {
                return Ok(1.0);
            }
        }
        Dilatation::Fuzzy => {}
    }

    if let Some(curve) = &c.curve {
        return Ok(match binding {
            FuzzyValue::Crisp(x) => curve.degree(c.oriented_deviation(*x)),
            FuzzyValue::Distribution(d) => oriented_distribution(c, d)?
                .iter()
                .map(|od| od.sup_min(curve))
                .fold(0.0, f64::max),
        });
    }

    let var = deviation_variable();
    let (degrees, rs) = match rules {
        Some(rs) => {
            let degrees = match binding {
                FuzzyValue::Crisp(x) => {
                    fuzzify(var, &FuzzyValue::Crisp(snap(c.deviation(*x)).clamp(-1.0, 1.0)))?
                }
                FuzzyValue::Distribution(dist) => {
                    possibility(var, &dist.affine(1.0 / c.ramp_width, -c.compare_value / c.ramp_width)?)
                }
            };
            (degrees, rs)
        }
        None => (folded_degrees(c, binding)?, default_rules_for(c.op)),
    };
    let mut input = BTreeMap::new();
    input.insert(DEVIATION.to_string(), degrees);
    let out = apply_rules(rs, &input, satisfaction_variable(), ops)?;
    let value = defuzzify(&out, ops.defuzz)?;
    let (lo, hi) = anchors(ops.defuzz);
    Ok(((value - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Deviation degrees for the default rule base.
///
/// The satisfied side is folded onto the boundary: every satisfied deviation
/// counts as `zero`, so the split of a satisfied value across several
/// satisfied-side terms cannot dilute the `very_good` conclusion. Degrees
/// are computed on the oriented deviation and then placed on the side the
/// operator treats as violating.
fn folded_degrees(
    c: &CompareConstraint,
    binding: &FuzzyValue,
) -> Result<BTreeMap<String, f64>, ConstraintError> {
    let var = deviation_variable();
    let oriented = match binding {
        FuzzyValue::Crisp(x) => {
            let od = snap(c.oriented_deviation(*x)).clamp(0.0, 1.0);
            fuzzify(var, &FuzzyValue::Crisp(od))?
        }
        FuzzyValue::Distribution(d) => {
            let mut acc: BTreeMap<String, f64> = BTreeMap::new();
            for piece in oriented_distribution(c, d)? {
                let satisfied = sup_up_to_zero(&piece);
                for (t, deg) in possibility(var, &piece) {
                    let deg = if t == "zero" { deg.max(satisfied) } else { deg };
                    let e = acc.entry(t).or_insert(0.0);
                    *e = e.max(deg);
                }
            }
            acc
        }
    };
    let mirror = matches!(c.op, CompareOp::Ge | CompareOp::Gt);
    Ok(DEVIATION_TERMS
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let k = i as i64 - 3;
            let src = if mirror { -k } else { k };
            let deg = if src < 0 {
                0.0
            } else {
                oriented[DEVIATION_TERMS[(src + 3) as usize]]
            };
            (t.to_string(), deg)
        })
        .collect())
}

/// Rounding noise in `(x - v) / ramp` must not move a value that lies on a
/// term apex off it: that would turn an exact hard barrier at the full ramp
/// into a tiny positive score.
fn snap(d: f64) -> f64 {
    let k = (d * 3.0).round();
    if (d * 3.0 - k).abs() < 1e-9 {
        k / 3.0
    } else {
        d
    }
}

/// `sup { mu(x) : x <= 0 }`.
fn sup_up_to_zero(mf: &MembershipFunction) -> f64 {
    let v = mf.vertices();
    let mut best: f64 = 0.0;
    for &(x, mu) in v {
        if x <= 0.0 {
            best = best.max(mu);
        }
    }
    if v[0].0 > 0.0 {
        // left shoulder
        best = best.max(v[0].1);
    }
    best.max(mf.degree(0.0))
}

fn crisp_score(c: &CompareConstraint, binding: &FuzzyValue) -> f64 {
    match binding {
        FuzzyValue::Crisp(x) => {
            if c.op.holds(*x, c.compare_value) {
                1.0
            } else {
                0.0
            }
        }
        // Possibility that the relation holds.
        FuzzyValue::Distribution(d) => {
            let cv = c.compare_value;
            match c.op {
                CompareOp::Eq => d.degree(cv),
                op => {
                    let (lo, hi) = d.span();
                    let mut best: f64 = 0.0;
                    for &(x, mu) in d.vertices() {
                        if op.holds(x, cv) {
                            best = best.max(mu);
                        }
                    }
                    if lo < cv && cv < hi {
                        // supremum at the boundary, approached from the satisfied side
                        best = best.max(d.degree(cv));
                    }
                    best
                }
            }
        }
    }
}

/// The distribution mapped onto oriented deviation. `=` folds both sides,
/// giving one mapped piece per side.
fn oriented_distribution(
    c: &CompareConstraint,
    d: &MembershipFunction,
) -> Result<Vec<MembershipFunction>, ConstraintError> {
    let s = 1.0 / c.ramp_width;
    let off = -c.compare_value / c.ramp_width;
    Ok(match c.op {
        CompareOp::Eq => vec![d.affine(s, off)?, d.affine(-s, -off)?],
        op => {
            let sign = op.violation_sign();
            vec![d.affine(sign * s, sign * off)?]
        }
    })
}
