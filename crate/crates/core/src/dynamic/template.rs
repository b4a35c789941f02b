use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DynamicError;
use crate::constraint::{evaluate_compare, CompareConstraint, ConstraintError};
use crate::fuzzy::{FuzzyValue, OperatorSet};

/// Side-effect-free arithmetic over named inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Input(String),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn input(name: &str) -> Self {
        Expr::Input(name.to_string())
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, ctx: &BTreeMap<String, f64>) -> Result<f64, DynamicError> {
        let bin = |a: &Expr, b: &Expr| -> Result<(f64, f64), DynamicError> { Ok((a.eval(ctx)?, b.eval(ctx)?)) };
        Ok(match self {
            Expr::Input(n) => *ctx.get(n).ok_or_else(|| DynamicError::MissingAttribute(n.clone()))?,
            Expr::Const(c) => *c,
            Expr::Add(a, b) => {
                let (a, b) = bin(a, b)?;
                a + b
            }
            Expr::Sub(a, b) => {
                let (a, b) = bin(a, b)?;
                a - b
            }
            Expr::Mul(a, b) => {
                let (a, b) = bin(a, b)?;
                a * b
            }
            Expr::Neg(a) => -a.eval(ctx)?,
            Expr::Abs(a) => a.eval(ctx)?.abs(),
            Expr::Max(a, b) => {
                let (a, b) = bin(a, b)?;
                a.max(b)
            }
            Expr::Min(a, b) => {
                let (a, b) = bin(a, b)?;
                a.min(b)
            }
        })
    }

    pub fn inputs(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_inputs(&mut out);
        out
    }

    fn collect_inputs(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Input(n) => {
                out.insert(n.clone());
            }
            Expr::Const(_) => {}
            Expr::Neg(a) | Expr::Abs(a) => a.collect_inputs(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Max(a, b) | Expr::Min(a, b) => {
                a.collect_inputs(out);
                b.collect_inputs(out);
            }
        }
    }
}

/// A compare constraint tuned around a reference value, whose left-hand
/// side is computed from instance attributes.
///
/// The template's name is its constraint type, which selects repairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateConstraint {
    pub name: String,
    pub base: CompareConstraint,
    pub specialization: Expr,
}

/// A template applied to concrete attribute values.
#[derive(Debug, Clone, PartialEq)]
pub struct Specialized {
    pub constraint: CompareConstraint,
    pub value: f64,
}

impl Specialized {
    pub fn score(&self, ops: &OperatorSet) -> Result<f64, ConstraintError> {
        evaluate_compare(&self.constraint, &FuzzyValue::Crisp(self.value), ops, None, None)
    }
}

/// Evaluates the specialization under `ctx`. The compare shape is copied
/// from the template unchanged.
pub fn specialize(t: &TemplateConstraint, ctx: &BTreeMap<String, f64>) -> Result<Specialized, DynamicError> {
    let value = t.specialization.eval(ctx)?;
    if !value.is_finite() {
        return Err(DynamicError::NonFinite(t.name.clone()));
    }
    Ok(Specialized {
        constraint: t.base.clone(),
        value,
    })
}
