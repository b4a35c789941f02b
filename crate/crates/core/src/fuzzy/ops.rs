//! Operator choices and the numeric kernels behind them.

use serde::{Deserialize, Serialize};

use super::{FuzzyError, MembershipFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AndOp {
    #[default]
    Min,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrOp {
    #[default]
    Max,
    ProbabilisticSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Min,
    Max,
    #[default]
    WeightedMean,
    ExponentWeightedMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Defuzzification {
    #[default]
    Centroid,
    MeanOfMaxima,
}

/// How importances become exponents for exponent-weighted aggregation.
/// `Normalized` divides by the largest weight, `Raw` uses them as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeighingScheme {
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct OperatorSet {
    #[serde(default)]
    pub and_op: AndOp,
    #[serde(default)]
    pub or_op: OrOp,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub defuzz: Defuzzification,
    #[serde(default)]
    pub weighing_scheme: WeighingScheme,
}

impl AndOp {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            AndOp::Min => a.min(b),
            AndOp::Product => a * b,
        }
    }
}

impl OrOp {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            OrOp::Max => a.max(b),
            OrOp::ProbabilisticSum => a + b - a * b,
        }
    }
}

/// Combines `(score, weight)` pairs into one score in `[0, 1]`.
///
/// `min` and `max` ignore weights. `weighted_mean` is `Σ w·s / Σ w`.
/// `exponent_weighted_min` is `min s^(w / max_w)` under the normalized
/// scheme and `min s^w` under the raw one.
pub fn aggregate(ops: &OperatorSet, scored: &[(f64, f64)]) -> Result<f64, FuzzyError> {
    aggregate_with(ops.aggregation, ops.weighing_scheme, scored)
}

pub fn aggregate_with(
    agg: Aggregation,
    scheme: WeighingScheme,
    scored: &[(f64, f64)],
) -> Result<f64, FuzzyError> {
    if scored.is_empty() {
        return Err(FuzzyError::EmptyInput);
    }
    for &(s, w) in scored {
        if !(0.0..=1.0).contains(&s) || !(w >= 0.0 && w.is_finite()) {
            return Err(FuzzyError::InvalidScore { score: s, weight: w });
        }
    }
    let r = match agg {
        Aggregation::Min => scored.iter().map(|p| p.0).fold(1.0, f64::min),
        Aggregation::Max => scored.iter().map(|p| p.0).fold(0.0, f64::max),
        Aggregation::WeightedMean => {
            let total: f64 = scored.iter().map(|p| p.1).sum();
            if total == 0.0 {
                return Err(FuzzyError::AllZeroWeights);
            }
            let num: f64 = scored.iter().map(|p| p.0 * p.1).sum();
            // rounding must not carry the mean outside the weighted scores
            let (lo, hi) = scored
                .iter()
                .filter(|p| p.1 > 0.0)
                .fold((1.0f64, 0.0f64), |(l, h), p| (l.min(p.0), h.max(p.0)));
            (num / total).clamp(lo, hi)
        }
        Aggregation::ExponentWeightedMin => {
            let max_w = scored.iter().map(|p| p.1).fold(0.0, f64::max);
            let scale = match scheme {
                WeighingScheme::Normalized => {
                    if max_w == 0.0 {
                        return Err(FuzzyError::AllZeroWeights);
                    }
                    max_w
                }
                WeighingScheme::Raw => 1.0,
            };
            scored
                .iter()
                .map(|&(s, w)| weighted_toward_one(s, w / scale))
                .fold(1.0, f64::min)
        }
    };
    Ok(r.clamp(0.0, 1.0))
}

/// `s^e` with `0^0 = 1`: a weightless constraint is ignored.
pub fn weighted_toward_one(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        s.powf(e)
    }
}

/// Dual of [`weighted_toward_one`] for disjunctions: a weightless branch is
/// pushed to 0 so it cannot win an `or`.
pub fn weighted_toward_zero(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        1.0 - (1.0 - s).powf(e)
    }
}

/// Collapses a fuzzy set to one representative value.
pub fn defuzzify(set: &MembershipFunction, method: Defuzzification) -> Result<f64, FuzzyError> {
    if set.is_zero() {
        return Err(FuzzyError::DegenerateSet);
    }
    let v = set.vertices();
    match method {
        Defuzzification::Centroid => {
            let mut area = 0.0;
            let mut moment = 0.0;
            for w in v.windows(2) {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                let h = x1 - x0;
                area += 0.5 * h * (y0 + y1);
                moment += h / 6.0 * (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1));
            }
            if area == 0.0 {
                return Err(FuzzyError::DegenerateSet);
            }
            Ok(moment / area)
        }
        Defuzzification::MeanOfMaxima => {
            let top = set.height();
            let mut len = 0.0;
            let mut moment = 0.0;
            for w in v.windows(2) {
                if w[0].1 == top && w[1].1 == top {
                    let h = w[1].0 - w[0].0;
                    len += h;
                    moment += h * 0.5 * (w[0].0 + w[1].0);
                }
            }
            if len > 0.0 {
                return Ok(moment / len);
            }
            let peaks: Vec<f64> = v.iter().filter(|p| p.1 == top).map(|p| p.0).collect();
            Ok(peaks.iter().sum::<f64>() / peaks.len() as f64)
        }
    }
}
