use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FuzzyError, MembershipFunction};

/// Closed real interval a variable ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    pub lo: f64,
    pub hi: f64,
}

impl Universe {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::InvalidVariable(format!(
                "universe [{lo}, {hi}] is empty or unbounded"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A variable whose values are named fuzzy terms over a real universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVariable", into = "RawVariable")]
pub struct LinguisticVariable {
    name: String,
    universe: Universe,
    terms: BTreeMap<String, MembershipFunction>,
}

#[derive(Serialize, Deserialize)]
struct RawVariable {
    name: String,
    universe: Universe,
    terms: BTreeMap<String, MembershipFunction>,
}

impl TryFrom<RawVariable> for LinguisticVariable {
    type Error = FuzzyError;
    fn try_from(r: RawVariable) -> Result<Self, FuzzyError> {
        Self::new(r.name, r.universe, r.terms)
    }
}

impl From<LinguisticVariable> for RawVariable {
    fn from(v: LinguisticVariable) -> Self {
        RawVariable {
            name: v.name,
            universe: v.universe,
            terms: v.terms,
        }
    }
}

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        universe: Universe,
        terms: BTreeMap<String, MembershipFunction>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        let universe = Universe::new(universe.lo, universe.hi)?;
        if terms.is_empty() {
            return Err(FuzzyError::InvalidVariable(format!("{name}: no terms")));
        }
        for (t, mf) in &terms {
            let (a, b) = mf.span();
            if a < universe.lo || b > universe.hi {
                return Err(FuzzyError::InvalidVariable(format!(
                    "{name}.{t}: support [{a}, {b}] leaves universe [{}, {}]",
                    universe.lo, universe.hi
                )));
            }
        }
        Ok(Self {
            name,
            universe,
            terms,
        })
    }

    /// Convenience constructor from `(term, function)` pairs. Duplicate term
    /// names are rejected.
    pub fn with_terms(
        name: impl Into<String>,
        universe: Universe,
        terms: impl IntoIterator<Item = (String, MembershipFunction)>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        let mut map = BTreeMap::new();
        for (t, mf) in terms {
            if map.insert(t.clone(), mf).is_some() {
                return Err(FuzzyError::InvalidVariable(format!(
                    "{name}: duplicate term {t}"
                )));
            }
        }
        Self::new(name, universe, map)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn terms(&self) -> &BTreeMap<String, MembershipFunction> {
        &self.terms
    }

    pub fn term(&self, name: &str) -> Option<&MembershipFunction> {
        self.terms.get(name)
    }
}

/// A value bound to a variable: a crisp number or a possibility distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzyValue {
    Crisp(f64),
    Distribution(#[serde(deserialize_with = "normalized_distribution")] MembershipFunction),
}

fn normalized_distribution<'de, D>(d: D) -> Result<MembershipFunction, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let mf = MembershipFunction::deserialize(d)?;
    mf.normalized().map_err(serde::de::Error::custom)
}

impl FuzzyValue {
    /// Wraps a distribution, rescaling it to height 1.
    pub fn distribution(mf: MembershipFunction) -> Result<Self, FuzzyError> {
        Ok(Self::Distribution(mf.normalized()?))
    }
}

/// Degree to which `value` matches each term of `var`.
///
/// Crisp values are looked up directly. Distributions are matched
/// possibilistically: `sup_x min(dist(x), term(x))`.
pub fn fuzzify(
    var: &LinguisticVariable,
    value: &FuzzyValue,
) -> Result<BTreeMap<String, f64>, FuzzyError> {
    let u = var.universe();
    match value {
        FuzzyValue::Crisp(x) => {
            if !u.contains(*x) {
                return Err(FuzzyError::OutOfUniverse {
                    variable: var.name.clone(),
                    value: *x,
                });
            }
            Ok(var
                .terms
                .iter()
                .map(|(t, mf)| (t.clone(), mf.degree(*x)))
                .collect())
        }
        FuzzyValue::Distribution(dist) => {
            let (a, b) = dist.span();
            if !u.contains(a) || !u.contains(b) {
                return Err(FuzzyError::OutOfUniverse {
                    variable: var.name.clone(),
                    value: if u.contains(a) { b } else { a },
                });
            }
            Ok(possibility(var, dist))
        }
    }
}

/// Possibilistic matching without the universe check.
pub(crate) fn possibility(var: &LinguisticVariable, dist: &MembershipFunction) -> BTreeMap<String, f64> {
    var.terms
        .iter()
        .map(|(t, mf)| (t.clone(), dist.sup_min(mf)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn low_high() -> LinguisticVariable {
        LinguisticVariable::with_terms(
            "v",
            Universe::new(0.0, 1.0).unwrap(),
            [
                ("low".to_string(), MembershipFunction::triangle(0.0, 0.0, 1.0).unwrap()),
                ("high".to_string(), MembershipFunction::triangle(0.0, 1.0, 1.0).unwrap()),
            ],
        )
        .unwrap()
    }

    /// Independent sup-min: scan a fine grid.
    fn grid_sup_min(a: &MembershipFunction, b: &MembershipFunction, lo: f64, hi: f64) -> f64 {
        let n = ((hi - lo) / 1e-4).round() as usize;
        (0..=n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                a.degree(x).min(b.degree(x))
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn crisp_vertex_values() {
        let v = low_high();
        let d = fuzzify(&v, &FuzzyValue::Crisp(0.0)).unwrap();
        assert_eq!(d["low"], 1.0);
        assert_eq!(d["high"], 0.0);
        let d = fuzzify(&v, &FuzzyValue::Crisp(0.5)).unwrap();
        assert_eq!(d["low"], 0.5);
        assert_eq!(d["high"], 0.5);
    }

    #[test]
    fn out_of_universe() {
        let v = low_high();
        assert!(matches!(
            fuzzify(&v, &FuzzyValue::Crisp(1.5)),
            Err(FuzzyError::OutOfUniverse { .. })
        ));
    }

    #[test]
    fn possibilistic_matches_grid_oracle() {
        let v = low_high();
        let dist = MembershipFunction::triangle(0.25, 0.5, 0.75).unwrap();
        let oracle_low = grid_sup_min(&dist, v.term("low").unwrap(), 0.0, 1.0);
        let oracle_high = grid_sup_min(&dist, v.term("high").unwrap(), 0.0, 1.0);
        // Both legs cross the terms at height 0.6 (x = 0.4 and x = 0.6).
        assert!((oracle_low - 0.6).abs() < 1e-9);
        assert!((oracle_high - 0.6).abs() < 1e-9);
        let d = fuzzify(&v, &FuzzyValue::distribution(dist).unwrap()).unwrap();
        assert!((d["low"] - 0.6).abs() < 1e-12);
        assert!((d["high"] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn distribution_is_normalized() {
        let mf = MembershipFunction::new(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)]).unwrap();
        let FuzzyValue::Distribution(d) = FuzzyValue::distribution(mf).unwrap() else {
            unreachable!()
        };
        assert_eq!(d.height(), 1.0);
        let json = r#"{"distribution":[[0.0,0.0],[0.5,0.25],[1.0,0.0]]}"#;
        let FuzzyValue::Distribution(d) = serde_json::from_str(json).unwrap() else {
            unreachable!()
        };
        assert_eq!(d.height(), 1.0);
    }

    #[test]
    fn rejects_term_outside_universe() {
        let r = LinguisticVariable::with_terms(
            "v",
            Universe::new(0.0, 1.0).unwrap(),
            [("t".to_string(), MembershipFunction::triangle(0.0, 1.0, 2.0).unwrap())],
        );
        assert!(r.is_err());
    }
}
