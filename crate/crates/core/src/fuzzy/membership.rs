//! Piecewise-linear membership functions.

use serde::{Deserialize, Serialize};

use super::FuzzyError;

/// A fuzzy set over the real line given by its breakpoints.
///
/// Between vertices the degree is linearly interpolated. Left of the first
/// vertex and right of the last one the boundary degree is held constant, so a
/// boundary degree of zero means "zero outside the support" while a positive
/// one gives a shoulder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct MembershipFunction {
    vertices: Vec<(f64, f64)>,
}

/// Width of the near-vertical edge used for step functions, relative to the
/// magnitude of the step location.
const STEP_EDGE: f64 = 1e-12;

impl MembershipFunction {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self, FuzzyError> {
        if vertices.len() < 2 {
            return Err(FuzzyError::InvalidMembership(format!(
                "need at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        for &(x, mu) in &vertices {
            if !x.is_finite() || !mu.is_finite() {
                return Err(FuzzyError::InvalidMembership("non-finite vertex".into()));
            }
            if !(0.0..=1.0).contains(&mu) {
                return Err(FuzzyError::InvalidMembership(format!(
                    "degree {mu} outside [0,1]"
                )));
            }
        }
        for w in vertices.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(FuzzyError::InvalidMembership(format!(
                    "vertices not strictly increasing at x={}",
                    w[1].0
                )));
            }
        }
        Ok(Self { vertices })
    }

    /// Builds from vertices that may repeat x coordinates (degenerate
    /// triangle/trapezoid legs). Repeated points keep the larger degree.
    fn from_loose(points: &[(f64, f64)]) -> Result<Self, FuzzyError> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &(x, mu) in points {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = last.1.max(mu),
                Some(last) if x < last.0 => {
                    return Err(FuzzyError::InvalidMembership(format!(
                        "shape parameters out of order at x={x}"
                    )))
                }
                _ => out.push((x, mu)),
            }
        }
        if out.len() == 1 {
            // A singleton: give it a hairline support so it stays a valid set.
            let (x, mu) = out[0];
            let eps = STEP_EDGE * x.abs().max(1.0);
            return Self::new(vec![(x - eps, 0.0), (x, mu), (x + eps, 0.0)]);
        }
        Self::new(out)
    }

    /// Triangle with feet at `a`, `c` and apex at `b`. `a == b` or `b == c`
    /// give one-sided shoulders.
    pub fn triangle(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        Self::from_loose(&[(a, 0.0), (b, 1.0), (c, 0.0)])
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        Self::from_loose(&[(a, 0.0), (b, 1.0), (c, 1.0), (d, 0.0)])
    }

    /// Step from `left` to `right` at `at`.
    pub fn step(at: f64, left: f64, right: f64) -> Result<Self, FuzzyError> {
        let eps = STEP_EDGE * at.abs().max(1.0);
        Self::new(vec![(at, left), (at + eps, right)])
    }

    /// A constant-zero function over `[lo, hi]`.
    pub fn zero(lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        Self::new(vec![(lo, 0.0), (hi, 0.0)])
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// `[first x, last x]`.
    pub fn span(&self) -> (f64, f64) {
        (self.vertices[0].0, self.vertices[self.vertices.len() - 1].0)
    }

    pub fn height(&self) -> f64 {
        self.vertices.iter().map(|v| v.1).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.vertices.iter().all(|v| v.1 == 0.0)
    }

    /// Degree of membership of `x`.
    pub fn degree(&self, x: f64) -> f64 {
        let v = &self.vertices;
        if x <= v[0].0 {
            return v[0].1;
        }
        let last = v[v.len() - 1];
        if x >= last.0 {
            return last.1;
        }
        // first vertex with vx > x
        let idx = v.partition_point(|p| p.0 <= x);
        let (x0, y0) = v[idx - 1];
        let (x1, y1) = v[idx];
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Largest absolute slope over all segments.
    pub fn lipschitz(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }

    /// Rescales degrees so the maximum is 1.
    pub fn normalized(&self) -> Result<Self, FuzzyError> {
        let h = self.height();
        if h == 0.0 {
            return Err(FuzzyError::DegenerateSet);
        }
        if h == 1.0 {
            return Ok(self.clone());
        }
        Self::new(self.vertices.iter().map(|&(x, mu)| (x, mu / h)).collect())
    }

    /// Image under `x -> scale * x + offset`. A negative scale mirrors the
    /// function.
    pub fn affine(&self, scale: f64, offset: f64) -> Result<Self, FuzzyError> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(FuzzyError::InvalidMembership("degenerate affine map".into()));
        }
        let mut v: Vec<(f64, f64)> = self
            .vertices
            .iter()
            .map(|&(x, mu)| (scale * x + offset, mu))
            .collect();
        if scale < 0.0 {
            v.reverse();
        }
        Self::new(v)
    }

    /// Supremum over x of `min(self(x), other(x))`, computed on segment
    /// breakpoints and crossing points.
    pub fn sup_min(&self, other: &MembershipFunction) -> f64 {
        let mut xs: Vec<f64> = self
            .vertices
            .iter()
            .chain(other.vertices.iter())
            .map(|v| v.0)
            .collect();
        sort_dedup(&mut xs);
        let mut best: f64 = 0.0;
        for &x in &xs {
            best = best.max(self.degree(x).min(other.degree(x)));
        }
        for w in xs.windows(2) {
            if let Some(x) = crossing(w[0], w[1], |x| self.degree(x) - other.degree(x)) {
                best = best.max(self.degree(x).min(other.degree(x)));
            }
        }
        best
    }
}

impl TryFrom<Vec<(f64, f64)>> for MembershipFunction {
    type Error = FuzzyError;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<MembershipFunction> for Vec<(f64, f64)> {
    fn from(mf: MembershipFunction) -> Self {
        mf.vertices
    }
}

pub(crate) fn sort_dedup(xs: &mut Vec<f64>) {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
}

/// Root of the linear function `g` on `[a, b]` strictly inside the interval,
/// if `g` changes sign there. `g` must be affine on the interval.
pub(crate) fn crossing(a: f64, b: f64, g: impl Fn(f64) -> f64) -> Option<f64> {
    let ga = g(a);
    let gb = g(b);
    if (ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0) {
        let x = a + (b - a) * ga / (ga - gb);
        if x > a && x < b {
            return Some(x);
        }
    }
    None
}
