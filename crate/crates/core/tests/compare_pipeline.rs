//! Fuzzy compare pipeline checked against a brute-force numeric oracle that
//! shares no code with the library: triangle degrees by formula, output set
//! sampled on a fine grid, centroid by midpoint quadrature.

use fuzzyrepair::constraint::{evaluate_compare, soften_harden, CompareConstraint, CompareOp, ConstraintNode, SetOfConstraints};
use fuzzyrepair::fuzzy::{FuzzyValue, OperatorSet};

fn tri(a: f64, b: f64, c: f64, x: f64) -> f64 {
    if x == b {
        1.0
    } else if x < b {
        if a == b || x <= a { if a == b { 1.0 } else { 0.0 } } else { (x - a) / (b - a) }
    } else if b == c || x >= c {
        if b == c { 1.0 } else { 0.0 }
    } else {
        (c - x) / (c - b)
    }
}

/// Output term by satisfaction level index 0 (very_bad) .. 4 (very_good).
fn out_term(level: usize, y: f64) -> f64 {
    let c = level as f64 * 0.25;
    let a = if level == 0 { c } else { c - 0.25 };
    let b = if level == 4 { c } else { c + 0.25 };
    tri(a, c, b, y)
}

fn centroid(mu: impl Fn(f64) -> f64) -> f64 {
    let n = 400_000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let y = (i as f64 + 0.5) / n as f64;
        let m = mu(y);
        num += y * m;
        den += m;
    }
    num / den
}

/// Oracle satisfaction of `x <= v` softened over `ramp`.
fn oracle_le(x: f64, v: f64, ramp: f64) -> f64 {
    let od = ((x - v) / ramp).clamp(0.0, 1.0);
    // deviation terms on the violating side, apex k/3, with their conclusions
    let fire: Vec<(f64, usize)> = (0..4)
        .map(|k| {
            let c = k as f64 / 3.0;
            let a = if k == 0 { -1.0 / 3.0 } else { c - 1.0 / 3.0 };
            let b = if k == 3 { c } else { c + 1.0 / 3.0 };
            let level = [4, 2, 1, 0][k];
            (tri(a, c, b, od), level)
        })
        .collect();
    let mu = |y: f64| fire.iter().map(|&(h, l)| h.min(out_term(l, y))).fold(0.0, f64::max);
    let lo = centroid(|y| out_term(0, y));
    let hi = centroid(|y| out_term(4, y));
    ((centroid(mu) - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn lib(c: &CompareConstraint, x: f64) -> f64 {
    evaluate_compare(c, &FuzzyValue::Crisp(x), &OperatorSet::default(), None, None).unwrap()
}

// Frozen from the oracle above.
const HALF_RAMP: f64 = 0.35;
const QUARTER_RAMP: f64 = 0.5885135135135134;

#[test]
fn pipeline_matches_oracle_along_the_ramp() {
    let c = CompareConstraint::new("alu-cons", "alu-cntnt", CompareOp::Le, 0.08).with_ramp(0.04);
    for i in 0..=60 {
        let x = 0.06 + i as f64 * 0.001;
        let (got, want) = (lib(&c, x), oracle_le(x, 0.08, 0.04));
        assert!((got - want).abs() < 1e-5, "x={x}: {got} vs {want}");
    }
}

#[test]
fn golden_values() {
    let c = CompareConstraint::new("alu-cons", "alu-cntnt", CompareOp::Le, 0.08).with_ramp(0.04);
    assert!((oracle_le(0.10, 0.08, 0.04) - HALF_RAMP).abs() < 1e-5);
    assert!((lib(&c, 0.10) - HALF_RAMP).abs() < 1e-12);
    assert!((oracle_le(3.0, 0.0, 12.0) - QUARTER_RAMP).abs() < 1e-5);
    let even = CompareConstraint::new("even", "d", CompareOp::Le, 0.0).with_ramp(12.0);
    assert!((lib(&even, 3.0) - QUARTER_RAMP).abs() < 1e-12);
}

#[test]
fn softening_by_two_at_old_full_ramp() {
    let c = CompareConstraint::new("alu-cons", "alu-cntnt", CompareOp::Le, 0.08).with_ramp(0.04);
    let s = SetOfConstraints::new("s", vec![ConstraintNode::Compare(c.clone())]);
    assert_eq!(lib(&c, 0.12), 0.0);
    let soft = soften_harden(&s, 2.0).unwrap();
    let c2 = soft.compares()[0].clone();
    let got = lib(&c2, 0.12);
    assert!((got - oracle_le(0.12, 0.08, 0.08)).abs() < 1e-5);
    assert!((got - HALF_RAMP).abs() < 1e-12);
}

#[test]
fn ge_mirrors_le() {
    let le = CompareConstraint::new("a", "x", CompareOp::Le, 1.0).with_ramp(0.5);
    let ge = CompareConstraint::new("b", "x", CompareOp::Ge, 1.0).with_ramp(0.5);
    for i in 0..=40 {
        let t = i as f64 * 0.025;
        assert!((lib(&le, 1.0 + t) - lib(&ge, 1.0 - t)).abs() < 1e-12);
    }
}
