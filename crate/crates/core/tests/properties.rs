//! Property tests for the library-wide invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fuzzyrepair::consistency::{consistency_check, evaluate_snapshot, ReferencePairDb, Snapshot};
use fuzzyrepair::constraint::{
    evaluate_compare, evaluate_set, CompareConstraint, CompareOp, ConstraintNode, SetOfConstraints,
};
use fuzzyrepair::domain::queens::QueensBoard;
use fuzzyrepair::domain::shift::{
    default_reference_plan, initial_solution, reference_kb, repair, validate_hard, OperationPlan, Position,
    RepairKind, Schedule, ShiftInstance, ShiftType,
};
use fuzzyrepair::dynamic::EvaluationTree;
use fuzzyrepair::fuzzy::{
    aggregate, defuzzify, fuzzify, Aggregation, Connective, Defuzzification, FuzzyValue, LinguisticVariable,
    MembershipFunction, OperatorSet, Universe,
};
use fuzzyrepair::kb::KnowledgeBase;
use fuzzyrepair::optimizer::{run, Algorithm, OptimizerConfig, QueensProblem};

fn ops(aggregation: Aggregation) -> OperatorSet {
    OperatorSet { aggregation, ..Default::default() }
}

/// Sorted, distinct breakpoints with degrees in [0, 1].
fn piecewise() -> impl Strategy<Value = MembershipFunction> {
    prop::collection::vec((0.01f64..5.0, 0.0f64..=1.0), 2..7).prop_map(|steps| {
        let mut x = -10.0;
        let pts = steps
            .into_iter()
            .map(|(dx, y)| {
                x += dx;
                (x, y)
            })
            .collect();
        MembershipFunction::new(pts).unwrap()
    })
}

fn scored() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, 0.01f64..5.0), 1..12)
}

fn var(name: &str) -> LinguisticVariable {
    LinguisticVariable::new(
        name,
        Universe::new(-20.0, 20.0).unwrap(),
        [("any".to_string(), MembershipFunction::trapezoid(-20.0, -20.0, 20.0, 20.0).unwrap())]
            .into_iter()
            .collect(),
    )
    .unwrap()
}

fn crisp(pairs: &[(&str, f64)]) -> BTreeMap<String, FuzzyValue> {
    pairs.iter().map(|(k, v)| (k.to_string(), FuzzyValue::Crisp(*v))).collect()
}

fn compare(name: &str, v: &str, op: CompareOp, ramp: f64, w: f64) -> ConstraintNode {
    ConstraintNode::Compare(CompareConstraint::new(name, v, op, 0.0).with_ramp(ramp).with_importance(w))
}

fn lib_compare(c: &CompareConstraint, x: f64) -> f64 {
    evaluate_compare(c, &FuzzyValue::Crisp(x), &OperatorSet::default(), None, None).unwrap()
}

proptest! {
    #[test]
    fn membership_is_lipschitz(mf in piecewise(), x in -12.0f64..25.0, eps in 1e-6f64..0.5) {
        let l = mf.lipschitz();
        prop_assert!((mf.degree(x) - mf.degree(x + eps)).abs() <= l * eps + 1e-12);
    }

    #[test]
    fn crisp_fuzzification_is_degree(a in piecewise(), b in piecewise(), x in -10.0f64..10.0) {
        let v = LinguisticVariable::new(
            "v",
            Universe::new(-10.0, 40.0).unwrap(),
            [("a".to_string(), a.clone()), ("b".to_string(), b.clone())].into_iter().collect(),
        )
        .unwrap();
        let d = fuzzify(&v, &FuzzyValue::Crisp(x)).unwrap();
        prop_assert_eq!(d["a"], a.degree(x));
        prop_assert_eq!(d["b"], b.degree(x));
    }

    #[test]
    fn min_le_weighted_mean_le_max(s in scored()) {
        let lo = aggregate(&ops(Aggregation::Min), &s).unwrap();
        let mid = aggregate(&ops(Aggregation::WeightedMean), &s).unwrap();
        let hi = aggregate(&ops(Aggregation::Max), &s).unwrap();
        prop_assert!(lo <= mid && mid <= hi);
    }

    #[test]
    fn symmetric_centroid(half in prop::collection::vec((0.01f64..3.0, 0.05f64..=1.0), 1..6), axis in -5.0f64..5.0) {
        let mut right = Vec::new();
        let mut x = 0.0;
        for (dx, y) in half {
            x += dx;
            right.push((x, y));
        }
        let mut pts: Vec<(f64, f64)> = right.iter().rev().map(|&(x, y)| (axis - x, y)).collect();
        pts.push((axis, 1.0));
        pts.extend(right.iter().map(|&(x, y)| (axis + x, y)));
        let mf = MembershipFunction::new(pts).unwrap();
        prop_assert!((defuzzify(&mf, Defuzzification::Centroid).unwrap() - axis).abs() < 1e-9);
    }

    #[test]
    fn fuzzy_ops_are_deterministic(s in scored(), agg in prop::sample::select(vec![
        Aggregation::Min, Aggregation::Max, Aggregation::WeightedMean, Aggregation::ExponentWeightedMin,
    ])) {
        let a = aggregate(&ops(agg), &s).unwrap();
        prop_assert_eq!(a.to_bits(), aggregate(&ops(agg), &s).unwrap().to_bits());
    }

    #[test]
    fn one_sided_compare_is_monotone(ramp in 0.1f64..20.0, x in 0.0f64..25.0, dx in 0.0f64..5.0) {
        let le = CompareConstraint::new("c", "x", CompareOp::Le, 0.0).with_ramp(ramp);
        prop_assert!(lib_compare(&le, x + dx) <= lib_compare(&le, x) + 1e-12);
        let ge = CompareConstraint::new("c", "x", CompareOp::Ge, 0.0).with_ramp(ramp);
        prop_assert!(lib_compare(&ge, -x - dx) <= lib_compare(&ge, -x) + 1e-12);
    }

    #[test]
    fn equality_compare_peaks_at_value(ramp in 0.1f64..20.0, x in 0.0f64..25.0, dx in 0.0f64..5.0) {
        let eq = CompareConstraint::new("c", "x", CompareOp::Eq, 0.0).with_ramp(ramp);
        prop_assert_eq!(lib_compare(&eq, 0.0), 1.0);
        prop_assert!(lib_compare(&eq, x + dx) <= lib_compare(&eq, x) + 1e-12);
        prop_assert!(lib_compare(&eq, -x - dx) <= lib_compare(&eq, -x) + 1e-12);
    }

    #[test]
    fn min_set_score_bounded_by_roots(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        let s = SetOfConstraints::new("s", vec![
            compare("a", "x", CompareOp::Le, 2.0, 1.0),
            ConstraintNode::concat("bc", Connective::Or, compare("b", "y", CompareOp::Ge, 3.0, 2.0), compare("c", "z", CompareOp::Le, 1.0, 1.0)),
        ])
        .with_ops(ops(Aggregation::Min))
        .with_parameters(vec![var("x"), var("y"), var("z")]);
        let e = evaluate_set(&s, &crisp(&[("x", x), ("y", y), ("z", z)])).unwrap();
        for r in &e.roots {
            prop_assert!(e.score <= r.score + 1e-12);
        }
    }

    #[test]
    fn hard_violation_invalidates_under_every_aggregation(x in 2.5f64..10.0, y in -5.0f64..5.0, agg in prop::sample::select(vec![
        Aggregation::Min, Aggregation::Max, Aggregation::WeightedMean, Aggregation::ExponentWeightedMin,
    ])) {
        // a is fully violated beyond its ramp
        let s = SetOfConstraints::new("s", vec![compare("a", "x", CompareOp::Le, 2.0, 1.0), compare("b", "y", CompareOp::Le, 20.0, 1.0)])
            .with_ops(ops(agg))
            .with_parameters(vec![var("x"), var("y")]);
        let e = evaluate_set(&s, &crisp(&[("x", x), ("y", y)])).unwrap();
        prop_assert!(e.find("a").unwrap().hard_violation);
        prop_assert!(!e.valid);
        if agg == Aggregation::Min {
            prop_assert_eq!(e.score, 0.0);
        }
    }

    #[test]
    fn set_serde_round_trip_preserves_scores(x in -5.0f64..5.0, y in -5.0f64..5.0, wa in 0.1f64..5.0) {
        let s = SetOfConstraints::new("s", vec![
            compare("a", "x", CompareOp::Le, 2.0, wa),
            ConstraintNode::concat("b", Connective::And, compare("b1", "y", CompareOp::Eq, 3.0, 1.0), compare("b2", "x", CompareOp::Gt, 4.0, 1.0)),
        ])
        .with_parameters(vec![var("x"), var("y")]);
        let back: SetOfConstraints = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        let b = crisp(&[("x", x), ("y", y)]);
        prop_assert_eq!(evaluate_set(&s, &b).unwrap(), evaluate_set(&back, &b).unwrap());
    }
}

fn plan() -> OperationPlan {
    default_reference_plan()
}

fn build(kb: &KnowledgeBase, plan: &OperationPlan, s: &Schedule) -> EvaluationTree {
    EvaluationTree::build(kb, &ShiftInstance { schedule: s, plan }).unwrap()
}

fn repair_steps() -> impl Strategy<Value = Vec<(usize, usize, u64)>> {
    prop::collection::vec((0usize..4, 0usize..126, any::<u64>()), 1..25)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repairs_preserve_hard_constraints_and_counts(seed in 0u64..50, steps in repair_steps()) {
        let plan = plan();
        let mut s = initial_solution(&plan, seed).unwrap();
        for (k, pos, r) in steps {
            let mut rng = ChaCha8Rng::seed_from_u64(r);
            if let Ok((next, changed)) = repair(RepairKind::ALL[k], &s, &plan, Position::from_index(pos), &mut rng) {
                prop_assert!(validate_hard(&next, &plan).is_ok());
                prop_assert_eq!(next.diff(&s), changed);
                for d in 0..plan.cycle_days() {
                    for t in ShiftType::ALL {
                        prop_assert_eq!(next.count(d, t), s.count(d, t));
                    }
                }
                s = next;
            }
        }
    }

    #[test]
    fn incremental_tree_matches_rebuild(seed in 0u64..50, steps in repair_steps()) {
        let (kb, plan) = (reference_kb(), plan());
        let mut s = initial_solution(&plan, seed).unwrap();
        let mut tree = build(&kb, &plan, &s);
        for (k, pos, r) in steps {
            let mut rng = ChaCha8Rng::seed_from_u64(r);
            let Ok((next, changed)) = repair(RepairKind::ALL[k], &s, &plan, Position::from_index(pos), &mut rng) else {
                continue;
            };
            s = next;
            let idx: Vec<usize> = changed.iter().map(|p| p.index()).collect();
            tree.update(&ShiftInstance { schedule: &s, plan: &plan }, &idx).unwrap();
            let fresh = build(&kb, &plan, &s);
            prop_assert!((tree.root_score() - fresh.root_score()).abs() <= 1e-12);
            prop_assert_eq!(tree.violations().len(), fresh.violations().len());
        }
    }

    #[test]
    fn evaluation_is_pure(seed in 0u64..200) {
        let (kb, plan) = (reference_kb(), plan());
        let s = initial_solution(&plan, seed).unwrap();
        let (a, b) = (build(&kb, &plan, &s), build(&kb, &plan, &s));
        prop_assert_eq!(a.root_score().to_bits(), b.root_score().to_bits());
        prop_assert_eq!(a.violations(), b.violations());
        prop_assert_eq!(a.leaf_count(), 12);
        prop_assert!((0.0..=1.0).contains(&a.root_score()));
        let names: Vec<&str> = a.leaves().map(|l| l.name.as_str()).collect();
        let again: Vec<&str> = b.leaves().map(|l| l.name.as_str()).collect();
        prop_assert_eq!(names, again);
    }

    #[test]
    fn violation_list_is_sorted(seed in 0u64..200) {
        let (kb, plan) = (reference_kb(), plan());
        let t = build(&kb, &plan, &initial_solution(&plan, seed).unwrap());
        prop_assert!(t.violations().windows(2).all(|w| (w[0].weighted_score, &w[0].name) <= (w[1].weighted_score, &w[1].name)));
    }

    #[test]
    fn weekly_hours_match_summation(seed in 0u64..200) {
        let plan = plan();
        let s = initial_solution(&plan, seed).unwrap();
        for sg in 0..6 {
            let mut total = 0.0;
            for w in 0..plan.weeks() {
                let sum: f64 = (7 * w..7 * w + 7).filter_map(|d| s.get(d, sg)).map(|a| a.duration).sum();
                prop_assert!((s.week_hours(sg, w) - sum).abs() < 1e-9);
                total += sum;
            }
            prop_assert!((s.hours(sg) - total).abs() < 1e-9);
        }
    }

    #[test]
    fn schedule_csv_round_trip(seed in 0u64..200) {
        let plan = plan();
        let s = initial_solution(&plan, seed).unwrap();
        prop_assert_eq!(Schedule::from_csv(&s.to_csv(&plan), &plan).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimizer_best_is_monotone_and_reproducible(
        seed in any::<u64>(),
        algo in prop::sample::select(Algorithm::ALL.to_vec()),
        rows in prop::collection::vec(0usize..10, 10),
    ) {
        let p = QueensProblem::new(10);
        let initial = QueensBoard::new(rows);
        let mut cfg = OptimizerConfig::new(algo);
        cfg.seed = seed;
        cfg.max_evaluations = 150;
        let a = run(&p, &initial, &cfg).unwrap();
        prop_assert!(a.trace.windows(2).all(|w| w[1].best >= w[0].best));
        prop_assert_eq!(a.trace.len(), a.evaluations);
        prop_assert!(a.trace.iter().enumerate().all(|(i, r)| r.evaluation == i));
        prop_assert_eq!(a.best_score, a.best.score());
        let b = run(&p, &initial, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn consistency_is_order_independent_and_scale_invariant(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..10),
        wa in 0.2f64..5.0,
        wb in 0.2f64..5.0,
        na in 0.2f64..5.0,
        nb in 0.2f64..5.0,
        scale in 0.1f64..10.0,
        rot in 0usize..10,
    ) {
        let kb = |a: f64, b: f64| {
            let mut k = KnowledgeBase::new("p");
            k.sets.push(
                SetOfConstraints::new("s", vec![compare("a", "x", CompareOp::Le, 4.0, a), compare("b", "y", CompareOp::Le, 4.0, b)])
                    .with_parameters(vec![var("x"), var("y")]),
            );
            k
        };
        let snaps: Vec<Snapshot> = pts.iter().map(|&(x, y)| Snapshot::from_bindings(crisp(&[("x", x), ("y", y)]))).collect();
        let mut db = ReferencePairDb::new("p", kb(wa, wb));
        for w in snaps.windows(2) {
            let (s0, s1) = (evaluate_snapshot(&db.config, &w[0]).unwrap().score, evaluate_snapshot(&db.config, &w[1]).unwrap().score);
            let _ = if s0 > s1 { db.add_pair(w[0].clone(), w[1].clone()) } else { db.add_pair(w[1].clone(), w[0].clone()) };
        }
        for p in &db.pairs {
            prop_assert!((evaluate_snapshot(&db.config, &p.first).unwrap().score - p.scores.0).abs() <= 1e-12);
            prop_assert!((evaluate_snapshot(&db.config, &p.second).unwrap().score - p.scores.1).abs() <= 1e-12);
        }
        prop_assert!(consistency_check(&kb(wa * scale, wb * scale), &db).unwrap().is_consistent());
        let verdict = consistency_check(&kb(na, nb), &db).unwrap();
        let mut permuted = db.clone();
        let k = rot % permuted.pairs.len().max(1);
        permuted.pairs.rotate_left(k);
        permuted.pairs.reverse();
        prop_assert_eq!(consistency_check(&kb(na, nb), &permuted).unwrap(), verdict);
    }

    #[test]
    fn plan_and_kb_json_round_trip(w in 0.1f64..5.0) {
        let plan = plan();
        prop_assert_eq!(OperationPlan::read_json(&plan.to_json()).unwrap(), plan);
        let mut kb = reference_kb();
        for t in &mut kb.templates {
            t.base.importance = w;
        }
        prop_assert_eq!(KnowledgeBase::from_json(&kb.to_json()).unwrap(), kb);
    }
}
