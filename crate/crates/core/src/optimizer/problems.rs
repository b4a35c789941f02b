use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{OptimizerError, RepairProblem};
use crate::domain::queens::{QueensBoard, ATTACK, MIN_CONFLICTS, RANDOM_ROW};
use crate::domain::shift::{self, validate_hard, OperationPlan, Position, Schedule, ShiftInstance};
use crate::dynamic::{EvaluationTree, TreeSpec, ViolationRecord};
use crate::kb::KnowledgeBase;

/// Shift scheduling under a knowledge base, evaluated by an incrementally
/// updated tree.
pub struct ShiftProblem {
    pub plan: OperationPlan,
    spec: Arc<TreeSpec>,
    registry: BTreeMap<String, Vec<String>>,
    repair_ids: Vec<String>,
}

impl ShiftProblem {
    pub fn new(kb: &KnowledgeBase, plan: OperationPlan) -> Self {
        let registry = shift::shift_schema().repairs.clone();
        let repair_ids = shift::RepairKind::ALL.iter().map(|k| k.id().to_string()).collect();
        Self {
            plan,
            spec: TreeSpec::new(kb),
            registry,
            repair_ids,
        }
    }

    fn instance<'a>(&'a self, s: &'a Schedule) -> ShiftInstance<'a> {
        ShiftInstance {
            schedule: s,
            plan: &self.plan,
        }
    }
}

impl RepairProblem for ShiftProblem {
    type State = Schedule;
    type Eval = EvaluationTree;

    fn evaluate(&self, s: &Schedule) -> Result<EvaluationTree, OptimizerError> {
        EvaluationTree::build_with(self.spec.clone(), &self.instance(s)).map_err(|e| OptimizerError::Evaluation(e.to_string()))
    }

    fn reevaluate(&self, prev: &EvaluationTree, s: &Schedule, changed: &[usize]) -> Result<EvaluationTree, OptimizerError> {
        let mut t = prev.clone();
        t.update(&self.instance(s), changed)
            .map_err(|e| OptimizerError::Evaluation(e.to_string()))?;
        Ok(t)
    }

    fn score(&self, e: &EvaluationTree) -> f64 {
        e.objective()
    }

    fn guide(&self, e: &EvaluationTree) -> f64 {
        e.root_score()
    }

    fn violations<'a>(&self, e: &'a EvaluationTree) -> &'a [ViolationRecord] {
        e.violations()
    }

    fn registry(&self) -> &BTreeMap<String, Vec<String>> {
        &self.registry
    }

    fn repair_ids(&self) -> &[String] {
        &self.repair_ids
    }

    fn position_count(&self, s: &Schedule) -> usize {
        s.position_count()
    }

    fn apply(&self, repair: &str, pos: usize, s: &Schedule, rng: &mut ChaCha8Rng) -> Option<(Schedule, Vec<usize>)> {
        if pos >= s.position_count() {
            return None;
        }
        let (next, changed) = shift::repair_by_id(repair, s, &self.plan, Position::from_index(pos), rng).ok()?;
        Some((next, changed.into_iter().map(Position::index).collect()))
    }

    fn is_feasible(&self, s: &Schedule) -> Result<(), String> {
        validate_hard(s, &self.plan).map_err(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
    }

    fn crossover(&self, a: &Schedule, b: &Schedule, rng: &mut ChaCha8Rng) -> Option<Schedule> {
        shift::crossover(a, b, &self.plan, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueensEval {
    pub conflicts: usize,
    pub violations: Vec<ViolationRecord>,
}

/// N-queens with a min-conflicts repair per attacked column and a
/// random-row move for perturbation.
pub struct QueensProblem {
    pub n: usize,
    registry: BTreeMap<String, Vec<String>>,
    repair_ids: Vec<String>,
}

impl QueensProblem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            registry: [(ATTACK.to_string(), vec![MIN_CONFLICTS.to_string()])].into_iter().collect(),
            repair_ids: vec![MIN_CONFLICTS.into(), RANDOM_ROW.into()],
        }
    }
}

impl RepairProblem for QueensProblem {
    type State = QueensBoard;
    type Eval = QueensEval;

    fn evaluate(&self, b: &QueensBoard) -> Result<QueensEval, OptimizerError> {
        Ok(QueensEval {
            conflicts: b.conflicts(),
            violations: b.violations(),
        })
    }

    fn reevaluate(&self, _prev: &QueensEval, b: &QueensBoard, _changed: &[usize]) -> Result<QueensEval, OptimizerError> {
        self.evaluate(b)
    }

    fn score(&self, e: &QueensEval) -> f64 {
        1.0 / (1.0 + e.conflicts as f64)
    }

    fn violations<'a>(&self, e: &'a QueensEval) -> &'a [ViolationRecord] {
        &e.violations
    }

    fn registry(&self) -> &BTreeMap<String, Vec<String>> {
        &self.registry
    }

    fn repair_ids(&self) -> &[String] {
        &self.repair_ids
    }

    fn position_count(&self, b: &QueensBoard) -> usize {
        b.n()
    }

    fn apply(&self, repair: &str, col: usize, b: &QueensBoard, rng: &mut ChaCha8Rng) -> Option<(QueensBoard, Vec<usize>)> {
        if col >= b.n() || b.n() < 2 {
            return None;
        }
        let mut next = b.clone();
        match repair {
            MIN_CONFLICTS => {
                next.repair(col);
            }
            RANDOM_ROW => {
                let r = rng.gen_range(0..b.n() - 1);
                next.set(col, if r >= b.row(col) { r + 1 } else { r });
            }
            _ => return None,
        }
        (next.row(col) != b.row(col)).then(|| (next, vec![col]))
    }

    fn is_feasible(&self, b: &QueensBoard) -> Result<(), String> {
        if b.n() == self.n {
            Ok(())
        } else {
            Err(format!("board has {} columns, expected {}", b.n(), self.n))
        }
    }

    /// One-point column splice.
    fn crossover(&self, a: &QueensBoard, b: &QueensBoard, rng: &mut ChaCha8Rng) -> Option<QueensBoard> {
        if a.n() < 2 {
            return Some(a.clone());
        }
        let cut = rng.gen_range(1..a.n());
        let rows = a.rows()[..cut].iter().chain(&b.rows()[cut..]).copied().collect();
        Some(QueensBoard::new(rows))
    }
}
