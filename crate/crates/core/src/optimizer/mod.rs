//! Conflict-guided repair heuristics over any [`RepairProblem`].

mod algorithms;
mod problems;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamic::{ViolationRecord, DEFAULT_VIOLATION_THRESHOLD};

pub use algorithms::{run, run_with_observer};
pub use problems::{QueensEval, QueensProblem, ShiftProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial solution is not feasible: {0}")]
    InvalidInitial(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Best of `tries_per_step` neighbours survives, even if worse.
    Deepening1,
    Tabu,
    RandomHill,
    Genetic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Deepening1, Algorithm::Tabu, Algorithm::RandomHill, Algorithm::Genetic];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Deepening1 => "deepening1",
            Algorithm::Tabu => "tabu",
            Algorithm::RandomHill => "random_hill",
            Algorithm::Genetic => "genetic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub tries_per_step: usize,
    pub worst_k: usize,
    pub max_evaluations: usize,
    pub seed: u64,
    /// Zero disables the tabu list.
    pub tabu_tenure: usize,
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub violation_threshold: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Deepening1,
            tries_per_step: 10,
            worst_k: 3,
            max_evaluations: 2000,
            seed: 1,
            tabu_tenure: 7,
            population_size: 8,
            crossover_rate: 0.7,
            mutation_rate: 0.5,
            violation_threshold: DEFAULT_VIOLATION_THRESHOLD,
        }
    }
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let counts = [
            ("tries_per_step", self.tries_per_step),
            ("worst_k", self.worst_k),
            ("max_evaluations", self.max_evaluations),
            ("population_size", self.population_size),
        ];
        if let Some((name, _)) = counts.iter().find(|c| c.1 == 0) {
            return Err(OptimizerError::InvalidConfig(format!("{name} must be at least 1")));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(OptimizerError::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.violation_threshold) {
            return Err(OptimizerError::InvalidConfig("violation_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// What the heuristics need from a problem: evaluation with incremental
/// re-evaluation, violations, a repair registry, and feasible repairs.
pub trait RepairProblem {
    type State: Clone;
    type Eval: Clone;

    fn evaluate(&self, s: &Self::State) -> Result<Self::Eval, OptimizerError>;
    /// Re-evaluation after `changed` positions of `prev`'s state moved to `s`.
    fn reevaluate(&self, prev: &Self::Eval, s: &Self::State, changed: &[usize]) -> Result<Self::Eval, OptimizerError>;
    fn score(&self, e: &Self::Eval) -> f64;
    /// Secondary key for comparing equally scored states, e.g. the raw
    /// aggregate of states zeroed by a hard barrier.
    fn guide(&self, e: &Self::Eval) -> f64 {
        self.score(e)
    }
    /// Violations, worst first.
    fn violations<'a>(&self, e: &'a Self::Eval) -> &'a [ViolationRecord];
    /// Constraint type to repair ids.
    fn registry(&self) -> &BTreeMap<String, Vec<String>>;
    fn repair_ids(&self) -> &[String];
    fn position_count(&self, s: &Self::State) -> usize;
    /// A feasible neighbour and the positions that changed, or `None` when
    /// the repair has no effect at `pos`.
    fn apply(&self, repair: &str, pos: usize, s: &Self::State, rng: &mut ChaCha8Rng) -> Option<(Self::State, Vec<usize>)>;
    fn is_feasible(&self, s: &Self::State) -> Result<(), String>;
    fn crossover(&self, a: &Self::State, b: &Self::State, rng: &mut ChaCha8Rng) -> Option<Self::State>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub evaluation: usize,
    /// Incumbent score after this evaluation was processed.
    pub current: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<S> {
    pub best: S,
    pub best_score: f64,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
    pub infeasible_offspring: usize,
}

/// Uniformly random repair and position.
pub fn random_pair(repair_ids: &[String], position_count: usize, rng: &mut impl Rng) -> (String, usize) {
    let r = repair_ids.choose(rng).expect("non-empty repair registry").clone();
    (r, rng.gen_range(0..position_count.max(1)))
}

/// Picks one of the `worst_k` repairable violations below `threshold`, a
/// registered repair for its type and one of its positions, all uniformly.
/// Falls back to [`random_pair`] when nothing qualifies.
pub fn select_conflict_and_repair(
    violations: &[ViolationRecord],
    registry: &BTreeMap<String, Vec<String>>,
    repair_ids: &[String],
    position_count: usize,
    cfg: &OptimizerConfig,
    rng: &mut impl Rng,
) -> (String, usize) {
    let worst: Vec<&ViolationRecord> = violations
        .iter()
        .filter(|v| {
            v.weighted_score < cfg.violation_threshold
                && !v.positions.is_empty()
                && registry.get(&v.constraint_type).is_some_and(|r| !r.is_empty())
        })
        .take(cfg.worst_k)
        .collect();
    match worst.choose(rng) {
        Some(v) => {
            let repair = registry[&v.constraint_type].choose(rng).expect("filtered non-empty").clone();
            let pos = *v.positions.choose(rng).expect("filtered non-empty");
            (repair, pos)
        }
        None => random_pair(repair_ids, position_count, rng),
    }
}
