//! Rotating shift scheduling for six subgroups in three groups over a
//! multi-week cycle.

mod eval;
mod hard;
mod initial;
mod plan;
mod repairs;
mod schedule;

use thiserror::Error;

pub use eval::{
    eval_even_distribution, eval_free_weekends, max_week_diff, reference_kb, shift_schema, weekends_worked,
    weekly_hours, ShiftInstance, EVEN_DISTRIBUTION, EVEN_RAMP, FREE_WEEKENDS,
};
pub use hard::{day_violations, validate_hard, HardViolation};
pub use initial::{adjust_durations, crossover, initial_solution};
pub use plan::{default_reference_plan, DayPlan, OperationPlan, Requirement, ShiftType, UnitKind, Weekday};
pub use repairs::{all_moves, legal_moves, repair, repair_by_id, Move, RepairKind};
pub use schedule::{Position, Row, Schedule, ShiftAssignment};

pub const SUBGROUPS: [&str; 6] = ["A1", "A2", "B1", "B2", "C1", "C2"];
/// Group `g` owns subgroups `2g` and `2g + 1`.
pub const GROUPS: [&str; 3] = ["A", "B", "C"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShiftError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error("unknown repair `{0}`")]
    UnknownRepair(String),
    #[error("no feasible {repair} move at position {position}")]
    NoFeasibleSwap { repair: String, position: usize },
}
