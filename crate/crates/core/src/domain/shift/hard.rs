use std::fmt;

use serde::{Deserialize, Serialize};

use super::{OperationPlan, Schedule, ShiftType, UnitKind, GROUPS, SUBGROUPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HardViolation {
    Dimensions { days: usize, expected: usize },
    Coverage { day: usize, shift: ShiftType, expected: usize, actual: usize },
    NotAllocatable { day: usize, subgroup: usize, shift: ShiftType },
    GroupStructure { day: usize, group: usize },
    Duration { day: usize, subgroup: usize, duration: f64 },
    Hours { subgroup: usize, hours: f64, fair_share: f64 },
}

impl fmt::Display for HardViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HardViolation::Dimensions { days, expected } => write!(f, "schedule has {days} days, plan {expected}"),
            HardViolation::Coverage { day, shift, expected, actual } => {
                write!(f, "day {day}: {actual} {shift} assigned, {expected} required")
            }
            HardViolation::NotAllocatable { day, subgroup, shift } => {
                write!(f, "day {day}: {shift} not allocatable ({})", SUBGROUPS[*subgroup])
            }
            HardViolation::GroupStructure { day, group } => {
                write!(f, "day {day}: group {} split", GROUPS[*group])
            }
            HardViolation::Duration { day, subgroup, duration } => {
                write!(f, "day {day}: duration {duration} out of range ({})", SUBGROUPS[*subgroup])
            }
            HardViolation::Hours { subgroup, hours, fair_share } => {
                write!(f, "{}: {hours} h, fair share {fair_share:.2} h", SUBGROUPS[*subgroup])
            }
        }
    }
}

/// Days and shifts covered only by whole groups.
fn group_violations(s: &Schedule, plan: &OperationPlan, out: &mut Vec<HardViolation>) {
    for (d, dp) in plan.days.iter().enumerate() {
        for r in dp.requirements.iter().filter(|r| r.unit == UnitKind::Group) {
            for g in 0..GROUPS.len() {
                if s.is(d, 2 * g, r.shift) != s.is(d, 2 * g + 1, r.shift) {
                    out.push(HardViolation::GroupStructure { day: d, group: g });
                }
            }
        }
    }
}

/// Coverage and group structure only: the per-day part of the hard
/// constraints.
pub fn day_violations(s: &Schedule, plan: &OperationPlan) -> Vec<HardViolation> {
    let mut out = Vec::new();
    if s.day_count() != plan.cycle_days() {
        out.push(HardViolation::Dimensions {
            days: s.day_count(),
            expected: plan.cycle_days(),
        });
        return out;
    }
    for (d, dp) in plan.days.iter().enumerate() {
        for sg in 0..SUBGROUPS.len() {
            if let Some(a) = s.get(d, sg) {
                if dp.requirement(a.shift).is_none() {
                    out.push(HardViolation::NotAllocatable { day: d, subgroup: sg, shift: a.shift });
                }
                let (lo, hi) = a.shift.duration_range();
                if !(a.duration >= lo && a.duration <= hi) {
                    out.push(HardViolation::Duration { day: d, subgroup: sg, duration: a.duration });
                }
            }
        }
        for r in &dp.requirements {
            let actual = s.count(d, r.shift);
            if actual != r.subgroups() {
                out.push(HardViolation::Coverage {
                    day: d,
                    shift: r.shift,
                    expected: r.subgroups(),
                    actual,
                });
            }
        }
    }
    group_violations(s, plan, &mut out);
    out
}

/// Coverage, group structure, durations and cycle hours within tolerance
/// of the fair share.
pub fn validate_hard(s: &Schedule, plan: &OperationPlan) -> Result<(), Vec<HardViolation>> {
    let mut out = day_violations(s, plan);
    if !matches!(out.first(), Some(HardViolation::Dimensions { .. })) {
        let fair = plan.fair_share();
        for sg in 0..SUBGROUPS.len() {
            let h = s.hours(sg);
            if (h - fair).abs() > plan.hour_tolerance {
                out.push(HardViolation::Hours {
                    subgroup: sg,
                    hours: h,
                    fair_share: fair,
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
