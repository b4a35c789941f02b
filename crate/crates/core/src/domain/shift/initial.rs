use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{validate_hard, OperationPlan, Schedule, ShiftAssignment, ShiftError, ShiftType, UnitKind, GROUPS, SUBGROUPS};

const ATTEMPTS: usize = 50;


/// Greedy feasible schedule: every requirement goes to the free units with
/// the fewest cumulative hours (random tie-breaks), then day-shift
/// durations are tuned within their range toward the fair share.
pub fn initial_solution(plan: &OperationPlan, seed: u64) -> Result<Schedule, ShiftError> {
    plan.validate().map_err(|e| ShiftError::Unsatisfiable(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reasons = Vec::new();
    for _ in 0..ATTEMPTS {
        match greedy(plan, &mut rng) {
            Ok(s) => return Ok(s),
            Err(e) => reasons.push(e),
        }
    }
    Err(ShiftError::Unsatisfiable(format!(
        "no feasible schedule in {ATTEMPTS} attempts (last: {})",
        reasons.last().map(String::as_str).unwrap_or("none")
    )))
}

fn greedy(plan: &OperationPlan, rng: &mut ChaCha8Rng) -> Result<Schedule, String> {
    let mut s = Schedule::empty(plan.cycle_days());
    let mut hours = [0.0f64; 6];
    for (d, dp) in plan.days.iter().enumerate() {
        for r in &dp.requirements {
            let a = ShiftAssignment::nominal(r.shift);
            let chosen: Vec<usize> = match r.unit {
                UnitKind::Subgroup => {
                    let mut free: Vec<usize> = (0..SUBGROUPS.len()).filter(|&g| s.is_free(d, g)).collect();
                    free.shuffle(rng);
                    free.sort_by(|x, y| hours[*x].total_cmp(&hours[*y]));
                    if free.len() < r.count {
                        return Err(format!("day {d}: not enough free subgroups"));
                    }
                    free[..r.count].to_vec()
                }
                UnitKind::Group => {
                    let mut free: Vec<usize> = (0..GROUPS.len())
                        .filter(|&g| s.is_free(d, 2 * g) && s.is_free(d, 2 * g + 1))
                        .collect();
                    free.shuffle(rng);
                    free.sort_by(|x, y| (hours[2 * x] + hours[2 * x + 1]).total_cmp(&(hours[2 * y] + hours[2 * y + 1])));
                    if free.len() < r.count {
                        return Err(format!("day {d}: not enough free groups"));
                    }
                    free[..r.count].iter().flat_map(|&g| [2 * g, 2 * g + 1]).collect()
                }
            };
            for g in chosen {
                s.set(d, g, Some(a));
                hours[g] += a.duration;
            }
        }
    }
    adjust_durations(&mut s, plan);
    validate_hard(&s, plan).map_err(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))?;
    Ok(s)
}

/// Sets each subgroup's day-shift durations to one common value, clamped to
/// the allowed range, that brings its cycle hours closest to the fair share.
/// Durations are kept on a 0.05 h grid.
pub fn adjust_durations(s: &mut Schedule, plan: &OperationPlan) {
    let fair = plan.fair_share();
    let (lo, hi) = ShiftType::TD.duration_range();
    for sg in 0..SUBGROUPS.len() {
        let mut other = 0.0;
        let mut n = 0usize;
        for d in 0..s.day_count() {
            match s.get(d, sg) {
                Some(a) if a.shift == ShiftType::TD => n += 1,
                Some(a) => other += a.duration,
                None => {}
            }
        }
        if n == 0 {
            continue;
        }
        let dur = (((fair - other) / n as f64) * 20.0).round() / 20.0;
        let dur = dur.clamp(lo, hi);
        for d in 0..s.day_count() {
            if s.is(d, sg, ShiftType::TD) {
                s.set(d, sg, Some(ShiftAssignment::new(ShiftType::TD, dur)));
            }
        }
    }
}

/// Week-boundary crossover: days before the cut from `a`, the rest from
/// `b`, then greedy transfers and duration tuning until the cycle hours are
/// back within tolerance. `None` if that fails.
pub fn crossover(a: &Schedule, b: &Schedule, plan: &OperationPlan, rng: &mut impl Rng) -> Option<Schedule> {
    let cuts: Vec<usize> = (1..).map(|k| 7 * k).take_while(|&c| c < plan.cycle_days()).collect();
    let mut child = a.clone();
    if let Some(&cut) = cuts.get(rng.gen_range(0..cuts.len().max(1))) {
        for d in cut..plan.cycle_days() {
            for sg in 0..SUBGROUPS.len() {
                child.set(d, sg, b.get(d, sg));
            }
        }
    }
    restore_hours(child, plan, rng)
}

fn restore_hours(mut s: Schedule, plan: &OperationPlan, rng: &mut impl Rng) -> Option<Schedule> {
    const TRANSFERS: usize = 60;
    let fair = plan.fair_share();
    for _ in 0..TRANSFERS {
        adjust_durations(&mut s, plan);
        if validate_hard(&s, plan).is_ok() {
            return Some(s);
        }
        let excess: Vec<f64> = (0..SUBGROUPS.len()).map(|g| s.hours(g) - fair).collect();
        let rich = (0..6).max_by(|x, y| excess[*x].total_cmp(&excess[*y])).expect("six subgroups");
        let poor = (0..6).min_by(|x, y| excess[*x].total_cmp(&excess[*y])).expect("six subgroups");
        // single-subgroup days only: group days must keep whole groups
        let days: Vec<usize> = (0..plan.cycle_days())
            .filter(|&d| {
                s.get(d, rich).is_some_and(|a| {
                    plan.days[d].requirement(a.shift).is_some_and(|r| r.unit == UnitKind::Subgroup)
                }) && s.is_free(d, poor)
            })
            .collect();
        if days.is_empty() {
            return None;
        }
        let d = days[rng.gen_range(0..days.len())];
        let moved = s.get(d, rich);
        s.set(d, rich, None);
        s.set(d, poor, moved);
    }
    adjust_durations(&mut s, plan);
    validate_hard(&s, plan).ok().map(|_| s)
}
