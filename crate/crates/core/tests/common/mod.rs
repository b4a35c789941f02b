//! Brute-force neighbourhood oracles for the shift repair operators. They
//! enumerate candidate schedules directly and check them with their own
//! coverage test, sharing only the schedule type and `validate_hard` with
//! the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fuzzyrepair::domain::shift::{
    default_reference_plan, initial_solution, legal_moves, repair, validate_hard, DayPlan, OperationPlan, Position,
    RepairKind, Requirement, Schedule, ShiftAssignment, ShiftType, UnitKind, Weekday,
};

pub const SG: usize = 6;

pub type Key = Vec<(usize, usize, ShiftType, u64)>;

pub fn key(s: &Schedule) -> Key {
    let mut k = Vec::new();
    for d in 0..s.day_count() {
        for sg in 0..SG {
            if let Some(a) = s.get(d, sg) {
                k.push((d, sg, a.shift, a.duration.to_bits()));
            }
        }
    }
    k
}

fn day(weekday: Weekday, reqs: Vec<Requirement>) -> DayPlan {
    DayPlan {
        weekday,
        maintenance: false,
        requirements: reqs,
    }
}

fn toy(name: &str, days: Vec<DayPlan>) -> OperationPlan {
    OperationPlan {
        name: name.into(),
        days,
        nominal_weekly_hours: 38.5,
        // relocations keep every row's hours, so only the coverage part matters
        hour_tolerance: 100.0,
    }
}

/// Mon, Tue, Wed with five day-shift subgroups each.
pub fn toy_mon_wed() -> OperationPlan {
    let td5 = || vec![Requirement::new(ShiftType::TD, UnitKind::Subgroup, 5)];
    toy("toy-mon-wed", vec![day(Weekday::Mon, td5()), day(Weekday::Tue, td5()), day(Weekday::Wed, td5())])
}

/// Mon to Fri; Thu and Fri need two whole groups.
pub fn toy_mon_fri() -> OperationPlan {
    let mut p = toy_mon_wed();
    p.name = "toy-mon-fri".into();
    for w in [Weekday::Thu, Weekday::Fri] {
        p.days.push(day(w, vec![Requirement::new(ShiftType::TD, UnitKind::Group, 2)]));
    }
    p
}

/// Three weeks with weekend work only; the third Saturday is a
/// maintenance day with two weekend day shifts and no substitution.
pub fn toy_weekends() -> OperationPlan {
    let days = (0..21)
        .map(|d| {
            let w = Weekday::ALL[d % 7];
            let reqs = match w {
                Weekday::Sat if d == 19 => vec![Requirement::new(ShiftType::TDWE, UnitKind::Subgroup, 2)],
                Weekday::Sat => vec![
                    Requirement::new(ShiftType::TDWE, UnitKind::Subgroup, 1),
                    Requirement::new(ShiftType::SWWE, UnitKind::Subgroup, 1),
                ],
                Weekday::Sun => vec![Requirement::new(ShiftType::TDWE, UnitKind::Subgroup, 1)],
                _ => vec![],
            };
            DayPlan {
                weekday: w,
                maintenance: d == 19,
                requirements: reqs,
            }
        })
        .collect();
    toy("toy-weekends", days)
}

/// Subsets of the six subgroups (as bit masks) of size `k`.
fn subsets(k: usize) -> Vec<u32> {
    (0u32..1 << SG).filter(|m| m.count_ones() as usize == k).collect()
}

/// Whole-group test written independently: subgroups 2g and 2g+1 together.
fn whole_groups(m: u32) -> bool {
    (0..3).all(|g| ((m >> (2 * g)) & 1) == ((m >> (2 * g + 1)) & 1))
}

/// Per-subgroup constant day-shift durations, so a row's multiset of
/// assignments is fixed by its number of working days.
fn td_duration(sg: usize) -> f64 {
    8.0 + 0.2 * sg as f64
}

/// Every schedule of a day-shift toy plan whose days each satisfy the
/// plan's coverage, built from per-day worker masks.
pub fn day_shift_schedules(plan: &OperationPlan) -> Vec<Schedule> {
    let per_day: Vec<Vec<u32>> = plan
        .days
        .iter()
        .map(|d| {
            let r = d.requirements[0];
            match r.unit {
                UnitKind::Subgroup => subsets(r.count),
                UnitKind::Group => subsets(2 * r.count).into_iter().filter(|&m| whole_groups(m)).collect(),
            }
        })
        .collect();
    let mut out = vec![Schedule::empty(plan.cycle_days())];
    for (d, masks) in per_day.iter().enumerate() {
        let mut next = Vec::new();
        for s in &out {
            for &m in masks {
                let mut t = s.clone();
                for sg in 0..SG {
                    if m >> sg & 1 == 1 {
                        t.set(d, sg, Some(ShiftAssignment::new(ShiftType::TD, td_duration(sg))));
                    }
                }
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn row_counts(s: &Schedule) -> Vec<usize> {
    (0..SG).map(|sg| (0..s.day_count()).filter(|&d| s.get(d, sg).is_some()).count()).collect()
}

fn cell_diff(a: &Schedule, b: &Schedule) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for d in 0..a.day_count() {
        for sg in 0..SG {
            if a.get(d, sg) != b.get(d, sg) {
                v.push((d, sg));
            }
        }
    }
    v
}

/// Mon-Wed double swaps declaratively: same row counts, exactly two rows and
/// two days changed, hard-valid.
pub fn oracle_mon_wed(plan: &OperationPlan, all: &[Schedule], s: &Schedule) -> BTreeSet<Key> {
    let rc = row_counts(s);
    all.iter()
        .filter(|t| {
            let d = cell_diff(s, t);
            d.len() == 4
                && row_counts(t) == rc
                && d.iter().map(|c| c.0).collect::<BTreeSet<_>>().len() == 2
                && d.iter().map(|c| c.1).collect::<BTreeSet<_>>().len() == 2
                && validate_hard(t, plan).is_ok()
        })
        .map(key)
        .collect()
}

/// Group handovers declaratively: same row counts, exactly one Thu/Fri day
/// changed, eight cells changed, hard-valid.
pub fn oracle_handover(plan: &OperationPlan, all: &[Schedule], s: &Schedule) -> BTreeSet<Key> {
    let rc = row_counts(s);
    all.iter()
        .filter(|t| {
            let d = cell_diff(s, t);
            let late: BTreeSet<usize> = d.iter().map(|c| c.0).filter(|&x| plan.days[x].weekday.is_thu_fri()).collect();
            d.len() == 8 && late.len() == 1 && row_counts(t) == rc && validate_hard(t, plan).is_ok()
        })
        .map(key)
        .collect()
}

/// All results of two relocations of `shift` assignments within their rows,
/// from a day in `days` to a free day in `days`, that change the schedule
/// and pass the hard constraints.
pub fn oracle_relocation_pairs(plan: &OperationPlan, s: &Schedule, shift: ShiftType, days: &[usize]) -> BTreeSet<Key> {
    let relocations = |s: &Schedule| {
        let mut v = Vec::new();
        for sg in 0..SG {
            for &from in days {
                if s.get(from, sg).is_some_and(|a| a.shift == shift) {
                    for &to in days {
                        if to != from && s.get(to, sg).is_none() {
                            v.push((sg, from, to));
                        }
                    }
                }
            }
        }
        v
    };
    let apply = |s: &Schedule, (sg, from, to): (usize, usize, usize)| {
        let mut t = s.clone();
        let a = t.get(from, sg);
        t.set(from, sg, None);
        t.set(to, sg, a);
        t
    };
    let base = key(s);
    let mut out = BTreeSet::new();
    for r1 in relocations(s) {
        let mid = apply(s, r1);
        for r2 in relocations(&mid) {
            let t = apply(&mid, r2);
            let k = key(&t);
            if k != base && validate_hard(&t, plan).is_ok() {
                out.insert(k);
            }
        }
    }
    out
}

pub fn days_where(plan: &OperationPlan, f: impl Fn(Weekday) -> bool) -> Vec<usize> {
    (0..plan.cycle_days()).filter(|&d| f(plan.days[d].weekday)).collect()
}

/// Union over all positions of the library's legal neighbours.
pub fn library_neighbours(kind: RepairKind, plan: &OperationPlan, s: &Schedule) -> BTreeSet<Key> {
    let mut out = BTreeSet::new();
    for p in 0..s.position_count() {
        for m in legal_moves(kind, s, plan, Position::from_index(p)) {
            out.insert(key(&m.apply(s)));
        }
    }
    out
}

/// Every `repair` result, over all positions and a few seeds, lies in the
/// legal set.
pub fn repairs_within(kind: RepairKind, plan: &OperationPlan, s: &Schedule, legal: &BTreeSet<Key>) -> bool {
    (0..s.position_count()).all(|p| {
        (0..4).all(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match repair(kind, s, plan, Position::from_index(p), &mut rng) {
                Ok((t, _)) => legal.contains(&key(&t)),
                Err(_) => true,
            }
        })
    })
}

pub struct Case {
    pub name: String,
    pub starts: usize,
    pub neighbours: usize,
    pub equal: bool,
}

fn compare_all(
    name: &str,
    kind: RepairKind,
    plan: &OperationPlan,
    starts: &[Schedule],
    oracle: impl Fn(&Schedule) -> BTreeSet<Key>,
) -> Case {
    let mut neighbours = 0;
    let mut equal = true;
    for s in starts {
        let lib = library_neighbours(kind, plan, s);
        let want = oracle(s);
        neighbours += want.len();
        equal &= lib == want && repairs_within(kind, plan, s, &lib);
    }
    Case {
        name: name.into(),
        starts: starts.len(),
        neighbours,
        equal,
    }
}

/// A weekend-only schedule for [`toy_weekends`], varied by `seed`.
pub fn weekend_start(plan: &OperationPlan, seed: u64) -> Schedule {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Schedule::empty(plan.cycle_days());
    for (d, dp) in plan.days.iter().enumerate() {
        let mut sgs: Vec<usize> = (0..SG).collect();
        sgs.shuffle(&mut rng);
        let mut it = sgs.into_iter();
        for r in &dp.requirements {
            for _ in 0..r.subgroups() {
                s.set(d, it.next().unwrap(), Some(ShiftAssignment::nominal(r.shift)));
            }
        }
    }
    s
}

/// Every neighbourhood comparison: toy instances plus the reference plan.
pub fn all_cases() -> Vec<Case> {
    let mut cases = Vec::new();

    let p = toy_mon_wed();
    let all = day_shift_schedules(&p);
    cases.push(compare_all("mon_wed toy (all starts)", RepairKind::MonWed, &p, &all, |s| oracle_mon_wed(&p, &all, s)));
    let days = days_where(&p, Weekday::is_mon_wed);
    cases.push(compare_all("mon_wed toy (relocation pairs)", RepairKind::MonWed, &p, &all, |s| {
        oracle_relocation_pairs(&p, s, ShiftType::TD, &days)
    }));

    let p = toy_mon_fri();
    let all = day_shift_schedules(&p);
    let starts: Vec<Schedule> = all.iter().step_by(7).cloned().collect();
    cases.push(compare_all("mon_wed_thu_fri toy", RepairKind::MonWedThuFri, &p, &starts, |s| {
        oracle_handover(&p, &all, s)
    }));

    let p = toy_weekends();
    let starts: Vec<Schedule> = (0..40).map(|seed| weekend_start(&p, seed)).collect();
    let weekend = days_where(&p, Weekday::is_weekend);
    let saturdays = days_where(&p, |w| w == Weekday::Sat);
    cases.push(compare_all("weekend_td toy", RepairKind::WeekendTd, &p, &starts, |s| {
        oracle_relocation_pairs(&p, s, ShiftType::TDWE, &weekend)
    }));
    cases.push(compare_all("weekend_sw toy", RepairKind::WeekendSw, &p, &starts, |s| {
        oracle_relocation_pairs(&p, s, ShiftType::SWWE, &saturdays)
    }));

    let p = default_reference_plan();
    let starts: Vec<Schedule> = (0..5).map(|seed| initial_solution(&p, seed).unwrap()).collect();
    let mon_wed = days_where(&p, Weekday::is_mon_wed);
    let weekend = days_where(&p, Weekday::is_weekend);
    let saturdays = days_where(&p, |w| w == Weekday::Sat);
    cases.push(compare_all("mon_wed reference", RepairKind::MonWed, &p, &starts, |s| {
        oracle_relocation_pairs(&p, s, ShiftType::TD, &mon_wed)
    }));
    cases.push(compare_all("weekend_td reference", RepairKind::WeekendTd, &p, &starts, |s| {
        oracle_relocation_pairs(&p, s, ShiftType::TDWE, &weekend)
    }));
    cases.push(compare_all("weekend_sw reference", RepairKind::WeekendSw, &p, &starts, |s| {
        oracle_relocation_pairs(&p, s, ShiftType::SWWE, &saturdays)
    }));
    cases
}
