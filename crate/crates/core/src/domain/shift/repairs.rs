use rand::Rng;

use super::{validate_hard, OperationPlan, Position, Schedule, ShiftError, ShiftType, Weekday, GROUPS};

/// Repair operators. Each one relocates assignments within subgroup rows,
/// durations intact, so per-day coverage and cycle hours are preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RepairKind {
    /// Two subgroups exchange day shifts between two Mon-Wed days.
    MonWed,
    /// A group working a Thu/Fri day hands it to a free group; each of its
    /// subgroups takes over a Mon-Wed day shift of its partner instead.
    MonWedThuFri,
    /// Two subgroups exchange weekend day shifts between two days.
    WeekendTd,
    /// Two subgroups exchange Saturday substitutions.
    WeekendSw,
}

impl RepairKind {
    pub const ALL: [RepairKind; 4] = [
        RepairKind::MonWed,
        RepairKind::MonWedThuFri,
        RepairKind::WeekendTd,
        RepairKind::WeekendSw,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RepairKind::MonWed => "mon_wed",
            RepairKind::MonWedThuFri => "mon_wed_thu_fri",
            RepairKind::WeekendTd => "weekend_td",
            RepairKind::WeekendSw => "weekend_sw",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }
}

/// Relocations `(subgroup, from_day, to_day)`, applied in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub relocations: Vec<(usize, usize, usize)>,
}

impl Move {
    pub fn apply(&self, s: &Schedule) -> Schedule {
        let mut out = s.clone();
        for &(sg, from, to) in &self.relocations {
            out.relocate(sg, from, to);
        }
        out
    }

    pub fn touches(&self, p: Position) -> bool {
        self.relocations
            .iter()
            .any(|&(sg, from, to)| sg == p.subgroup && (from == p.day || to == p.day))
    }

    pub fn positions(&self) -> Vec<Position> {
        let mut v: Vec<Position> = self
            .relocations
            .iter()
            .flat_map(|&(sg, from, to)| [Position::new(from, sg), Position::new(to, sg)])
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

fn days_where(plan: &OperationPlan, f: impl Fn(Weekday) -> bool) -> Vec<usize> {
    (0..plan.cycle_days()).filter(|&d| f(plan.days[d].weekday)).collect()
}

/// S holds `shift` on d1 and is free on d2, T the other way round.
fn double_swaps(s: &Schedule, days: &[usize], shift: ShiftType, out: &mut Vec<Move>) {
    for (i, &d1) in days.iter().enumerate() {
        for &d2 in &days[i + 1..] {
            for a in 0..6 {
                if !(s.is(d1, a, shift) && s.is_free(d2, a)) {
                    continue;
                }
                for b in 0..6 {
                    if b != a && s.is(d2, b, shift) && s.is_free(d1, b) {
                        out.push(Move {
                            relocations: vec![(a, d1, d2), (b, d2, d1)],
                        });
                    }
                }
            }
        }
    }
}

fn group_handover(s: &Schedule, plan: &OperationPlan, out: &mut Vec<Move>) {
    let mon_wed = days_where(plan, Weekday::is_mon_wed);
    let works = |d: usize, g: usize| s.is(d, 2 * g, ShiftType::TD) && s.is(d, 2 * g + 1, ShiftType::TD);
    let free = |d: usize, g: usize| s.is_free(d, 2 * g) && s.is_free(d, 2 * g + 1);
    let takeover = |x: usize, y: usize| -> Vec<usize> {
        mon_wed
            .iter()
            .copied()
            .filter(|&d| s.is_free(d, x) && s.is(d, y, ShiftType::TD))
            .collect()
    };
    for e in days_where(plan, Weekday::is_thu_fri) {
        for g in 0..GROUPS.len() {
            if !works(e, g) {
                continue;
            }
            for h in (0..GROUPS.len()).filter(|&h| h != g && free(e, h)) {
                let (g1, g2, h1, h2) = (2 * g, 2 * g + 1, 2 * h, 2 * h + 1);
                for (pairing, (a, b)) in [((g1, h1), (g2, h2)), ((g1, h2), (g2, h1))].into_iter().enumerate() {
                    for da in takeover(a.0, a.1) {
                        for db in takeover(b.0, b.1) {
                            if pairing == 1 && da == db {
                                continue;
                            }
                            out.push(Move {
                                relocations: vec![(a.0, e, da), (a.1, da, e), (b.0, e, db), (b.1, db, e)],
                            });
                        }
                    }
                }
            }
        }
    }
}

/// Every move of `kind` on `s`, irrespective of hard feasibility.
pub fn all_moves(kind: RepairKind, s: &Schedule, plan: &OperationPlan) -> Vec<Move> {
    let mut out = Vec::new();
    match kind {
        RepairKind::MonWed => double_swaps(s, &days_where(plan, Weekday::is_mon_wed), ShiftType::TD, &mut out),
        RepairKind::MonWedThuFri => group_handover(s, plan, &mut out),
        RepairKind::WeekendTd => double_swaps(s, &days_where(plan, Weekday::is_weekend), ShiftType::TDWE, &mut out),
        RepairKind::WeekendSw => {
            double_swaps(s, &days_where(plan, |w| w == Weekday::Sat), ShiftType::SWWE, &mut out)
        }
    }
    out
}

/// Moves of `kind` that change the cell at `pos` and keep every hard
/// constraint satisfied.
pub fn legal_moves(kind: RepairKind, s: &Schedule, plan: &OperationPlan, pos: Position) -> Vec<Move> {
    all_moves(kind, s, plan)
        .into_iter()
        .filter(|m| m.touches(pos) && validate_hard(&m.apply(s), plan).is_ok())
        .collect()
}

/// Applies one feasible move of `kind` at `pos`, scanning candidates from a
/// random start. Returns the new schedule and the changed positions.
pub fn repair(
    kind: RepairKind,
    s: &Schedule,
    plan: &OperationPlan,
    pos: Position,
    rng: &mut impl Rng,
) -> Result<(Schedule, Vec<Position>), ShiftError> {
    let moves: Vec<Move> = all_moves(kind, s, plan).into_iter().filter(|m| m.touches(pos)).collect();
    if !moves.is_empty() {
        let start = rng.gen_range(0..moves.len());
        for i in 0..moves.len() {
            let m = &moves[(start + i) % moves.len()];
            let next = m.apply(s);
            if validate_hard(&next, plan).is_ok() {
                return Ok((next, m.positions()));
            }
        }
    }
    Err(ShiftError::NoFeasibleSwap {
        repair: kind.id().into(),
        position: pos.index(),
    })
}

pub fn repair_by_id(
    id: &str,
    s: &Schedule,
    plan: &OperationPlan,
    pos: Position,
    rng: &mut impl Rng,
) -> Result<(Schedule, Vec<Position>), ShiftError> {
    let kind = RepairKind::from_id(id).ok_or_else(|| ShiftError::UnknownRepair(id.into()))?;
    repair(kind, s, plan, pos, rng)
}
