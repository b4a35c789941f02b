use serde::{Deserialize, Serialize};

use super::{OperationPlan, ShiftError, ShiftType, SUBGROUPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftAssignment {
    pub shift: ShiftType,
    pub duration: f64,
}

impl ShiftAssignment {
    pub fn new(shift: ShiftType, duration: f64) -> Self {
        Self { shift, duration }
    }

    pub fn nominal(shift: ShiftType) -> Self {
        Self::new(shift, shift.nominal_duration())
    }
}

/// A grid position: one subgroup on one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub day: usize,
    pub subgroup: usize,
}

impl Position {
    pub fn new(day: usize, subgroup: usize) -> Self {
        Self { day, subgroup }
    }

    pub fn index(self) -> usize {
        self.day * SUBGROUPS.len() + self.subgroup
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(i / SUBGROUPS.len(), i % SUBGROUPS.len())
    }
}

pub type Row = [Option<ShiftAssignment>; 6];

/// Days × subgroups assignment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    days: Vec<Row>,
}

impl Schedule {
    pub fn empty(days: usize) -> Self {
        Self { days: vec![[None; 6]; days] }
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    pub fn position_count(&self) -> usize {
        self.days.len() * SUBGROUPS.len()
    }

    pub fn get(&self, day: usize, subgroup: usize) -> Option<ShiftAssignment> {
        self.days[day][subgroup]
    }

    pub fn at(&self, p: Position) -> Option<ShiftAssignment> {
        self.get(p.day, p.subgroup)
    }

    pub fn set(&mut self, day: usize, subgroup: usize, a: Option<ShiftAssignment>) {
        self.days[day][subgroup] = a;
    }

    pub fn day(&self, day: usize) -> &Row {
        &self.days[day]
    }

    pub fn is(&self, day: usize, subgroup: usize, shift: ShiftType) -> bool {
        self.days[day][subgroup].is_some_and(|a| a.shift == shift)
    }

    pub fn is_free(&self, day: usize, subgroup: usize) -> bool {
        self.days[day][subgroup].is_none()
    }

    /// Moves subgroup `s`'s assignment from `from` to `to`, duration intact.
    pub(crate) fn relocate(&mut self, s: usize, from: usize, to: usize) {
        let a = self.days[from][s].take();
        debug_assert!(self.days[to][s].is_none());
        self.days[to][s] = a;
    }

    pub fn hours(&self, subgroup: usize) -> f64 {
        self.days.iter().filter_map(|d| d[subgroup]).map(|a| a.duration).sum()
    }

    /// Hours of days `[7w, 7w + 7)`.
    pub fn week_hours(&self, subgroup: usize, week: usize) -> f64 {
        let lo = (7 * week).min(self.days.len());
        let hi = (7 * week + 7).min(self.days.len());
        self.days[lo..hi].iter().filter_map(|d| d[subgroup]).map(|a| a.duration).sum()
    }

    pub fn count(&self, day: usize, shift: ShiftType) -> usize {
        self.days[day].iter().filter(|c| c.is_some_and(|a| a.shift == shift)).count()
    }

    /// Cells that differ, as grid positions.
    pub fn diff(&self, other: &Schedule) -> Vec<Position> {
        let mut out = Vec::new();
        for (d, (a, b)) in self.days.iter().zip(&other.days).enumerate() {
            for s in 0..SUBGROUPS.len() {
                if a[s] != b[s] {
                    out.push(Position::new(d, s));
                }
            }
        }
        out
    }

    /// CSV grid: header `day,A1,...,C2`, one row per day labelled like
    /// `Mon1`, cells `CODE:duration` or empty.
    pub fn to_csv(&self, plan: &OperationPlan) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["day".to_string()];
        header.extend(SUBGROUPS.iter().map(|s| s.to_string()));
        w.write_record(&header).expect("in-memory write");
        for (d, row) in self.days.iter().enumerate() {
            let mut rec = vec![plan.label(d)];
            rec.extend(row.iter().map(|c| match c {
                Some(a) => format!("{}:{}", a.shift, a.duration),
                None => String::new(),
            }));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str, plan: &OperationPlan) -> Result<Self, ShiftError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| ShiftError::Parse(e.to_string()))?.clone();
        let expect: Vec<&str> = std::iter::once("day").chain(SUBGROUPS).collect();
        if header.iter().collect::<Vec<_>>() != expect {
            return Err(ShiftError::Parse(format!("header must be {}", expect.join(","))));
        }
        let mut days = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| ShiftError::Parse(e.to_string()))?;
            let line = i + 2;
            if i >= plan.cycle_days() {
                return Err(ShiftError::Parse(format!("line {line}: more rows than plan days")));
            }
            if &rec[0] != plan.label(i).as_str() {
                return Err(ShiftError::Parse(format!(
                    "line {line}: day label `{}`, expected `{}`",
                    &rec[0],
                    plan.label(i)
                )));
            }
            let mut row: Row = [None; 6];
            for s in 0..SUBGROUPS.len() {
                let cell = rec.get(s + 1).unwrap_or("").trim();
                if cell.is_empty() {
                    continue;
                }
                let (code, dur) = cell
                    .split_once(':')
                    .ok_or_else(|| ShiftError::Parse(format!("line {line}, {}: `{cell}` is not CODE:hours", SUBGROUPS[s])))?;
                let shift = ShiftType::from_code(code)
                    .ok_or_else(|| ShiftError::Parse(format!("line {line}, {}: unknown shift `{code}`", SUBGROUPS[s])))?;
                let duration: f64 = dur
                    .parse()
                    .map_err(|_| ShiftError::Parse(format!("line {line}, {}: bad duration `{dur}`", SUBGROUPS[s])))?;
                row[s] = Some(ShiftAssignment::new(shift, duration));
            }
            days.push(row);
        }
        if days.len() != plan.cycle_days() {
            return Err(ShiftError::Parse(format!(
                "{} rows, plan has {} days",
                days.len(),
                plan.cycle_days()
            )));
        }
        Ok(Self { days })
    }
}
