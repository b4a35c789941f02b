use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ShiftError, SUBGROUPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ShiftType {
    /// Day shift, 8 to 9 hours.
    TD,
    /// Day shift at weekends, 4 hours.
    TDWE,
    /// Shift substitution at weekends, 12 hours.
    SWWE,
}

impl ShiftType {
    pub const ALL: [ShiftType; 3] = [ShiftType::TD, ShiftType::TDWE, ShiftType::SWWE];

    pub fn code(self) -> &'static str {
        match self {
            ShiftType::TD => "TD",
            ShiftType::TDWE => "TDWE",
            ShiftType::SWWE => "SWWE",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn duration_range(self) -> (f64, f64) {
        match self {
            ShiftType::TD => (8.0, 9.0),
            ShiftType::TDWE => (4.0, 4.0),
            ShiftType::SWWE => (12.0, 12.0),
        }
    }

    pub fn nominal_duration(self) -> f64 {
        match self {
            ShiftType::TD => 8.5,
            ShiftType::TDWE => 4.0,
            ShiftType::SWWE => 12.0,
        }
    }
}

impl fmt::Display for ShiftType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Weekday {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Weekday::Mon => "Mon",
            Weekday::Tue => "Tue",
            Weekday::Wed => "Wed",
            Weekday::Thu => "Thu",
            Weekday::Fri => "Fri",
            Weekday::Sat => "Sat",
            Weekday::Sun => "Sun",
        }
    }

    pub fn is_mon_wed(self) -> bool {
        matches!(self, Weekday::Mon | Weekday::Tue | Weekday::Wed)
    }

    pub fn is_thu_fri(self) -> bool {
        matches!(self, Weekday::Thu | Weekday::Fri)
    }

    pub fn is_weekend(self) -> bool {
        matches!(self, Weekday::Sat | Weekday::Sun)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Subgroup,
    /// Both subgroups of a group.
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Requirement {
    pub shift: ShiftType,
    pub unit: UnitKind,
    pub count: usize,
}

impl Requirement {
    pub fn new(shift: ShiftType, unit: UnitKind, count: usize) -> Self {
        Self { shift, unit, count }
    }

    /// Number of subgroups covering this requirement.
    pub fn subgroups(&self) -> usize {
        match self.unit {
            UnitKind::Subgroup => self.count,
            UnitKind::Group => 2 * self.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPlan {
    pub weekday: Weekday,
    #[serde(default)]
    pub maintenance: bool,
    pub requirements: Vec<Requirement>,
}

impl DayPlan {
    pub fn requirement(&self, shift: ShiftType) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.shift == shift)
    }
}

/// Per-day shift requirements over one cycle. Day `d` belongs to week
/// `d / 7`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationPlan {
    pub name: String,
    pub days: Vec<DayPlan>,
    #[serde(default = "nominal_weekly")]
    pub nominal_weekly_hours: f64,
    /// Allowed deviation of a subgroup's cycle hours from the fair share.
    #[serde(default = "default_tolerance")]
    pub hour_tolerance: f64,
}

fn nominal_weekly() -> f64 {
    38.5
}

fn default_tolerance() -> f64 {
    1.5
}

impl OperationPlan {
    pub fn cycle_days(&self) -> usize {
        self.days.len()
    }

    pub fn weeks(&self) -> usize {
        self.days.len().div_ceil(7)
    }

    pub fn label(&self, day: usize) -> String {
        format!("{}{}", self.days[day].weekday.name(), day / 7 + 1)
    }

    /// Cycle hours of the plan with every shift at its nominal duration.
    pub fn total_hours(&self) -> f64 {
        self.days
            .iter()
            .flat_map(|d| &d.requirements)
            .map(|r| r.subgroups() as f64 * r.shift.nominal_duration())
            .sum()
    }

    pub fn fair_share(&self) -> f64 {
        self.total_hours() / SUBGROUPS.len() as f64
    }

    /// Subgroup-days per shift type: (TD, TDWE, SWWE).
    pub fn totals(&self) -> (usize, usize, usize) {
        let mut t = (0, 0, 0);
        for r in self.days.iter().flat_map(|d| &d.requirements) {
            match r.shift {
                ShiftType::TD => t.0 += r.subgroups(),
                ShiftType::TDWE => t.1 += r.subgroups(),
                ShiftType::SWWE => t.2 += r.subgroups(),
            }
        }
        t
    }

    pub fn read_json(text: &str) -> Result<Self, ShiftError> {
        let p: Self = serde_json::from_str(text).map_err(|e| ShiftError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<(), ShiftError> {
        if self.days.is_empty() {
            return Err(ShiftError::InvalidPlan("no days".into()));
        }
        if self.days.iter().filter(|d| d.maintenance).count() > 1 {
            return Err(ShiftError::InvalidPlan("more than one maintenance day".into()));
        }
        if !(self.hour_tolerance >= 0.0) {
            return Err(ShiftError::InvalidPlan("negative hour tolerance".into()));
        }
        for (i, d) in self.days.iter().enumerate() {
            let mut used = 0;
            let mut groups = 0;
            for (j, r) in d.requirements.iter().enumerate() {
                if d.requirements[..j].iter().any(|o| o.shift == r.shift) {
                    return Err(ShiftError::InvalidPlan(format!("day {i}: {} listed twice", r.shift)));
                }
                used += r.subgroups();
                if r.unit == UnitKind::Group {
                    groups += r.count;
                }
            }
            if used > SUBGROUPS.len() || groups > SUBGROUPS.len() / 2 {
                return Err(ShiftError::InvalidPlan(format!("day {i}: requirements exceed capacity")));
            }
        }
        Ok(())
    }
}

/// The stand-in reference plan: three weeks, maintenance on the third
/// Saturday.
///
/// Mon-Wed: five subgroups on day shift. Thu-Fri: two whole groups on day
/// shift. Sun: one weekend day shift. Saturday: one weekend day shift and
/// one substitution, except on the maintenance Saturday, which needs two
/// weekend day shifts and no substitution.
pub fn default_reference_plan() -> OperationPlan {
    use ShiftType::*;
    use UnitKind::*;
    let days = (0..21)
        .map(|d| {
            let weekday = Weekday::ALL[d % 7];
            let maintenance = d == 19;
            let requirements = match weekday {
                Weekday::Mon | Weekday::Tue | Weekday::Wed => vec![Requirement::new(TD, Subgroup, 5)],
                Weekday::Thu | Weekday::Fri => vec![Requirement::new(TD, Group, 2)],
                Weekday::Sat if maintenance => vec![Requirement::new(TDWE, Subgroup, 2)],
                Weekday::Sat => vec![Requirement::new(TDWE, Subgroup, 1), Requirement::new(SWWE, Subgroup, 1)],
                Weekday::Sun => vec![Requirement::new(TDWE, Subgroup, 1)],
            };
            DayPlan {
                weekday,
                maintenance,
                requirements,
            }
        })
        .collect();
    OperationPlan {
        name: "reference".into(),
        days,
        nominal_weekly_hours: 38.5,
        hour_tolerance: 1.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monday_requirement() {
        let p = default_reference_plan();
        assert_eq!(p.days[0].requirements, vec![Requirement::new(ShiftType::TD, UnitKind::Subgroup, 5)]);
        assert_eq!(p.label(0), "Mon1");
        assert_eq!(p.label(20), "Sun3");
    }

    #[test]
    fn maintenance_saturday_differs() {
        let p = default_reference_plan();
        assert_eq!(p.days[19].weekday, Weekday::Sat);
        assert!(p.days[19].maintenance);
        assert_ne!(p.days[19].requirements, p.days[5].requirements);
        assert_eq!(p.days[5].requirements, p.days[12].requirements);
        assert!(p.days[19].requirement(ShiftType::SWWE).is_none());
    }

    #[test]
    fn totals_by_enumeration() {
        let p = default_reference_plan();
        let mut td = 0;
        let mut tdwe = 0;
        let mut swwe = 0;
        for d in &p.days {
            for r in &d.requirements {
                let n = if r.unit == UnitKind::Group { r.count * 2 } else { r.count };
                for _ in 0..n {
                    match r.shift {
                        ShiftType::TD => td += 1,
                        ShiftType::TDWE => tdwe += 1,
                        ShiftType::SWWE => swwe += 1,
                    }
                }
            }
        }
        assert_eq!((td, tdwe, swwe), (69, 7, 2));
        assert_eq!(p.totals(), (69, 7, 2));
        assert_eq!(p.total_hours(), 69.0 * 8.5 + 7.0 * 4.0 + 24.0);
        p.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let p = default_reference_plan();
        assert_eq!(OperationPlan::read_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn over_capacity_rejected() {
        let mut p = default_reference_plan();
        p.days[0].requirements[0].count = 7;
        assert!(p.validate().is_err());
    }
}
