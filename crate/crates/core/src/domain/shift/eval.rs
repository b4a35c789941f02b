use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{OperationPlan, Position, Schedule, ShiftType, GROUPS, SUBGROUPS};
use crate::constraint::{CompareConstraint, CompareOp};
use crate::domain::DomainSchema;
use crate::dynamic::{Binding, Expr, GenerationRule, Instance, ObjectRecord, Scope, TemplateConstraint};
use crate::fuzzy::{FuzzyValue, MembershipFunction, OperatorSet};
use crate::kb::KnowledgeBase;

pub const EVEN_DISTRIBUTION: &str = "even_distribution";
pub const FREE_WEEKENDS: &str = "free_weekends";

pub const MAX_WEEKS: usize = 3;

/// Weekly-hours difference at which even distribution is fully violated.
pub const EVEN_RAMP: f64 = 12.0;

pub fn shift_schema() -> &'static DomainSchema {
    static SCHEMA: OnceLock<DomainSchema> = OnceLock::new();
    SCHEMA.get_or_init(|| {
        let mut s = DomainSchema::new("shift");
        let mut attrs: Vec<String> = ["hours", "max_week_diff", "worked_weekends", "free_weekends", "td_count"]
            .iter()
            .map(|a| a.to_string())
            .collect();
        attrs.extend((1..=MAX_WEEKS).map(|w| format!("hours_w{w}")));
        s.object_types.insert("subgroup".into(), attrs.into_iter().collect());
        s.hierarchy = vec!["domain".into(), "group".into(), "subgroup".into()];
        s.repairs.insert(EVEN_DISTRIBUTION.into(), vec!["mon_wed".into(), "mon_wed_thu_fri".into()]);
        s.repairs.insert(FREE_WEEKENDS.into(), vec!["weekend_td".into(), "weekend_sw".into()]);
        s
    })
}

/// Weekly hours of one subgroup, one entry per (possibly partial) week.
pub fn weekly_hours(s: &Schedule, plan: &OperationPlan, subgroup: usize) -> Vec<f64> {
    (0..plan.weeks()).map(|w| s.week_hours(subgroup, w)).collect()
}

/// Largest difference between consecutive weeks and the first week of the
/// pair attaining it.
pub fn max_week_diff(weeks: &[f64]) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (w, pair) in weeks.windows(2).enumerate() {
        let d = (pair[0] - pair[1]).abs();
        if d > best.0 {
            best = (d, w);
        }
    }
    best
}

/// Days of week `w` falling on a weekend.
fn weekend_days(plan: &OperationPlan, w: usize) -> Vec<usize> {
    (7 * w..(7 * w + 7).min(plan.cycle_days()))
        .filter(|&d| plan.days[d].weekday.is_weekend())
        .collect()
}

/// For each week with weekend days: whether the subgroup works on any.
pub fn weekends_worked(s: &Schedule, plan: &OperationPlan, subgroup: usize) -> Vec<(usize, bool)> {
    (0..plan.weeks())
        .filter_map(|w| {
            let days = weekend_days(plan, w);
            (!days.is_empty()).then(|| (w, days.iter().any(|&d| !s.is_free(d, subgroup))))
        })
        .collect()
}

fn attributes(s: &Schedule, plan: &OperationPlan, sg: usize) -> BTreeMap<String, f64> {
    let mut a = BTreeMap::new();
    let weeks = weekly_hours(s, plan, sg);
    for (w, h) in weeks.iter().enumerate().take(MAX_WEEKS) {
        a.insert(format!("hours_w{}", w + 1), *h);
    }
    a.insert("hours".into(), s.hours(sg));
    a.insert("max_week_diff".into(), max_week_diff(&weeks).0);
    let we = weekends_worked(s, plan, sg);
    let worked = we.iter().filter(|w| w.1).count();
    a.insert("worked_weekends".into(), worked as f64);
    a.insert("free_weekends".into(), (we.len() - worked) as f64);
    let td = (0..s.day_count()).filter(|&d| s.is(d, sg, ShiftType::TD)).count();
    a.insert("td_count".into(), td as f64);
    a
}

/// A schedule seen through the constraint layer: one object per subgroup,
/// grouped into the three groups.
pub struct ShiftInstance<'a> {
    pub schedule: &'a Schedule,
    pub plan: &'a OperationPlan,
}

impl Instance for ShiftInstance<'_> {
    fn schema(&self) -> &DomainSchema {
        shift_schema()
    }

    fn position_count(&self) -> usize {
        self.schedule.position_count()
    }

    fn units(&self) -> Vec<String> {
        GROUPS.iter().map(|g| g.to_string()).collect()
    }

    fn object_count(&self) -> usize {
        SUBGROUPS.len()
    }

    fn object(&self, idx: usize) -> ObjectRecord {
        ObjectRecord {
            name: SUBGROUPS[idx].to_string(),
            kind: "subgroup".into(),
            unit: idx / 2,
            attrs: attributes(self.schedule, self.plan, idx),
            depends_on: (0..self.schedule.day_count()).map(|d| Position::new(d, idx).index()).collect(),
        }
    }

    fn violation_positions(&self, template: &str, objects: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &sg in objects {
            let cells: Vec<Position> = match template {
                EVEN_DISTRIBUTION => even_targets(self.schedule, self.plan, sg),
                FREE_WEEKENDS => weekend_targets(self.schedule, self.plan, sg),
                _ => (0..self.schedule.day_count()).map(|d| Position::new(d, sg)).collect(),
            };
            out.extend(cells.into_iter().map(Position::index));
        }
        out
    }
}

/// Weekday cells of the worst pair of consecutive weeks.
fn even_targets(s: &Schedule, plan: &OperationPlan, sg: usize) -> Vec<Position> {
    let (_, w) = max_week_diff(&weekly_hours(s, plan, sg));
    (7 * w..(7 * w + 14).min(plan.cycle_days()))
        .filter(|&d| !plan.days[d].weekday.is_weekend())
        .map(|d| Position::new(d, sg))
        .collect()
}

/// Weekend cells of every weekend the subgroup works.
fn weekend_targets(s: &Schedule, plan: &OperationPlan, sg: usize) -> Vec<Position> {
    weekends_worked(s, plan, sg)
        .into_iter()
        .filter(|w| w.1)
        .flat_map(|(w, _)| weekend_days(plan, w))
        .map(|d| Position::new(d, sg))
        .collect()
}

fn even_template() -> TemplateConstraint {
    let mut base = CompareConstraint::new(EVEN_DISTRIBUTION, "max_week_diff", CompareOp::Le, 0.0).with_ramp(EVEN_RAMP);
    base.comment = "difference of working hours between consecutive weeks".into();
    TemplateConstraint {
        name: EVEN_DISTRIBUTION.into(),
        base,
        specialization: Expr::input("diff"),
    }
}

fn weekend_template() -> TemplateConstraint {
    // linear in the number of worked weekends: 3 free -> 1, none free -> 0
    let mut base = CompareConstraint::new(FREE_WEEKENDS, "worked_weekends", CompareOp::Le, 0.0)
        .with_ramp(3.0)
        .with_curve(MembershipFunction::new(vec![(0.0, 1.0), (1.0, 0.0)]).expect("static curve"));
    base.tuned = true;
    base.comment = "more free weekends are better".into();
    TemplateConstraint {
        name: FREE_WEEKENDS.into(),
        base,
        specialization: Expr::input("worked"),
    }
}

/// The bundled knowledge base for the shift domain.
pub fn reference_kb() -> KnowledgeBase {
    let mut kb = KnowledgeBase::new("shift-reference");
    kb.comment = "even distribution of working hours and free weekends, per subgroup".into();
    kb.operator_set = OperatorSet::default();
    kb.templates = vec![even_template(), weekend_template()];
    let per_subgroup = |name: &str, template: &str, input: &str, attr: &str| GenerationRule {
        name: name.into(),
        template: template.into(),
        scope: Scope::Object { object_type: "subgroup".into() },
        condition: vec![],
        bind: [(
            input.to_string(),
            Binding::Attr {
                role: "self".into(),
                attr: attr.into(),
            },
        )]
        .into_iter()
        .collect(),
    };
    kb.rules = vec![
        per_subgroup("even-per-subgroup", EVEN_DISTRIBUTION, "diff", "max_week_diff"),
        per_subgroup("weekends-per-subgroup", FREE_WEEKENDS, "worked", "worked_weekends"),
    ];
    kb
}

/// Even distribution of one subgroup's weekly hours: the score and the
/// first week of the worst consecutive pair.
pub fn eval_even_distribution(s: &Schedule, plan: &OperationPlan, subgroup: usize) -> (f64, usize) {
    let (d, w) = max_week_diff(&weekly_hours(s, plan, subgroup));
    let t = even_template();
    let score = crate::constraint::evaluate_compare(&t.base, &FuzzyValue::Crisp(d), &OperatorSet::default(), None, None)
        .expect("default pipeline on a crisp value");
    (score, w)
}

/// Free-weekend score of one subgroup and the weekend cells to repair.
pub fn eval_free_weekends(s: &Schedule, plan: &OperationPlan, subgroup: usize) -> (f64, Vec<Position>) {
    let worked = weekends_worked(s, plan, subgroup).iter().filter(|w| w.1).count();
    let t = weekend_template();
    let score = crate::constraint::evaluate_compare(
        &t.base,
        &FuzzyValue::Crisp(worked as f64),
        &OperatorSet::default(),
        None,
        None,
    )
    .expect("curve on a crisp value");
    (score, weekend_targets(s, plan, subgroup))
}
