use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DynamicError, Instance, ObjectRecord, Specialized, TemplateConstraint};
use crate::constraint::CompareOp;
use crate::domain::DomainSchema;

/// Which object tuples a rule ranges over. Tuples never cross units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    /// Every object of `object_type`; role `self`.
    Object { object_type: String },
    /// Consecutive objects of `object_type`; roles `first`, `second`.
    AdjacentPair { object_type: String },
    /// Maximal runs of consecutive objects of `object_type`; an object
    /// carrying `marker` starts a new run. Roles `first`, `last`.
    Run { object_type: String, marker: String },
}

impl Scope {
    pub fn object_type(&self) -> &str {
        match self {
            Scope::Object { object_type } | Scope::AdjacentPair { object_type } | Scope::Run { object_type, .. } => {
                object_type
            }
        }
    }

    pub fn roles(&self) -> &'static [&'static str] {
        match self {
            Scope::Object { .. } => &["self"],
            Scope::AdjacentPair { .. } => &["first", "second"],
            Scope::Run { .. } => &["first", "last"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Attr { role: String, attr: String },
    Const(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Has { role: String, attr: String },
    Lacks { role: String, attr: String },
    /// False when either side is missing.
    Compare { left: Operand, op: CompareOp, right: Operand },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeKind {
    Sum,
    Count,
    Min,
    Max,
}

/// Source of one template input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Attr { role: String, attr: String },
    /// Aggregate of `attr` over the members of a run that carry it.
    Range { kind: RangeKind, attr: String },
    Const(f64),
}

/// CONDITION / CONSTRAINT pair: where the condition holds, the template is
/// specialized with the bound inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRule {
    pub name: String,
    pub template: String,
    pub scope: Scope,
    #[serde(default)]
    pub condition: Vec<Predicate>,
    pub bind: BTreeMap<String, Binding>,
}

/// One object tuple matched by a scope.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tuple {
    pub unit: usize,
    pub members: Vec<usize>,
}

/// A generated constraint instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedConstraint {
    pub rule: usize,
    pub name: String,
    pub template: String,
    pub importance: f64,
    pub specialized: Specialized,
    pub objects: Vec<usize>,
    pub positions: Vec<usize>,
}

impl GenerationRule {
    /// Object tuples of this rule's scope within one unit.
    pub(crate) fn tuples(&self, unit: usize, members: &[usize], objects: &[ObjectRecord]) -> Vec<Tuple> {
        let kind = self.scope.object_type();
        let of_kind: Vec<usize> = members.iter().copied().filter(|&i| objects[i].kind == kind).collect();
        match &self.scope {
            Scope::Object { .. } => of_kind.into_iter().map(|i| Tuple { unit, members: vec![i] }).collect(),
            Scope::AdjacentPair { .. } => of_kind
                .windows(2)
                .map(|w| Tuple { unit, members: w.to_vec() })
                .collect(),
            Scope::Run { marker, .. } => {
                let mut runs: Vec<Tuple> = Vec::new();
                for i in of_kind {
                    let starts = objects[i].attrs.contains_key(marker) || runs.is_empty();
                    if starts {
                        runs.push(Tuple { unit, members: vec![i] });
                    } else {
                        runs.last_mut().expect("run").members.push(i);
                    }
                }
                runs
            }
        }
    }

    fn role_object<'a>(&self, role: &str, t: &Tuple, objects: &'a [ObjectRecord]) -> Option<&'a ObjectRecord> {
        let idx = match (&self.scope, role) {
            (Scope::Object { .. }, "self") | (Scope::AdjacentPair { .. }, "first") | (Scope::Run { .. }, "first") => {
                t.members.first()
            }
            (Scope::AdjacentPair { .. }, "second") => t.members.get(1),
            (Scope::Run { .. }, "last") => t.members.last(),
            _ => None,
        }?;
        Some(&objects[*idx])
    }

    fn operand(&self, o: &Operand, t: &Tuple, objects: &[ObjectRecord]) -> Option<f64> {
        match o {
            Operand::Const(c) => Some(*c),
            Operand::Attr { role, attr } => self.role_object(role, t, objects)?.attrs.get(attr).copied(),
        }
    }

    pub(crate) fn condition_holds(&self, t: &Tuple, objects: &[ObjectRecord]) -> bool {
        self.condition.iter().all(|p| match p {
            Predicate::Has { role, attr } => self
                .role_object(role, t, objects)
                .is_some_and(|o| o.attrs.contains_key(attr)),
            Predicate::Lacks { role, attr } => self
                .role_object(role, t, objects)
                .is_some_and(|o| !o.attrs.contains_key(attr)),
            Predicate::Compare { left, op, right } => {
                match (self.operand(left, t, objects), self.operand(right, t, objects)) {
                    (Some(a), Some(b)) => op.holds(a, b),
                    _ => false,
                }
            }
        })
    }

    /// Template inputs for a tuple, or `None` when a min/max range is empty.
    pub(crate) fn inputs(&self, t: &Tuple, objects: &[ObjectRecord]) -> Option<BTreeMap<String, f64>> {
        let mut ctx = BTreeMap::new();
        for (input, b) in &self.bind {
            let v = match b {
                Binding::Const(c) => *c,
                Binding::Attr { role, attr } => match self.role_object(role, t, objects)?.attrs.get(attr) {
                    Some(v) => *v,
                    // unbound inputs surface later as MissingAttribute
                    None => continue,
                },
                Binding::Range { kind, attr } => {
                    let vals: Vec<f64> = t.members.iter().filter_map(|&i| objects[i].attrs.get(attr).copied()).collect();
                    match kind {
                        RangeKind::Sum => vals.iter().sum(),
                        RangeKind::Count => vals.len() as f64,
                        RangeKind::Min => vals.iter().copied().reduce(f64::min)?,
                        RangeKind::Max => vals.iter().copied().reduce(f64::max)?,
                    }
                }
            };
            ctx.insert(input.clone(), v);
        }
        Some(ctx)
    }

    pub(crate) fn instance_name(&self, t: &Tuple, objects: &[ObjectRecord]) -> String {
        let names: Vec<&str> = t.members.iter().map(|&i| objects[i].name.as_str()).collect();
        match self.scope {
            Scope::Run { .. } if names.len() > 2 => {
                format!("{}@{}..{}", self.template, names[0], names[names.len() - 1])
            }
            _ => format!("{}@{}", self.template, names.join(",")),
        }
    }

    /// Attributes the rule reads, per object type.
    pub fn referenced_attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for p in &self.condition {
            match p {
                Predicate::Has { attr, .. } | Predicate::Lacks { attr, .. } => {
                    out.insert(attr.clone());
                }
                Predicate::Compare { left, right, .. } => {
                    for o in [left, right] {
                        if let Operand::Attr { attr, .. } = o {
                            out.insert(attr.clone());
                        }
                    }
                }
            }
        }
        for b in self.bind.values() {
            match b {
                Binding::Attr { attr, .. } | Binding::Range { attr, .. } => {
                    out.insert(attr.clone());
                }
                Binding::Const(_) => {}
            }
        }
        if let Scope::Run { marker, .. } = &self.scope {
            out.insert(marker.clone());
        }
        out
    }
}

/// Checks every object against the schema: known type, declared attributes.
pub(crate) fn check_objects(schema: &DomainSchema, objects: &[ObjectRecord]) -> Result<(), DynamicError> {
    for o in objects {
        let attrs = schema
            .object_types
            .get(&o.kind)
            .ok_or_else(|| DynamicError::SchemaMismatch(format!("{}: unknown object type `{}`", o.name, o.kind)))?;
        if let Some(a) = o.attrs.keys().find(|a| !attrs.contains(*a)) {
            return Err(DynamicError::SchemaMismatch(format!("{}: undeclared attribute `{a}`", o.name)));
        }
    }
    Ok(())
}

/// Every constraint instance the rules produce on `inst`, in canonical
/// order: by unit, then rule, then the tuple's first member.
pub fn generate_constraints(
    rules: &[GenerationRule],
    templates: &BTreeMap<String, TemplateConstraint>,
    inst: &dyn Instance,
) -> Result<Vec<GeneratedConstraint>, DynamicError> {
    let objects: Vec<ObjectRecord> = (0..inst.object_count()).map(|i| inst.object(i)).collect();
    check_objects(inst.schema(), &objects)?;
    let units = unit_members(inst.units().len(), &objects)?;
    let mut out = Vec::new();
    for (u, members) in units.iter().enumerate() {
        for (ri, rule) in rules.iter().enumerate() {
            let t = templates
                .get(&rule.template)
                .ok_or_else(|| DynamicError::UnknownTemplate(rule.template.clone()))?;
            for tuple in rule.tuples(u, members, &objects) {
                if let Some(g) = generate_one(ri, rule, t, &tuple, &objects, inst)? {
                    out.push(g);
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn generate_one(
    ri: usize,
    rule: &GenerationRule,
    t: &TemplateConstraint,
    tuple: &Tuple,
    objects: &[ObjectRecord],
    inst: &dyn Instance,
) -> Result<Option<GeneratedConstraint>, DynamicError> {
    if !rule.condition_holds(tuple, objects) {
        return Ok(None);
    }
    let Some(ctx) = rule.inputs(tuple, objects) else {
        return Ok(None);
    };
    let specialized = super::specialize(t, &ctx)?;
    let mut positions = inst.violation_positions(&t.name, &tuple.members);
    positions.sort_unstable();
    positions.dedup();
    Ok(Some(GeneratedConstraint {
        rule: ri,
        name: rule.instance_name(tuple, objects),
        template: t.name.clone(),
        importance: t.base.importance,
        specialized,
        objects: tuple.members.clone(),
        positions,
    }))
}

pub(crate) fn unit_members(unit_count: usize, objects: &[ObjectRecord]) -> Result<Vec<Vec<usize>>, DynamicError> {
    let mut units = vec![Vec::new(); unit_count];
    for (i, o) in objects.iter().enumerate() {
        units
            .get_mut(o.unit)
            .ok_or_else(|| DynamicError::SchemaMismatch(format!("{}: unit {} out of range", o.name, o.unit)))?
            .push(i);
    }
    Ok(units)
}
