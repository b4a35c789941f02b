use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rules::{check_objects, generate_one, unit_members, Tuple};
use super::{DynamicError, GenerationRule, Instance, ObjectRecord, Scope, TemplateConstraint};
use crate::fuzzy::{aggregate, weighted_toward_one, Aggregation, OperatorSet};
use crate::kb::KnowledgeBase;

pub const DEFAULT_VIOLATION_THRESHOLD: f64 = 0.9;

/// The knowledge a tree is built from, shared between trees.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    pub ops: OperatorSet,
    pub threshold: f64,
    pub templates: BTreeMap<String, TemplateConstraint>,
    pub rules: Vec<GenerationRule>,
    max_importance: f64,
}

impl TreeSpec {
    pub fn new(kb: &KnowledgeBase) -> Arc<Self> {
        let templates: BTreeMap<String, TemplateConstraint> =
            kb.templates.iter().map(|t| (t.name.clone(), t.clone())).collect();
        let max_importance = templates.values().map(|t| t.base.importance).fold(0.0, f64::max);
        Arc::new(Self {
            ops: kb.operator_set,
            threshold: kb.violation_threshold,
            templates,
            rules: kb.rules.clone(),
            max_importance,
        })
    }

    /// `score^(importance / max importance)`: the score as it weighs in the
    /// search for the worst conflict.
    pub fn weighted(&self, score: f64, importance: f64) -> f64 {
        if self.max_importance > 0.0 {
            weighted_toward_one(score, importance / self.max_importance)
        } else {
            score
        }
    }
}

/// An evaluated constraint instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub name: String,
    pub template: String,
    pub importance: f64,
    pub value: f64,
    pub score: f64,
    pub weighted: f64,
    pub objects: Vec<usize>,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub constraint_type: String,
    pub name: String,
    pub score: f64,
    pub weighted_score: f64,
    pub positions: Vec<usize>,
}

impl ViolationRecord {
    fn order(&self, other: &Self) -> Ordering {
        self.weighted_score
            .total_cmp(&other.weighted_score)
            .then_with(|| self.name.cmp(&other.name))
            .then_with(|| self.positions.first().cmp(&other.positions.first()))
    }
}

/// The first `k` records whose type is repairable, in list order.
pub fn worst_conflicts<'a>(
    v: &'a [ViolationRecord],
    k: usize,
    repairable: &BTreeSet<String>,
) -> Vec<&'a ViolationRecord> {
    v.iter().filter(|r| repairable.contains(&r.constraint_type)).take(k).collect()
}

/// Leaves are keyed by (unit, slot, rule, anchor). Slot `o + 1` holds the
/// object-scope leaves of object `o`; slot 0 holds pair and run leaves,
/// which hang directly below the unit node.
type LeafKey = (usize, usize, usize, usize);

#[derive(Debug, Clone, PartialEq)]
struct UnitNode {
    name: String,
    members: Vec<usize>,
    score: f64,
    weight: f64,
    dirty: bool,
}

/// root -> unit nodes -> object nodes -> constraint instances.
///
/// Internal nodes aggregate with the knowledge base's operator and carry
/// the summed weight of their children (the maximum, under
/// exponent-weighted-min), so the nested result equals the flat aggregate
/// over all leaves.
#[derive(Debug, Clone)]
pub struct EvaluationTree {
    spec: Arc<TreeSpec>,
    objects: Vec<ObjectRecord>,
    units: Vec<UnitNode>,
    leaves: BTreeMap<LeafKey, Leaf>,
    position_objects: Vec<Vec<usize>>,
    root: f64,
    valid: bool,
    violations: Vec<ViolationRecord>,
    last_recomputed: usize,
}

impl EvaluationTree {
    pub fn build(kb: &KnowledgeBase, inst: &dyn Instance) -> Result<Self, DynamicError> {
        Self::build_with(TreeSpec::new(kb), inst)
    }

    /// Derives all object attributes, generates and specializes every
    /// constraint instance, then scores bottom-up.
    pub fn build_with(spec: Arc<TreeSpec>, inst: &dyn Instance) -> Result<Self, DynamicError> {
        let objects: Vec<ObjectRecord> = (0..inst.object_count()).map(|i| inst.object(i)).collect();
        check_objects(inst.schema(), &objects)?;
        let names = inst.units();
        let members = unit_members(names.len(), &objects)?;
        let mut position_objects = vec![Vec::new(); inst.position_count()];
        for (i, o) in objects.iter().enumerate() {
            for &p in &o.depends_on {
                let slot = position_objects.get_mut(p).ok_or(DynamicError::UnknownPosition(p))?;
                if slot.last() != Some(&i) {
                    slot.push(i);
                }
            }
        }
        let units = names
            .into_iter()
            .zip(members)
            .map(|(name, members)| UnitNode {
                name,
                members,
                score: 1.0,
                weight: 0.0,
                dirty: true,
            })
            .collect();
        let mut tree = Self {
            spec,
            objects,
            units,
            leaves: BTreeMap::new(),
            position_objects,
            root: 1.0,
            valid: true,
            violations: Vec::new(),
            last_recomputed: 0,
        };
        for u in 0..tree.units.len() {
            for ri in 0..tree.spec.rules.len() {
                let tuples = tree.spec.rules[ri].tuples(u, &tree.units[u].members, &tree.objects);
                for t in tuples {
                    tree.regenerate(ri, &t, inst)?;
                }
            }
        }
        tree.refresh(inst, &(0..tree.units.len()).collect())?;
        Ok(tree)
    }

    fn key(&self, ri: usize, t: &Tuple) -> LeafKey {
        match self.spec.rules[ri].scope {
            Scope::Object { .. } => (t.unit, t.members[0] + 1, ri, t.members[0]),
            _ => (t.unit, 0, ri, t.members[0]),
        }
    }

    fn regenerate(&mut self, ri: usize, t: &Tuple, inst: &dyn Instance) -> Result<(), DynamicError> {
        let key = self.key(ri, t);
        self.leaves.remove(&key);
        self.last_recomputed += 1;
        let rule = &self.spec.rules[ri];
        let template = self
            .spec
            .templates
            .get(&rule.template)
            .ok_or_else(|| DynamicError::UnknownTemplate(rule.template.clone()))?;
        if let Some(g) = generate_one(ri, rule, template, t, &self.objects, inst)? {
            let score = g.specialized.score(&self.spec.ops)?;
            self.leaves.insert(
                key,
                Leaf {
                    weighted: self.spec.weighted(score, g.importance),
                    name: g.name,
                    template: g.template,
                    importance: g.importance,
                    value: g.specialized.value,
                    score,
                    objects: g.objects,
                    positions: g.positions,
                },
            );
        }
        Ok(())
    }

    /// Recomputes only what depends on `changed` positions. The result is
    /// identical to a fresh build over the same instantiation.
    pub fn update(&mut self, inst: &dyn Instance, changed: &[usize]) -> Result<(), DynamicError> {
        self.last_recomputed = 0;
        if let Some(&p) = changed.iter().find(|&&p| p >= self.position_objects.len()) {
            return Err(DynamicError::UnknownPosition(p));
        }
        let touched: BTreeSet<usize> = changed.iter().flat_map(|&p| self.position_objects[p].iter().copied()).collect();
        if touched.is_empty() {
            return Ok(());
        }
        for &o in &touched {
            self.objects[o] = inst.object(o);
        }
        let affected: BTreeSet<usize> = touched.iter().map(|&o| self.objects[o].unit).collect();
        for &u in &affected {
            self.units[u].dirty = true;
            for ri in 0..self.spec.rules.len() {
                let tuples = self.spec.rules[ri].tuples(u, &self.units[u].members, &self.objects);
                match self.spec.rules[ri].scope {
                    Scope::Object { .. } | Scope::AdjacentPair { .. } => {
                        for t in tuples.iter().filter(|t| t.members.iter().any(|m| touched.contains(m))) {
                            self.regenerate(ri, t, inst)?;
                        }
                    }
                    Scope::Run { .. } => {
                        let old: Vec<LeafKey> = self.leaves.range((u, 0, ri, 0)..=(u, 0, ri, usize::MAX)).map(|(k, _)| *k).collect();
                        let mut keep = BTreeSet::new();
                        for t in &tuples {
                            let key = self.key(ri, t);
                            let reusable = !t.members.iter().any(|m| touched.contains(m))
                                && self.leaves.get(&key).is_some_and(|l| l.objects == t.members);
                            if reusable {
                                keep.insert(key);
                            } else {
                                self.regenerate(ri, t, inst)?;
                                keep.insert(key);
                            }
                        }
                        for k in old {
                            if !keep.contains(&k) {
                                self.leaves.remove(&k);
                            }
                        }
                    }
                }
            }
        }
        self.refresh(inst, &affected)
    }

    fn refresh(&mut self, _inst: &dyn Instance, units: &BTreeSet<usize>) -> Result<(), DynamicError> {
        let ops = self.spec.ops;
        for &u in units {
            let mut items: Vec<(f64, f64)> = Vec::new();
            let mut object_items: Vec<(f64, f64)> = Vec::new();
            let mut current_slot = None;
            for (&(_, slot, _, _), leaf) in self.leaves.range((u, 0, 0, 0)..(u + 1, 0, 0, 0)) {
                if slot == 0 {
                    items.push((leaf.score, leaf.importance));
                    continue;
                }
                if current_slot != Some(slot) && !object_items.is_empty() {
                    items.push(combine(&ops, &object_items)?);
                    object_items.clear();
                }
                current_slot = Some(slot);
                object_items.push((leaf.score, leaf.importance));
            }
            if !object_items.is_empty() {
                items.push(combine(&ops, &object_items)?);
            }
            let (score, weight) = combine(&ops, &items)?;
            let node = &mut self.units[u];
            node.score = score;
            node.weight = weight;
            node.dirty = false;
        }
        let items: Vec<(f64, f64)> = self.units.iter().map(|n| (n.score, n.weight)).collect();
        self.root = combine(&ops, &items)?.0;
        self.valid = !self.leaves.values().any(|l| l.importance > 0.0 && l.score == 0.0);
        let mut v: Vec<ViolationRecord> = self
            .leaves
            .values()
            .filter(|l| l.weighted < self.spec.threshold)
            .map(|l| ViolationRecord {
                constraint_type: l.template.clone(),
                name: l.name.clone(),
                score: l.score,
                weighted_score: l.weighted,
                positions: l.positions.clone(),
            })
            .collect();
        v.sort_by(|a, b| a.order(b));
        self.violations = v;
        Ok(())
    }

    pub fn spec(&self) -> &Arc<TreeSpec> {
        &self.spec
    }

    pub fn root_score(&self) -> f64 {
        self.root
    }

    /// False when any constraint instance with positive importance scores 0.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Root score for valid instantiations, 0 otherwise.
    pub fn objective(&self) -> f64 {
        if self.valid {
            self.root
        } else {
            0.0
        }
    }

    pub fn violations(&self) -> &[ViolationRecord] {
        &self.violations
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.leaves.values()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Constraint instances whose objects depend on `pos`.
    pub fn leaves_at(&self, pos: usize) -> Vec<&Leaf> {
        let objs = match self.position_objects.get(pos) {
            Some(o) => o,
            None => return Vec::new(),
        };
        self.leaves
            .values()
            .filter(|l| l.objects.iter().any(|o| objs.contains(o)))
            .collect()
    }

    /// Scope evaluations performed by the last `build` or `update`.
    pub fn last_recomputed(&self) -> usize {
        self.last_recomputed
    }

    pub fn has_dirty(&self) -> bool {
        self.units.iter().any(|u| u.dirty)
    }

    pub fn unit_scores(&self) -> Vec<(&str, f64)> {
        self.units.iter().map(|u| (u.name.as_str(), u.score)).collect()
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    /// Bitwise comparison of everything observable.
    pub fn same_state(&self, other: &Self) -> bool {
        self.root.to_bits() == other.root.to_bits()
            && self.valid == other.valid
            && self.leaves == other.leaves
            && self.violations == other.violations
            && self.units == other.units
            && self.objects == other.objects
    }
}

fn combine(ops: &OperatorSet, items: &[(f64, f64)]) -> Result<(f64, f64), DynamicError> {
    let live: Vec<(f64, f64)> = items.iter().copied().filter(|p| p.1 > 0.0).collect();
    if live.is_empty() {
        return Ok((1.0, 0.0));
    }
    let score = aggregate(ops, &live).map_err(crate::constraint::ConstraintError::from)?;
    let weight = match ops.aggregation {
        Aggregation::ExponentWeightedMin => live.iter().map(|p| p.1).fold(0.0, f64::max),
        _ => live.iter().map(|p| p.1).sum(),
    };
    Ok((score, weight))
}
