//! Reference-ranking-pair consistency checks for configuration changes.
//!
//! A configuration is a [`KnowledgeBase`]. Each database keeps ordered
//! pairs of instantiation snapshots; a new configuration is consistent with
//! a database when it still ranks the first member of every pair strictly
//! above the second.

mod edit;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraint::{evaluate_set, Bindings, ConstraintError};
use crate::domain::shift::{OperationPlan, Schedule, ShiftInstance};
use crate::dynamic::{DynamicError, EvaluationTree};
use crate::fuzzy::aggregate;
use crate::kb::KnowledgeBase;

pub use edit::{apply_edits, ConfigEdit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsistencyError {
    #[error("configuration cannot evaluate the snapshot: {0}")]
    IncompatibleStructure(String),
    #[error("adoption refused: {} reference pair(s) inverted", .0.len())]
    RefusedInconsistent(Vec<Inversion>),
    #[error("adoption refused: new best scores {after}, not above previous best {before}")]
    RefusedNotImproving { before: f64, after: f64 },
    #[error("reference pair must rank first above second, got {first} vs {second}")]
    InvalidPair { first: f64, second: f64 },
    #[error("unknown reference pair {0}")]
    UnknownPair(u64),
    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("database `{0}` already exists")]
    DuplicateDatabase(String),
    #[error("unknown database `{0}`")]
    UnknownDatabase(String),
    #[error("{0}")]
    Io(String),
}

/// A shift schedule together with the plan it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSnapshot {
    pub plan: OperationPlan,
    pub schedule: Schedule,
}

/// Everything needed to re-evaluate an instantiation under any
/// configuration: variable bindings for static constraint sets and/or a
/// shift schedule for the templates and generation rules.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Snapshot {
    #[serde(default, skip_serializing_if = "Bindings::is_empty")]
    pub bindings: Bindings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftSnapshot>,
}

impl Snapshot {
    pub fn from_bindings(bindings: Bindings) -> Self {
        Self { bindings, shift: None }
    }

    pub fn from_schedule(plan: OperationPlan, schedule: Schedule) -> Self {
        Self {
            bindings: Bindings::new(),
            shift: Some(ShiftSnapshot { plan, schedule }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintScore {
    pub score: f64,
    pub importance: f64,
}

/// Aggregate score of a snapshot plus the score of every constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub score: f64,
    pub constraints: BTreeMap<String, ConstraintScore>,
}

fn incompatible(e: impl std::fmt::Display) -> ConsistencyError {
    ConsistencyError::IncompatibleStructure(e.to_string())
}

/// Evaluates `snap` under `kb`. The score is the raw aggregate: hard
/// barriers are reported per constraint but do not zero the total, so that
/// two invalid instantiations still have an order.
pub fn evaluate_snapshot(kb: &KnowledgeBase, snap: &Snapshot) -> Result<Scored, ConsistencyError> {
    let mut parts: Vec<(f64, f64)> = Vec::new();
    let mut constraints = BTreeMap::new();
    if !snap.bindings.is_empty() || snap.shift.is_none() {
        if kb.sets.is_empty() {
            return Err(incompatible("no constraint sets for bound variables"));
        }
        for set in &kb.sets {
            let ev = evaluate_set(set, &snap.bindings).map_err(|e| match e {
                ConstraintError::UnboundVariable(v) => incompatible(format!("variable `{v}` is not bound")),
                other => incompatible(other),
            })?;
            parts.push((ev.score, 1.0));
            for r in &ev.roots {
                r.walk(&mut |n| {
                    constraints.insert(
                        n.name.clone(),
                        ConstraintScore {
                            score: n.score,
                            importance: n.importance,
                        },
                    );
                });
            }
        }
    }
    if let Some(sh) = &snap.shift {
        if kb.rules.is_empty() {
            return Err(incompatible("no generation rules for a schedule"));
        }
        let inst = ShiftInstance {
            schedule: &sh.schedule,
            plan: &sh.plan,
        };
        let tree = EvaluationTree::build(kb, &inst).map_err(|e: DynamicError| incompatible(e))?;
        if tree.leaf_count() == 0 {
            return Err(incompatible("no constraint instances generated for the schedule"));
        }
        parts.push((tree.root_score(), 1.0));
        for l in tree.leaves() {
            constraints.insert(
                l.name.clone(),
                ConstraintScore {
                    score: l.score,
                    importance: l.importance,
                },
            );
        }
    }
    let score = if parts.len() == 1 {
        parts[0].0
    } else {
        aggregate(&kb.operator_set, &parts).map_err(incompatible)?
    };
    Ok(Scored { score, constraints })
}

/// Hex SHA-256 of the configuration's canonical JSON, ignoring its name and
/// all comments.
pub fn config_digest(kb: &KnowledgeBase) -> String {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(m) => {
                m.remove("comment");
                m.values_mut().for_each(strip);
            }
            Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(kb).expect("knowledge base serializes");
    if let Value::Object(m) = &mut v {
        m.remove("name");
    }
    strip(&mut v);
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePair {
    pub id: u64,
    /// Ranked better.
    pub first: Snapshot,
    pub second: Snapshot,
    /// Scores of first and second under the creation configuration.
    pub scores: (f64, f64),
    /// Digest of the creation configuration.
    pub digest: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePairDb {
    pub name: String,
    pub pairs: Vec<ReferencePair>,
    /// The last adopted configuration.
    pub config: KnowledgeBase,
    #[serde(default)]
    next_id: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl ReferencePairDb {
    pub fn new(name: impl Into<String>, config: KnowledgeBase) -> Self {
        Self {
            name: name.into(),
            pairs: Vec::new(),
            config,
            next_id: 0,
        }
    }

    /// Adds a pair ranked under the current configuration.
    pub fn add_pair(&mut self, first: Snapshot, second: Snapshot) -> Result<u64, ConsistencyError> {
        let a = evaluate_snapshot(&self.config, &first)?.score;
        let b = evaluate_snapshot(&self.config, &second)?.score;
        if !(a > b) {
            return Err(ConsistencyError::InvalidPair { first: a, second: b });
        }
        let id = self.next_id;
        self.next_id += 1;
        self.pairs.push(ReferencePair {
            id,
            first,
            second,
            scores: (a, b),
            digest: config_digest(&self.config),
            created: now(),
        });
        Ok(id)
    }
}

/// A pair whose order the new configuration does not preserve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub pair: u64,
    pub old: (f64, f64),
    pub new: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "inversions", rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent(Vec<Inversion>),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent)
    }
}

/// Re-scores every pair under `new`. Equal new scores count as an
/// inversion. Inversions are listed by pair id.
pub fn consistency_check(new: &KnowledgeBase, db: &ReferencePairDb) -> Result<Verdict, ConsistencyError> {
    let mut inv = Vec::new();
    for p in &db.pairs {
        let a = evaluate_snapshot(new, &p.first)?.score;
        let b = evaluate_snapshot(new, &p.second)?.score;
        if !(a > b) {
            inv.push(Inversion {
                pair: p.id,
                old: p.scores,
                new: (a, b),
            });
        }
    }
    inv.sort_by_key(|i| i.pair);
    Ok(if inv.is_empty() {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent(inv)
    })
}

/// A new database with `(best_after, best_before)` as a pair and `new` as
/// its configuration, provided `new` is consistent with `db` and ranks
/// `best_after` strictly higher.
pub fn adopt_config(
    new: &KnowledgeBase,
    best_before: &Snapshot,
    best_after: &Snapshot,
    db: &ReferencePairDb,
) -> Result<ReferencePairDb, ConsistencyError> {
    if let Verdict::Inconsistent(inv) = consistency_check(new, db)? {
        return Err(ConsistencyError::RefusedInconsistent(inv));
    }
    let before = evaluate_snapshot(new, best_before)?.score;
    let after = evaluate_snapshot(new, best_after)?.score;
    if !(after > before) {
        return Err(ConsistencyError::RefusedNotImproving { before, after });
    }
    let mut out = db.clone();
    out.config = new.clone();
    out.add_pair(best_after.clone(), best_before.clone())?;
    Ok(out)
}

pub fn remove_pair(db: &ReferencePairDb, id: u64) -> Result<ReferencePairDb, ConsistencyError> {
    let mut out = db.clone();
    let before = out.pairs.len();
    out.pairs.retain(|p| p.id != id);
    if out.pairs.len() == before {
        return Err(ConsistencyError::UnknownPair(id));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub candidate: String,
    pub rank: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDelta {
    pub old: ConstraintScore,
    pub new: ConstraintScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankChange {
    pub candidate: String,
    pub old_rank: usize,
    pub new_rank: usize,
    /// Constraints whose score or importance differs between the two
    /// configurations.
    pub deltas: BTreeMap<String, ConstraintDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub verdict: Verdict,
    pub old_ranking: Vec<RankEntry>,
    pub new_ranking: Vec<RankEntry>,
    pub changes: Vec<RankChange>,
}

fn ranking(scored: &[(String, Scored)]) -> Vec<RankEntry> {
    let mut order: Vec<&(String, Scored)> = scored.iter().collect();
    order.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, (name, s))| RankEntry {
            candidate: name.clone(),
            rank: i + 1,
            score: s.score,
        })
        .collect()
}

/// Verdict and candidate re-ranking for `edits` applied to the database's
/// configuration. Nothing is modified.
pub fn what_if(
    edits: &[ConfigEdit],
    db: &ReferencePairDb,
    candidates: &[(String, Snapshot)],
) -> Result<WhatIfReport, ConsistencyError> {
    what_if_config(&apply_edits(&db.config, edits)?, db, candidates)
}

/// Like [`what_if`] for a complete replacement configuration.
pub fn what_if_config(
    new: &KnowledgeBase,
    db: &ReferencePairDb,
    candidates: &[(String, Snapshot)],
) -> Result<WhatIfReport, ConsistencyError> {
    let verdict = consistency_check(new, db)?;
    let mut old_s = Vec::new();
    let mut new_s = Vec::new();
    for (name, snap) in candidates {
        old_s.push((name.clone(), evaluate_snapshot(&db.config, snap)?));
        new_s.push((name.clone(), evaluate_snapshot(new, snap)?));
    }
    let old_ranking = ranking(&old_s);
    let new_ranking = ranking(&new_s);
    let rank_of = |r: &[RankEntry], n: &str| r.iter().find(|e| e.candidate == n).map(|e| e.rank).unwrap_or(0);
    let mut changes = Vec::new();
    for (i, (name, _)) in candidates.iter().enumerate() {
        let (o, n) = (rank_of(&old_ranking, name), rank_of(&new_ranking, name));
        if o == n {
            continue;
        }
        let mut deltas = BTreeMap::new();
        for (c, old) in &old_s[i].1.constraints {
            if let Some(new) = new_s[i].1.constraints.get(c) {
                if old != new {
                    deltas.insert(c.clone(), ConstraintDelta { old: *old, new: *new });
                }
            }
        }
        changes.push(RankChange {
            candidate: name.clone(),
            old_rank: o,
            new_rank: n,
            deltas,
        });
    }
    Ok(WhatIfReport {
        verdict,
        old_ranking,
        new_ranking,
        changes,
    })
}

/// Named databases kept in one JSON file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairStore {
    pub databases: BTreeMap<String, ReferencePairDb>,
}

impl PairStore {
    pub fn load(path: &Path) -> Result<Self, ConsistencyError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConsistencyError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConsistencyError::Io(format!("{}: {e}", path.display())))
    }

    /// Like [`PairStore::load`], but a missing file yields an empty store.
    pub fn load_or_default(path: &Path) -> Result<Self, ConsistencyError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ConsistencyError> {
        let text = serde_json::to_string_pretty(self).expect("store serializes");
        std::fs::write(path, text).map_err(|e| ConsistencyError::Io(format!("{}: {e}", path.display())))
    }

    pub fn insert(&mut self, db: ReferencePairDb) -> Result<(), ConsistencyError> {
        if self.databases.contains_key(&db.name) {
            return Err(ConsistencyError::DuplicateDatabase(db.name));
        }
        self.databases.insert(db.name.clone(), db);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ReferencePairDb, ConsistencyError> {
        self.databases.get(name).ok_or_else(|| ConsistencyError::UnknownDatabase(name.into()))
    }

    /// Stores `db` under its name, replacing an earlier version.
    pub fn replace(&mut self, db: ReferencePairDb) {
        self.databases.insert(db.name.clone(), db);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{CompareConstraint, CompareOp, ConstraintNode, SetOfConstraints};
    use crate::fuzzy::{FuzzyValue, LinguisticVariable, MembershipFunction, Universe};

    fn var(name: &str) -> LinguisticVariable {
        LinguisticVariable::new(
            name,
            Universe::new(-10.0, 10.0).unwrap(),
            [("any".to_string(), MembershipFunction::trapezoid(-10.0, -10.0, 10.0, 10.0).unwrap())]
                .into_iter()
                .collect(),
        )
        .unwrap()
    }

    fn le(name: &str, v: &str, w: f64) -> ConstraintNode {
        ConstraintNode::Compare(CompareConstraint::new(name, v, CompareOp::Le, 0.0).with_ramp(1.0).with_importance(w))
    }

    /// Two soft constraints `a: x <= 0` and `b: y <= 0` under a weighted mean.
    fn kb(wa: f64, wb: f64) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new("toy");
        kb.sets.push(
            SetOfConstraints::new("s", vec![le("a", "x", wa), le("b", "y", wb)]).with_parameters(vec![var("x"), var("y")]),
        );
        kb
    }

    fn snap(x: f64, y: f64) -> Snapshot {
        Snapshot::from_bindings(
            [("x".to_string(), FuzzyValue::Crisp(x)), ("y".to_string(), FuzzyValue::Crisp(y))]
                .into_iter()
                .collect(),
        )
    }

    fn db() -> ReferencePairDb {
        let mut db = ReferencePairDb::new("toy", kb(2.0, 1.0));
        db.add_pair(snap(0.0, 0.5), snap(0.5, 0.0)).unwrap();
        db
    }

    #[test]
    fn weight_flip_is_inconsistent() {
        let v = consistency_check(&kb(1.0, 2.0), &db()).unwrap();
        let Verdict::Inconsistent(inv) = v else { panic!("expected inversion") };
        assert_eq!(inv.len(), 1);
        assert_eq!(inv[0].pair, 0);
        assert!(inv[0].old.0 > inv[0].old.1);
        assert!(inv[0].new.0 < inv[0].new.1);
    }

    #[test]
    fn uniform_scaling_is_consistent() {
        assert!(consistency_check(&kb(6.0, 3.0), &db()).unwrap().is_consistent());
    }

    #[test]
    fn tie_counts_as_inversion() {
        assert!(!consistency_check(&kb(1.0, 1.0), &db()).unwrap().is_consistent());
    }

    #[test]
    fn reversed_pair_is_rejected() {
        let mut db = ReferencePairDb::new("toy", kb(2.0, 1.0));
        assert!(matches!(
            db.add_pair(snap(0.5, 0.0), snap(0.0, 0.5)),
            Err(ConsistencyError::InvalidPair { .. })
        ));
    }

    #[test]
    fn adoption_grows_the_database() {
        let db = db();
        let new = kb(4.0, 1.0);
        let out = adopt_config(&new, &snap(0.5, 0.5), &snap(0.0, 0.5), &db).unwrap();
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.config, new);
        assert_eq!(out.pairs[1].digest, config_digest(&new));
        assert!(matches!(
            adopt_config(&new, &snap(0.0, 0.5), &snap(0.5, 0.5), &db),
            Err(ConsistencyError::RefusedNotImproving { .. })
        ));
        assert!(matches!(
            adopt_config(&kb(1.0, 2.0), &snap(0.5, 0.5), &snap(0.0, 0.0), &db),
            Err(ConsistencyError::RefusedInconsistent(_))
        ));
    }

    #[test]
    fn removing_the_blocking_pair_unblocks() {
        let db = db();
        let freed = remove_pair(&db, 0).unwrap();
        assert!(consistency_check(&kb(1.0, 2.0), &freed).unwrap().is_consistent());
        assert_eq!(remove_pair(&db, 7), Err(ConsistencyError::UnknownPair(7)));
    }

    #[test]
    fn digest_ignores_name_and_comments() {
        let mut k = kb(2.0, 1.0);
        let d = config_digest(&k);
        k.name = "renamed".into();
        k.comment = "note".into();
        assert_eq!(config_digest(&k), d);
        k.sets[0].roots[0].set_importance(3.0);
        assert_ne!(config_digest(&k), d);
    }

    #[test]
    fn what_if_reports_a_swap() {
        let edits = [ConfigEdit::SetImportance { constraint: "b".into(), importance: 3.0 }];
        let cands = vec![("p".to_string(), snap(0.0, 0.5)), ("q".to_string(), snap(0.5, 0.0))];
        let r = what_if(&edits, &db(), &cands).unwrap();
        assert!(!r.verdict.is_consistent());
        assert_eq!(r.old_ranking[0].candidate, "p");
        assert_eq!(r.new_ranking[0].candidate, "q");
        assert_eq!(r.changes.len(), 2);
        let p = r.changes.iter().find(|c| c.candidate == "p").unwrap();
        assert_eq!((p.old_rank, p.new_rank), (1, 2));
        assert_eq!(p.deltas["b"].new.importance, 3.0);
        assert!(!p.deltas.contains_key("a"));
    }

    #[test]
    fn edits_validate_their_targets() {
        let k = kb(1.0, 1.0);
        assert_eq!(
            apply_edits(&k, &[ConfigEdit::SetRamp { constraint: "zz".into(), ramp: 1.0 }]),
            Err(ConsistencyError::UnknownConstraint("zz".into()))
        );
        assert!(matches!(
            apply_edits(&k, &[ConfigEdit::ScaleImportances { factor: 0.0 }]),
            Err(ConsistencyError::InvalidEdit(_))
        ));
        let soft = apply_edits(&k, &[ConfigEdit::Soften { factor: 2.0 }]).unwrap();
        assert_eq!(soft.sets[0].compares()[0].ramp_width, 2.0);
    }

    #[test]
    fn shift_snapshot_needs_rules() {
        use crate::domain::shift::{default_reference_plan, initial_solution, reference_kb};
        let plan = default_reference_plan();
        let s = initial_solution(&plan, 42).unwrap();
        let snapshot = Snapshot::from_schedule(plan, s);
        let scored = evaluate_snapshot(&reference_kb(), &snapshot).unwrap();
        assert!(scored.score > 0.0 && scored.score < 1.0);
        assert_eq!(scored.constraints.len(), 12);
        assert!(matches!(
            evaluate_snapshot(&kb(1.0, 1.0), &snapshot),
            Err(ConsistencyError::IncompatibleStructure(_))
        ));
    }

    #[test]
    fn store_round_trip() {
        let dir = std::env::temp_dir().join(format!("pairstore-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("db.json");
        let mut store = PairStore::default();
        store.insert(db()).unwrap();
        assert_eq!(store.insert(db()), Err(ConsistencyError::DuplicateDatabase("toy".into())));
        store.save(&path).unwrap();
        let back = PairStore::load(&path).unwrap();
        assert_eq!(back, store);
        assert!(matches!(back.get("nope"), Err(ConsistencyError::UnknownDatabase(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
