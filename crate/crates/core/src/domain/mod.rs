//! Domain abstraction and the bundled domains.

pub mod queens;
pub mod shift;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// What a domain exposes to the knowledge base: object types with their
/// attributes, the unit levels of its hierarchy, and which repair operators
/// handle which constraint type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSchema {
    pub name: String,
    pub object_types: BTreeMap<String, BTreeSet<String>>,
    /// Level names from the top down, e.g. domain, group, subgroup.
    pub hierarchy: Vec<String>,
    /// Constraint type to repair operator ids.
    pub repairs: BTreeMap<String, Vec<String>>,
}

impl DomainSchema {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            object_types: BTreeMap::new(),
            hierarchy: Vec::new(),
            repairs: BTreeMap::new(),
        }
    }

    pub fn repair_ids(&self) -> BTreeSet<&str> {
        self.repairs.values().flatten().map(String::as_str).collect()
    }

    pub fn repairable(&self) -> BTreeSet<String> {
        self.repairs
            .iter()
            .filter(|(_, r)| !r.is_empty())
            .map(|(t, _)| t.clone())
            .collect()
    }
}
