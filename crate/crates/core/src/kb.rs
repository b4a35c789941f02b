//! The knowledge base document: operators, templates, generation rules and
//! static constraint sets.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::SetOfConstraints;
use crate::domain::DomainSchema;
use crate::dynamic::{Binding, GenerationRule, TemplateConstraint, DEFAULT_VIOLATION_THRESHOLD};
use crate::fuzzy::OperatorSet;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("knowledge base is invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub comment: String,
    #[serde(default)]
    pub operator_set: OperatorSet,
    #[serde(default = "default_threshold")]
    pub violation_threshold: f64,
    #[serde(default)]
    pub templates: Vec<TemplateConstraint>,
    #[serde(default)]
    pub rules: Vec<GenerationRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<SetOfConstraints>,
}

fn default_threshold() -> f64 {
    DEFAULT_VIOLATION_THRESHOLD
}

impl KnowledgeBase {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            comment: String::new(),
            operator_set: OperatorSet::default(),
            violation_threshold: DEFAULT_VIOLATION_THRESHOLD,
            templates: Vec::new(),
            rules: Vec::new(),
            sets: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| KbError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("knowledge base serializes")
    }

    pub fn template(&self, name: &str) -> Option<&TemplateConstraint> {
        self.templates.iter().find(|t| t.name == name)
    }

    pub fn template_mut(&mut self, name: &str) -> Option<&mut TemplateConstraint> {
        self.templates.iter_mut().find(|t| t.name == name)
    }

    /// All problems found, with a path-like location; empty when valid.
    pub fn diagnostics(&self, schema: Option<&DomainSchema>) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.violation_threshold > 0.0 && self.violation_threshold <= 1.0) {
            out.push(format!("violation_threshold: {} not in (0, 1]", self.violation_threshold));
        }
        let mut names = BTreeSet::new();
        for (i, t) in self.templates.iter().enumerate() {
            if !names.insert(t.name.as_str()) {
                out.push(format!("templates[{i}]: duplicate name `{}`", t.name));
            }
            if let Err(e) = t.base.validate() {
                out.push(format!("templates[{i}].base: {e}"));
            }
        }
        let mut rule_names = BTreeSet::new();
        for (i, r) in self.rules.iter().enumerate() {
            let at = format!("rules[{i}] `{}`", r.name);
            if !rule_names.insert(r.name.as_str()) {
                out.push(format!("{at}: duplicate rule name"));
            }
            match self.template(&r.template) {
                None => out.push(format!("{at}: unknown template `{}`", r.template)),
                Some(t) => {
                    for input in t.specialization.inputs() {
                        if !r.bind.contains_key(&input) {
                            out.push(format!("{at}: template input `{input}` is not bound"));
                        }
                    }
                }
            }
            for (input, b) in &r.bind {
                match b {
                    Binding::Attr { role, .. } if !r.scope.roles().contains(&role.as_str()) => {
                        out.push(format!("{at}.bind.{input}: role `{role}` not available in this scope"))
                    }
                    Binding::Range { .. } if !matches!(r.scope, crate::dynamic::Scope::Run { .. }) => {
                        out.push(format!("{at}.bind.{input}: range aggregation needs a run scope"))
                    }
                    _ => {}
                }
            }
            if let Some(schema) = schema {
                match schema.object_types.get(r.scope.object_type()) {
                    None => out.push(format!("{at}: unknown object type `{}`", r.scope.object_type())),
                    Some(attrs) => {
                        for a in r.referenced_attributes() {
                            if !attrs.contains(&a) {
                                out.push(format!("{at}: attribute `{a}` not in schema"));
                            }
                        }
                    }
                }
            }
        }
        if let Some(schema) = schema {
            for (ty, repairs) in &schema.repairs {
                if self.template(ty).is_none() && !repairs.is_empty() {
                    out.push(format!("schema repairs: no template for constraint type `{ty}`"));
                }
            }
        }
        for (i, s) in self.sets.iter().enumerate() {
            if let Err(e) = s.validate() {
                out.push(format!("sets[{i}] `{}`: {e}", s.name));
            }
        }
        out
    }

    pub fn validate(&self, schema: Option<&DomainSchema>) -> Result<(), KbError> {
        let d = self.diagnostics(schema);
        if d.is_empty() {
            Ok(())
        } else {
            Err(KbError::Invalid(d))
        }
    }
}
