//! Counterfactual changes and change sets.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, Condition};

/// Polarity of a change: "d should have had state s" versus
/// "d should not have had state s".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    Additive,
    Subtractive,
}

/// When a change takes effect in the counterfactual world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// Happens as a final event on top of the factual state.
    Trigger,
    /// Holds for the whole replayed history: external events that would
    /// break it are suppressed.
    Hold,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Change {
    pub entity: String,
    pub kind: ChangeKind,
    /// Desired state (additive) or removed state (subtractive).
    pub value: String,
    /// Concrete state a subtractive change moves the entity to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<String>,
    pub timing: Timing,
    /// Rule whose firing realizes this change indirectly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via_rule: Option<String>,
}

impl Change {
    pub fn additive(entity: impl Into<String>, value: impl Into<String>, timing: Timing) -> Self {
        Change {
            entity: entity.into(),
            kind: ChangeKind::Additive,
            value: value.into(),
            replacement: None,
            timing,
            via_rule: None,
        }
    }

    pub fn subtractive(
        entity: impl Into<String>,
        value: impl Into<String>,
        replacement: impl Into<String>,
        timing: Timing,
    ) -> Self {
        Change {
            entity: entity.into(),
            kind: ChangeKind::Subtractive,
            value: value.into(),
            replacement: Some(replacement.into()),
            timing,
            via_rule: None,
        }
    }

    pub fn with_via(mut self, rule: impl Into<String>) -> Self {
        self.via_rule = Some(rule.into());
        self
    }

    /// State the entity is set to when the change has to act.
    pub fn target_value(&self) -> &str {
        match self.kind {
            ChangeKind::Additive => &self.value,
            ChangeKind::Subtractive => self.replacement.as_deref().unwrap_or(&self.value),
        }
    }

    /// Whether `value` is compatible with this change.
    pub fn admits(&self, value: &str) -> bool {
        match self.kind {
            ChangeKind::Additive => value == self.value,
            ChangeKind::Subtractive => value != self.value,
        }
    }

    /// The write needed when the entity currently has `current`, if any.
    pub fn write_from(&self, current: &str) -> Option<Assignment> {
        if self.admits(current) {
            None
        } else {
            Some(Assignment::new(&self.entity, self.target_value()))
        }
    }

    /// Condition this change establishes.
    pub fn condition(&self) -> Condition {
        match self.kind {
            ChangeKind::Additive => Condition::equals(&self.entity, &self.value),
            ChangeKind::Subtractive => Condition::not_equals(&self.entity, &self.value),
        }
    }

    /// Canonical identity, ignoring how the change was derived.
    pub fn key(&self) -> String {
        let op = match self.kind {
            ChangeKind::Additive => "=",
            ChangeKind::Subtractive => "!=",
        };
        let repl = match (&self.kind, &self.replacement) {
            (ChangeKind::Subtractive, Some(r)) => format!(">{r}"),
            _ => String::new(),
        };
        let timing = match self.timing {
            Timing::Trigger => "trigger",
            Timing::Hold => "hold",
        };
        format!("{}{op}{}{repl}@{timing}", self.entity, self.value)
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// At most one change per entity, ordered by entity id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet(BTreeMap<String, Change>);

impl ChangeSet {
    pub fn new() -> Self {
        ChangeSet::default()
    }

    pub fn single(change: Change) -> Self {
        let mut set = ChangeSet::new();
        set.0.insert(change.entity.clone(), change);
        set
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Change> {
        self.0.values()
    }

    pub fn touches(&self, entity: &str) -> bool {
        self.0.contains_key(entity)
    }

    /// Adds `change`; fails when a different change already targets the entity.
    pub fn insert(&mut self, change: Change) -> bool {
        match self.0.get(&change.entity) {
            Some(existing) if existing.key() != change.key() => false,
            Some(_) => true,
            None => {
                self.0.insert(change.entity.clone(), change);
                true
            }
        }
    }

    /// Union of two sets, `None` on contradicting changes.
    pub fn merge(&self, other: &ChangeSet) -> Option<ChangeSet> {
        let mut out = self.clone();
        for c in other.iter() {
            if !out.insert(c.clone()) {
                return None;
            }
        }
        Some(out)
    }

    pub fn key(&self) -> String {
        self.iter().map(Change::key).collect::<Vec<_>>().join(";")
    }

    pub fn into_vec(self) -> Vec<Change> {
        self.0.into_values().collect()
    }

    pub fn mark_via(&mut self, rule: &str) {
        for c in self.0.values_mut() {
            if c.via_rule.is_none() {
                c.via_rule = Some(rule.to_string());
            }
        }
    }
}

impl FromIterator<Change> for ChangeSet {
    fn from_iter<I: IntoIterator<Item = Change>>(iter: I) -> Self {
        let mut set = ChangeSet::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}
