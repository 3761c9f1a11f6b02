//! Scenario data model and its JSON document format.
//!
//! A [`Scenario`] is the complete description of a rule-based environment:
//! entities with finite symbolic domains, prioritized condition/action rules,
//! the state before any recorded history, the recorded history itself and the
//! current clock. Documents are parsed with [`parse_scenario`], which runs
//! [`validate_scenario`] and refuses anything with a violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{Engine, EngineConfig};

/// Marker used in history entries for changes not caused by a rule.
pub const EXTERNAL_CAUSE: &str = "external";

/// How much direct influence a user has over an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Controllability {
    /// The user can set the value directly.
    Actionable,
    /// Only reachable through rules.
    MutableNonActionable,
    /// Outside anyone's control (weather, time of day).
    Immutable,
}

/// Lexical material for one state value of an entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phrases {
    /// Past-perfect clause, e.g. "the room had been empty".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub past: Option<String>,
    /// Negated past clause, e.g. "it was not before 8:30 a.m.".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub past_negated: Option<String>,
    /// Present clause, e.g. "the room is empty".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub present: Option<String>,
    /// Negated present clause, e.g. "the room is not empty".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub present_negated: Option<String>,
    /// Predicate after a copula, e.g. "off" in "the lamp is off".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub id: String,
    pub domain: Vec<String>,
    pub controllability: Controllability,
    /// Noun phrase used in rendered sentences, e.g. "the meeting room door".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phrases: BTreeMap<String, Phrases>,
}

impl Entity {
    pub fn has_value(&self, value: &str) -> bool {
        self.domain.iter().any(|v| v == value)
    }

    /// Position of `value` in the declared domain.
    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }

    /// The domain value following `value`, wrapping around.
    pub fn successor(&self, value: &str) -> Option<&str> {
        let idx = self.value_index(value)?;
        Some(&self.domain[(idx + 1) % self.domain.len()])
    }

    pub fn noun_phrase(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("the {}", self.id.replace('_', " ")))
    }

    pub fn phrases_for(&self, value: &str) -> Option<&Phrases> {
        self.phrases.get(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    Equals,
    NotEquals,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub entity: String,
    pub operator: Operator,
    pub value: String,
}

impl Condition {
    pub fn equals(entity: impl Into<String>, value: impl Into<String>) -> Self {
        Condition { entity: entity.into(), operator: Operator::Equals, value: value.into() }
    }

    pub fn not_equals(entity: impl Into<String>, value: impl Into<String>) -> Self {
        Condition { entity: entity.into(), operator: Operator::NotEquals, value: value.into() }
    }

    /// Whether assigning `value` to the condition's entity makes it hold.
    pub fn satisfied_by(&self, value: &str) -> bool {
        match self.operator {
            Operator::Equals => self.value == value,
            Operator::NotEquals => self.value != value,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.operator {
            Operator::Equals => "=",
            Operator::NotEquals => "!=",
        };
        write!(f, "{}{}{}", self.entity, op, self.value)
    }
}

/// A single `entity := value` write, used both for rule actions and events.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub entity: String,
    pub value: String,
}

impl Assignment {
    pub fn new(entity: impl Into<String>, value: impl Into<String>) -> Self {
        Assignment { entity: entity.into(), value: value.into() }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:={}", self.entity, self.value)
    }
}

/// Condition/action rule. A smaller `priority` number wins a conflict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub id: String,
    pub preconditions: Vec<Condition>,
    pub actions: Vec<Assignment>,
    pub priority: u32,
}

impl Rule {
    pub fn action_on(&self, entity: &str) -> Option<&Assignment> {
        self.actions.iter().find(|a| a.entity == entity)
    }
}

/// What caused a recorded state change.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cause {
    External,
    Rule(String),
}

impl Cause {
    pub fn rule_id(&self) -> Option<&str> {
        match self {
            Cause::External => None,
            Cause::Rule(id) => Some(id),
        }
    }
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cause::External => f.write_str(EXTERNAL_CAUSE),
            Cause::Rule(id) => f.write_str(id),
        }
    }
}

impl Serialize for Cause {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cause {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(if raw == EXTERNAL_CAUSE { Cause::External } else { Cause::Rule(raw) })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryEntry {
    /// Milliseconds since the epoch.
    pub timestamp: i64,
    pub entity: String,
    pub old_value: String,
    pub new_value: String,
    pub cause: Cause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    pub initial_state: BTreeMap<String, String>,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
    /// Current time in milliseconds since the epoch.
    pub clock: i64,
    /// Time at which `initial_state` held. Defaults to the first history
    /// timestamp, or `clock` when the history is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<i64>,
}

impl Scenario {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.id == id)
    }

    pub fn start_time(&self) -> i64 {
        self.start.or_else(|| self.history.first().map(|h| h.timestamp)).unwrap_or(self.clock)
    }

    /// Rules ordered by precedence (highest first).
    pub fn rules_by_precedence(&self) -> Vec<&Rule> {
        let mut rules: Vec<&Rule> = self.rules.iter().collect();
        rules.sort_by_key(|r| r.priority);
        rules
    }

    /// Serializes to the canonical document form.
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

// ---------------------------------------------------------------------------
// Parsing and validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

impl Violation {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Violation { code: code.to_string(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid scenario: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl ScenarioError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ScenarioError::Invalid(v) => v,
            ScenarioError::Syntax { .. } => &[],
        }
    }

    /// Machine-readable code of the first problem.
    pub fn code(&self) -> &str {
        match self {
            ScenarioError::Syntax { .. } => "syntax",
            ScenarioError::Invalid(v) => v.first().map(|v| v.code.as_str()).unwrap_or("invalid"),
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = validate_scenario(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

/// Returns every invariant violation in `s`; empty when the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut entity_ids = BTreeSet::new();

    for e in &s.entities {
        if !entity_ids.insert(e.id.as_str()) {
            out.push(Violation::new("duplicate-id", format!("entity `{}` declared twice", e.id)));
        }
        if e.domain.len() < 2 {
            out.push(Violation::new("small-domain", format!("entity `{}` needs at least two states", e.id)));
        }
        let mut seen = BTreeSet::new();
        for v in &e.domain {
            if !seen.insert(v.as_str()) {
                out.push(Violation::new("duplicate-value", format!("entity `{}` lists state `{v}` twice", e.id)));
            }
        }
        for key in e.phrases.keys() {
            if !e.has_value(key) {
                out.push(Violation::new(
                    "phrase-key",
                    format!("entity `{}` has phrases for unknown state `{key}`", e.id),
                ));
            }
        }
    }

    let check_ref = |out: &mut Vec<Violation>, ctx: &str, entity: &str, value: &str| match s.entity(entity) {
        None => out.push(Violation::new("undeclared-entity", format!("{ctx} references undeclared entity `{entity}`"))),
        Some(e) if !e.has_value(value) => {
            out.push(Violation::new("out-of-domain", format!("{ctx}: `{value}` is not a state of `{entity}`")))
        }
        Some(_) => {}
    };

    let mut rule_ids = BTreeSet::new();
    let mut priorities: BTreeMap<u32, &str> = BTreeMap::new();
    for r in &s.rules {
        if !rule_ids.insert(r.id.as_str()) || entity_ids.contains(r.id.as_str()) {
            out.push(Violation::new("duplicate-id", format!("id `{}` is used twice", r.id)));
        }
        if r.id == EXTERNAL_CAUSE {
            out.push(Violation::new("reserved-id", format!("`{EXTERNAL_CAUSE}` cannot name a rule")));
        }
        if r.priority == 0 {
            out.push(Violation::new("zero-priority", format!("rule `{}` has priority 0", r.id)));
        }
        if let Some(other) = priorities.insert(r.priority, &r.id) {
            out.push(Violation::new(
                "duplicate-priority",
                format!("rules `{other}` and `{}` share priority {}", r.id, r.priority),
            ));
        }
        if r.preconditions.is_empty() {
            out.push(Violation::new("empty-preconditions", format!("rule `{}` has no preconditions", r.id)));
        }
        if r.actions.is_empty() {
            out.push(Violation::new("empty-actions", format!("rule `{}` has no actions", r.id)));
        }
        for c in &r.preconditions {
            check_ref(&mut out, &format!("rule `{}`", r.id), &c.entity, &c.value);
        }
        let mut targets = BTreeSet::new();
        for a in &r.actions {
            check_ref(&mut out, &format!("rule `{}`", r.id), &a.entity, &a.value);
            if !targets.insert(a.entity.as_str()) {
                out.push(Violation::new(
                    "duplicate-action-target",
                    format!("rule `{}` writes `{}` twice", r.id, a.entity),
                ));
            }
        }
    }

    for e in &s.entities {
        match s.initial_state.get(&e.id) {
            None => {
                out.push(Violation::new("missing-initial-value", format!("initial state has no value for `{}`", e.id)))
            }
            Some(v) if !e.has_value(v) => {
                out.push(Violation::new("out-of-domain", format!("initial state: `{v}` is not a state of `{}`", e.id)))
            }
            Some(_) => {}
        }
    }
    for key in s.initial_state.keys() {
        if !entity_ids.contains(key.as_str()) {
            out.push(Violation::new(
                "undeclared-entity",
                format!("initial state references undeclared entity `{key}`"),
            ));
        }
    }

    let mut last_ts: Option<i64> = None;
    for (i, h) in s.history.iter().enumerate() {
        let ctx = format!("history entry {i}");
        check_ref(&mut out, &ctx, &h.entity, &h.old_value);
        check_ref(&mut out, &ctx, &h.entity, &h.new_value);
        if h.old_value == h.new_value {
            out.push(Violation::new("no-op-history", format!("{ctx} does not change `{}`", h.entity)));
        }
        if let Some(prev) = last_ts {
            if h.timestamp < prev {
                out.push(Violation::new("history-order", format!("{ctx} goes back in time")));
            }
        }
        last_ts = Some(h.timestamp);
        if let Cause::Rule(id) = &h.cause {
            if !rule_ids.contains(id.as_str()) {
                out.push(Violation::new("unknown-rule", format!("{ctx} cites unknown rule `{id}`")));
            }
        }
    }
    if let Some(last) = last_ts {
        if s.clock < last {
            out.push(Violation::new("clock-before-history", "clock precedes the last history entry"));
        }
    }
    if let Some(start) = s.start {
        if s.history.first().is_some_and(|h| h.timestamp < start) {
            out.push(Violation::new("history-order", "history starts before `start`"));
        }
    }

    // Continuity and engine agreement only make sense on a structurally sound scenario.
    if out.is_empty() {
        out.extend(check_history_continuity(s));
    }
    if out.is_empty() {
        out.extend(check_history_replay(s));
    }
    out
}

fn check_history_continuity(s: &Scenario) -> Vec<Violation> {
    let mut values = s.initial_state.clone();
    let mut out = Vec::new();
    for (i, h) in s.history.iter().enumerate() {
        let current = values.get(&h.entity).cloned().unwrap_or_default();
        if current != h.old_value {
            out.push(Violation::new(
                "history-discontinuity",
                format!("history entry {i}: `{}` was `{current}`, entry claims `{}`", h.entity, h.old_value),
            ));
        }
        values.insert(h.entity.clone(), h.new_value.clone());
    }
    out
}

/// Replays the external entries through the engine and checks that the
/// rule-caused entries are exactly the ones the engine derives.
fn check_history_replay(s: &Scenario) -> Vec<Violation> {
    let engine = Engine::new(s, EngineConfig::default());
    match engine.replay_history() {
        Err(e) => vec![Violation::new("history-mismatch", format!("replay failed: {e}"))],
        Ok(replay) if replay.history != s.history => {
            let at = replay
                .history
                .iter()
                .zip(&s.history)
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| replay.history.len().min(s.history.len()));
            vec![Violation::new(
                "history-mismatch",
                format!("recorded history diverges from the rule engine at entry {at}"),
            )]
        }
        Ok(_) => Vec::new(),
    }
}
