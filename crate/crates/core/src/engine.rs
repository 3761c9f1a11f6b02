//! Edge-triggered forward-chaining simulator.
//!
//! After every state change the engine looks for rules that *became* active
//! (inactive before, active now). Contention is resolved per written entity:
//! the newly active rule with the smallest priority number writes it, the
//! others are recorded as preempted. Writes of one round are applied
//! simultaneously and the cascade repeats until no rule becomes newly active
//! or the depth cap is hit. A rule fires at most once per cascade.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, Cause, Condition, HistoryEntry, Operator, Rule, Scenario};

pub const DEFAULT_CASCADE_CAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub cascade_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { cascade_cap: DEFAULT_CASCADE_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("undeclared entity `{0}`")]
    UndeclaredEntity(String),
    #[error("`{value}` is not a state of `{entity}`")]
    OutOfDomain { entity: String, value: String },
    #[error("clock cannot move backwards ({0} ms)")]
    NegativeAdvance(i64),
    #[error("cascade exceeded {cap} rounds at t={timestamp}; the rules probably form a cycle")]
    CascadeOverflow { cap: usize, timestamp: i64 },
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::CascadeOverflow { .. } => "cascade-overflow",
            _ => "invalid-event",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemState {
    pub values: BTreeMap<String, String>,
    #[serde(default)]
    pub last_changed: BTreeMap<String, i64>,
    pub clock: i64,
}

impl SystemState {
    /// The state described by `initial_state`, at the scenario's start time.
    pub fn initial(s: &Scenario) -> Self {
        SystemState { values: s.initial_state.clone(), last_changed: BTreeMap::new(), clock: s.start_time() }
    }

    pub fn value(&self, entity: &str) -> Option<&str> {
        self.values.get(entity).map(String::as_str)
    }
}

/// An external stimulus: set an entity, or let time pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Event {
    Assign(Assignment),
    Advance { advance_ms: i64 },
}

impl Event {
    pub fn assign(entity: impl Into<String>, value: impl Into<String>) -> Self {
        Event::Assign(Assignment::new(entity, value))
    }
}

/// An event stamped with the time it happened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub at: i64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiringRecord {
    pub rule: String,
    pub timestamp: i64,
    /// Cascade round, starting at 0.
    pub round: usize,
    /// Writes this rule won, including ones that left the value unchanged.
    pub writes: Vec<Assignment>,
    /// Newly active lower-precedence rules that contended for the same entities.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preempted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub state: SystemState,
    pub firings: Vec<FiringRecord>,
    pub history: Vec<HistoryEntry>,
}

/// Accumulated result of running several events.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Run {
    pub firings: Vec<FiringRecord>,
    pub history: Vec<HistoryEntry>,
}

/// Evaluates a single precondition against `state`.
pub fn eval_condition(state: &SystemState, c: &Condition) -> Result<bool, EngineError> {
    let current = state.value(&c.entity).ok_or_else(|| EngineError::UndeclaredEntity(c.entity.clone()))?;
    Ok(match c.operator {
        Operator::Equals => current == c.value,
        Operator::NotEquals => current != c.value,
    })
}

/// A rule is active when every precondition holds.
pub fn is_active(rule: &Rule, state: &SystemState) -> Result<bool, EngineError> {
    for c in &rule.preconditions {
        if !eval_condition(state, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub struct Engine<'a> {
    scenario: &'a Scenario,
    config: EngineConfig,
}

impl<'a> Engine<'a> {
    pub fn new(scenario: &'a Scenario, config: EngineConfig) -> Self {
        Engine { scenario, config }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn active_rules(&self, state: &SystemState) -> Result<BTreeSet<&'a str>, EngineError> {
        let mut out = BTreeSet::new();
        for r in &self.scenario.rules {
            if is_active(r, state)? {
                out.insert(r.id.as_str());
            }
        }
        Ok(out)
    }

    fn check_assignment(&self, a: &Assignment) -> Result<(), EngineError> {
        let entity = self.scenario.entity(&a.entity).ok_or_else(|| EngineError::UndeclaredEntity(a.entity.clone()))?;
        if !entity.has_value(&a.value) {
            return Err(EngineError::OutOfDomain { entity: a.entity.clone(), value: a.value.clone() });
        }
        Ok(())
    }

    /// Applies one external event and runs the resulting cascade.
    pub fn step(&self, state: &SystemState, event: &Event) -> Result<StepOutcome, EngineError> {
        match event {
            Event::Advance { advance_ms } => {
                if *advance_ms < 0 {
                    return Err(EngineError::NegativeAdvance(*advance_ms));
                }
                let mut next = state.clone();
                next.clock += advance_ms;
                Ok(StepOutcome { state: next, firings: Vec::new(), history: Vec::new() })
            }
            Event::Assign(a) => self.apply(state, std::slice::from_ref(a), Cause::External),
        }
    }

    /// Applies several writes at once (one state change) and cascades.
    pub fn apply(&self, state: &SystemState, writes: &[Assignment], cause: Cause) -> Result<StepOutcome, EngineError> {
        for a in writes {
            self.check_assignment(a)?;
        }
        let mut next = state.clone();
        let mut history = Vec::new();
        let mut firings = Vec::new();
        let now = state.clock;

        let mut active_before = self.active_rules(&next)?;
        write_values(&mut next, writes, &cause, now, &mut history);

        let mut fired: BTreeSet<&str> = BTreeSet::new();
        let mut round = 0;
        loop {
            let active_now = self.active_rules(&next)?;
            let newly: Vec<&Rule> = self
                .scenario
                .rules
                .iter()
                .filter(|r| {
                    let id = r.id.as_str();
                    active_now.contains(id) && !active_before.contains(id) && !fired.contains(id)
                })
                .collect();
            if newly.is_empty() {
                break;
            }
            if round >= self.config.cascade_cap {
                return Err(EngineError::CascadeOverflow { cap: self.config.cascade_cap, timestamp: now });
            }

            // Per-entity contention: smallest priority number wins.
            let mut winners: BTreeMap<&str, &Rule> = BTreeMap::new();
            let mut contenders: BTreeMap<&str, Vec<&Rule>> = BTreeMap::new();
            for r in &newly {
                for a in &r.actions {
                    contenders.entry(a.entity.as_str()).or_default().push(r);
                    let slot = winners.entry(a.entity.as_str()).or_insert(r);
                    if r.priority < slot.priority {
                        *slot = r;
                    }
                }
            }

            let mut round_writes = Vec::new();
            for r in &newly {
                let mut writes = Vec::new();
                let mut preempted = BTreeSet::new();
                for a in &r.actions {
                    if winners[a.entity.as_str()].id == r.id {
                        writes.push(a.clone());
                        for c in &contenders[a.entity.as_str()] {
                            if c.id != r.id {
                                preempted.insert(c.id.clone());
                            }
                        }
                    }
                }
                if writes.is_empty() {
                    continue;
                }
                fired.insert(r.id.as_str());
                round_writes.push((r.id.clone(), writes.clone()));
                firings.push(FiringRecord {
                    rule: r.id.clone(),
                    timestamp: now,
                    round,
                    writes,
                    preempted: preempted.into_iter().collect(),
                });
            }

            active_before = active_now;
            for (rule, writes) in round_writes {
                write_values(&mut next, &writes, &Cause::Rule(rule), now, &mut history);
            }
            round += 1;
        }

        Ok(StepOutcome { state: next, firings, history })
    }

    /// Runs timestamped events from `start`, advancing the clock as needed.
    pub fn run(&self, start: &SystemState, events: &[TimedEvent]) -> Result<(SystemState, Run), EngineError> {
        let mut state = start.clone();
        let mut run = Run::default();
        for te in events {
            if te.at > state.clock {
                state.clock = te.at;
            }
            let out = self.step(&state, &te.event)?;
            state = out.state;
            run.firings.extend(out.firings);
            run.history.extend(out.history);
        }
        Ok((state, run))
    }

    /// External entries of the scenario's recorded history, as timed events.
    pub fn external_events(&self) -> Vec<TimedEvent> {
        self.scenario
            .history
            .iter()
            .filter(|h| h.cause == Cause::External)
            .map(|h| TimedEvent { at: h.timestamp, event: Event::assign(&h.entity, &h.new_value) })
            .collect()
    }

    /// Re-derives the scenario's history from `initial_state` and the external entries.
    pub fn replay_history(&self) -> Result<Replay, EngineError> {
        let (mut state, run) = self.run(&SystemState::initial(self.scenario), &self.external_events())?;
        state.clock = state.clock.max(self.scenario.clock);
        Ok(Replay { state, firings: run.firings, history: run.history })
    }

    /// Folds [`Engine::step`] over `events`, starting from `initial_state`.
    pub fn simulate(&self, events: &[Event]) -> Result<Trajectory, EngineError> {
        let mut state = SystemState::initial(self.scenario);
        let mut steps = vec![TrajectoryStep::new(0, None, &state, Vec::new(), Vec::new())];
        for (i, ev) in events.iter().enumerate() {
            let out = self.step(&state, ev)?;
            state = out.state;
            steps.push(TrajectoryStep::new(i + 1, Some(ev.clone()), &state, out.firings, out.history));
        }
        Ok(Trajectory { steps })
    }
}

fn write_values(
    state: &mut SystemState,
    writes: &[Assignment],
    cause: &Cause,
    now: i64,
    history: &mut Vec<HistoryEntry>,
) {
    for a in writes {
        let old = state.values.get(&a.entity).cloned().unwrap_or_default();
        if old == a.value {
            continue;
        }
        state.values.insert(a.entity.clone(), a.value.clone());
        state.last_changed.insert(a.entity.clone(), now);
        history.push(HistoryEntry {
            timestamp: now,
            entity: a.entity.clone(),
            old_value: old,
            new_value: a.value.clone(),
            cause: cause.clone(),
        });
    }
}

/// Result of replaying a scenario's recorded history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub state: SystemState,
    pub firings: Vec<FiringRecord>,
    pub history: Vec<HistoryEntry>,
}

/// One record of a trajectory export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Event>,
    pub clock: i64,
    pub state: BTreeMap<String, String>,
    pub firings: Vec<FiringRecord>,
    pub changes: Vec<HistoryEntry>,
}

impl TrajectoryStep {
    fn new(
        step: usize,
        event: Option<Event>,
        state: &SystemState,
        firings: Vec<FiringRecord>,
        changes: Vec<HistoryEntry>,
    ) -> Self {
        TrajectoryStep { step, event, clock: state.clock, state: state.values.clone(), firings, changes }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn final_state(&self) -> &BTreeMap<String, String> {
        &self.steps.last().expect("trajectory is never empty").state
    }

    /// Newline-delimited JSON, one record per step.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("trajectory serializes"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Controllability, Entity};

    fn entity(id: &str, domain: &[&str]) -> Entity {
        Entity {
            id: id.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
            controllability: Controllability::Actionable,
            label: None,
            phrases: Default::default(),
        }
    }

    fn rule(id: &str, priority: u32, pre: Vec<Condition>, act: Vec<Assignment>) -> Rule {
        Rule { id: id.into(), preconditions: pre, actions: act, priority }
    }

    fn toy() -> Scenario {
        Scenario {
            entities: vec![
                entity("trigger", &["no", "yes"]),
                entity("lamp", &["off", "on"]),
                entity("fan", &["off", "on"]),
            ],
            rules: vec![
                rule("hi", 2, vec![Condition::equals("trigger", "yes")], vec![Assignment::new("lamp", "on")]),
                rule("lo", 3, vec![Condition::equals("trigger", "yes")], vec![Assignment::new("lamp", "off")]),
                rule("chain", 5, vec![Condition::equals("lamp", "on")], vec![Assignment::new("fan", "on")]),
            ],
            initial_state: [("trigger", "no"), ("lamp", "off"), ("fan", "off")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            history: vec![],
            clock: 0,
            start: None,
        }
    }

    #[test]
    fn conditions() {
        let s = toy();
        let st = SystemState::initial(&s);
        assert!(eval_condition(&st, &Condition::equals("lamp", "off")).unwrap());
        assert!(!eval_condition(&st, &Condition::equals("lamp", "on")).unwrap());
        assert!(eval_condition(&st, &Condition::not_equals("lamp", "on")).unwrap());
        assert_eq!(
            eval_condition(&st, &Condition::equals("ghost", "on")),
            Err(EngineError::UndeclaredEntity("ghost".into()))
        );
    }

    #[test]
    fn contention_and_cascade() {
        let s = toy();
        let engine = Engine::new(&s, EngineConfig::default());
        let out = engine.step(&SystemState::initial(&s), &Event::assign("trigger", "yes")).unwrap();
        assert_eq!(out.state.value("lamp"), Some("on"));
        assert_eq!(out.state.value("fan"), Some("on"));
        assert_eq!(out.firings.len(), 2);
        assert_eq!(out.firings[0].rule, "hi");
        assert_eq!(out.firings[0].preempted, vec!["lo".to_string()]);
        assert_eq!(out.firings[1].rule, "chain");
        assert_eq!(out.firings[1].round, 1);
        // trigger + lamp + fan
        assert_eq!(out.history.len(), 3);
    }

    #[test]
    fn no_activation_no_firing() {
        let s = toy();
        let engine = Engine::new(&s, EngineConfig::default());
        let out = engine.step(&SystemState::initial(&s), &Event::assign("fan", "on")).unwrap();
        assert!(out.firings.is_empty());
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn already_active_rules_do_not_refire() {
        let s = toy();
        let engine = Engine::new(&s, EngineConfig::default());
        let st = engine.step(&SystemState::initial(&s), &Event::assign("trigger", "yes")).unwrap().state;
        let st = engine.step(&st, &Event::assign("lamp", "off")).unwrap();
        // `hi` is still active but did not transition, so the lamp stays off.
        assert_eq!(st.state.value("lamp"), Some("off"));
        assert!(st.firings.is_empty());
    }

    #[test]
    fn cycle_overflows() {
        let mut s = toy();
        s.rules = vec![
            rule(
                "a",
                1,
                vec![Condition::equals("lamp", "on")],
                vec![Assignment::new("fan", "on"), Assignment::new("lamp", "off")],
            ),
            rule("b", 2, vec![Condition::equals("lamp", "off")], vec![Assignment::new("lamp", "on")]),
        ];
        s.initial_state.insert("lamp".into(), "on".into());
        let engine = Engine::new(&s, EngineConfig { cascade_cap: 32 });
        // a fires (lamp off), b fires (lamp on); each fires once, so this terminates.
        let out = engine.step(&SystemState::initial(&s), &Event::assign("trigger", "yes"));
        assert!(out.is_ok());

        let engine = Engine::new(&s, EngineConfig { cascade_cap: 1 });
        let out = engine.step(&SystemState::initial(&s), &Event::assign("lamp", "off"));
        assert!(matches!(out, Err(EngineError::CascadeOverflow { .. })));
    }

    #[test]
    fn invalid_events() {
        let s = toy();
        let engine = Engine::new(&s, EngineConfig::default());
        let st = SystemState::initial(&s);
        assert!(engine.step(&st, &Event::assign("lamp", "purple")).is_err());
        assert!(engine.step(&st, &Event::Advance { advance_ms: -1 }).is_err());
        let adv = engine.step(&st, &Event::Advance { advance_ms: 500 }).unwrap();
        assert_eq!(adv.state.clock, 500);
    }

    #[test]
    fn empty_simulation_has_one_step() {
        let s = toy();
        let engine = Engine::new(&s, EngineConfig::default());
        let t = engine.simulate(&[]).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.final_state(), &s.initial_state);
        assert_eq!(t.to_ndjson().lines().count(), 1);
    }

    #[test]
    fn event_json_shapes() {
        let e: Event = serde_json::from_str(r#"{"entity": "lamp", "value": "on"}"#).unwrap();
        assert_eq!(e, Event::assign("lamp", "on"));
        let e: Event = serde_json::from_str(r#"{"advance_ms": 60000}"#).unwrap();
        assert_eq!(e, Event::Advance { advance_ms: 60000 });
    }
}
