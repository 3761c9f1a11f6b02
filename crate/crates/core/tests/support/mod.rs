//! Random scenarios and a brute-force counterfactual oracle.
//!
//! The simulator here is written independently of the library engine: it
//! re-implements edge-triggered firing, per-entity contention and the
//! hold/trigger replay directly over plain maps.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cfexplain::{
    parse_scenario, Assignment, Cause, Change, ChangeKind, Condition, Controllability, Engine, EngineConfig, Entity,
    Event, HistoryEntry, Rule, Scenario, SystemState, Timing,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Values = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub max_entities: usize,
    pub max_states: usize,
    pub max_rules: usize,
    pub max_events: usize,
}

pub const VALIDITY_SCALE: GenParams = GenParams { max_entities: 6, max_states: 3, max_rules: 8, max_events: 5 };
pub const EXHAUSTIVE_SCALE: GenParams = GenParams { max_entities: 4, max_states: 3, max_rules: 6, max_events: 4 };

#[derive(Debug, Clone)]
pub struct Generated {
    pub seed: u64,
    pub scenario: Scenario,
    pub device: String,
    pub foil: String,
}

pub const DEVICE: &str = "e0";

/// A random scenario with a confusing situation on entity `e0`, or `None`
/// when the draw is unusable (cyclic rules, no rule that writes the foil).
pub fn generate(seed: u64, p: GenParams) -> Option<Generated> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=p.max_entities);
    let mut entities = Vec::new();
    for i in 0..n {
        let k = rng.gen_range(2..=p.max_states);
        let controllability = if i == 0 {
            Controllability::MutableNonActionable
        } else {
            match rng.gen_range(0..10) {
                0..=3 => Controllability::Actionable,
                4..=6 => Controllability::Immutable,
                _ => Controllability::MutableNonActionable,
            }
        };
        entities.push(Entity {
            id: format!("e{i}"),
            domain: (0..k).map(|j| format!("s{j}")).collect(),
            controllability,
            label: None,
            phrases: BTreeMap::new(),
        });
    }
    let others: Vec<usize> = (1..n).collect();

    let rule_count = rng.gen_range(1..=p.max_rules);
    let mut priorities: Vec<u32> = (1..=rule_count as u32).collect();
    priorities.shuffle(&mut rng);
    let mut rules = Vec::new();
    for (r, priority) in priorities.into_iter().enumerate() {
        let pre_count = rng.gen_range(1..=2.min(others.len()));
        let mut pre_entities = others.clone();
        pre_entities.shuffle(&mut rng);
        let preconditions = pre_entities[..pre_count]
            .iter()
            .map(|&e| {
                let value = entities[e].domain.choose(&mut rng).unwrap().clone();
                if rng.gen_bool(0.75) {
                    Condition::equals(&entities[e].id, value)
                } else {
                    Condition::not_equals(&entities[e].id, value)
                }
            })
            .collect();
        let mut targets = vec![if rng.gen_bool(0.6) { 0 } else { *others.choose(&mut rng).unwrap() }];
        if rng.gen_bool(0.15) {
            let extra = rng.gen_range(0..n);
            if !targets.contains(&extra) {
                targets.push(extra);
            }
        }
        let actions = targets
            .iter()
            .map(|&e| Assignment::new(&entities[e].id, entities[e].domain.choose(&mut rng).unwrap().clone()))
            .collect();
        rules.push(Rule { id: format!("r{r}"), preconditions, actions, priority });
    }

    let initial_state: Values =
        entities.iter().map(|e| (e.id.clone(), e.domain.choose(&mut rng).unwrap().clone())).collect();
    let start = 1_700_000_000_000i64;
    let mut scenario =
        Scenario { entities, rules, initial_state, history: Vec::new(), clock: start, start: Some(start) };

    let engine = Engine::new(&scenario, EngineConfig::default());
    let mut state = SystemState::initial(&scenario);
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut t = start;
    for _ in 0..rng.gen_range(0..=p.max_events) {
        t += rng.gen_range(1..=30) * 60_000;
        state.clock = t;
        let e = &scenario.entities[*others.choose(&mut rng).unwrap()];
        let current = state.value(&e.id).unwrap().to_string();
        let choices: Vec<&String> = e.domain.iter().filter(|v| **v != current).collect();
        let value = (*choices.choose(&mut rng).unwrap()).clone();
        let out = engine.step(&state, &Event::assign(&e.id, value)).ok()?;
        state = out.state;
        history.extend(out.history);
    }
    let clock = t + rng.gen_range(1..=30) * 60_000;
    let current = state.value(DEVICE).unwrap().to_string();
    let foils: Vec<&String> = scenario.entities[0].domain.iter().filter(|v| **v != current).collect();
    let foil = (*foils.choose(&mut rng).unwrap()).clone();
    if !scenario.rules.iter().any(|r| r.action_on(DEVICE).is_some_and(|a| a.value == foil)) {
        return None;
    }
    scenario.history = history;
    scenario.clock = clock;

    // Round-trip through the document format so the validator sees it.
    let scenario = parse_scenario(&scenario.to_document()).ok()?;
    Some(Generated { seed, scenario, device: DEVICE.into(), foil })
}

// ---------------------------------------------------------------------------
// Independent simulator
// ---------------------------------------------------------------------------

fn holds(values: &Values, c: &Condition) -> bool {
    let v = &values[&c.entity];
    match c.operator {
        cfexplain::model::Operator::Equals => *v == c.value,
        cfexplain::model::Operator::NotEquals => *v != c.value,
    }
}

fn active_set(rules: &[Rule], values: &Values) -> BTreeSet<String> {
    rules.iter().filter(|r| r.preconditions.iter().all(|c| holds(values, c))).map(|r| r.id.clone()).collect()
}

/// Applies `writes` at once and cascades. Returns `None` on a runaway cascade.
pub fn settle(rules: &[Rule], values: &Values, writes: &[(String, String)]) -> Option<Values> {
    let mut before = active_set(rules, values);
    let mut now = values.clone();
    for (e, v) in writes {
        now.insert(e.clone(), v.clone());
    }
    let mut fired = BTreeSet::new();
    for _ in 0..=64 {
        let after = active_set(rules, &now);
        let fresh: Vec<&Rule> = rules
            .iter()
            .filter(|r| after.contains(&r.id) && !before.contains(&r.id) && !fired.contains(&r.id))
            .collect();
        if fresh.is_empty() {
            return Some(now);
        }
        let mut best: BTreeMap<&str, (u32, &str, &str)> = BTreeMap::new();
        for r in &fresh {
            for a in &r.actions {
                let slot = best.entry(&a.entity).or_insert((r.priority, &r.id, &a.value));
                if r.priority < slot.0 {
                    *slot = (r.priority, &r.id, &a.value);
                }
            }
        }
        for r in &fresh {
            if r.actions.iter().any(|a| best[a.entity.as_str()].1 == r.id) {
                fired.insert(r.id.clone());
            }
        }
        let next: Vec<(String, String)> = best.iter().map(|(e, (_, _, v))| (e.to_string(), v.to_string())).collect();
        for (e, v) in next {
            now.insert(e, v);
        }
        before = after;
    }
    None
}

fn admits(c: &Change, value: &str) -> bool {
    match c.kind {
        ChangeKind::Additive => value == c.value,
        ChangeKind::Subtractive => value != c.value,
    }
}

fn target(c: &Change) -> String {
    match c.kind {
        ChangeKind::Additive => c.value.clone(),
        ChangeKind::Subtractive => c.replacement.clone().expect("subtractive change has a replacement"),
    }
}

/// Final values of the counterfactual world under `changes`.
pub fn counterfactual(s: &Scenario, changes: &[Change]) -> Option<Values> {
    let holds_: Vec<&Change> = changes.iter().filter(|c| c.timing == Timing::Hold).collect();
    let mut values = s.initial_state.clone();
    let setup: Vec<(String, String)> =
        holds_.iter().filter(|c| !admits(c, &values[&c.entity])).map(|c| (c.entity.clone(), target(c))).collect();
    if !setup.is_empty() {
        values = settle(&s.rules, &values, &setup)?;
    }
    for h in s.history.iter().filter(|h| h.cause == Cause::External) {
        if holds_.iter().any(|c| c.entity == h.entity && !admits(c, &h.new_value)) {
            continue;
        }
        values = settle(&s.rules, &values, &[(h.entity.clone(), h.new_value.clone())])?;
    }
    let triggers: Vec<(String, String)> = changes
        .iter()
        .filter(|c| c.timing == Timing::Trigger && !admits(c, &values[&c.entity]))
        .map(|c| (c.entity.clone(), target(c)))
        .collect();
    if !triggers.is_empty() {
        values = settle(&s.rules, &values, &triggers)?;
    }
    Some(values)
}

pub fn factual(s: &Scenario) -> Values {
    counterfactual(s, &[]).expect("generated scenarios replay")
}

pub fn achieves(s: &Scenario, changes: &[Change], device: &str, foil: &str) -> bool {
    counterfactual(s, changes).is_some_and(|v| v[device] == foil)
}

// ---------------------------------------------------------------------------
// Controllability and exhaustive search
// ---------------------------------------------------------------------------

/// Whether the user can bring `entity` to `value` from `values`, directly
/// or through a rule whose unmet preconditions they can in turn satisfy.
pub fn user_reachable(s: &Scenario, values: &Values, entity: &str, value: &str, seen: &mut Vec<String>) -> bool {
    let e = s.entity(entity).unwrap();
    match e.controllability {
        Controllability::Actionable => true,
        Controllability::Immutable => false,
        Controllability::MutableNonActionable => s.rules.iter().any(|r| {
            if seen.contains(&r.id) || !r.actions.iter().any(|a| a.entity == entity && a.value == value) {
                return false;
            }
            seen.push(r.id.clone());
            let ok = r.preconditions.iter().all(|c| {
                holds(values, c)
                    || s.entity(&c.entity).unwrap().domain.iter().any(|v| {
                        let sat = match c.operator {
                            cfexplain::model::Operator::Equals => *v == c.value,
                            cfexplain::model::Operator::NotEquals => *v != c.value,
                        };
                        sat && user_reachable(s, values, &c.entity, v, seen)
                    })
            });
            seen.pop();
            ok
        }),
    }
}

pub fn change_actionable(s: &Scenario, values: &Values, c: &Change) -> bool {
    user_reachable(s, values, &c.entity, &target(c), &mut Vec::new())
}

/// Every single-entity change the oracle considers.
fn options_for(s: &Scenario, current: &Values, entity: &Entity) -> Vec<Change> {
    let mut out = Vec::new();
    for v in &entity.domain {
        if *v != current[&entity.id] {
            out.push(Change::additive(&entity.id, v, Timing::Trigger));
        }
        out.push(Change::additive(&entity.id, v, Timing::Hold));
        for r in entity.domain.iter().filter(|r| *r != v) {
            out.push(Change::subtractive(&entity.id, v, r, Timing::Hold));
        }
    }
    let _ = s;
    out
}

#[derive(Debug, Clone, Default)]
pub struct OracleResult {
    /// Smallest size among all valid change sets.
    pub min_any: Option<usize>,
    /// Smallest size among valid sets that change no immutable entity.
    pub min_mutable: Option<usize>,
    /// Smallest size among fully actionable valid change sets.
    pub min_actionable: Option<usize>,
    pub valid_sets: usize,
    /// Every valid set of size `min_any`.
    pub minimal: Vec<Vec<Change>>,
}

impl OracleResult {
    /// The size a minimal explanation must have: actionable sets are
    /// preferred, then sets free of immutable changes, then anything.
    pub fn expected(&self) -> Option<usize> {
        self.min_actionable.or(self.min_mutable).or(self.min_any)
    }
}

/// Enumerates every change set of at most `cap` changes over non-device
/// entities and records the smallest valid ones.
pub fn brute_force(s: &Scenario, device: &str, foil: &str, cap: usize) -> OracleResult {
    let current = factual(s);
    let per_entity: Vec<Vec<Change>> =
        s.entities.iter().filter(|e| e.id != device).map(|e| options_for(s, &current, e)).collect();
    let mut result = OracleResult::default();
    let mut chosen: Vec<Change> = Vec::new();
    search(s, device, foil, cap, &per_entity, 0, &current, &mut chosen, &mut result);
    result
}

#[allow(clippy::too_many_arguments)]
fn search(
    s: &Scenario,
    device: &str,
    foil: &str,
    cap: usize,
    per_entity: &[Vec<Change>],
    from: usize,
    current: &Values,
    chosen: &mut Vec<Change>,
    result: &mut OracleResult,
) {
    for i in from..per_entity.len() {
        for c in &per_entity[i] {
            chosen.push(c.clone());
            if achieves(s, chosen, device, foil) {
                let n = chosen.len();
                result.valid_sets += 1;
                if result.min_any.is_none_or(|m| n < m) {
                    result.minimal.clear();
                }
                if result.min_any.is_none_or(|m| n <= m) {
                    result.minimal.push(chosen.clone());
                }
                result.min_any = Some(result.min_any.map_or(n, |m| m.min(n)));
                if chosen.iter().all(|c| s.entity(&c.entity).unwrap().controllability != Controllability::Immutable) {
                    result.min_mutable = Some(result.min_mutable.map_or(n, |m| m.min(n)));
                }
                if chosen.iter().all(|c| change_actionable(s, current, c)) {
                    result.min_actionable = Some(result.min_actionable.map_or(n, |m| m.min(n)));
                }
            }
            if chosen.len() < cap {
                search(s, device, foil, cap, per_entity, i + 1, current, chosen, result);
            }
            chosen.pop();
        }
    }
}

/// What a change does to the replayed world: the write it makes at the
/// start (holds) or at the end (triggers), and which recorded external
/// events it suppresses. Changes with equal effects are interchangeable.
pub fn effect(s: &Scenario, c: &Change) -> (String, Timing, Option<String>, Vec<bool>) {
    let events: Vec<&HistoryEntry> =
        s.history.iter().filter(|h| h.cause == Cause::External && h.entity == c.entity).collect();
    match c.timing {
        Timing::Trigger => (c.entity.clone(), c.timing, Some(target(c)), Vec::new()),
        Timing::Hold => {
            let base = &s.initial_state[&c.entity];
            let write = (!admits(c, base)).then(|| target(c));
            (c.entity.clone(), c.timing, write, events.iter().map(|h| !admits(c, &h.new_value)).collect())
        }
    }
}

pub fn effects(s: &Scenario, changes: &[Change]) -> BTreeSet<(String, Timing, Option<String>, Vec<bool>)> {
    changes.iter().map(|c| effect(s, c)).collect()
}
