//! Candidate collection: disturbing and appropriate rules, foil-achievement
//! strategy, and the change sets that activate, inactivate or override rules.
//!
//! Activation changes are `Trigger` changes (they make an appropriate rule
//! fire now). Inactivation changes are `Hold` changes (they keep a
//! disturbing rule from ever firing in the replayed history). Every emitted
//! candidate is checked against the counterfactual world before it is
//! returned.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::case::ConfusionContext;
use crate::change::{Change, ChangeSet, Timing};
use crate::engine::{is_active, SystemState};
use crate::error::ExplainError;
use crate::model::{Condition, Controllability, Operator, Rule, Scenario};
use crate::scoring::controllability::{classify_controllability, ChangeControl};
use crate::world::World;

/// Foil-achievement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// F1: activate an appropriate rule.
    Activate,
    /// F2: inactivate the disturbing rules that preempt an appropriate rule.
    Inactivate,
    /// F3: inactivate disturbing rules and activate an appropriate rule.
    Mixed,
}

impl Strategy {
    pub fn case_label(self) -> &'static str {
        match self {
            Strategy::Activate => "F1",
            Strategy::Inactivate => "F2",
            Strategy::Mixed => "F3",
        }
    }
}

/// Tree explaining how a change set was derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn leaf(label: impl Into<String>) -> Self {
        Derivation { label: label.into(), children: Vec::new() }
    }

    pub fn node(label: impl Into<String>, children: Vec<Derivation>) -> Self {
        Derivation { label: label.into(), children }
    }
}

/// A change set together with its derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSet {
    pub changes: ChangeSet,
    pub trace: Derivation,
}

impl OptionSet {
    fn merge(&self, other: &OptionSet, label: &str) -> Option<OptionSet> {
        Some(OptionSet {
            changes: self.changes.merge(&other.changes)?,
            trace: Derivation::node(label, vec![self.trace.clone(), other.trace.clone()]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub changes: Vec<Change>,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_appropriate_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inactivated_rules: Vec<String>,
    pub derivation: Derivation,
}

impl Candidate {
    pub fn key(&self) -> String {
        self.changes.iter().map(Change::key).collect::<Vec<_>>().join(";")
    }

    pub fn sparsity(&self) -> usize {
        self.changes.len()
    }
}

// ---------------------------------------------------------------------------
// Rule roles
// ---------------------------------------------------------------------------

/// Active rules that write the device to something other than the foil.
pub fn find_disturbing<'r>(state: &SystemState, rules: &'r [Rule], ctx: &ConfusionContext) -> Vec<&'r Rule> {
    rules
        .iter()
        .filter(|r| {
            r.action_on(&ctx.device).is_some_and(|a| a.value != ctx.expected_state)
                && is_active(r, state).unwrap_or(false)
        })
        .collect()
}

/// Rules, active or not, that write the device to the foil.
pub fn find_appropriate<'r>(rules: &'r [Rule], ctx: &ConfusionContext) -> Vec<&'r Rule> {
    rules.iter().filter(|r| r.action_on(&ctx.device).is_some_and(|a| a.value == ctx.expected_state)).collect()
}

pub fn select_strategy(
    disturbing: &[&Rule],
    appropriate: &[&Rule],
    state: &SystemState,
    scenario: &Scenario,
    ctx: &ConfusionContext,
) -> Result<Strategy, ExplainError> {
    if appropriate.is_empty() {
        let direct = scenario.entity(&ctx.device).is_some_and(|e| e.controllability == Controllability::Actionable);
        if !direct {
            return Err(ExplainError::UnachievableFoil {
                device: ctx.device.clone(),
                foil: ctx.expected_state.clone(),
            });
        }
    }
    if disturbing.is_empty() {
        return Ok(Strategy::Activate);
    }
    let appropriate_active = appropriate.iter().any(|r| is_active(r, state).unwrap_or(false));
    Ok(if appropriate_active { Strategy::Inactivate } else { Strategy::Mixed })
}

// ---------------------------------------------------------------------------
// Change-set search
// ---------------------------------------------------------------------------

/// Recursive search for activation and inactivation change sets over one
/// factual snapshot.
pub struct CandidateSearch<'w, 'a> {
    world: &'w World<'a>,
    cap: usize,
    /// Rules that fired in the factual history, with everything they wrote.
    fired: BTreeMap<&'a str, BTreeSet<(String, String)>>,
}

impl<'w, 'a> CandidateSearch<'w, 'a> {
    pub fn new(world: &'w World<'a>, cap: usize) -> Self {
        let mut fired: BTreeMap<&'a str, BTreeSet<(String, String)>> = BTreeMap::new();
        for f in &world.factual().replay.firings {
            if let Some(rule) = world.scenario().rule(&f.rule) {
                let slot = fired.entry(rule.id.as_str()).or_default();
                slot.extend(f.writes.iter().map(|w| (w.entity.clone(), w.value.clone())));
            }
        }
        CandidateSearch { world, cap, fired }
    }

    fn scenario(&self) -> &'a Scenario {
        self.world.scenario()
    }

    fn state(&self) -> &SystemState {
        self.world.state()
    }

    fn active(&self, rule: &Rule) -> bool {
        is_active(rule, self.state()).unwrap_or(false)
    }

    /// Replacement value when an entity must leave `excluded`: the
    /// historically most frequent other state, else the domain successor.
    pub fn alternative(&self, entity: &str, excluded: &str) -> String {
        let Some(e) = self.scenario().entity(entity) else {
            return excluded.to_string();
        };
        let stats = self.world.stats();
        let mut best: Option<(&str, f64)> = None;
        for v in e.domain.iter().filter(|v| *v != excluded) {
            if let Some(f) = stats.frequency(entity, v) {
                if f > 0.0 && best.is_none_or(|(_, bf)| f > bf) {
                    best = Some((v, f));
                }
            }
        }
        match best {
            Some((v, _)) => v.to_string(),
            None => e.successor(excluded).unwrap_or(excluded).to_string(),
        }
    }

    fn direct_satisfy(&self, p: &Condition, timing: Timing) -> Change {
        match p.operator {
            Operator::Equals => Change::additive(&p.entity, &p.value, timing),
            Operator::NotEquals => {
                Change::subtractive(&p.entity, &p.value, self.alternative(&p.entity, &p.value), timing)
            }
        }
    }

    fn direct_falsify(&self, p: &Condition) -> Change {
        match p.operator {
            Operator::Equals => {
                Change::subtractive(&p.entity, &p.value, self.alternative(&p.entity, &p.value), Timing::Hold)
            }
            Operator::NotEquals => Change::additive(&p.entity, &p.value, Timing::Hold),
        }
    }

    fn non_actionable(&self, set: &ChangeSet) -> usize {
        set.iter().filter(|c| !classify_controllability(c, self.scenario(), self.state()).is_actionable()).count()
    }

    /// Keeps the cheapest options, plus the cheapest fully actionable ones.
    fn frontier(&self, options: Vec<OptionSet>) -> Vec<OptionSet> {
        let scored: Vec<(usize, usize, OptionSet)> =
            options.into_iter().map(|o| (o.changes.len(), self.non_actionable(&o.changes), o)).collect();
        let Some(min_len) = scored.iter().map(|s| s.0).min() else {
            return Vec::new();
        };
        let best_control = scored.iter().filter(|s| s.0 == min_len).map(|s| s.1).min().unwrap_or(0);
        let min_actionable_len = scored.iter().filter(|s| s.1 == 0).map(|s| s.0).min();
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (len, na, o) in scored {
            let cheapest = len == min_len && na == best_control;
            let actionable = na == 0 && Some(len) == min_actionable_len;
            if (cheapest || actionable) && seen.insert(o.changes.key()) {
                out.push(o);
            }
        }
        out.sort_by_key(|o| o.changes.key());
        out
    }

    fn cross(&self, lists: Vec<Vec<OptionSet>>, label: &str) -> Vec<OptionSet> {
        let mut acc = vec![OptionSet { changes: ChangeSet::new(), trace: Derivation::node(label, vec![]) }];
        for list in lists {
            let mut next = Vec::new();
            for a in &acc {
                for b in &list {
                    if let Some(changes) = a.changes.merge(&b.changes) {
                        if changes.len() <= self.cap {
                            let mut trace = a.trace.clone();
                            trace.children.push(b.trace.clone());
                            next.push(OptionSet { changes, trace });
                        }
                    }
                }
            }
            acc = dedup(next);
        }
        acc
    }

    /// Change sets that make `rule` active. An already active rule yields
    /// one empty set; a rule that cannot be activated within the cap yields none.
    pub fn activation_changes(&self, rule: &Rule, visited: &BTreeSet<String>, timing: Timing) -> Vec<OptionSet> {
        let mut visited = visited.clone();
        visited.insert(rule.id.clone());
        let label = format!("activate {}", rule.id);
        let false_pre: Vec<&Condition> = rule
            .preconditions
            .iter()
            .filter(|p| !crate::engine::eval_condition(self.state(), p).unwrap_or(false))
            .collect();
        if false_pre.is_empty() {
            return vec![OptionSet {
                changes: ChangeSet::new(),
                trace: Derivation::leaf(format!("{} is active", rule.id)),
            }];
        }

        let mut per_pre = Vec::new();
        for p in false_pre {
            let mut options = vec![OptionSet {
                changes: ChangeSet::single(self.direct_satisfy(p, timing)),
                trace: Derivation::leaf(format!("{p}: set directly")),
            }];
            for helper in &self.scenario().rules {
                if visited.contains(&helper.id) || self.active(helper) {
                    continue;
                }
                if !helper.action_on(&p.entity).is_some_and(|a| p.satisfied_by(&a.value)) {
                    continue;
                }
                for mut o in self.activation_changes(helper, &visited, timing) {
                    if o.changes.is_empty() {
                        continue;
                    }
                    o.changes.mark_via(&helper.id);
                    o.trace = Derivation::node(format!("{p}: via {}", helper.id), vec![o.trace]);
                    options.push(o);
                }
            }
            let options: Vec<OptionSet> = options.into_iter().filter(|o| o.changes.len() <= self.cap).collect();
            per_pre.push(self.frontier(options));
        }
        self.cross(per_pre, &label)
    }

    /// Rules that would put `p` back after it was falsified.
    fn reinforcers(&self, p: &Condition, skip: &BTreeSet<String>) -> Vec<&'a Rule> {
        self.scenario()
            .rules
            .iter()
            .filter(|r| !skip.contains(&r.id))
            .filter(|r| {
                let writes_now = r.action_on(&p.entity).is_some_and(|a| p.satisfied_by(&a.value)) && self.active(r);
                let wrote_before = self
                    .fired
                    .get(r.id.as_str())
                    .is_some_and(|w| w.iter().any(|(e, v)| *e == p.entity && p.satisfied_by(v)));
                writes_now || wrote_before
            })
            .collect()
    }

    /// Change sets that keep `rule` from firing: one falsified precondition,
    /// optionally closed over the rules that would re-establish it.
    pub fn inactivation_changes(&self, rule: &Rule, visited: &BTreeSet<String>) -> Vec<OptionSet> {
        let mut visited = visited.clone();
        visited.insert(rule.id.clone());
        let mut out = Vec::new();
        for p in &rule.preconditions {
            let mut falsifiers = vec![OptionSet {
                changes: ChangeSet::single(self.direct_falsify(p)),
                trace: Derivation::leaf(format!("{p}: falsify directly")),
            }];
            for helper in &self.scenario().rules {
                if visited.contains(&helper.id) {
                    continue;
                }
                if !helper.action_on(&p.entity).is_some_and(|a| !p.satisfied_by(&a.value)) {
                    continue;
                }
                let mut inner = visited.clone();
                inner.insert(helper.id.clone());
                for mut o in self.activation_changes(helper, &inner, Timing::Hold) {
                    if o.changes.is_empty() || o.changes.len() > self.cap {
                        continue;
                    }
                    o.changes.mark_via(&helper.id);
                    o.trace = Derivation::node(format!("{p}: falsify via {}", helper.id), vec![o.trace]);
                    falsifiers.push(o);
                }
            }
            let reinforcers = self.reinforcers(p, &visited);
            for f in falsifiers {
                if f.changes.len() > self.cap {
                    continue;
                }
                out.push(f.clone());
                if reinforcers.is_empty() {
                    continue;
                }
                let mut closed = vec![f];
                for r1 in &reinforcers {
                    let mut inner = visited.clone();
                    inner.insert(r1.id.clone());
                    let subs: Vec<OptionSet> = self
                        .inactivation_changes(r1, &inner)
                        .into_iter()
                        .filter(|o| !o.changes.touches(&p.entity))
                        .collect();
                    let mut next = Vec::new();
                    for c in &closed {
                        for s in &subs {
                            if let Some(m) = c.merge(s, &format!("keep {} from restoring {p}", r1.id)) {
                                if m.changes.len() <= self.cap {
                                    next.push(m);
                                }
                            }
                        }
                    }
                    closed = next;
                }
                out.extend(closed);
            }
        }
        dedup(out)
            .into_iter()
            .map(|mut o| {
                o.trace = Derivation::node(format!("inactivate {}", rule.id), vec![o.trace]);
                o
            })
            .collect()
    }
}

fn dedup(options: Vec<OptionSet>) -> Vec<OptionSet> {
    let mut seen = BTreeSet::new();
    options.into_iter().filter(|o| seen.insert(o.changes.key())).collect()
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Everything candidate collection found for one confusing situation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub disturbing: Vec<String>,
    pub appropriate: Vec<String>,
    pub strategy: Strategy,
    pub candidates: Vec<Candidate>,
    /// Distinct change sets simulated.
    pub considered: usize,
}

struct Draft {
    changes: ChangeSet,
    appropriate: Option<String>,
    inactivated: Vec<String>,
    trace: Vec<Derivation>,
}

/// Collects every valid, irredundant change set of at most `cap` changes.
pub fn enumerate_candidates(world: &World<'_>, ctx: &ConfusionContext, cap: usize) -> Result<Generation, ExplainError> {
    let scenario = world.scenario();
    let state = world.state();
    let disturbing = find_disturbing(state, &scenario.rules, ctx);
    let appropriate = find_appropriate(&scenario.rules, ctx);
    let strategy = select_strategy(&disturbing, &appropriate, state, scenario, ctx)?;
    let search = CandidateSearch::new(world, cap);

    // Rules that kept, or put, the device away from the foil: the active
    // disturbing ones and any that did so earlier in the replayed history.
    let mut blockers: Vec<&Rule> = disturbing.clone();
    for f in &world.factual().replay.firings {
        if f.writes.iter().any(|w| w.entity == ctx.device && w.value != ctx.expected_state) {
            if let Some(r) = scenario.rule(&f.rule) {
                if !blockers.iter().any(|b| b.id == r.id) {
                    blockers.push(r);
                }
            }
        }
    }
    blockers.sort_by_key(|r| r.priority);

    let mut activations: Vec<(Option<String>, OptionSet)> = Vec::new();
    for ar in &appropriate {
        for o in search.activation_changes(ar, &BTreeSet::new(), Timing::Trigger) {
            if !o.changes.is_empty() {
                activations.push((Some(ar.id.clone()), o));
            }
        }
    }
    if appropriate.is_empty() {
        let direct = Change::additive(&ctx.device, &ctx.expected_state, Timing::Trigger);
        activations.push((
            None,
            OptionSet {
                changes: ChangeSet::single(direct),
                trace: Derivation::leaf(format!("{}={}: set directly", ctx.device, ctx.expected_state)),
            },
        ));
    }

    let inactivation_options: Vec<Vec<OptionSet>> =
        blockers.iter().map(|b| search.inactivation_changes(b, &BTreeSet::new())).collect();
    let mut inactivations: Vec<(Vec<String>, OptionSet)> = Vec::new();
    combine_inactivations(&blockers, &inactivation_options, 0, cap, &mut Vec::new(), None, &mut inactivations);

    let mut drafts: Vec<Draft> = Vec::new();
    for (ar, a) in &activations {
        drafts.push(Draft {
            changes: a.changes.clone(),
            appropriate: ar.clone(),
            inactivated: Vec::new(),
            trace: vec![a.trace.clone()],
        });
        for (rules, i) in &inactivations {
            if let Some(changes) = a.changes.merge(&i.changes) {
                if changes.len() <= cap {
                    drafts.push(Draft {
                        changes,
                        appropriate: ar.clone(),
                        inactivated: rules.clone(),
                        trace: vec![a.trace.clone(), i.trace.clone()],
                    });
                }
            }
        }
    }
    for (rules, i) in &inactivations {
        drafts.push(Draft {
            changes: i.changes.clone(),
            appropriate: None,
            inactivated: rules.clone(),
            trace: vec![i.trace.clone()],
        });
    }

    let mut valid: BTreeMap<String, Draft> = BTreeMap::new();
    let mut tried: BTreeSet<String> = BTreeSet::new();
    let mut repairs: Vec<Draft> = Vec::new();
    // Explaining the device by changing the device is only allowed when no
    // rule could do it.
    let touches_device = |d: &Draft| !appropriate.is_empty() && d.changes.touches(&ctx.device);
    let check = |d: &Draft| world.achieves(&d.changes.clone().into_vec(), &ctx.device, &ctx.expected_state);

    drafts.sort_by(|a, b| a.changes.len().cmp(&b.changes.len()).then_with(|| a.changes.key().cmp(&b.changes.key())));
    for d in drafts {
        let key = d.changes.key();
        if d.changes.is_empty() || touches_device(&d) || !tried.insert(key.clone()) {
            continue;
        }
        if check(&d)? {
            valid.insert(key, d);
        } else if d.inactivated.is_empty() && d.changes.len() < cap {
            // Overriding: the activating event also woke up rules that put
            // the device back. Keep those from firing as well.
            let outcome = world.outcome(&d.changes.clone().into_vec())?;
            for f in &outcome.trigger.firings {
                let contrary = f.writes.iter().any(|w| w.entity == ctx.device && w.value != ctx.expected_state);
                let Some(rule) = scenario.rule(&f.rule).filter(|_| contrary) else {
                    continue;
                };
                for o in search.inactivation_changes(rule, &BTreeSet::new()) {
                    if d.changes.iter().any(|c| o.changes.touches(&c.entity)) {
                        continue;
                    }
                    if let Some(changes) = d.changes.merge(&o.changes).filter(|c| c.len() <= cap) {
                        repairs.push(Draft {
                            changes,
                            appropriate: d.appropriate.clone(),
                            inactivated: vec![rule.id.clone()],
                            trace: vec![d.trace[0].clone(), o.trace.clone()],
                        });
                    }
                }
            }
        }
    }
    for d in repairs {
        let key = d.changes.key();
        if !touches_device(&d) && tried.insert(key.clone()) && check(&d)? {
            valid.insert(key, d);
        }
    }
    complete(world, ctx, cap, &blockers, &appropriate, &mut valid, &mut tried)?;
    let considered = tried.len();

    // Drop sets that contain a smaller valid set.
    let keys: Vec<(String, BTreeSet<String>)> =
        valid.iter().map(|(k, d)| (k.clone(), d.changes.iter().map(Change::key).collect())).collect();
    let redundant: BTreeSet<String> = keys
        .iter()
        .filter(|(_, set)| keys.iter().any(|(_, other)| other.len() < set.len() && other.is_subset(set)))
        .map(|(k, _)| k.clone())
        .collect();

    let mut candidates: Vec<Candidate> = valid
        .into_iter()
        .filter(|(k, _)| !redundant.contains(k))
        .map(|(_, d)| {
            let strategy = match (d.appropriate.is_some() || appropriate.is_empty(), d.inactivated.is_empty()) {
                (true, true) => Strategy::Activate,
                (false, _) => Strategy::Inactivate,
                (true, false) => Strategy::Mixed,
            };
            Candidate {
                changes: d.changes.into_vec(),
                strategy,
                target_appropriate_rule: d.appropriate,
                inactivated_rules: d.inactivated,
                derivation: Derivation::node("candidate", d.trace),
            }
        })
        .collect();
    candidates.sort_by_key(|c| c.key());

    if candidates.is_empty() {
        return Err(ExplainError::NoCandidates { device: ctx.device.clone(), foil: ctx.expected_state.clone(), cap });
    }
    Ok(Generation {
        disturbing: disturbing.iter().map(|r| r.id.clone()).collect(),
        appropriate: appropriate.iter().map(|r| r.id.clone()).collect(),
        strategy,
        candidates,
        considered,
    })
}

/// Every way of inactivating a non-empty subset of `blockers` within `cap`.
fn combine_inactivations(
    blockers: &[&Rule],
    options: &[Vec<OptionSet>],
    from: usize,
    cap: usize,
    chosen: &mut Vec<String>,
    acc: Option<&OptionSet>,
    out: &mut Vec<(Vec<String>, OptionSet)>,
) {
    for i in from..blockers.len() {
        for o in &options[i] {
            let merged = match acc {
                None => Some(o.clone()),
                Some(a) => a.merge(o, "inactivate together"),
            };
            let Some(merged) = merged.filter(|m| m.changes.len() <= cap) else {
                continue;
            };
            chosen.push(blockers[i].id.clone());
            out.push((chosen.clone(), merged.clone()));
            if merged.changes.len() < cap {
                combine_inactivations(blockers, options, i + 1, cap, chosen, Some(&merged), out);
            }
            chosen.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Completion sweep
// ---------------------------------------------------------------------------

/// Entities whose values can influence the device: preconditions of rules
/// that write an influencing entity, closed over rules contending with them.
pub fn influence_cone(scenario: &Scenario, device: &str) -> BTreeSet<String> {
    let mut cone: BTreeSet<String> = BTreeSet::from([device.to_string()]);
    let mut relevant: BTreeSet<&str> = BTreeSet::new();
    loop {
        let before = (cone.len(), relevant.len());
        let written: BTreeSet<&str> = scenario
            .rules
            .iter()
            .filter(|r| relevant.contains(r.id.as_str()))
            .flat_map(|r| r.actions.iter().map(|a| a.entity.as_str()))
            .collect();
        for r in &scenario.rules {
            let writes_cone = r.actions.iter().any(|a| cone.contains(&a.entity));
            let contends = r.actions.iter().any(|a| written.contains(a.entity.as_str()));
            if writes_cone || contends {
                relevant.insert(&r.id);
            }
        }
        for r in scenario.rules.iter().filter(|r| relevant.contains(r.id.as_str())) {
            cone.extend(r.preconditions.iter().map(|p| p.entity.clone()));
        }
        if (cone.len(), relevant.len()) == before {
            return cone;
        }
    }
}

/// Single-entity changes with a distinct effect on the counterfactual
/// world, over the entities that can influence the device.
fn sweep_options(world: &World<'_>, ctx: &ConfusionContext, allow_device: bool) -> Vec<Change> {
    let scenario = world.scenario();
    let cone = influence_cone(scenario, &ctx.device);
    let mut out = Vec::new();
    for e in &scenario.entities {
        if !cone.contains(&e.id) || (e.id == ctx.device && !allow_device) {
            continue;
        }
        let base = scenario.initial_state.get(&e.id).map(String::as_str).unwrap_or_default();
        let current = world.state().value(&e.id).unwrap_or_default();
        let events: Vec<&str> = world
            .timeline()
            .iter()
            .filter_map(|te| match &te.event {
                crate::engine::Event::Assign(a) if a.entity == e.id => Some(a.value.as_str()),
                _ => None,
            })
            .collect();
        for v in e.domain.iter().filter(|v| v.as_str() != current) {
            out.push(Change::additive(&e.id, v, Timing::Trigger));
        }
        let mut holds = Vec::new();
        for v in &e.domain {
            holds.push(Change::additive(&e.id, v, Timing::Hold));
        }
        for v in &e.domain {
            for r in e.domain.iter().filter(|r| *r != v) {
                holds.push(Change::subtractive(&e.id, v, r, Timing::Hold));
            }
        }
        let mut seen = BTreeSet::new();
        for h in holds {
            let write = h.write_from(base).map(|a| a.value);
            let suppressed: Vec<bool> = events.iter().map(|x| !h.admits(x)).collect();
            if write.is_none() && !suppressed.contains(&true) {
                continue;
            }
            if seen.insert((write, suppressed)) {
                out.push(h);
            }
        }
    }
    out
}

/// Index sets of size `k` over `options` touching distinct entities.
fn combinations(options: &[Change], k: usize, from: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if chosen.len() == k {
        out.push(chosen.clone());
        return;
    }
    for i in from..options.len() {
        if chosen.iter().any(|&j| options[j].entity == options[i].entity) {
            continue;
        }
        chosen.push(i);
        combinations(options, k, i + 1, chosen, out);
        chosen.pop();
    }
}

/// Which rules a change set switches on or off, judged by its outcome.
fn infer_roles(
    world: &World<'_>,
    outcome: &crate::world::Outcome,
    ctx: &ConfusionContext,
    blockers: &[&Rule],
) -> (Option<String>, Vec<String>) {
    let count = |o: &crate::world::Outcome, id: &str| {
        o.replay.firings.iter().chain(&o.trigger.firings).filter(|f| f.rule == id).count()
    };
    let factual = world.factual();
    let inactivated = blockers
        .iter()
        .filter(|b| {
            count(outcome, &b.id) < count(factual, &b.id)
                || (is_active(b, &factual.state).unwrap_or(false) && !is_active(b, &outcome.state).unwrap_or(false))
        })
        .map(|b| b.id.clone())
        .collect();
    let target = outcome
        .replay
        .firings
        .iter()
        .chain(&outcome.trigger.firings)
        .rev()
        .find(|f| f.writes.iter().any(|w| w.entity == ctx.device && w.value == ctx.expected_state))
        .map(|f| f.rule.clone());
    (target, inactivated)
}

/// Fills in valid change sets the rule-guided search missed: every set no
/// larger than the smallest valid one, then fully actionable sets smaller
/// than the smallest fully actionable one.
fn complete(
    world: &World<'_>,
    ctx: &ConfusionContext,
    cap: usize,
    blockers: &[&Rule],
    appropriate: &[&Rule],
    valid: &mut BTreeMap<String, Draft>,
    tried: &mut BTreeSet<String>,
) -> Result<(), ExplainError> {
    let scenario = world.scenario();
    let state = world.state();
    let actionable = |c: &Change| classify_controllability(c, scenario, state).is_actionable();
    let mutable = |c: &Change| classify_controllability(c, scenario, state) != ChangeControl::Immutable;
    let options = sweep_options(world, ctx, appropriate.is_empty());
    let smallest = |valid: &BTreeMap<String, Draft>, keep: &dyn Fn(&Change) -> bool| {
        valid.values().filter(|d| d.changes.iter().all(keep)).map(|d| d.changes.len()).min()
    };

    let mut level =
        |k: usize, keep: &dyn Fn(&Change) -> bool, valid: &mut BTreeMap<String, Draft>| -> Result<(), ExplainError> {
            let pool: Vec<Change> = options.iter().filter(|c| keep(c)).cloned().collect();
            let mut sets = Vec::new();
            combinations(&pool, k, 0, &mut Vec::new(), &mut sets);
            for idx in sets {
                let changes: ChangeSet = idx.iter().map(|&i| pool[i].clone()).collect();
                let key = changes.key();
                if !tried.insert(key.clone()) {
                    continue;
                }
                let list = changes.clone().into_vec();
                let outcome = world.outcome(&list)?;
                if outcome.value(&ctx.device) != Some(ctx.expected_state.as_str()) {
                    continue;
                }
                let (target, inactivated) = infer_roles(world, &outcome, ctx, blockers);
                valid.insert(
                    key,
                    Draft {
                        changes,
                        appropriate: target,
                        inactivated,
                        trace: vec![Derivation::leaf("found by exhaustive completion")],
                    },
                );
            }
            Ok(())
        };

    // Every set up to the smallest valid size, then sets of mutable changes
    // up to the smallest mutable size, then actionable ones likewise.
    let any = |_: &Change| true;
    let tiers: [&dyn Fn(&Change) -> bool; 3] = [&any, &mutable, &actionable];
    for keep in tiers {
        for k in 1..=cap {
            if smallest(valid, keep).is_some_and(|m| k > m) {
                break;
            }
            level(k, keep, valid)?;
        }
    }
    Ok(())
}
