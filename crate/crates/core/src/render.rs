//! Natural-language rendering of counterfactual and causal explanations.

use serde::{Deserialize, Serialize};

use crate::candidates::Derivation;
use crate::case::{ConfusionContext, ExplanationCase};
use crate::change::{Change, ChangeKind};
use crate::engine::{eval_condition, FiringRecord, SystemState};
use crate::model::{Condition, Entity, Operator, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationStyle {
    Counterfactual,
    Causal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub kind: ExplanationStyle,
    pub device: String,
    pub foil: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub additive: Vec<Change>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subtractive: Vec<Change>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Derivation>,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn humanize(value: &str) -> String {
    value.replace('_', " ")
}

fn device_np(scenario: &Scenario, device: &str) -> String {
    scenario.entity(device).map(Entity::noun_phrase).unwrap_or_else(|| format!("the {}", humanize(device)))
}

/// Predicate for "<device> is ___".
fn state_phrase(scenario: &Scenario, entity: &str, value: &str) -> String {
    scenario
        .entity(entity)
        .and_then(|e| e.phrases_for(value))
        .and_then(|p| p.state.clone())
        .unwrap_or_else(|| humanize(value))
}

fn entity_np(scenario: &Scenario, entity: &str) -> String {
    device_np(scenario, entity)
}

/// Counterfactual clause for one change.
pub fn change_clause(scenario: &Scenario, change: &Change) -> String {
    let phrases = scenario.entity(&change.entity).and_then(|e| e.phrases_for(&change.value));
    let np = entity_np(scenario, &change.entity);
    let state = state_phrase(scenario, &change.entity, &change.value);
    match change.kind {
        ChangeKind::Additive => {
            phrases.and_then(|p| p.past.clone()).unwrap_or_else(|| format!("{np} had been {state}"))
        }
        ChangeKind::Subtractive => {
            phrases.and_then(|p| p.past_negated.clone()).unwrap_or_else(|| format!("{np} had not been {state}"))
        }
    }
}

/// Present-tense clause for a precondition that holds.
pub fn condition_clause(scenario: &Scenario, cond: &Condition) -> String {
    let phrases = scenario.entity(&cond.entity).and_then(|e| e.phrases_for(&cond.value));
    let np = entity_np(scenario, &cond.entity);
    let state = state_phrase(scenario, &cond.entity, &cond.value);
    match cond.operator {
        Operator::Equals => phrases.and_then(|p| p.present.clone()).unwrap_or_else(|| format!("{np} is {state}")),
        Operator::NotEquals => {
            phrases.and_then(|p| p.present_negated.clone()).unwrap_or_else(|| format!("{np} is not {state}"))
        }
    }
}

fn finish(sentence: String) -> String {
    let trimmed = sentence.trim_end();
    if trimmed.ends_with('.') {
        trimmed.to_string()
    } else {
        format!("{trimmed}.")
    }
}

/// "<Device> would have been <foil> if <additive> and <subtractive>."
pub fn render_counterfactual(
    changes: &[Change],
    ctx: &ConfusionContext,
    case: ExplanationCase,
    scenario: &Scenario,
    trace: Option<Derivation>,
) -> Explanation {
    let order = |c: &Change| scenario.entity_index(&c.entity).unwrap_or(usize::MAX);
    let mut additive: Vec<Change> = changes.iter().filter(|c| c.kind == ChangeKind::Additive).cloned().collect();
    let mut subtractive: Vec<Change> = changes.iter().filter(|c| c.kind == ChangeKind::Subtractive).cloned().collect();
    additive.sort_by_key(order);
    subtractive.sort_by_key(order);

    let clauses: Vec<String> = additive.iter().chain(&subtractive).map(|c| change_clause(scenario, c)).collect();
    let mood = match case {
        ExplanationCase::E2 => "would be",
        ExplanationCase::E1 | ExplanationCase::E3 => "would have been",
    };
    let text = finish(format!(
        "{} {mood} {} if {}",
        capitalize(&device_np(scenario, &ctx.device)),
        state_phrase(scenario, &ctx.device, &ctx.expected_state),
        clauses.join(" and ")
    ));
    Explanation {
        kind: ExplanationStyle::Counterfactual,
        device: ctx.device.clone(),
        foil: ctx.expected_state.clone(),
        additive,
        subtractive,
        text,
        trace,
    }
}

/// "<Device> is <state> because <preconditions of the rule that set it>."
pub fn render_causal(
    ctx: &ConfusionContext,
    firing: Option<&FiringRecord>,
    scenario: &Scenario,
    state: &SystemState,
) -> Explanation {
    let np = capitalize(&device_np(scenario, &ctx.device));
    let current = state_phrase(scenario, &ctx.device, &ctx.current_state);
    let rule = firing.and_then(|f| scenario.rule(&f.rule));
    let text = match rule {
        Some(rule) => {
            let clauses: Vec<String> = rule
                .preconditions
                .iter()
                .filter(|p| eval_condition(state, p).unwrap_or(false))
                .map(|p| condition_clause(scenario, p))
                .collect();
            if clauses.is_empty() {
                finish(format!("{np} is {current} because rule {} was executed", rule.id))
            } else {
                finish(format!("{np} is {current} because {}", clauses.join(" and ")))
            }
        }
        None => finish(format!("{np} remains {current} because no rule was executed")),
    };
    Explanation {
        kind: ExplanationStyle::Causal,
        device: ctx.device.clone(),
        foil: ctx.expected_state.clone(),
        additive: Vec::new(),
        subtractive: Vec::new(),
        text,
        trace: rule.map(|r| Derivation::leaf(format!("fired {}", r.id))),
    }
}
