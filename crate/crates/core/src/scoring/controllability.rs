//! Controllability of individual changes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::change::Change;
use crate::engine::{eval_condition, SystemState};
use crate::model::{Controllability, Operator, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum ChangeControl {
    Actionable,
    /// Reachable only through rules; `actionable` tells whether some chain
    /// of rules bottoms out in user-settable entities only.
    MutableNonActionable {
        actionable: bool,
    },
    Immutable,
}

impl ChangeControl {
    pub fn is_actionable(self) -> bool {
        matches!(self, ChangeControl::Actionable | ChangeControl::MutableNonActionable { actionable: true })
    }
}

pub fn classify_controllability(change: &Change, scenario: &Scenario, state: &SystemState) -> ChangeControl {
    let Some(entity) = scenario.entity(&change.entity) else {
        return ChangeControl::Immutable;
    };
    match entity.controllability {
        Controllability::Actionable => ChangeControl::Actionable,
        Controllability::Immutable => ChangeControl::Immutable,
        Controllability::MutableNonActionable => ChangeControl::MutableNonActionable {
            actionable: reachable(scenario, state, &change.entity, change.target_value(), &mut BTreeSet::new()),
        },
    }
}

/// Whether the user can bring `entity` to `value`, directly or by enabling
/// a rule that writes it.
fn reachable(
    scenario: &Scenario,
    state: &SystemState,
    entity: &str,
    value: &str,
    visited: &mut BTreeSet<String>,
) -> bool {
    let Some(e) = scenario.entity(entity) else {
        return false;
    };
    match e.controllability {
        Controllability::Actionable => return true,
        Controllability::Immutable => return false,
        Controllability::MutableNonActionable => {}
    }
    for rule in &scenario.rules {
        if visited.contains(&rule.id) || rule.action_on(entity).is_none_or(|a| a.value != value) {
            continue;
        }
        visited.insert(rule.id.clone());
        let ok = rule.preconditions.iter().all(|p| {
            if eval_condition(state, p).unwrap_or(false) {
                return true;
            }
            let Some(pe) = scenario.entity(&p.entity) else {
                return false;
            };
            pe.domain
                .iter()
                .filter(|v| match p.operator {
                    Operator::Equals => **v == p.value,
                    Operator::NotEquals => **v != p.value,
                })
                .any(|v| reachable(scenario, state, &p.entity, v, visited))
        });
        visited.remove(&rule.id);
        if ok {
            return true;
        }
    }
    false
}
