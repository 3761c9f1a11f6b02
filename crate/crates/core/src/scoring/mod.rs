//! Controllability filtering, criterion scoring and ranking.

pub mod controllability;
pub mod topsis;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::candidates::Candidate;
use crate::case::ConfusionContext;
use crate::change::{Change, ChangeKind};
use crate::config::{RankingConfig, MAX_SPARSITY};
use crate::engine::{EngineError, FiringRecord, SystemState};
use crate::error::ExplainError;
use crate::model::Scenario;
use crate::stats::LastHeld;
use crate::world::{Outcome, World};

pub use controllability::{classify_controllability, ChangeControl};
pub use topsis::{closeness, topsis_rank, Ranked, TopsisError};

/// Scores of one candidate. Sparsity, temporality and proximity are costs,
/// abnormality is a benefit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionVector {
    pub sparsity: usize,
    pub temporality: i64,
    pub proximity: usize,
    pub abnormality: f64,
}

impl CriterionVector {
    pub fn as_row(&self) -> [f64; 4] {
        [self.sparsity as f64, self.temporality as f64, self.proximity as f64, self.abnormality]
    }
}

/// Number of changes in `cand` that the user cannot bring about.
pub fn non_actionable_count(cand: &Candidate, scenario: &Scenario, state: &SystemState) -> usize {
    cand.changes.iter().filter(|c| !classify_controllability(c, scenario, state).is_actionable()).count()
}

/// Applies the cap and the controllability preferences.
///
/// A change that no chain of rules lets the user reach counts as immutable,
/// so "immutable-free" and "fully actionable" coincide.
pub fn filter_candidates(
    candidates: Vec<Candidate>,
    ctx: &ConfusionContext,
    scenario: &Scenario,
    state: &SystemState,
    config: &RankingConfig,
) -> Result<Vec<Candidate>, ExplainError> {
    let cap = config.sparsity_cap.min(MAX_SPARSITY);
    let within: Vec<Candidate> =
        candidates.into_iter().filter(|c| !c.changes.is_empty() && c.changes.len() <= cap).collect();
    if within.is_empty() {
        return Err(ExplainError::NoCandidates { device: ctx.device.clone(), foil: ctx.expected_state.clone(), cap });
    }
    let touches_immutable = |c: &Candidate| {
        c.changes.iter().any(|ch| classify_controllability(ch, scenario, state) == ChangeControl::Immutable)
    };
    let within = if within.iter().all(touches_immutable) {
        within
    } else {
        within.into_iter().filter(|c| !touches_immutable(c)).collect()
    };
    let actionable: Vec<Candidate> =
        within.iter().filter(|c| non_actionable_count(c, scenario, state) == 0).cloned().collect();
    let mut kept = if actionable.is_empty() { within } else { actionable };
    if config.sparsity_primary {
        let min = kept.iter().map(Candidate::sparsity).min().unwrap_or(0);
        kept.retain(|c| c.sparsity() == min);
    }
    Ok(kept)
}

/// Time since the condition a change establishes last held.
pub fn temporality(change: &Change, world: &World<'_>, sentinel_ms: i64) -> i64 {
    let cond = change.condition();
    match world.stats().last_held(&change.entity, |v| cond.satisfied_by(v)) {
        LastHeld::Now => 0,
        LastHeld::EndedAt(t) => (world.now() - t).max(0),
        LastHeld::Never => sentinel_ms,
    }
}

/// Benefit of one change: removing a rare state or adding a common one.
pub fn change_benefit(change: &Change, world: &World<'_>) -> f64 {
    let stats = world.stats();
    match change.kind {
        ChangeKind::Subtractive => stats.abnormality(&change.entity, &change.value),
        ChangeKind::Additive => stats.frequency(&change.entity, &change.value).unwrap_or(0.5),
    }
}

fn multiset<'f>(firings: impl Iterator<Item = &'f FiringRecord>) -> (BTreeMap<String, i64>, BTreeMap<String, i64>) {
    let mut fired = BTreeMap::new();
    let mut preempted = BTreeMap::new();
    for f in firings {
        *fired.entry(f.rule.clone()).or_insert(0) += 1;
        for p in &f.preempted {
            *preempted.entry(p.clone()).or_insert(0) += 1;
        }
    }
    (fired, preempted)
}

fn symmetric_difference(a: &BTreeMap<String, i64>, b: &BTreeMap<String, i64>) -> usize {
    let mut total = 0;
    for k in a.keys().chain(b.keys().filter(|k| !a.contains_key(*k))) {
        total += (a.get(k).copied().unwrap_or(0) - b.get(k).copied().unwrap_or(0)).unsigned_abs() as usize;
    }
    total
}

/// Firings and preemptions that differ from the factual run, plus entities
/// (other than the ones the candidate sets) that end up with another value.
pub fn proximity(changes: &[Change], factual: &Outcome, counterfactual: &Outcome) -> usize {
    let (f_fired, f_pre) = multiset(factual.replay.firings.iter().chain(&factual.trigger.firings));
    let (c_fired, c_pre) = multiset(counterfactual.replay.firings.iter().chain(&counterfactual.trigger.firings));
    let entities = counterfactual
        .state
        .values
        .iter()
        .filter(|(e, v)| !changes.iter().any(|c| &c.entity == *e) && factual.state.value(e) != Some(v.as_str()))
        .count();
    symmetric_difference(&f_fired, &c_fired) + symmetric_difference(&f_pre, &c_pre) + entities
}

pub fn score(cand: &Candidate, world: &World<'_>, config: &RankingConfig) -> Result<CriterionVector, EngineError> {
    let outcome = world.outcome(&cand.changes)?;
    let n = cand.changes.len();
    let abnormality =
        if n == 0 { 0.5 } else { cand.changes.iter().map(|c| change_benefit(c, world)).sum::<f64>() / n as f64 };
    Ok(CriterionVector {
        sparsity: n,
        temporality: cand
            .changes
            .iter()
            .map(|c| temporality(c, world, config.temporality_sentinel_ms))
            .max()
            .unwrap_or(0),
        proximity: proximity(&cand.changes, world.factual(), &outcome),
        abnormality: abnormality.clamp(0.0, 1.0),
    })
}
