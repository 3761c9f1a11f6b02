//! End-to-end explanation requests: case distinction, candidate collection,
//! filtering, scoring, ranking and rendering.

use serde::{Deserialize, Serialize};

use crate::candidates::{enumerate_candidates, Candidate, Strategy};
use crate::case::{classify, ConfusionContext, ExplanationCase};
use crate::config::Settings;
use crate::error::ExplainError;
use crate::render::{render_causal, render_counterfactual, Explanation};
use crate::scoring::topsis::RankInput;
use crate::scoring::{classify_controllability, filter_candidates, score, topsis_rank, ChangeControl, CriterionVector};
use crate::world::World;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationKind {
    #[default]
    Counterfactual,
    Causal,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRequest {
    pub device: String,
    pub foil: String,
    #[serde(default)]
    pub kind: ExplanationKind,
}

impl ExplanationRequest {
    pub fn new(device: impl Into<String>, foil: impl Into<String>, kind: ExplanationKind) -> Self {
        ExplanationRequest { device: device.into(), foil: foil.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub rank: usize,
    pub closeness: f64,
    pub scores: CriterionVector,
    pub controllability: Vec<ChangeControl>,
    #[serde(flatten)]
    pub candidate: Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub context: ConfusionContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<ExplanationCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbing: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub appropriate: Vec<String>,
    pub explanations: Vec<Explanation>,
    /// Surviving candidates, best first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranked: Vec<RankedCandidate>,
    /// Valid candidates before controllability filtering.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<Candidate>,
    pub config: Settings,
}

impl ExplanationReport {
    pub fn winner(&self) -> Option<&RankedCandidate> {
        self.ranked.first()
    }

    pub fn counterfactual(&self) -> Option<&Explanation> {
        self.explanations.iter().find(|e| e.kind == crate::render::ExplanationStyle::Counterfactual)
    }

    pub fn causal(&self) -> Option<&Explanation> {
        self.explanations.iter().find(|e| e.kind == crate::render::ExplanationStyle::Causal)
    }
}

/// Ranked counterfactual candidates for a classified context.
pub struct Ranking {
    pub strategy: Strategy,
    pub disturbing: Vec<String>,
    pub appropriate: Vec<String>,
    pub candidates: Vec<Candidate>,
    pub ranked: Vec<RankedCandidate>,
}

pub fn rank_candidates(
    world: &World<'_>,
    ctx: &ConfusionContext,
    settings: &Settings,
) -> Result<Ranking, ExplainError> {
    let ranking = &settings.ranking;
    ranking.validate()?;
    let scenario = world.scenario();
    let state = world.state();
    let generation = enumerate_candidates(world, ctx, ranking.sparsity_cap)?;
    let survivors = filter_candidates(generation.candidates.clone(), ctx, scenario, state, ranking)?;

    let mut scored = Vec::with_capacity(survivors.len());
    for cand in survivors {
        let scores = score(&cand, world, ranking)?;
        let controllability: Vec<ChangeControl> =
            cand.changes.iter().map(|c| classify_controllability(c, scenario, state)).collect();
        scored.push((cand, scores, controllability));
    }
    let inputs: Vec<RankInput> = scored
        .iter()
        .map(|(c, s, ctl)| RankInput {
            row: s.as_row(),
            non_actionable: ctl.iter().filter(|x| !x.is_actionable()).count(),
            sparsity: c.sparsity(),
            key: c.key(),
        })
        .collect();
    let order =
        topsis_rank(&inputs, &ranking.weights.as_array()).map_err(|e| ExplainError::InvalidConfig(e.to_string()))?;
    let ranked = order
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (cand, scores, controllability) = scored[r.index].clone();
            RankedCandidate { rank: i + 1, closeness: r.closeness, scores, controllability, candidate: cand }
        })
        .collect();
    Ok(Ranking {
        strategy: generation.strategy,
        disturbing: generation.disturbing,
        appropriate: generation.appropriate,
        candidates: generation.candidates,
        ranked,
    })
}

/// Answers an explanation request against `world`.
pub fn explain(
    world: &World<'_>,
    req: &ExplanationRequest,
    settings: &Settings,
) -> Result<ExplanationReport, ExplainError> {
    let scenario = world.scenario();
    let ctx = ConfusionContext::observe(world, &req.device, &req.foil)?;
    let wants_counterfactual = req.kind != ExplanationKind::Causal;
    let case = match classify(&ctx) {
        Ok(case) => Some(case),
        Err(e) if wants_counterfactual => return Err(e),
        Err(_) => None,
    };

    let mut report = ExplanationReport {
        context: ctx.clone(),
        case,
        strategy: None,
        disturbing: Vec::new(),
        appropriate: Vec::new(),
        explanations: Vec::new(),
        ranked: Vec::new(),
        candidates: Vec::new(),
        config: settings.clone(),
    };

    if wants_counterfactual {
        let ranking = rank_candidates(world, &ctx, settings)?;
        let winner = ranking.ranked.first().expect("ranking is never empty");
        report.explanations.push(render_counterfactual(
            &winner.candidate.changes,
            &ctx,
            case.unwrap_or(ExplanationCase::E1),
            scenario,
            Some(winner.candidate.derivation.clone()),
        ));
        report.strategy = Some(ranking.strategy);
        report.disturbing = ranking.disturbing;
        report.appropriate = ranking.appropriate;
        report.candidates = ranking.candidates;
        report.ranked = ranking.ranked;
    }
    if req.kind != ExplanationKind::Counterfactual {
        let firing =
            world.factual().replay.firings.iter().rev().find(|f| f.writes.iter().any(|w| w.entity == req.device));
        report.explanations.push(render_causal(&ctx, firing, scenario, world.state()));
    }
    Ok(report)
}
