//! Explanation-case distinction.
//!
//! Given the device's state at `t0`, at `t1` and the state the user expected,
//! a confusing situation is one of:
//!
//! * **E1** an undesired event occurred (`expected == previous != current`)
//! * **E2** an expected event did not occur (`previous == current != expected`)
//! * **E3** a different event occurred (all three distinct)

use serde::{Deserialize, Serialize};

use crate::error::ExplainError;
use crate::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExplanationCase {
    E1,
    E2,
    E3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionContext {
    pub device: String,
    pub previous_state: String,
    pub current_state: String,
    pub expected_state: String,
    pub t0: i64,
    pub t1: i64,
}

impl ConfusionContext {
    /// Builds and classifies the context from a world's factual history.
    pub fn resolve(world: &World<'_>, device: &str, foil: &str) -> Result<Self, ExplainError> {
        let ctx = ConfusionContext::observe(world, device, foil)?;
        classify(&ctx)?;
        Ok(ctx)
    }

    /// Builds the context without requiring the foil to differ from the fact.
    ///
    /// `t0` is the device's most recent change before now, or the world's
    /// start if it never changed.
    pub fn observe(world: &World<'_>, device: &str, foil: &str) -> Result<Self, ExplainError> {
        let scenario = world.scenario();
        let entity = scenario.entity(device).ok_or_else(|| ExplainError::UnknownDevice(device.to_string()))?;
        if !entity.has_value(foil) {
            return Err(ExplainError::UnknownState { device: device.into(), value: foil.into() });
        }
        let current = world.state().value(device).unwrap_or_default().to_string();
        let last = world.factual().replay.history.iter().rev().find(|h| h.entity == device);
        let (previous, t0) = match last {
            Some(h) => (h.old_value.clone(), h.timestamp),
            None => (current.clone(), scenario.start_time()),
        };
        Ok(ConfusionContext {
            device: device.into(),
            previous_state: previous,
            current_state: current,
            expected_state: foil.into(),
            t0,
            t1: world.now(),
        })
    }
}

pub fn classify(ctx: &ConfusionContext) -> Result<ExplanationCase, ExplainError> {
    let (prev, curr, exp) = (&ctx.previous_state, &ctx.current_state, &ctx.expected_state);
    if exp == curr {
        return Err(ExplainError::NoExplanandum { device: ctx.device.clone(), value: curr.clone() });
    }
    Ok(if prev == exp {
        ExplanationCase::E1
    } else if prev == curr {
        ExplanationCase::E2
    } else {
        ExplanationCase::E3
    })
}
