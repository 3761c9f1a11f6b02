//! Factual and counterfactual worlds.
//!
//! A [`World`] is a starting state plus the external events that happened
//! since. Replaying the events through the engine gives the factual outcome.
//! A counterfactual outcome replays the same events under a set of
//! [`Change`]s: `Hold` changes are established at the start and suppress
//! external events that would break them, `Trigger` changes are applied as
//! one final simultaneous event on top of the replayed state.

use crate::change::{Change, Timing};
use crate::engine::{Engine, EngineConfig, EngineError, Event, Run, SystemState, TimedEvent};
use crate::model::{Assignment, Cause, Scenario};
use crate::stats::HistoryStats;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub state: SystemState,
    /// Everything up to and including the replayed history.
    pub replay: Run,
    /// Cascade caused by the final trigger event.
    pub trigger: Run,
}

impl Outcome {
    pub fn value(&self, entity: &str) -> Option<&str> {
        self.state.value(entity)
    }
}

pub struct World<'a> {
    scenario: &'a Scenario,
    engine: Engine<'a>,
    base: SystemState,
    timeline: Vec<TimedEvent>,
    now: i64,
    factual: Outcome,
    stats: HistoryStats,
}

impl<'a> World<'a> {
    /// The world recorded in the scenario itself.
    pub fn from_scenario(scenario: &'a Scenario, config: EngineConfig) -> Result<Self, EngineError> {
        World::with_events(scenario, config, Vec::new(), scenario.clock)
    }

    /// The scenario's recorded world followed by further events.
    pub fn with_events(
        scenario: &'a Scenario,
        config: EngineConfig,
        extra: Vec<TimedEvent>,
        now: i64,
    ) -> Result<Self, EngineError> {
        let engine = Engine::new(scenario, config);
        let mut timeline = engine.external_events();
        timeline.extend(extra);
        let base = SystemState::initial(scenario);
        let now = now.max(scenario.clock);
        let mut world = World {
            scenario,
            engine,
            base,
            timeline,
            now,
            factual: Outcome { state: SystemState::initial(scenario), replay: Run::default(), trigger: Run::default() },
            stats: HistoryStats::from_scenario(scenario, &[], now),
        };
        world.factual = world.outcome(&[])?;
        world.stats = HistoryStats::from_scenario(scenario, &world.factual.replay.history, now);
        Ok(world)
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn engine(&self) -> &Engine<'a> {
        &self.engine
    }

    pub fn now(&self) -> i64 {
        self.now
    }

    pub fn factual(&self) -> &Outcome {
        &self.factual
    }

    pub fn state(&self) -> &SystemState {
        &self.factual.state
    }

    pub fn stats(&self) -> &HistoryStats {
        &self.stats
    }

    pub fn timeline(&self) -> &[TimedEvent] {
        &self.timeline
    }

    /// Replays the world under `changes`.
    pub fn outcome(&self, changes: &[Change]) -> Result<Outcome, EngineError> {
        let holds: Vec<&Change> = changes.iter().filter(|c| c.timing == Timing::Hold).collect();
        let mut state = self.base.clone();
        let mut replay = Run::default();

        let setup: Vec<Assignment> =
            holds.iter().filter_map(|c| c.write_from(state.value(&c.entity).unwrap_or_default())).collect();
        if !setup.is_empty() {
            let out = self.engine.apply(&state, &setup, Cause::External)?;
            state = out.state;
            replay.firings.extend(out.firings);
            replay.history.extend(out.history);
        }

        for te in &self.timeline {
            if te.at > state.clock {
                state.clock = te.at;
            }
            if let Event::Assign(a) = &te.event {
                if holds.iter().any(|h| h.entity == a.entity && !h.admits(&a.value)) {
                    continue;
                }
            }
            let out = self.engine.step(&state, &te.event)?;
            state = out.state;
            replay.firings.extend(out.firings);
            replay.history.extend(out.history);
        }
        state.clock = state.clock.max(self.now);

        let mut trigger = Run::default();
        let writes: Vec<Assignment> = changes
            .iter()
            .filter(|c| c.timing == Timing::Trigger)
            .filter_map(|c| c.write_from(state.value(&c.entity).unwrap_or_default()))
            .collect();
        if !writes.is_empty() {
            let out = self.engine.apply(&state, &writes, Cause::External)?;
            state = out.state;
            trigger.firings = out.firings;
            trigger.history = out.history;
        }
        Ok(Outcome { state, replay, trigger })
    }

    /// Whether `device` ends up in `foil` under `changes`.
    pub fn achieves(&self, changes: &[Change], device: &str, foil: &str) -> Result<bool, EngineError> {
        Ok(self.outcome(changes)?.value(device) == Some(foil))
    }
}
