//! Occupancy statistics over an entity's value timeline.

use std::collections::BTreeMap;

use crate::model::{HistoryEntry, Scenario};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Segment {
    value: String,
    from: i64,
    /// `None` while the value still holds.
    to: Option<i64>,
}

/// When a condition last held, relative to now.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LastHeld {
    Now,
    /// The condition stopped holding at this timestamp.
    EndedAt(i64),
    Never,
}

/// Piecewise-constant value timelines built from a state history.
#[derive(Debug, Clone)]
pub struct HistoryStats {
    start: i64,
    now: i64,
    segments: BTreeMap<String, Vec<Segment>>,
}

impl HistoryStats {
    pub fn new(initial: &BTreeMap<String, String>, history: &[HistoryEntry], start: i64, now: i64) -> Self {
        let mut segments: BTreeMap<String, Vec<Segment>> = initial
            .iter()
            .map(|(e, v)| (e.clone(), vec![Segment { value: v.clone(), from: start, to: None }]))
            .collect();
        for h in history {
            let timeline = segments.entry(h.entity.clone()).or_default();
            if let Some(last) = timeline.last_mut() {
                last.to = Some(h.timestamp);
            }
            timeline.push(Segment { value: h.new_value.clone(), from: h.timestamp, to: None });
        }
        HistoryStats { start, now: now.max(start), segments }
    }

    pub fn from_scenario(s: &Scenario, history: &[HistoryEntry], now: i64) -> Self {
        HistoryStats::new(&s.initial_state, history, s.start_time(), now)
    }

    pub fn span(&self) -> i64 {
        self.now - self.start
    }

    pub fn now(&self) -> i64 {
        self.now
    }

    /// Share of the observed span during which `entity` had `value`.
    /// `None` when the span is empty.
    pub fn frequency(&self, entity: &str, value: &str) -> Option<f64> {
        let span = self.span();
        if span <= 0 {
            return None;
        }
        let occupied: i64 = self
            .segments
            .get(entity)
            .map(|segs| {
                segs.iter()
                    .filter(|s| s.value == value)
                    .map(|s| s.to.unwrap_or(self.now).min(self.now) - s.from.max(self.start))
                    .map(|d| d.max(0))
                    .sum()
            })
            .unwrap_or(0);
        Some(occupied as f64 / span as f64)
    }

    /// `1 - frequency`, or 0.5 when there is no history to judge by.
    pub fn abnormality(&self, entity: &str, value: &str) -> f64 {
        self.frequency(entity, value).map(|f| 1.0 - f).unwrap_or(0.5)
    }

    /// Most recent time at which `holds(value)` was true for `entity`.
    pub fn last_held(&self, entity: &str, holds: impl Fn(&str) -> bool) -> LastHeld {
        let Some(segs) = self.segments.get(entity) else {
            return LastHeld::Never;
        };
        for s in segs.iter().rev() {
            if holds(&s.value) {
                return match s.to {
                    None => LastHeld::Now,
                    Some(t) => LastHeld::EndedAt(t),
                };
            }
        }
        LastHeld::Never
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Cause;

    fn entry(ts: i64, old: &str, new: &str) -> HistoryEntry {
        HistoryEntry {
            timestamp: ts,
            entity: "room".into(),
            old_value: old.into(),
            new_value: new.into(),
            cause: Cause::External,
        }
    }

    #[test]
    fn occupancy_frequencies() {
        let initial = BTreeMap::from([("room".to_string(), "occupied".to_string())]);
        let stats =
            HistoryStats::new(&initial, &[entry(25, "occupied", "empty"), entry(75, "empty", "occupied")], 0, 100);
        assert_eq!(stats.frequency("room", "empty"), Some(0.5));
        assert_eq!(stats.frequency("room", "occupied"), Some(0.5));
        assert_eq!(stats.last_held("room", |v| v == "empty"), LastHeld::EndedAt(75));
        assert_eq!(stats.last_held("room", |v| v == "occupied"), LastHeld::Now);
        assert_eq!(stats.last_held("room", |v| v == "flooded"), LastHeld::Never);
    }

    #[test]
    fn empty_span_is_uninformative() {
        let initial = BTreeMap::from([("room".to_string(), "occupied".to_string())]);
        let stats = HistoryStats::new(&initial, &[], 10, 10);
        assert_eq!(stats.frequency("room", "occupied"), None);
        assert_eq!(stats.abnormality("room", "empty"), 0.5);
    }
}
