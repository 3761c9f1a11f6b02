//! Simulator behavior: trajectory export, determinism and firing soundness.

mod support;

use cfexplain::engine::is_active;
use cfexplain::{parse_scenario, Engine, EngineConfig, Event, SystemState};
use serde_json::Value;

fn lamp() -> cfexplain::Scenario {
    parse_scenario(include_str!("../scenarios/lamp.json")).unwrap()
}

fn evening() -> Vec<Event> {
    serde_json::from_str(include_str!("../scenarios/lamp_evening.events.json")).unwrap()
}

fn lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn lamp_evening_matches_golden_trajectory() {
    let s = lamp();
    let t = Engine::new(&s, EngineConfig::default()).simulate(&evening()).unwrap();
    assert_eq!(lines(&t.to_ndjson()), lines(include_str!("fixtures/lamp_evening.ndjson")));
    assert_eq!(t.final_state()["lamp"], "on");
}

#[test]
fn trajectories_are_byte_identical_across_runs() {
    let s = lamp();
    let a = Engine::new(&s, EngineConfig::default()).simulate(&evening()).unwrap().to_ndjson();
    let b = Engine::new(&lamp(), EngineConfig::default()).simulate(&evening()).unwrap().to_ndjson();
    assert_eq!(a, b);
}

#[test]
fn lamp_rules_active_in_the_evening() {
    let s = lamp();
    let engine = Engine::new(&s, EngineConfig::default());
    let replay = engine.replay_history().unwrap();
    let active = engine.active_rules(&replay.state).unwrap();
    assert!(active.contains("DR-1") && active.contains("DR-2"));
    assert!(!is_active(s.rule("AR-1").unwrap(), &replay.state).unwrap());
    assert_eq!(replay.history, s.history);
}

/// Replays random event streams and checks every firing against the state
/// it fired in, and every contention against rule priorities.
#[test]
fn firings_are_sound_on_random_scenarios() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 200 {
        seed += 1;
        let Some(g) = support::generate(seed, support::VALIDITY_SCALE) else { continue };
        let s = &g.scenario;
        let engine = Engine::new(s, EngineConfig::default());
        let mut state = SystemState::initial(s);
        for ev in engine.external_events() {
            let before = state.clone();
            let out = engine.step(&state, &ev.event).unwrap();
            // Rebuild the intermediate states round by round.
            let mut round_state = before.clone();
            if let Event::Assign(a) = &ev.event {
                round_state.values.insert(a.entity.clone(), a.value.clone());
            }
            let rounds = out.firings.iter().map(|f| f.round).max().map_or(0, |r| r + 1);
            for round in 0..rounds {
                let firings: Vec<_> = out.firings.iter().filter(|f| f.round == round).collect();
                for f in &firings {
                    let rule = s.rule(&f.rule).unwrap();
                    assert!(is_active(rule, &round_state).unwrap(), "seed {seed}: {} fired while inactive", f.rule);
                    for p in &f.preempted {
                        let loser = s.rule(p).unwrap();
                        assert!(rule.priority < loser.priority, "seed {seed}: {} beat {}", f.rule, p);
                    }
                }
                for f in &firings {
                    for w in &f.writes {
                        round_state.values.insert(w.entity.clone(), w.value.clone());
                    }
                }
            }
            assert_eq!(round_state.values, out.state.values, "seed {seed}");
            // Independent simulator agrees on the resulting values.
            let (entity, value) = match &ev.event {
                Event::Assign(a) => (a.entity.clone(), a.value.clone()),
                Event::Advance { .. } => unreachable!(),
            };
            let expected = support::settle(&s.rules, &before.values, &[(entity, value)]).unwrap();
            assert_eq!(expected, out.state.values, "seed {seed}");
            state = out.state;
        }
        checked += 1;
    }
}

#[test]
fn already_active_rule_does_not_refire() {
    let s = lamp();
    let engine = Engine::new(&s, EngineConfig::default());
    let replay = engine.replay_history().unwrap();
    // DR-2 stays active; touching an unrelated entity does not fire it again.
    let out = engine.step(&replay.state, &Event::assign("weather", "cloudy")).unwrap();
    assert!(out.firings.is_empty());
    let out = engine.step(&replay.state, &Event::assign("room", "empty")).unwrap();
    let fired: Vec<&str> = out.firings.iter().map(|f| f.rule.as_str()).collect();
    assert_eq!(fired, vec!["AR-2"]);
    assert_eq!(out.state.value("lamp"), Some("off"));
}
