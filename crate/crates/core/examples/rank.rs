//! Scoring and ranking. Two single changes would switch the heater on:
//! closing the window (done recently, but rarely) or turning the thermostat
//! down (done often, but hours ago). The weights decide which one is offered.
//!
//! ```text
//! cargo run -p cfexplain --example rank
//! ```

use cfexplain::{parse_scenario, rank_candidates, ConfusionContext, Settings, Weights, World};

const HOUR: i64 = 3_600_000;

fn scenario() -> String {
    let t = |h: f64| 1_700_000_000_000 + (h * HOUR as f64) as i64;
    format!(
        r#"{{
  "entities": [
    {{"id": "heater", "domain": ["off", "on"], "controllability": "mutable-non-actionable"}},
    {{"id": "window", "domain": ["open", "closed"], "controllability": "actionable"}},
    {{"id": "thermostat", "domain": ["high", "low"], "controllability": "actionable"}}
  ],
  "rules": [
    {{"id": "heat-when-closed", "priority": 1,
      "preconditions": [{{"entity": "window", "operator": "equals", "value": "closed"}}],
      "actions": [{{"entity": "heater", "value": "on"}}]}},
    {{"id": "heat-when-low", "priority": 2,
      "preconditions": [{{"entity": "thermostat", "operator": "equals", "value": "low"}}],
      "actions": [{{"entity": "heater", "value": "on"}}]}}
  ],
  "initial_state": {{"heater": "off", "window": "open", "thermostat": "high"}},
  "start": {start},
  "history": [
    {{"timestamp": {a}, "entity": "thermostat", "old_value": "high", "new_value": "low", "cause": "external"}},
    {{"timestamp": {a}, "entity": "heater", "old_value": "off", "new_value": "on", "cause": "heat-when-low"}},
    {{"timestamp": {b}, "entity": "thermostat", "old_value": "low", "new_value": "high", "cause": "external"}},
    {{"timestamp": {b}, "entity": "heater", "old_value": "on", "new_value": "off", "cause": "external"}},
    {{"timestamp": {c}, "entity": "window", "old_value": "open", "new_value": "closed", "cause": "external"}},
    {{"timestamp": {c}, "entity": "heater", "old_value": "off", "new_value": "on", "cause": "heat-when-closed"}},
    {{"timestamp": {d}, "entity": "window", "old_value": "closed", "new_value": "open", "cause": "external"}},
    {{"timestamp": {d}, "entity": "heater", "old_value": "on", "new_value": "off", "cause": "external"}}
  ],
  "clock": {now}
}}"#,
        start = t(0.0),
        a = t(1.0),
        b = t(7.0),
        c = t(9.0),
        d = t(9.5),
        now = t(10.0),
    )
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = parse_scenario(&scenario())?;
    let world = World::from_scenario(&scenario, Default::default())?;
    let ctx = ConfusionContext::resolve(&world, "heater", "on")?;

    let mut settings = Settings::default();
    for weights in [[0.25; 4], [0.1, 0.7, 0.1, 0.1], [0.1, 0.1, 0.1, 0.7]] {
        settings.ranking.weights = Weights::from_array(weights);
        let ranking = rank_candidates(&world, &ctx, &settings)?;
        println!("weights (S, T, P, A) = {weights:?}");
        println!("  {:<4} {:>7} {:>2} {:>6} {:>2} {:>5}  changes", "rank", "C", "S", "T (h)", "P", "A");
        for r in &ranking.ranked {
            let s = &r.scores;
            println!(
                "  {:<4} {:>7.4} {:>2} {:>6.1} {:>2} {:>5.2}  {}",
                r.rank,
                r.closeness,
                s.sparsity,
                s.temporality as f64 / HOUR as f64,
                s.proximity,
                s.abnormality,
                r.candidate.key()
            );
        }
    }
    Ok(())
}
