//! Drive the rule engine by hand and watch rules fire.
//!
//! ```text
//! cargo run -p cfexplain --example simulate
//! ```

use cfexplain::{parse_scenario, Engine, Event, SystemState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = parse_scenario(include_str!("../scenarios/lamp.json"))?;
    let engine = Engine::new(&scenario, Default::default());
    let events = [
        Event::assign("sun_set", "true"),
        Event::Advance { advance_ms: 20 * 60 * 1000 },
        Event::assign("time", "after_5pm"),
        Event::assign("room", "empty"),
        Event::assign("room", "occupied"),
    ];
    let mut state = SystemState::initial(&scenario);
    for event in &events {
        let out = engine.step(&state, event)?;
        state = out.state;
        let fired: Vec<&str> = out.firings.iter().map(|f| f.rule.as_str()).collect();
        println!("{:<40} lamp={:<3} fired={fired:?}", serde_json::to_string(event)?, state.values["lamp"]);
    }
    // Edge-triggered: returning to the room does not re-fire rules whose
    // conditions held all along, so the lamp stays off.
    println!("active rules: {:?}", engine.active_rules(&state)?);

    println!("\nas NDJSON:");
    print!("{}", engine.simulate(&events)?.to_ndjson());
    Ok(())
}
