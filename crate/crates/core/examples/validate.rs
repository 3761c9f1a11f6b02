//! Scenario validation: every problem in a document is reported with a
//! stable code, and syntax errors carry a position.
//!
//! ```text
//! cargo run -p cfexplain --example validate
//! ```

use cfexplain::parse_scenario;

const BROKEN: &str = r#"{
  "entities": [
    {"id": "lamp", "domain": ["off", "on"], "controllability": "actionable"},
    {"id": "lamp", "domain": ["x"], "controllability": "immutable"}
  ],
  "rules": [
    {"id": "R", "priority": 1,
     "preconditions": [{"entity": "ghost", "operator": "equals", "value": "here"}],
     "actions": [{"entity": "lamp", "value": "dim"}]}
  ],
  "initial_state": {"lamp": "off"},
  "clock": 0
}"#;

fn main() {
    match parse_scenario(include_str!("../scenarios/speaker.json")) {
        Ok(s) => println!("speaker.json: {} entities, {} rules", s.entities.len(), s.rules.len()),
        Err(e) => println!("speaker.json: {e}"),
    }
    if let Err(e) = parse_scenario(BROKEN) {
        println!("broken document:");
        for v in e.violations() {
            println!("  {:<24} {}", v.code, v.message);
        }
    }
    if let Err(e) = parse_scenario("{\n  \"entities\": [,]\n}") {
        println!("truncated document: {e}");
    }
}
