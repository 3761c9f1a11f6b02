//! Scenario documents: schema conformance, validation codes and round trips.

use cfexplain::{parse_scenario, validate_scenario, ScenarioError};
use serde_json::{json, Value};

const BUNDLED: [&str; 3] = [
    include_str!("../scenarios/lamp.json"),
    include_str!("../scenarios/door.json"),
    include_str!("../scenarios/speaker.json"),
];

fn schema() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(include_str!("../../../docs/scenario.schema.json")).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn bundled_scenarios_conform_to_schema_and_validate() {
    let schema = schema();
    for doc in BUNDLED {
        let value: Value = serde_json::from_str(doc).unwrap();
        assert!(schema.is_valid(&value));
        let s = parse_scenario(doc).unwrap();
        assert!(validate_scenario(&s).is_empty());
    }
}

#[test]
fn serialized_scenarios_reparse_equal_and_conform() {
    let schema = schema();
    for doc in BUNDLED {
        let s = parse_scenario(doc).unwrap();
        let text = s.to_document();
        assert!(schema.is_valid(&serde_json::from_str(&text).unwrap()));
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }
}

#[test]
fn schema_rejects_malformed_documents() {
    let schema = schema();
    let mut doc: Value = serde_json::from_str(BUNDLED[0]).unwrap();
    doc["rules"][0]["priority"] = json!(0);
    assert!(!schema.is_valid(&doc));
    let mut doc: Value = serde_json::from_str(BUNDLED[0]).unwrap();
    doc["colour"] = json!("blue");
    assert!(!schema.is_valid(&doc));
    assert!(parse_scenario(&doc.to_string()).is_err());
}

#[test]
fn lamp_has_four_rules_with_expected_priorities() {
    let s = parse_scenario(BUNDLED[0]).unwrap();
    let p: Vec<(&str, u32)> = s.rules.iter().map(|r| (r.id.as_str(), r.priority)).collect();
    assert_eq!(p, vec![("DR-1", 4), ("DR-2", 2), ("AR-1", 1), ("AR-2", 3)]);
}

fn codes(doc: &Value) -> Vec<String> {
    match parse_scenario(&doc.to_string()) {
        Err(ScenarioError::Invalid(v)) => v.into_iter().map(|v| v.code).collect(),
        other => panic!("expected violations, got {other:?}"),
    }
}

fn base() -> Value {
    json!({
        "entities": [
            {"id": "lamp", "domain": ["off", "on"], "controllability": "mutable-non-actionable"},
            {"id": "room", "domain": ["occupied", "empty"], "controllability": "actionable"}
        ],
        "rules": [
            {"id": "a", "priority": 1, "preconditions": [{"entity": "room", "operator": "equals", "value": "empty"}], "actions": [{"entity": "lamp", "value": "off"}]},
            {"id": "b", "priority": 2, "preconditions": [{"entity": "room", "operator": "equals", "value": "occupied"}], "actions": [{"entity": "lamp", "value": "on"}]}
        ],
        "initial_state": {"lamp": "off", "room": "occupied"},
        "clock": 0
    })
}

#[test]
fn violation_codes() {
    assert!(parse_scenario(&base().to_string()).is_ok());

    let mut d = base();
    d["rules"][1]["priority"] = json!(1);
    assert_eq!(codes(&d), vec!["duplicate-priority"]);

    let mut d = base();
    d["rules"][0]["actions"][0]["entity"] = json!("fan");
    assert_eq!(codes(&d), vec!["undeclared-entity"]);

    let mut d = base();
    d["history"] = json!([{"timestamp": 0, "entity": "room", "old_value": "occupied", "new_value": "occupied", "cause": "external"}]);
    assert_eq!(codes(&d), vec!["no-op-history"]);

    let mut d = base();
    d["rules"][0]["preconditions"][0]["value"] = json!("flooded");
    assert_eq!(codes(&d), vec!["out-of-domain"]);

    let mut d = base();
    d["entities"][1]["id"] = json!("lamp");
    assert!(codes(&d).contains(&"duplicate-id".to_string()));

    let mut d = base();
    d["rules"][0]["preconditions"] = json!([]);
    assert_eq!(codes(&d), vec!["empty-preconditions"]);
}

#[test]
fn empty_rule_list_is_legal() {
    let d = json!({
        "entities": [{"id": "lamp", "domain": ["off", "on"], "controllability": "actionable"}],
        "rules": [],
        "initial_state": {"lamp": "off"},
        "clock": 0
    });
    assert!(parse_scenario(&d.to_string()).unwrap().rules.is_empty());
}

#[test]
fn syntax_errors_carry_a_position() {
    match parse_scenario("{\n  \"entities\": [\n}") {
        Err(ScenarioError::Syntax { line, column, .. }) => {
            assert_eq!(line, 3);
            assert!(column >= 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn recorded_history_must_match_the_rules() {
    let mut d = base();
    // The room emptying fires `a`, which leaves the lamp off; claiming it
    // turned on contradicts the rules.
    d["history"] = json!([
        {"timestamp": 10, "entity": "room", "old_value": "occupied", "new_value": "empty", "cause": "external"},
        {"timestamp": 10, "entity": "lamp", "old_value": "off", "new_value": "on", "cause": "b"}
    ]);
    d["clock"] = json!(20);
    assert_eq!(codes(&d), vec!["history-mismatch"]);
}
