//! Why is the lamp on? Prints the counterfactual and causal explanations for
//! one of the bundled scenarios, or for a scenario file given on the command line.
//!
//! ```text
//! cargo run -p cfexplain --example explain
//! cargo run -p cfexplain --example explain -- scenarios/door.json door open
//! ```

use cfexplain::{explain, parse_scenario, ExplanationKind, ExplanationRequest, Settings, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (text, device, foil) = match args.as_slice() {
        [path, device, foil] => (std::fs::read_to_string(path)?, device.clone(), foil.clone()),
        _ => (include_str!("../scenarios/lamp.json").to_string(), "lamp".into(), "off".into()),
    };
    let scenario = parse_scenario(&text)?;
    let world = World::from_scenario(&scenario, Default::default())?;
    let req = ExplanationRequest::new(device, foil, ExplanationKind::Both);
    let report = explain(&world, &req, &Settings::default())?;

    for e in &report.explanations {
        println!("{:?}: {}", e.kind, e.text);
    }
    println!();
    println!("case {:?}, strategy {:?}", report.case, report.strategy);
    println!("disturbing {:?}, appropriate {:?}", report.disturbing, report.appropriate);
    println!("valid candidates:");
    for c in &report.candidates {
        println!("  {}", c.key());
    }
    println!("ranked:");
    for r in &report.ranked {
        println!("  #{} C={:.4} {:?} {}", r.rank, r.closeness, r.scores, r.candidate.key());
    }
    Ok(())
}
