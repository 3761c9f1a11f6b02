//! Candidate generation: which rules stand in the way, which could produce
//! the foil, and every minimal change set that gets there, with the
//! reasoning that produced it.
//!
//! ```text
//! cargo run -p cfexplain --example candidates
//! ```

use cfexplain::candidates::Derivation;
use cfexplain::{enumerate_candidates, parse_scenario, ConfusionContext, World};

fn print_tree(d: &Derivation, depth: usize) {
    println!("{:indent$}- {}", "", d.label, indent = depth * 2);
    for c in &d.children {
        print_tree(c, depth + 1);
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (doc, device, foil) in [
        (include_str!("../scenarios/lamp.json"), "lamp", "off"),
        (include_str!("../scenarios/door.json"), "door", "open"),
    ] {
        let scenario = parse_scenario(doc)?;
        let world = World::from_scenario(&scenario, Default::default())?;
        let ctx = ConfusionContext::resolve(&world, device, foil)?;
        let generation = enumerate_candidates(&world, &ctx, 3)?;
        println!("== {device} -> {foil}");
        println!("disturbing {:?}, appropriate {:?}", generation.disturbing, generation.appropriate);
        println!("strategy {:?} ({})", generation.strategy, generation.strategy.case_label());
        for cand in &generation.candidates {
            println!("{}", cand.key());
            print_tree(&cand.derivation, 1);
        }
        println!();
    }
    Ok(())
}
