//! Sessions survive restarts: each one is a scenario file plus an
//! append-only NDJSON log of the events injected into it. Reopening the data
//! directory replays the logs and checks every record.
//!
//! ```text
//! cargo run -p cfexplain-service --example persistence
//! ```

use cfexplain::Event;
use cfexplain_service::SessionStore;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = SessionStore::open(dir.path(), Default::default())?;
    let session = store.create(include_str!("../../core/scenarios/door.json"))?;
    session.inject(Event::Advance { advance_ms: 15 * 60 * 1000 })?;
    session.inject(Event::assign("time", "after_830"))?;
    // The visitor steps away and comes back; only now does the door open.
    session.inject(Event::assign("person", "absent"))?;
    session.inject(Event::assign("person", "present"))?;
    let before = session.snapshot();
    let id = session.id.clone();
    drop(store);

    let log = dir.path().join(&id).join("history.ndjson");
    println!("{}:", log.display());
    print!("{}", std::fs::read_to_string(&log)?);

    let reopened = SessionStore::open(dir.path(), Default::default())?;
    let after = reopened.get(&id)?.snapshot();
    println!("\nrestored {} steps, identical: {}", after.steps, after == before);
    println!("state {:?}", after.state.values);
    Ok(())
}
