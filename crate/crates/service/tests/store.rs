//! Session persistence: reopen, torn writes, tampered logs.

mod common;

use std::fs::OpenOptions;
use std::io::Write;

use cfexplain::Event;
use cfexplain_service::{SessionStore, StoreError};

fn lamp_store(dir: &std::path::Path) -> (SessionStore, String) {
    let store = SessionStore::open(dir, Default::default()).unwrap();
    let session = store.create(&common::scenario_text("lamp.json")).unwrap();
    session.inject(Event::assign("room", "empty")).unwrap();
    session.inject(Event::Advance { advance_ms: 90_000 }).unwrap();
    session.inject(Event::assign("room", "occupied")).unwrap();
    let id = session.id.clone();
    (store, id)
}

#[test]
fn reopening_restores_every_session() {
    let dir = tempfile::tempdir().unwrap();
    let (store, id) = lamp_store(dir.path());
    let other = store.create(&common::scenario_text("door.json")).unwrap();
    let before = store.get(&id).unwrap().snapshot();
    drop(store);

    let reopened = SessionStore::open(dir.path(), Default::default()).unwrap();
    assert_eq!(reopened.get(&id).unwrap().snapshot(), before);
    assert_eq!(reopened.get(&other.id).unwrap().snapshot(), other.snapshot());
    assert_eq!(before.steps, 3);
    assert_eq!(before.state.values["lamp"], "off");
}

#[test]
fn rejected_events_are_not_logged() {
    let dir = tempfile::tempdir().unwrap();
    let (store, id) = lamp_store(dir.path());
    let session = store.get(&id).unwrap();
    assert!(session.inject(Event::assign("lamp", "violet")).is_err());
    let before = session.snapshot();
    drop(store);
    let reopened = SessionStore::open(dir.path(), Default::default()).unwrap();
    assert_eq!(reopened.get(&id).unwrap().snapshot(), before);
}

#[test]
fn torn_final_line_is_dropped_and_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let (store, id) = lamp_store(dir.path());
    let before = store.get(&id).unwrap().snapshot();
    drop(store);

    let log = dir.path().join(&id).join("history.ndjson");
    let intact = std::fs::read_to_string(&log).unwrap();
    OpenOptions::new().append(true).open(&log).unwrap().write_all(br#"{"step":4,"event":{"entity":"ro"#).unwrap();

    let reopened = SessionStore::open(dir.path(), Default::default()).unwrap();
    assert_eq!(reopened.get(&id).unwrap().snapshot(), before);
    assert_eq!(std::fs::read_to_string(&log).unwrap(), intact);

    // The session keeps working after recovery.
    reopened.get(&id).unwrap().inject(Event::assign("room", "empty")).unwrap();
    drop(reopened);
    let again = SessionStore::open(dir.path(), Default::default()).unwrap();
    assert_eq!(again.get(&id).unwrap().snapshot().steps, 4);
}

#[test]
fn tampered_record_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (store, id) = lamp_store(dir.path());
    drop(store);
    let log = dir.path().join(&id).join("history.ndjson");
    let text = std::fs::read_to_string(&log).unwrap();
    std::fs::write(&log, text.replacen(r#""lamp":"off""#, r#""lamp":"on""#, 1)).unwrap();
    match SessionStore::open(dir.path(), Default::default()) {
        Err(StoreError::Corrupt { id: bad, record }) => {
            assert_eq!(bad, id);
            assert_eq!(record, 1);
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("tampered log accepted"),
    }
}

#[test]
fn in_memory_store_writes_nothing() {
    let store = SessionStore::in_memory(Default::default());
    let s = store.create(&common::scenario_text("lamp.json")).unwrap();
    s.inject(Event::assign("room", "empty")).unwrap();
    assert_eq!(store.ids(), vec![s.id.clone()]);
    assert!(matches!(store.get("missing"), Err(StoreError::NotFound(_))));
}
