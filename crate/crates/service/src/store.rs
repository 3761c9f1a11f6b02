//! Sessions and their on-disk form.
//!
//! Each session lives in its own directory:
//!
//! ```text
//! <data-dir>/<id>/scenario.json     the scenario document, written once
//! <data-dir>/<id>/session.json      id and creation time, written once
//! <data-dir>/<id>/history.ndjson    one trajectory record per injected event
//! ```
//!
//! Opening a data directory replays every log through the engine. A record
//! whose state disagrees with the replay is an error; a torn final line (the
//! process died mid-write) is dropped.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use cfexplain::engine::TrajectoryStep;
use cfexplain::{
    parse_scenario, Engine, EngineConfig, EngineError, Event, HistoryEntry, Scenario, ScenarioError, SystemState,
    TimedEvent, World,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("session `{id}` log is inconsistent at record {record}")]
    Corrupt { id: String, record: usize },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad record: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    id: String,
    created_at: i64,
}

/// Mutable part of a session, guarded by the session lock.
#[derive(Debug, Clone)]
struct Live {
    state: SystemState,
    /// Scenario history followed by everything caused by injected events.
    history: Vec<HistoryEntry>,
    events: Vec<TimedEvent>,
    steps: usize,
    log: Option<PathBuf>,
}

pub struct Session {
    pub id: String,
    pub created_at: i64,
    pub scenario: Arc<Scenario>,
    engine_config: EngineConfig,
    live: Mutex<Live>,
}

/// Read-only copy of a session at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub id: String,
    pub created_at: i64,
    pub state: SystemState,
    pub history: Vec<HistoryEntry>,
    pub events: Vec<TimedEvent>,
    pub steps: usize,
}

impl Session {
    fn new(
        id: String,
        created_at: i64,
        scenario: Scenario,
        engine_config: EngineConfig,
        log: Option<PathBuf>,
    ) -> Result<Self, StoreError> {
        let world = World::from_scenario(&scenario, engine_config)?;
        let state = world.state().clone();
        let history = world.factual().replay.history.clone();
        Ok(Session {
            id,
            created_at,
            scenario: Arc::new(scenario),
            engine_config,
            live: Mutex::new(Live { state, history, events: Vec::new(), steps: 0, log }),
        })
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Live> {
        self.live.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn snapshot(&self) -> Snapshot {
        let live = self.lock();
        Snapshot {
            id: self.id.clone(),
            created_at: self.created_at,
            state: live.state.clone(),
            history: live.history.clone(),
            events: live.events.clone(),
            steps: live.steps,
        }
    }

    /// Applies one event, logs it, and returns its trajectory record.
    pub fn inject(&self, event: Event) -> Result<TrajectoryStep, StoreError> {
        let mut live = self.lock();
        let next = self.compute(&live, event)?;
        if let Some(path) = &live.log {
            let mut line = serde_json::to_string(&next.record)?;
            line.push('\n');
            let mut f = OpenOptions::new().append(true).open(path)?;
            f.write_all(line.as_bytes())?;
            f.sync_data()?;
        }
        let record = next.record.clone();
        commit(&mut live, next);
        Ok(record)
    }

    /// Inputs for a counterfactual world as of now. Taken under the lock,
    /// so events injected afterwards do not affect it.
    pub fn world_inputs(&self) -> (Arc<Scenario>, Vec<TimedEvent>, i64) {
        let live = self.lock();
        (self.scenario.clone(), live.events.clone(), live.state.clock)
    }

    fn compute(&self, live: &Live, event: Event) -> Result<Pending, StoreError> {
        let engine = Engine::new(&self.scenario, self.engine_config);
        let at = live.state.clock;
        let out = engine.step(&live.state, &event)?;
        let record = TrajectoryStep {
            step: live.steps + 1,
            event: Some(event.clone()),
            clock: out.state.clock,
            state: out.state.values.clone(),
            firings: out.firings,
            changes: out.history.clone(),
        };
        Ok(Pending { record, state: out.state, timed: TimedEvent { at, event } })
    }

    /// Replays one logged record and checks it against the log.
    fn restore(&self, record: &TrajectoryStep, index: usize) -> Result<(), StoreError> {
        let corrupt = || StoreError::Corrupt { id: self.id.clone(), record: index };
        let event = record.event.clone().ok_or_else(corrupt)?;
        let mut live = self.lock();
        let next = self.compute(&live, event)?;
        if next.record != *record {
            return Err(corrupt());
        }
        commit(&mut live, next);
        Ok(())
    }
}

struct Pending {
    record: TrajectoryStep,
    state: SystemState,
    timed: TimedEvent,
}

fn commit(live: &mut Live, next: Pending) {
    live.state = next.state;
    live.history.extend(next.record.changes);
    live.events.push(next.timed);
    live.steps += 1;
}

fn now_ms() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)
}

/// All sessions, optionally backed by a data directory.
pub struct SessionStore {
    dir: Option<PathBuf>,
    engine_config: EngineConfig,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl SessionStore {
    /// A store that keeps nothing on disk.
    pub fn in_memory(engine_config: EngineConfig) -> Self {
        SessionStore { dir: None, engine_config, sessions: RwLock::new(HashMap::new()) }
    }

    /// Opens (creating if needed) `dir` and restores every session in it.
    pub fn open(dir: impl AsRef<Path>, engine_config: EngineConfig) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let store = SessionStore { dir: Some(dir.clone()), engine_config, sessions: RwLock::new(HashMap::new()) };
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("scenario.json").is_file() && p.join("session.json").is_file())
            .collect();
        entries.sort();
        for path in entries {
            let session = store.restore(&path)?;
            store.write().insert(session.id.clone(), Arc::new(session));
        }
        Ok(store)
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, HashMap<String, Arc<Session>>> {
        self.sessions.write().unwrap_or_else(|p| p.into_inner())
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, HashMap<String, Arc<Session>>> {
        self.sessions.read().unwrap_or_else(|p| p.into_inner())
    }

    fn restore(&self, path: &Path) -> Result<Session, StoreError> {
        let meta: Meta = serde_json::from_str(&fs::read_to_string(path.join("session.json"))?)?;
        let scenario = parse_scenario(&fs::read_to_string(path.join("scenario.json"))?)?;
        let log = path.join("history.ndjson");
        let session = Session::new(meta.id, meta.created_at, scenario, self.engine_config, Some(log.clone()))?;
        let text = fs::read_to_string(&log).unwrap_or_default();
        let complete = text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        let mut kept = 0;
        for (i, line) in lines.iter().enumerate() {
            // A final line without its newline is a write that never finished.
            if i + 1 == lines.len() && !complete {
                break;
            }
            let record: TrajectoryStep = serde_json::from_str(line)?;
            session.restore(&record, i + 1)?;
            kept += line.len() + 1;
        }
        if kept < text.len() {
            let f = OpenOptions::new().write(true).open(&log)?;
            f.set_len(kept as u64)?;
        }
        Ok(session)
    }

    pub fn create(&self, document: &str) -> Result<Arc<Session>, StoreError> {
        let scenario = parse_scenario(document)?;
        let id = uuid::Uuid::new_v4().to_string();
        let created_at = now_ms();
        let log = match &self.dir {
            Some(dir) => {
                let path = dir.join(&id);
                fs::create_dir_all(&path)?;
                write_file(&path.join("scenario.json"), &scenario.to_document())?;
                File::create(path.join("history.ndjson"))?.sync_all()?;
                let meta = serde_json::to_string_pretty(&Meta { id: id.clone(), created_at })?;
                write_file(&path.join("session.json"), &meta)?;
                Some(path.join("history.ndjson"))
            }
            None => None,
        };
        let session = Arc::new(Session::new(id.clone(), created_at, scenario, self.engine_config, log)?);
        self.write().insert(id, session.clone());
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, StoreError> {
        self.read().get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.read().keys().cloned().collect();
        ids.sort();
        ids
    }
}

/// Writes via a temporary file and rename so readers never see half a file.
fn write_file(path: &Path, contents: &str) -> Result<(), std::io::Error> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(contents.as_bytes())?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(tmp, path)
}
