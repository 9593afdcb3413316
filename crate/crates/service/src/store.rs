//! Session state as a fold over an append-only JSON-lines event log.
//!
//! `events.jsonl` is the source of truth. Every `snapshot_every` events the
//! whole session table is written to `snapshot.json` together with the last
//! sequence number it covers, so startup only replays the tail.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use narrative_core::converter::Question;
use narrative_core::pipeline::Narrative;
use narrative_core::preference::{self, ChoiceRecord};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const CHOICES_FILE: &str = "choices.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NarrativeSource {
    /// Automatic narrative, used when no eligible question exists.
    Auto,
    Answer,
    Personalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    SessionCreated {
        user_id: String,
    },
    QuestionShown {
        image_id: String,
        question: Question,
        choices: Vec<String>,
    },
    AnswerSubmitted {
        request_id: String,
        answer: String,
        record: ChoiceRecord,
    },
    NarrativeEmitted {
        request_id: Option<String>,
        source: NarrativeSource,
        image_id: String,
        question: Option<Question>,
        presented: Vec<String>,
        answer: Option<String>,
        narrative: Narrative,
    },
    PreferenceTrained {
        records: usize,
        pairs: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub session_id: String,
    /// Milliseconds since the Unix epoch, strictly increasing across the log.
    pub timestamp: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingQuestion {
    pub image_id: String,
    pub question: Question,
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub image_id: String,
    pub question: Option<Question>,
    pub presented: Vec<String>,
    pub answer: Option<String>,
    pub source: NarrativeSource,
    pub request_id: Option<String>,
    pub narrative: Narrative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub user_id: String,
    pub created_at: u64,
    pub updated_at: u64,
    pub pending: Option<PendingQuestion>,
    pub history: Vec<HistoryEntry>,
    /// Decisions recorded in this session, oldest first.
    pub choices: Vec<ChoiceRecord>,
    /// Request id to index into `history`.
    pub requests: BTreeMap<String, usize>,
}

impl Session {
    fn new(id: &str, user_id: &str, timestamp: u64) -> Self {
        Self {
            id: id.to_string(),
            user_id: user_id.to_string(),
            created_at: timestamp,
            updated_at: timestamp,
            pending: None,
            history: Vec::new(),
            choices: Vec::new(),
            requests: BTreeMap::new(),
        }
    }

    fn apply(&mut self, event: &Event) {
        self.updated_at = event.timestamp;
        match &event.kind {
            EventKind::SessionCreated { .. } | EventKind::PreferenceTrained { .. } => {}
            EventKind::QuestionShown {
                image_id,
                question,
                choices,
            } => {
                self.pending = Some(PendingQuestion {
                    image_id: image_id.clone(),
                    question: question.clone(),
                    choices: choices.clone(),
                });
            }
            EventKind::AnswerSubmitted { record, .. } => self.choices.push(record.clone()),
            EventKind::NarrativeEmitted {
                request_id,
                source,
                image_id,
                question,
                presented,
                answer,
                narrative,
            } => {
                if *source == NarrativeSource::Answer {
                    self.pending = None;
                }
                if let Some(r) = request_id {
                    self.requests.insert(r.clone(), self.history.len());
                }
                self.history.push(HistoryEntry {
                    image_id: image_id.clone(),
                    question: question.clone(),
                    presented: presented.clone(),
                    answer: answer.clone(),
                    source: *source,
                    request_id: request_id.clone(),
                    narrative: narrative.clone(),
                });
            }
        }
    }
}

/// Applies one event to a session table.
pub fn apply(sessions: &mut BTreeMap<String, Session>, event: &Event) -> Result<(), ServiceError> {
    match &event.kind {
        EventKind::SessionCreated { user_id } => {
            if sessions.contains_key(&event.session_id) {
                return Err(ServiceError::Store(format!("session {} created twice", event.session_id)));
            }
            sessions.insert(event.session_id.clone(), Session::new(&event.session_id, user_id, event.timestamp));
        }
        _ => {
            let s = sessions
                .get_mut(&event.session_id)
                .ok_or_else(|| ServiceError::Store(format!("event {} for unknown session {}", event.seq, event.session_id)))?;
            if event.timestamp <= s.updated_at {
                return Err(ServiceError::Store(format!("event {} is not newer than its session", event.seq)));
            }
            s.apply(event);
        }
    }
    Ok(())
}

/// Events in file order and the byte length of the intact prefix. A torn
/// final line, as left by a crash mid-write, is excluded from both.
fn scan_events(path: &Path) -> Result<(Vec<Event>, u64), ServiceError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    let mut valid = 0u64;
    let mut lines = text.split_inclusive('\n').enumerate().peekable();
    while let Some((i, line)) = lines.next() {
        let last = lines.peek().is_none();
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            valid += line.len() as u64;
            continue;
        }
        match serde_json::from_str::<Event>(line) {
            Ok(e) if complete => {
                out.push(e);
                valid += line.len() as u64;
            }
            Ok(_) => log::warn!("ignoring unterminated last event in {}", path.display()),
            Err(e) if last => log::warn!("ignoring torn last event in {}: {e}", path.display()),
            Err(e) => return Err(ServiceError::Store(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok((out, valid))
}

pub fn read_events(path: &Path) -> Result<Vec<Event>, ServiceError> {
    Ok(scan_events(path)?.0)
}

/// Session table rebuilt from the event log alone.
pub fn replay(dir: &Path) -> Result<BTreeMap<String, Session>, ServiceError> {
    let mut sessions = BTreeMap::new();
    for e in read_events(&dir.join(EVENTS_FILE))? {
        apply(&mut sessions, &e)?;
    }
    Ok(sessions)
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    last_timestamp: u64,
    sessions: BTreeMap<String, Session>,
}

struct Journal {
    events: File,
    seq: u64,
    last_timestamp: u64,
    since_snapshot: usize,
    sessions: BTreeMap<String, Session>,
}

/// Durable session table with per-session write serialization.
pub struct SessionStore {
    dir: PathBuf,
    snapshot_every: usize,
    journal: Mutex<Journal>,
    locks: Mutex<BTreeMap<String, Arc<Mutex<()>>>>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ServiceError + '_ {
    move |e| ServiceError::Store(format!("{}: {e}", path.display()))
}

impl SessionStore {
    /// Opens or creates the store in `dir`, restoring the latest snapshot
    /// and replaying the events after it.
    pub fn open(dir: impl Into<PathBuf>, snapshot_every: usize) -> Result<Self, ServiceError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let snap_path = dir.join(SNAPSHOT_FILE);
        let (mut seq, mut last_timestamp, mut sessions) = match std::fs::read_to_string(&snap_path) {
            Ok(text) => {
                let s: Snapshot = serde_json::from_str(&text)
                    .map_err(|e| ServiceError::Store(format!("{}: {e}", snap_path.display())))?;
                (s.seq, s.last_timestamp, s.sessions)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (0, 0, BTreeMap::new()),
            Err(e) => return Err(io_err(&snap_path)(e)),
        };
        let events_path = dir.join(EVENTS_FILE);
        let (logged, valid) = scan_events(&events_path)?;
        let mut tail = 0;
        for e in logged {
            if e.seq <= seq {
                continue;
            }
            apply(&mut sessions, &e)?;
            seq = e.seq;
            last_timestamp = last_timestamp.max(e.timestamp);
            tail += 1;
        }
        let events = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&events_path)
            .map_err(io_err(&events_path))?;
        if events.metadata().map_err(io_err(&events_path))?.len() > valid {
            events.set_len(valid).map_err(io_err(&events_path))?;
        }
        log::info!("restored {} sessions at event {seq} ({tail} replayed)", sessions.len());
        Ok(Self {
            dir,
            snapshot_every: snapshot_every.max(1),
            journal: Mutex::new(Journal {
                events,
                seq,
                last_timestamp,
                since_snapshot: tail,
                sessions,
            }),
            locks: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn choices_path(&self) -> PathBuf {
        self.dir.join(CHOICES_FILE)
    }

    /// Lock serializing all writers of one session.
    pub fn session_lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.lock().expect("lock table").entry(id.to_string()).or_default().clone()
    }

    pub fn get(&self, id: &str) -> Option<Session> {
        self.journal.lock().expect("journal").sessions.get(id).cloned()
    }

    pub fn sessions(&self) -> BTreeMap<String, Session> {
        self.journal.lock().expect("journal").sessions.clone()
    }

    pub fn len(&self) -> usize {
        self.journal.lock().expect("journal").sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends events for one session, applies them and returns the
    /// updated session. Choice records carried by the events are added to
    /// the choice log in the same critical section.
    pub fn commit(&self, session_id: &str, kinds: Vec<EventKind>) -> Result<Session, ServiceError> {
        let mut j = self.journal.lock().expect("journal");
        let mut staged: BTreeMap<String, Session> = j
            .sessions
            .get(session_id)
            .map(|s| (session_id.to_string(), s.clone()))
            .into_iter()
            .collect();
        let mut events = Vec::with_capacity(kinds.len());
        let (mut seq, mut ts) = (j.seq, j.last_timestamp);
        for kind in kinds {
            seq += 1;
            ts = now_ms().max(ts + 1);
            let event = Event {
                seq,
                session_id: session_id.to_string(),
                timestamp: ts,
                kind,
            };
            apply(&mut staged, &event)?;
            events.push(event);
        }
        let mut text = String::new();
        for e in &events {
            text.push_str(&serde_json::to_string(e).map_err(|e| ServiceError::Store(e.to_string()))?);
            text.push('\n');
        }
        let events_path = self.dir.join(EVENTS_FILE);
        j.events.write_all(text.as_bytes()).map_err(io_err(&events_path))?;
        j.events.flush().map_err(io_err(&events_path))?;
        for e in &events {
            if let EventKind::AnswerSubmitted { record, .. } = &e.kind {
                preference::log::append(self.choices_path(), record).map_err(|e| ServiceError::Store(e.to_string()))?;
            }
        }
        j.seq = seq;
        j.last_timestamp = ts;
        j.since_snapshot += events.len();
        let session = staged.remove(session_id).expect("committed session exists");
        j.sessions.insert(session_id.to_string(), session.clone());
        if j.since_snapshot >= self.snapshot_every {
            self.write_snapshot(&mut j)?;
        }
        Ok(session)
    }

    fn write_snapshot(&self, j: &mut Journal) -> Result<(), ServiceError> {
        let snap = Snapshot {
            seq: j.seq,
            last_timestamp: j.last_timestamp,
            sessions: std::mem::take(&mut j.sessions),
        };
        let result = serde_json::to_string(&snap).map_err(|e| ServiceError::Store(e.to_string()));
        j.sessions = snap.sessions;
        let text = result?;
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        j.since_snapshot = 0;
        Ok(())
    }

    /// Forces a snapshot now.
    pub fn snapshot(&self) -> Result<(), ServiceError> {
        let mut j = self.journal.lock().expect("journal");
        self.write_snapshot(&mut j)
    }
}
