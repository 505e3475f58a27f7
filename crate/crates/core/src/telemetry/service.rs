//! The telemetry service: validation, the single ordered apply path, durable
//! log, and fan-out to subscribers.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use super::{
    validate_id, BinRecord, BinState, BinStatus, Envelope, EventLogEntry, EventPayload, Registry, TelemetryError,
    TelemetryMessage,
};

/// Source of receive timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Starts at a fixed instant and advances by `step` on every reading.
#[derive(Debug)]
pub struct StepClock {
    start: DateTime<Utc>,
    step_ms: i64,
    ticks: AtomicU64,
}

impl StepClock {
    pub fn new(start: DateTime<Utc>, step_ms: i64) -> Self {
        Self { start, step_ms, ticks: AtomicU64::new(0) }
    }
}

impl Clock for StepClock {
    fn now(&self) -> DateTime<Utc> {
        let n = self.ticks.fetch_add(1, Ordering::Relaxed) as i64;
        self.start + Duration::milliseconds(n * self.step_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Registration {
    Created { offset: u64 },
    /// The same record was already registered.
    Unchanged,
}

/// Sent instead of a backlog when a subscriber asks to resume past the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapNotice {
    pub requested: u64,
    pub head: u64,
}

/// Ordered event stream: the requested backlog first, then live events.
#[derive(Debug)]
pub struct Subscription {
    backlog: VecDeque<EventLogEntry>,
    gap: Option<GapNotice>,
    live: UnboundedReceiver<EventLogEntry>,
}

impl Subscription {
    pub fn gap(&self) -> Option<GapNotice> {
        self.gap
    }

    /// Next event, waiting for one if necessary. `None` once the service is gone.
    pub async fn recv(&mut self) -> Option<EventLogEntry> {
        match self.backlog.pop_front() {
            Some(e) => Some(e),
            None => self.live.recv().await,
        }
    }

    /// Next event if one is already available.
    pub fn try_recv(&mut self) -> Option<EventLogEntry> {
        self.backlog.pop_front().or_else(|| self.live.try_recv().ok())
    }

    /// Everything available right now.
    pub fn drain(&mut self) -> Vec<EventLogEntry> {
        std::iter::from_fn(|| self.try_recv()).collect()
    }
}

struct Inner {
    registry: Registry,
    log: Vec<EventLogEntry>,
    file: Option<File>,
    subscribers: Vec<UnboundedSender<EventLogEntry>>,
}

pub struct TelemetryService {
    inner: Mutex<Inner>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for TelemetryService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TelemetryService").field("head", &self.head()).finish()
    }
}

impl TelemetryService {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self::from_parts(Registry::new(), Vec::new(), None, clock)
    }

    /// Opens (or creates) a JSON-lines event log and replays it.
    pub fn open(path: impl AsRef<Path>, clock: Arc<dyn Clock>) -> Result<Self, TelemetryError> {
        let path = path.as_ref();
        let log = if path.exists() { read_log(path)? } else { Vec::new() };
        let registry = Registry::replay(&log)?;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        log::info!("replayed {} events from {}", log.len(), path.display());
        Ok(Self::from_parts(registry, log, Some(file), clock))
    }

    fn from_parts(registry: Registry, log: Vec<EventLogEntry>, file: Option<File>, clock: Arc<dyn Clock>) -> Self {
        Self { inner: Mutex::new(Inner { registry, log, file, subscribers: Vec::new() }), clock }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn head(&self) -> u64 {
        self.lock().registry.head()
    }

    pub fn registry(&self) -> Registry {
        self.lock().registry.clone()
    }

    pub fn log(&self) -> Vec<EventLogEntry> {
        self.lock().log.clone()
    }

    /// Records in registration order.
    pub fn list_bins(&self) -> Vec<BinRecord> {
        self.lock().registry.bins().map(|b| b.record.clone()).collect()
    }

    pub fn get_bin(&self, id: &str) -> Result<BinRecord, TelemetryError> {
        self.bin_state(id).map(|b| b.record)
    }

    pub fn bin_state(&self, id: &str) -> Result<BinState, TelemetryError> {
        self.lock().registry.get(id).cloned().ok_or_else(|| TelemetryError::NotFound(id.to_string()))
    }

    /// Adds a bin. Re-registering identical fields succeeds without a new
    /// event; different fields under an existing id are a conflict.
    pub fn register_bin(&self, record: BinRecord, seq: Option<u64>) -> Result<Registration, TelemetryError> {
        record.validate()?;
        let mut inner = self.lock();
        if let Some(existing) = inner.registry.get(&record.id) {
            return if existing.record.same_registration(&record) {
                Ok(Registration::Unchanged)
            } else {
                Err(TelemetryError::Conflict(record.id))
            };
        }
        let id = record.id.clone();
        let record = BinRecord { status: BinStatus::Normal, ..record };
        let entry = self.append(&mut inner, id, EventPayload::Added { record, seq })?;
        Ok(Registration::Created { offset: entry.offset })
    }

    /// Applies a status update, full alert or heartbeat and returns the new
    /// event offset.
    pub fn update_status(&self, envelope: &Envelope) -> Result<u64, TelemetryError> {
        let bin_id = envelope.message.bin_id();
        validate_id(bin_id)?;
        let payload = match &envelope.message {
            TelemetryMessage::StatusUpdate { levels, status, .. } => {
                levels.validate()?;
                let status = if *status == BinStatus::Full || levels.any_full() { BinStatus::Full } else { BinStatus::Normal };
                EventPayload::Status { seq: envelope.seq, levels: *levels, status }
            }
            TelemetryMessage::FullAlert { bin, .. } => EventPayload::Full { seq: envelope.seq, bin: *bin },
            TelemetryMessage::Heartbeat { timestamp, .. } => {
                DateTime::parse_from_rfc3339(timestamp)
                    .map_err(|e| TelemetryError::Validation(format!("heartbeat timestamp: {e}")))?;
                EventPayload::Heartbeat { seq: envelope.seq, timestamp: timestamp.clone() }
            }
            TelemetryMessage::Register { .. } => {
                return Err(TelemetryError::Validation("registration is not a status update".into()));
            }
        };
        let mut inner = self.lock();
        let state = inner.registry.get(bin_id).ok_or_else(|| TelemetryError::NotFound(bin_id.to_string()))?;
        if let Some(last) = state.last_seq {
            if envelope.seq <= last {
                return Err(TelemetryError::Duplicate { bin_id: bin_id.to_string(), seq: envelope.seq, last });
            }
        }
        let entry = self.append(&mut inner, bin_id.to_string(), payload)?;
        Ok(entry.offset)
    }

    /// Dispatches any device message.
    pub fn submit(&self, envelope: &Envelope) -> Result<Option<u64>, TelemetryError> {
        match &envelope.message {
            TelemetryMessage::Register { record } => match self.register_bin(record.clone(), Some(envelope.seq))? {
                Registration::Created { offset } => Ok(Some(offset)),
                Registration::Unchanged => Ok(None),
            },
            _ => self.update_status(envelope).map(Some),
        }
    }

    pub fn remove_bin(&self, id: &str) -> Result<u64, TelemetryError> {
        let mut inner = self.lock();
        if inner.registry.get(id).is_none() {
            return Err(TelemetryError::NotFound(id.to_string()));
        }
        Ok(self.append(&mut inner, id.to_string(), EventPayload::Removed {})?.offset)
    }

    /// With `since`, replays logged events after that offset before going
    /// live; without, live events only.
    pub fn subscribe(&self, since: Option<u64>) -> Subscription {
        let mut inner = self.lock();
        let (tx, live) = unbounded_channel();
        inner.subscribers.push(tx);
        let head = inner.registry.head();
        let (backlog, gap) = match since {
            Some(requested) if requested > head => (VecDeque::new(), Some(GapNotice { requested, head })),
            Some(offset) => (inner.log[offset as usize..].iter().cloned().collect(), None),
            None => (VecDeque::new(), None),
        };
        Subscription { backlog, gap, live }
    }

    pub fn subscriber_count(&self) -> usize {
        let mut inner = self.lock();
        inner.subscribers.retain(|s| !s.is_closed());
        inner.subscribers.len()
    }

    fn append(&self, inner: &mut Inner, bin_id: String, payload: EventPayload) -> Result<EventLogEntry, TelemetryError> {
        let entry = EventLogEntry {
            offset: inner.registry.head() + 1,
            payload,
            bin_id,
            ts: self.clock.now().to_rfc3339_opts(SecondsFormat::Millis, true),
        };
        if let Some(file) = inner.file.as_mut() {
            let mut line = serde_json::to_vec(&entry)?;
            line.push(b'\n');
            file.write_all(&line)?;
            file.flush()?;
        }
        inner.registry.apply(&entry)?;
        inner.log.push(entry.clone());
        inner.subscribers.retain(|s| s.send(entry.clone()).is_ok());
        Ok(entry)
    }
}

/// Parses a JSON-lines event log.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<EventLogEntry>, TelemetryError> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| TelemetryError::Corrupt(format!("events.log line {}: {e}", n + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::BinKind;
    use crate::telemetry::BinLevels;

    fn service() -> TelemetryService {
        TelemetryService::in_memory(Arc::new(StepClock::new("2026-05-01T00:00:00Z".parse().unwrap(), 1000)))
    }

    fn record(id: &str) -> BinRecord {
        BinRecord::new(id, "2026-05-01T00:00:00Z", "Block A")
    }

    fn full(id: &str, seq: u64) -> Envelope {
        Envelope { seq, message: TelemetryMessage::FullAlert { bin_id: id.into(), bin: BinKind::Recyclable } }
    }

    fn status(id: &str, seq: u64, r: u8, n: u8) -> Envelope {
        Envelope {
            seq,
            message: TelemetryMessage::StatusUpdate {
                bin_id: id.into(),
                levels: BinLevels { recyclable: r, non_recyclable: n },
                status: BinStatus::Normal,
            },
        }
    }

    #[test]
    fn register_is_idempotent_and_conflicts_on_change() {
        let s = service();
        assert_eq!(s.register_bin(record("bin-01"), None).unwrap(), Registration::Created { offset: 1 });
        assert_eq!(s.register_bin(record("bin-01"), None).unwrap(), Registration::Unchanged);
        assert_eq!(s.list_bins().len(), 1);
        let before = s.registry().snapshot();
        let mut moved = record("bin-01");
        moved.locate = "Block B".into();
        assert!(matches!(s.register_bin(moved, None), Err(TelemetryError::Conflict(_))));
        assert_eq!(s.registry().snapshot(), before);
        assert_eq!(s.head(), 1);
    }

    #[test]
    fn registration_forces_normal_status() {
        let s = service();
        let mut r = record("bin-01");
        r.status = BinStatus::Full;
        s.register_bin(r.clone(), None).unwrap();
        assert_eq!(s.get_bin("bin-01").unwrap().status, BinStatus::Normal);
        assert_eq!(s.register_bin(r, None).unwrap(), Registration::Unchanged);
    }

    #[test]
    fn full_then_normal() {
        let s = service();
        s.register_bin(record("bin-01"), None).unwrap();
        s.update_status(&full("bin-01", 1)).unwrap();
        assert_eq!(s.get_bin("bin-01").unwrap().status, BinStatus::Full);
        s.update_status(&status("bin-01", 2, 100, 10)).unwrap();
        assert_eq!(s.get_bin("bin-01").unwrap().status, BinStatus::Full);
        s.update_status(&status("bin-01", 3, 0, 10)).unwrap();
        assert_eq!(s.get_bin("bin-01").unwrap().status, BinStatus::Normal);
    }

    #[test]
    fn stale_sequence_is_rejected_without_effects() {
        let s = service();
        s.register_bin(record("bin-01"), None).unwrap();
        let mut sub = s.subscribe(None);
        s.update_status(&full("bin-01", 5)).unwrap();
        let snapshot = s.registry().snapshot();
        assert!(matches!(s.update_status(&full("bin-01", 5)), Err(TelemetryError::Duplicate { .. })));
        assert!(matches!(s.update_status(&status("bin-01", 4, 0, 0)), Err(TelemetryError::Duplicate { .. })));
        assert_eq!(s.registry().snapshot(), snapshot);
        assert_eq!(s.log().len(), 2);
        assert_eq!(sub.drain().len(), 1);
    }

    #[test]
    fn unknown_bins_and_bad_levels() {
        let s = service();
        assert!(matches!(s.update_status(&full("nope", 1)), Err(TelemetryError::NotFound(_))));
        assert!(matches!(s.remove_bin("nope"), Err(TelemetryError::NotFound(_))));
        assert!(matches!(s.get_bin("nope"), Err(TelemetryError::NotFound(_))));
        s.register_bin(record("bin-01"), None).unwrap();
        assert!(matches!(s.update_status(&status("bin-01", 1, 101, 0)), Err(TelemetryError::Validation(_))));
    }

    #[test]
    fn remove_emits_event_and_forgets_bin() {
        let s = service();
        for id in ["a", "b", "c"] {
            s.register_bin(record(id), None).unwrap();
        }
        let mut sub = s.subscribe(None);
        s.remove_bin("b").unwrap();
        assert_eq!(s.list_bins().iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert!(s.get_bin("b").is_err());
        let ev = sub.try_recv().unwrap();
        assert_eq!((ev.payload.kind(), ev.bin_id.as_str()), ("removed", "b"));
    }

    #[test]
    fn subscription_backlog_and_gap() {
        let s = service();
        s.register_bin(record("a"), None).unwrap();
        s.update_status(&full("a", 1)).unwrap();
        s.update_status(&status("a", 2, 0, 0)).unwrap();

        let mut from_one = s.subscribe(Some(1));
        assert_eq!(from_one.drain().iter().map(|e| e.offset).collect::<Vec<_>>(), [2, 3]);

        let mut ahead = s.subscribe(Some(10));
        assert_eq!(ahead.gap(), Some(GapNotice { requested: 10, head: 3 }));
        assert!(ahead.try_recv().is_none());
        s.update_status(&full("a", 3)).unwrap();
        assert_eq!(ahead.try_recv().unwrap().offset, 4);
        assert_eq!(from_one.try_recv().unwrap().offset, 4);
    }

    #[test]
    fn dropped_subscribers_are_pruned() {
        let s = service();
        let a = s.subscribe(None);
        let _b = s.subscribe(None);
        drop(a);
        s.register_bin(record("x"), None).unwrap();
        assert_eq!(s.subscriber_count(), 1);
    }

    #[test]
    fn timestamps_come_from_clock() {
        let s = service();
        s.register_bin(record("a"), None).unwrap();
        s.register_bin(record("b"), None).unwrap();
        let log = s.log();
        assert_eq!(log[0].ts, "2026-05-01T00:00:00.000Z");
        assert_eq!(log[1].ts, "2026-05-01T00:00:01.000Z");
    }

    #[test]
    fn persisted_log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.log");
        let clock: Arc<dyn Clock> = Arc::new(StepClock::new("2026-05-01T00:00:00Z".parse().unwrap(), 10));
        let before = {
            let s = TelemetryService::open(&path, clock.clone()).unwrap();
            s.register_bin(record("a"), Some(1)).unwrap();
            s.update_status(&full("a", 2)).unwrap();
            s.registry().snapshot()
        };
        let s = TelemetryService::open(&path, clock).unwrap();
        assert_eq!(s.registry().snapshot(), before);
        assert_eq!(s.update_status(&status("a", 3, 0, 0)).unwrap(), 3);
        assert_eq!(read_log(&path).unwrap().len(), 3);
    }

    #[test]
    fn corrupt_log_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.log");
        std::fs::write(&path, "{\"offset\": 1}\n").unwrap();
        assert!(matches!(TelemetryService::open(&path, Arc::new(SystemClock)), Err(TelemetryError::Corrupt(_))));
    }
}
