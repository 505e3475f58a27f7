//! Registry state as a fold over the event log.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{BinLevels, BinRecord, BinStatus, EventLogEntry, EventPayload, TelemetryError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinState {
    pub record: BinRecord,
    pub levels: Option<BinLevels>,
    pub last_seq: Option<u64>,
    pub last_heartbeat: Option<String>,
}

/// Bins in registration order plus the offset of the last applied event.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    head: u64,
    bins: IndexMap<String, BinState>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a registry from log entries.
    pub fn replay<'a>(entries: impl IntoIterator<Item = &'a EventLogEntry>) -> Result<Self, TelemetryError> {
        let mut registry = Self::new();
        for entry in entries {
            registry.apply(entry)?;
        }
        Ok(registry)
    }

    pub fn head(&self) -> u64 {
        self.head
    }

    pub fn get(&self, id: &str) -> Option<&BinState> {
        self.bins.get(id)
    }

    pub fn bins(&self) -> impl Iterator<Item = &BinState> {
        self.bins.values()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Canonical serialization, used to compare registries byte for byte.
    pub fn snapshot(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("registry serializes")
    }

    /// Applies one already-validated event. Offsets must follow on densely.
    pub fn apply(&mut self, entry: &EventLogEntry) -> Result<(), TelemetryError> {
        if entry.offset != self.head + 1 {
            return Err(TelemetryError::Corrupt(format!("offset {} follows {}", entry.offset, self.head)));
        }
        let missing = || TelemetryError::Corrupt(format!("event {} names unknown bin `{}`", entry.offset, entry.bin_id));
        match &entry.payload {
            EventPayload::Added { record, seq } => {
                if self.bins.contains_key(&entry.bin_id) {
                    return Err(TelemetryError::Corrupt(format!("bin `{}` added twice", entry.bin_id)));
                }
                let mut record = record.clone();
                record.status = BinStatus::Normal;
                self.bins.insert(
                    entry.bin_id.clone(),
                    BinState { record, levels: None, last_seq: *seq, last_heartbeat: None },
                );
            }
            EventPayload::Removed {} => {
                self.bins.shift_remove(&entry.bin_id).ok_or_else(missing)?;
            }
            EventPayload::Status { seq, levels, status } => {
                let bin = self.bins.get_mut(&entry.bin_id).ok_or_else(missing)?;
                bin.levels = Some(*levels);
                bin.record.status = *status;
                bin.last_seq = Some(*seq);
            }
            EventPayload::Full { seq, bin: which } => {
                let bin = self.bins.get_mut(&entry.bin_id).ok_or_else(missing)?;
                bin.levels.get_or_insert_with(BinLevels::default).set(*which, 100);
                bin.record.status = BinStatus::Full;
                bin.last_seq = Some(*seq);
            }
            EventPayload::Heartbeat { seq, timestamp } => {
                let bin = self.bins.get_mut(&entry.bin_id).ok_or_else(missing)?;
                bin.last_heartbeat = Some(timestamp.clone());
                bin.last_seq = Some(*seq);
            }
        }
        self.head = entry.offset;
        Ok(())
    }
}
