//! Wire types shared by devices, the service and subscribers.

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use super::TelemetryError;
use crate::classifier::BinKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStatus {
    #[default]
    Normal,
    Full,
}

/// Registry entry for one trash bin unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinRecord {
    pub id: String,
    /// Creation time, RFC 3339 / ISO-8601.
    pub date: String,
    #[serde(default)]
    pub locate: String,
    #[serde(default)]
    pub status: BinStatus,
    #[serde(default)]
    pub description: String,
    /// Opaque reference (URL or path) to a picture of the bin.
    #[serde(default)]
    pub image: Option<String>,
}

impl BinRecord {
    pub fn new(id: impl Into<String>, date: impl Into<String>, locate: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            date: date.into(),
            locate: locate.into(),
            status: BinStatus::Normal,
            description: String::new(),
            image: None,
        }
    }

    pub fn validate(&self) -> Result<(), TelemetryError> {
        validate_id(&self.id)?;
        DateTime::parse_from_rfc3339(&self.date)
            .map_err(|e| TelemetryError::Validation(format!("date `{}` is not ISO-8601: {e}", self.date)))?;
        Ok(())
    }

    /// Equality over the fields a registration defines (status is server-owned).
    pub fn same_registration(&self, other: &BinRecord) -> bool {
        self.id == other.id
            && self.date == other.date
            && self.locate == other.locate
            && self.description == other.description
            && self.image == other.image
    }
}

pub(crate) fn validate_id(id: &str) -> Result<(), TelemetryError> {
    if id.is_empty() || id.len() > 128 || id.chars().any(|c| c.is_control() || c == '/') {
        return Err(TelemetryError::Validation(format!("invalid bin id `{id}`")));
    }
    Ok(())
}

/// Fill percentages of the two receptacles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinLevels {
    pub recyclable: u8,
    pub non_recyclable: u8,
}

impl BinLevels {
    pub fn get(&self, bin: BinKind) -> u8 {
        match bin {
            BinKind::Recyclable => self.recyclable,
            BinKind::NonRecyclable => self.non_recyclable,
        }
    }

    pub fn set(&mut self, bin: BinKind, percent: u8) {
        match bin {
            BinKind::Recyclable => self.recyclable = percent,
            BinKind::NonRecyclable => self.non_recyclable = percent,
        }
    }

    pub fn any_full(&self) -> bool {
        self.recyclable >= 100 || self.non_recyclable >= 100
    }

    pub fn validate(&self) -> Result<(), TelemetryError> {
        if self.recyclable > 100 || self.non_recyclable > 100 {
            return Err(TelemetryError::Validation(format!("levels out of range: {self:?}")));
        }
        Ok(())
    }
}

/// A device-originated message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TelemetryMessage {
    Register { record: BinRecord },
    StatusUpdate { bin_id: String, levels: BinLevels, status: BinStatus },
    FullAlert { bin_id: String, bin: BinKind },
    Heartbeat { bin_id: String, timestamp: String },
}

impl TelemetryMessage {
    pub fn bin_id(&self) -> &str {
        match self {
            TelemetryMessage::Register { record } => &record.id,
            TelemetryMessage::StatusUpdate { bin_id, .. }
            | TelemetryMessage::FullAlert { bin_id, .. }
            | TelemetryMessage::Heartbeat { bin_id, .. } => bin_id,
        }
    }
}

/// A message plus its per-device sequence number.
///
/// Serialized flat: `{"seq": 3, "type": "full_alert", "bin_id": "bin-01", "bin": "recyclable"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(flatten)]
    pub message: TelemetryMessage,
}

/// What happened to the registry. The log stores these and subscribers
/// receive them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    Added {
        #[serde(flatten)]
        record: BinRecord,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
    },
    Removed {},
    Status {
        seq: u64,
        levels: BinLevels,
        status: BinStatus,
    },
    Full {
        seq: u64,
        bin: BinKind,
    },
    Heartbeat {
        seq: u64,
        timestamp: String,
    },
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::Added { .. } => "added",
            EventPayload::Removed {} => "removed",
            EventPayload::Status { .. } => "status",
            EventPayload::Full { .. } => "full",
            EventPayload::Heartbeat { .. } => "heartbeat",
        }
    }

    pub fn seq(&self) -> Option<u64> {
        match self {
            EventPayload::Added { seq, .. } => *seq,
            EventPayload::Removed {} => None,
            EventPayload::Status { seq, .. } | EventPayload::Full { seq, .. } | EventPayload::Heartbeat { seq, .. } => {
                Some(*seq)
            }
        }
    }
}

/// One line of `events.log` and one frame of the event stream:
/// `{"offset", "type", "bin_id", "payload", "ts"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub offset: u64,
    #[serde(flatten)]
    pub payload: EventPayload,
    pub bin_id: String,
    pub ts: String,
}
