//! Fleet telemetry: bin registry, event log, fan-out, and the sink interface
//! devices report through.

mod message;
mod registry;
mod service;

use std::sync::Arc;

use thiserror::Error;

pub use message::{BinLevels, BinRecord, BinStatus, Envelope, EventLogEntry, EventPayload, TelemetryMessage};
pub(crate) use message::validate_id;
pub use registry::{BinState, Registry};
pub use service::{read_log, Clock, GapNotice, Registration, StepClock, Subscription, SystemClock, TelemetryService};

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("bin `{0}` not found")]
    NotFound(String),
    #[error("bin `{0}` is already registered with different fields")]
    Conflict(String),
    #[error("duplicate message for `{bin_id}`: sequence {seq} is not after {last}")]
    Duplicate { bin_id: String, seq: u64, last: u64 },
    #[error("invalid message: {0}")]
    Validation(String),
    #[error("corrupt event log: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("delivery failed: {0}")]
pub struct DeliveryError(pub String);

/// Where a device's messages go: a network client, an in-process service, or
/// a recorder.
pub trait TelemetrySink {
    fn send(&mut self, envelope: &Envelope) -> Result<(), DeliveryError>;
}

/// Keeps every message it is given.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    pub messages: Vec<Envelope>,
}

impl TelemetrySink for MemorySink {
    fn send(&mut self, envelope: &Envelope) -> Result<(), DeliveryError> {
        self.messages.push(envelope.clone());
        Ok(())
    }
}

/// Delivers straight into a service. A duplicate counts as delivered.
impl TelemetrySink for &TelemetryService {
    fn send(&mut self, envelope: &Envelope) -> Result<(), DeliveryError> {
        match self.submit(envelope) {
            Ok(_) | Err(TelemetryError::Duplicate { .. }) => Ok(()),
            Err(e) => Err(DeliveryError(e.to_string())),
        }
    }
}

impl TelemetrySink for Arc<TelemetryService> {
    fn send(&mut self, envelope: &Envelope) -> Result<(), DeliveryError> {
        (&**self).send(envelope)
    }
}

impl<S: TelemetrySink + ?Sized> TelemetrySink for &mut S {
    fn send(&mut self, envelope: &Envelope) -> Result<(), DeliveryError> {
        (**self).send(envelope)
    }
}
