//! Deterministic virtual hardware and scenario runner.

mod bench;
mod run;
mod scenario;
mod synthetic;

use thiserror::Error;

pub use bench::{Bench, BinFill, BinFillState, SimTiming};
pub use run::{alert_messages, run_scenario, SimOptions, SimulationTrace, TraceRecord};
pub use scenario::{FaultInjection, ImageLibrary, Scenario, ScenarioItem};
pub use synthetic::{generate_synthetic_corpus, synthetic_id, synthetic_image, SYNTHETIC_SIDE};

use crate::device::DeviceError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario references unknown image `{0}`")]
    UnknownImage(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
