//! Bin controller: the wake, capture, classify, route, drop, fill-check and
//! report flow over abstract hardware ports.

mod config;
mod controller;
mod machine;
mod ports;

use thiserror::Error;

pub use config::{Capacities, DeviceConfig, SorterAngles, Timeouts};
pub use controller::{Controller, CycleReport, Delivery, PhaseStamp, StepRecord};
pub use machine::{step, Action, DeviceEvent, DeviceState, FillReport, SorterPosition};
pub use ports::{CapturedImage, FaultKind, HardwarePorts, PortFault, PortName};

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("a cycle can only start in idle, device is in {0:?}")]
    NotIdle(DeviceState),
    #[error("device config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
