//! Hardware abstraction. A GPIO backend and the simulator's virtual devices
//! both implement [`HardwarePorts`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::BinKind;
use crate::imaging::Image;
use crate::telemetry::Envelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortName {
    /// PIR motion sensor.
    Pir,
    Camera,
    SorterServo,
    DropServo,
    FillSensor,
    Reporter,
    /// Not hardware, but its failures abort a cycle the same way.
    Classifier,
}

impl PortName {
    pub const ALL: [PortName; 7] = [
        PortName::Pir,
        PortName::Camera,
        PortName::SorterServo,
        PortName::DropServo,
        PortName::FillSensor,
        PortName::Reporter,
        PortName::Classifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PortName::Pir => "pir",
            PortName::Camera => "camera",
            PortName::SorterServo => "sorter_servo",
            PortName::DropServo => "drop_servo",
            PortName::FillSensor => "fill_sensor",
            PortName::Reporter => "reporter",
            PortName::Classifier => "classifier",
        }
    }
}

impl fmt::Display for PortName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PortName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| format!("unknown port `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// The expected hardware event did not arrive within the phase timeout.
    Timeout,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{port} {kind:?}: {detail}")]
pub struct PortFault {
    pub port: PortName,
    pub kind: FaultKind,
    pub detail: String,
}

impl PortFault {
    pub fn timeout(port: PortName, detail: impl Into<String>) -> Self {
        Self { port, kind: FaultKind::Timeout, detail: detail.into() }
    }

    pub fn failure(port: PortName, detail: impl Into<String>) -> Self {
        Self { port, kind: FaultKind::Failure, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapturedImage {
    pub id: String,
    pub image: Image,
}

/// Everything the controller touches. Calls block until the hardware has
/// acted or the port's own phase timeout expires, which is reported as a
/// [`FaultKind::Timeout`] fault.
pub trait HardwarePorts {
    /// Current time in seconds on the port's clock.
    fn now(&self) -> f64;

    fn motion_detected(&mut self) -> Result<bool, PortFault>;

    fn capture(&mut self) -> Result<CapturedImage, PortFault>;

    /// Returns once the sorter has reached `degrees`.
    fn set_sorter_angle(&mut self, degrees: u16) -> Result<(), PortFault>;

    fn set_drop_gate(&mut self, open: bool) -> Result<(), PortFault>;

    /// IR obstacle reading: `true` means the bin is full.
    fn fill_blocked(&mut self, bin: BinKind) -> Result<bool, PortFault>;

    fn send(&mut self, envelope: &Envelope) -> Result<(), PortFault>;

    /// Checked before each inference; lets a host report that the model
    /// runtime is unavailable.
    fn classifier_ready(&mut self) -> Result<(), PortFault> {
        Ok(())
    }
}
