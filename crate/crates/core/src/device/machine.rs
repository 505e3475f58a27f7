//! The bin's control state machine as a pure transition function.

use serde::{Deserialize, Serialize};

use super::PortFault;
use crate::classifier::{bin_for, BinKind, ClassificationResult};
use crate::imaging::Image;

/// Controller state. States after classification remember the target bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "state", content = "bin", rename_all = "snake_case")]
pub enum DeviceState {
    Idle,
    Capturing,
    Classifying,
    Routing(BinKind),
    Dropping(BinKind),
    FillChecking(BinKind),
    Reporting,
    Fault,
}

impl DeviceState {
    pub fn name(&self) -> &'static str {
        match self {
            DeviceState::Idle => "idle",
            DeviceState::Capturing => "capturing",
            DeviceState::Classifying => "classifying",
            DeviceState::Routing(_) => "routing",
            DeviceState::Dropping(_) => "dropping",
            DeviceState::FillChecking(_) => "fill_checking",
            DeviceState::Reporting => "reporting",
            DeviceState::Fault => "fault",
        }
    }
}

/// Logical sorter positions: over Bin 1, centered, over Bin 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SorterPosition {
    Bin1,
    Neutral,
    Bin2,
}

impl SorterPosition {
    pub fn for_bin(bin: BinKind) -> Self {
        match bin {
            BinKind::Recyclable => SorterPosition::Bin1,
            BinKind::NonRecyclable => SorterPosition::Bin2,
        }
    }

    /// Default servo angle in degrees.
    pub fn degrees(self) -> u16 {
        match self {
            SorterPosition::Bin1 => 45,
            SorterPosition::Neutral => 90,
            SorterPosition::Bin2 => 135,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceEvent {
    MotionDetected,
    ImageReady(Image),
    Classified(ClassificationResult),
    ServoInPosition,
    DropComplete,
    FillLevel { bin: BinKind, blocked: bool },
    ReportAck,
    ReportTimeout,
    SensorFault(PortFault),
}

impl DeviceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            DeviceEvent::MotionDetected => "motion_detected",
            DeviceEvent::ImageReady(_) => "image_ready",
            DeviceEvent::Classified(_) => "classified",
            DeviceEvent::ServoInPosition => "servo_in_position",
            DeviceEvent::DropComplete => "drop_complete",
            DeviceEvent::FillLevel { .. } => "fill_level",
            DeviceEvent::ReportAck => "report_ack",
            DeviceEvent::ReportTimeout => "report_timeout",
            DeviceEvent::SensorFault(_) => "sensor_fault",
        }
    }
}

/// Fill reading attached to a status report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillReport {
    pub bin: BinKind,
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    CaptureImage,
    RunClassifier(Image),
    RotateSorter(SorterPosition),
    ReleaseDrop,
    ReadFill(BinKind),
    SendStatus(FillReport),
    SendFullAlert(BinKind),
    None,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::CaptureImage => "capture_image",
            Action::RunClassifier(_) => "run_classifier",
            Action::RotateSorter(_) => "rotate_sorter",
            Action::ReleaseDrop => "release_drop",
            Action::ReadFill(_) => "read_fill",
            Action::SendStatus(_) => "send_status",
            Action::SendFullAlert(_) => "send_full_alert",
            Action::None => "none",
        }
    }
}

/// Transition function. Total: an event the current state does not expect
/// leaves the state unchanged and yields [`Action::None`]; a sensor fault moves
/// any state to [`DeviceState::Fault`].
pub fn step(state: DeviceState, event: DeviceEvent) -> (DeviceState, Action) {
    use DeviceEvent as E;
    use DeviceState as S;

    match (state, event) {
        (_, E::SensorFault(fault)) => {
            log::warn!("sensor fault in {}: {fault}", state.name());
            (S::Fault, Action::None)
        }
        (S::Idle, E::MotionDetected) => (S::Capturing, Action::CaptureImage),
        (S::Capturing, E::ImageReady(image)) => (S::Classifying, Action::RunClassifier(image)),
        (S::Classifying, E::Classified(result)) => {
            let bin = bin_for(result.category);
            (S::Routing(bin), Action::RotateSorter(SorterPosition::for_bin(bin)))
        }
        (S::Routing(bin), E::ServoInPosition) => (S::Dropping(bin), Action::ReleaseDrop),
        (S::Dropping(bin), E::DropComplete) => (S::FillChecking(bin), Action::ReadFill(bin)),
        (S::FillChecking(_), E::FillLevel { bin, blocked: true }) => (S::Reporting, Action::SendFullAlert(bin)),
        (S::FillChecking(_), E::FillLevel { bin, blocked: false }) => {
            (S::Reporting, Action::SendStatus(FillReport { bin, blocked: false }))
        }
        (S::Reporting, E::ReportAck | E::ReportTimeout) => (S::Idle, Action::RotateSorter(SorterPosition::Neutral)),
        (state, event) => {
            log::debug!("ignoring {} in {}", event.name(), state.name());
            (state, Action::None)
        }
    }
}
