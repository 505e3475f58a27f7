//! Drives the state machine against real or virtual hardware.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{step, Action, DeviceConfig, DeviceError, DeviceEvent, DeviceState, FillReport, HardwarePorts, PortFault, PortName};
use crate::classifier::{BinKind, ClassificationResult, Classifier};
use crate::telemetry::{BinLevels, BinStatus, Envelope, TelemetryMessage};

/// Undelivered messages kept for retry; the oldest are dropped beyond this.
const MAX_PENDING: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    Delivered,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub event: String,
    pub action: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStamp {
    pub state: String,
    pub at: f64,
}

/// What happened during one item's trip through the bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub started_at: f64,
    pub image_id: Option<String>,
    pub prediction: Option<ClassificationResult>,
    pub target_bin: Option<BinKind>,
    /// The item left the sorter into a bin.
    pub dropped: bool,
    pub fill_blocked: Option<bool>,
    pub delivery: Option<Delivery>,
    pub fault: Option<PortFault>,
    pub final_state: DeviceState,
    /// Sorter angle at cycle start followed by every commanded angle.
    pub sorter_angles: Vec<u16>,
    pub steps: Vec<StepRecord>,
    pub phases: Vec<PhaseStamp>,
    /// Messages first emitted in this cycle.
    pub sent: Vec<Envelope>,
    /// Earlier undelivered messages delivered in this cycle.
    pub retried: usize,
}

impl CycleReport {
    pub fn completed(&self) -> bool {
        self.final_state == DeviceState::Idle && self.fault.is_none()
    }

    pub fn full_alerts(&self) -> impl Iterator<Item = BinKind> + '_ {
        self.sent.iter().filter_map(|e| match e.message {
            TelemetryMessage::FullAlert { bin, .. } => Some(bin),
            _ => None,
        })
    }
}

/// One bin unit's controller: state, sequence numbers, fill estimates and the
/// retry queue.
#[derive(Debug, Clone)]
pub struct Controller {
    config: DeviceConfig,
    state: DeviceState,
    sorter_angle: u16,
    next_seq: u64,
    drops: [u32; 2],
    blocked: [bool; 2],
    alerted: [bool; 2],
    pending: VecDeque<Envelope>,
}

impl Controller {
    pub fn new(config: DeviceConfig) -> Self {
        let sorter_angle = config.angles.neutral;
        Self {
            config,
            state: DeviceState::Idle,
            sorter_angle,
            next_seq: 1,
            drops: [0; 2],
            blocked: [false; 2],
            alerted: [false; 2],
            pending: VecDeque::new(),
        }
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.config
    }

    pub fn state(&self) -> DeviceState {
        self.state
    }

    pub fn sorter_angle(&self) -> u16 {
        self.sorter_angle
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Leaves the fault state so the next item can be handled.
    pub fn reset(&mut self) {
        self.state = DeviceState::Idle;
    }

    /// Announces the bin to the fleet service.
    pub fn register<P: HardwarePorts + ?Sized>(&mut self, ports: &mut P) -> (Envelope, Delivery) {
        let envelope = self.envelope(TelemetryMessage::Register { record: self.config.record() });
        let mut retried = 0;
        let delivery = self.deliver(ports, envelope.clone(), &mut retried);
        (envelope, delivery)
    }

    /// Runs one wake, capture, classify, route, drop, fill-check and report
    /// cycle. Returns `None` when the motion sensor reports nothing.
    pub fn run_cycle<P, C>(&mut self, ports: &mut P, classifier: &C) -> Result<Option<CycleReport>, DeviceError>
    where
        P: HardwarePorts + ?Sized,
        C: Classifier + ?Sized,
    {
        if self.state != DeviceState::Idle {
            return Err(DeviceError::NotIdle(self.state));
        }
        let mut report = CycleReport {
            started_at: ports.now(),
            image_id: None,
            prediction: None,
            target_bin: None,
            dropped: false,
            fill_blocked: None,
            delivery: None,
            fault: None,
            final_state: DeviceState::Idle,
            sorter_angles: vec![self.sorter_angle],
            steps: Vec::new(),
            phases: Vec::new(),
            sent: Vec::new(),
            retried: 0,
        };

        let mut event = match ports.motion_detected() {
            Ok(true) => DeviceEvent::MotionDetected,
            Ok(false) => return Ok(None),
            Err(fault) => DeviceEvent::SensorFault(fault),
        };

        loop {
            if let DeviceEvent::SensorFault(fault) = &event {
                report.fault = Some(fault.clone());
            }
            let event_name = event.name();
            let (next, action) = step(self.state, event);
            report.steps.push(StepRecord {
                event: event_name.to_string(),
                action: action.name().to_string(),
                state: next.name().to_string(),
            });
            if next != self.state {
                report.phases.push(PhaseStamp { state: next.name().to_string(), at: ports.now() });
            }
            self.state = next;

            event = match self.perform(action, ports, classifier, &mut report) {
                Some(e) => e,
                None => break,
            };
        }
        report.final_state = self.state;
        Ok(Some(report))
    }

    fn perform<P, C>(&mut self, action: Action, ports: &mut P, classifier: &C, report: &mut CycleReport) -> Option<DeviceEvent>
    where
        P: HardwarePorts + ?Sized,
        C: Classifier + ?Sized,
    {
        let event = match action {
            Action::None => return None,
            Action::CaptureImage => ports.capture().map(|captured| {
                report.image_id = Some(captured.id);
                DeviceEvent::ImageReady(captured.image)
            }),
            Action::RunClassifier(image) => ports
                .classifier_ready()
                .and_then(|()| classifier.classify(&image).map_err(|e| PortFault::failure(PortName::Classifier, e.to_string())))
                .map(|result| {
                    report.prediction = Some(result);
                    DeviceEvent::Classified(result)
                }),
            Action::RotateSorter(position) => {
                if let DeviceState::Routing(bin) = self.state {
                    report.target_bin = Some(bin);
                }
                let degrees = self.config.angles.degrees(position);
                match ports.set_sorter_angle(degrees) {
                    Ok(()) => {
                        self.sorter_angle = degrees;
                        report.sorter_angles.push(degrees);
                        if self.state == DeviceState::Idle {
                            return None;
                        }
                        Ok(DeviceEvent::ServoInPosition)
                    }
                    Err(fault) => Err(fault),
                }
            }
            Action::ReleaseDrop => ports.set_drop_gate(true).and_then(|()| {
                if let DeviceState::Dropping(bin) = self.state {
                    self.drops[bin.index()] += 1;
                }
                report.dropped = true;
                ports.set_drop_gate(false).map(|()| DeviceEvent::DropComplete)
            }),
            Action::ReadFill(bin) => ports.fill_blocked(bin).map(|blocked| {
                self.blocked[bin.index()] = blocked;
                report.fill_blocked = Some(blocked);
                DeviceEvent::FillLevel { bin, blocked }
            }),
            Action::SendStatus(FillReport { bin, .. }) => {
                self.alerted[bin.index()] = false;
                Ok(self.report_outcome(ports, self.status_message(), report))
            }
            Action::SendFullAlert(bin) => {
                // One alert per crossing; later blocked readings become plain status.
                let message = if self.alerted[bin.index()] {
                    self.status_message()
                } else {
                    self.alerted[bin.index()] = true;
                    TelemetryMessage::FullAlert { bin_id: self.config.bin_id.clone(), bin }
                };
                Ok(self.report_outcome(ports, message, report))
            }
        };
        Some(event.unwrap_or_else(DeviceEvent::SensorFault))
    }

    fn report_outcome<P: HardwarePorts + ?Sized>(&mut self, ports: &mut P, message: TelemetryMessage, report: &mut CycleReport) -> DeviceEvent {
        let envelope = self.envelope(message);
        report.sent.push(envelope.clone());
        let delivery = self.deliver(ports, envelope, &mut report.retried);
        report.delivery = Some(delivery);
        match delivery {
            Delivery::Delivered => DeviceEvent::ReportAck,
            Delivery::TimedOut => DeviceEvent::ReportTimeout,
        }
    }

    /// Sends queued messages oldest first, stopping at the first failure.
    fn deliver<P: HardwarePorts + ?Sized>(&mut self, ports: &mut P, envelope: Envelope, retried: &mut usize) -> Delivery {
        self.pending.push_back(envelope);
        while self.pending.len() > MAX_PENDING {
            if let Some(lost) = self.pending.pop_front() {
                log::warn!("dropping undelivered message seq {}", lost.seq);
            }
        }
        while let Some(front) = self.pending.front() {
            if let Err(fault) = ports.send(front) {
                log::warn!("report not delivered: {fault}");
                return Delivery::TimedOut;
            }
            self.pending.pop_front();
            if !self.pending.is_empty() {
                *retried += 1;
            }
        }
        Delivery::Delivered
    }

    fn envelope(&mut self, message: TelemetryMessage) -> Envelope {
        let seq = self.next_seq;
        self.next_seq += 1;
        Envelope { seq, message }
    }

    /// Level estimate per bin: 100 while the IR sensor reads blocked,
    /// otherwise drops over capacity capped at 99.
    pub fn levels(&self) -> BinLevels {
        let mut levels = BinLevels::default();
        for bin in BinKind::ALL {
            let i = bin.index();
            let percent = if self.blocked[i] {
                100
            } else {
                (u64::from(self.drops[i]) * 100 / u64::from(self.config.capacity.get(bin))).min(99) as u8
            };
            levels.set(bin, percent);
        }
        levels
    }

    fn status_message(&self) -> TelemetryMessage {
        let levels = self.levels();
        let status = if levels.any_full() { BinStatus::Full } else { BinStatus::Normal };
        TelemetryMessage::StatusUpdate { bin_id: self.config.bin_id.clone(), levels, status }
    }
}
