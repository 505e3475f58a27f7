use binsort_core::classifier::{bin_for, BinKind, ClassificationResult, ConstantClassifier, TrashCategory};
use binsort_core::device::{
    step, Action, CapturedImage, Controller, DeviceConfig, DeviceEvent, DeviceState, FillReport, HardwarePorts,
    PortFault, PortName, SorterPosition,
};
use binsort_core::imaging::Image;
use binsort_core::telemetry::{BinStatus, Envelope, TelemetryMessage};
use proptest::prelude::*;

/// Ports whose behavior is scripted per test.
#[derive(Default)]
struct Scripted {
    clock: f64,
    motion: bool,
    camera_fault: bool,
    fill_blocked: bool,
    reporter_down: bool,
    angles: Vec<u16>,
    gate: Vec<bool>,
    sent: Vec<Envelope>,
}

impl HardwarePorts for Scripted {
    fn now(&self) -> f64 {
        self.clock
    }
    fn motion_detected(&mut self) -> Result<bool, PortFault> {
        Ok(self.motion)
    }
    fn capture(&mut self) -> Result<CapturedImage, PortFault> {
        self.clock += 1.0;
        if self.camera_fault {
            return Err(PortFault::timeout(PortName::Camera, "no frame"));
        }
        Ok(CapturedImage { id: "item-1".into(), image: Image::filled(4, 4, 3, 9).unwrap() })
    }
    fn set_sorter_angle(&mut self, degrees: u16) -> Result<(), PortFault> {
        self.clock += 1.0;
        self.angles.push(degrees);
        Ok(())
    }
    fn set_drop_gate(&mut self, open: bool) -> Result<(), PortFault> {
        self.clock += 1.0;
        self.gate.push(open);
        Ok(())
    }
    fn fill_blocked(&mut self, _bin: BinKind) -> Result<bool, PortFault> {
        Ok(self.fill_blocked)
    }
    fn send(&mut self, envelope: &Envelope) -> Result<(), PortFault> {
        if self.reporter_down {
            return Err(PortFault::timeout(PortName::Reporter, "server unreachable"));
        }
        self.sent.push(envelope.clone());
        Ok(())
    }
}

fn ports() -> Scripted {
    Scripted { motion: true, ..Default::default() }
}

#[test]
fn recyclable_item_sorter_sequence() {
    let mut hw = ports();
    let mut device = Controller::new(DeviceConfig::default());
    let report = device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::PlasticBottle)).unwrap().unwrap();
    assert_eq!(report.target_bin, Some(BinKind::Recyclable));
    assert_eq!(report.sorter_angles, [90, 45, 90]);
    assert_eq!(hw.angles, [45, 90]);
    assert_eq!(hw.gate, [true, false]);
    assert_eq!(report.final_state, DeviceState::Idle);
    assert!(report.completed());
    assert_eq!(report.image_id.as_deref(), Some("item-1"));
    let phases: Vec<_> = report.phases.iter().map(|p| p.state.as_str()).collect();
    assert_eq!(phases, ["capturing", "classifying", "routing", "dropping", "fill_checking", "reporting", "idle"]);
    assert!(report.phases.windows(2).all(|w| w[0].at <= w[1].at));
}

#[test]
fn non_recyclable_goes_to_135() {
    let mut hw = ports();
    let mut device = Controller::new(DeviceConfig::default());
    let report = device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::StyrofoamContainer)).unwrap().unwrap();
    assert_eq!(report.sorter_angles, [90, 135, 90]);
}

#[test]
fn configured_angles_are_used() {
    let mut config = DeviceConfig::default();
    config.angles.bin1 = 30;
    config.angles.neutral = 95;
    let mut hw = ports();
    let mut device = Controller::new(config);
    let report = device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).unwrap().unwrap();
    assert_eq!(report.sorter_angles, [95, 30, 95]);
}

#[test]
fn camera_fault_issues_no_servo_commands() {
    let mut hw = Scripted { camera_fault: true, ..ports() };
    let mut device = Controller::new(DeviceConfig::default());
    let report = device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).unwrap().unwrap();
    assert_eq!(report.final_state, DeviceState::Fault);
    assert_eq!(report.fault.as_ref().unwrap().port, PortName::Camera);
    assert!(hw.angles.is_empty() && hw.gate.is_empty() && hw.sent.is_empty());
    assert!(device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).is_err());
    device.reset();
    hw.camera_fault = false;
    assert!(device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).unwrap().unwrap().completed());
}

#[test]
fn report_timeout_still_sorts_and_retries_later() {
    let mut hw = Scripted { reporter_down: true, ..ports() };
    let mut device = Controller::new(DeviceConfig::default());
    let first = device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).unwrap().unwrap();
    assert_eq!(first.final_state, DeviceState::Idle);
    assert_eq!(first.delivery, Some(binsort_core::device::Delivery::TimedOut));
    assert_eq!(hw.gate, [true, false]);
    assert_eq!(device.pending(), 1);

    hw.reporter_down = false;
    let second = device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).unwrap().unwrap();
    assert_eq!(second.retried, 1);
    assert_eq!(hw.sent.iter().map(|e| e.seq).collect::<Vec<_>>(), [1, 2]);
    assert_eq!(device.pending(), 0);
}

#[test]
fn no_motion_means_no_cycle() {
    let mut hw = Scripted::default();
    let mut device = Controller::new(DeviceConfig::default());
    assert!(device.run_cycle(&mut hw, &ConstantClassifier(TrashCategory::Can)).unwrap().is_none());
}

#[test]
fn alert_once_per_crossing_then_status() {
    let mut hw = Scripted { fill_blocked: true, ..ports() };
    let mut device = Controller::new(DeviceConfig::default());
    let c = ConstantClassifier(TrashCategory::Pen);
    device.run_cycle(&mut hw, &c).unwrap();
    device.run_cycle(&mut hw, &c).unwrap();
    hw.fill_blocked = false;
    device.run_cycle(&mut hw, &c).unwrap();
    hw.fill_blocked = true;
    device.run_cycle(&mut hw, &c).unwrap();
    let kinds: Vec<_> = hw
        .sent
        .iter()
        .map(|e| match &e.message {
            TelemetryMessage::FullAlert { .. } => "full",
            TelemetryMessage::StatusUpdate { status: BinStatus::Full, .. } => "status-full",
            TelemetryMessage::StatusUpdate { .. } => "status",
            _ => "other",
        })
        .collect();
    assert_eq!(kinds, ["full", "status-full", "status", "full"]);
}

// ---- transition table ------------------------------------------------------

const BIN: BinKind = BinKind::NonRecyclable;

fn all_states() -> Vec<DeviceState> {
    vec![
        DeviceState::Idle,
        DeviceState::Capturing,
        DeviceState::Classifying,
        DeviceState::Routing(BIN),
        DeviceState::Dropping(BIN),
        DeviceState::FillChecking(BIN),
        DeviceState::Reporting,
        DeviceState::Fault,
    ]
}

fn image() -> Image {
    Image::filled(2, 2, 1, 1).unwrap()
}

fn all_events(blocked: bool) -> Vec<DeviceEvent> {
    vec![
        DeviceEvent::MotionDetected,
        DeviceEvent::ImageReady(image()),
        DeviceEvent::Classified(ClassificationResult { category: TrashCategory::FoodPacket, confidence: 0.7 }),
        DeviceEvent::ServoInPosition,
        DeviceEvent::DropComplete,
        DeviceEvent::FillLevel { bin: BIN, blocked },
        DeviceEvent::ReportAck,
        DeviceEvent::ReportTimeout,
        DeviceEvent::SensorFault(PortFault::failure(PortName::FillSensor, "wire")),
    ]
}

/// The documented table, written out case by case.
fn expected(state: DeviceState, event: &DeviceEvent) -> (DeviceState, Action) {
    match (state, event) {
        (_, DeviceEvent::SensorFault(_)) => (DeviceState::Fault, Action::None),
        (DeviceState::Idle, DeviceEvent::MotionDetected) => (DeviceState::Capturing, Action::CaptureImage),
        (DeviceState::Capturing, DeviceEvent::ImageReady(_)) => (DeviceState::Classifying, Action::RunClassifier(image())),
        (DeviceState::Classifying, DeviceEvent::Classified(_)) => {
            (DeviceState::Routing(BIN), Action::RotateSorter(SorterPosition::Bin2))
        }
        (DeviceState::Routing(_), DeviceEvent::ServoInPosition) => (DeviceState::Dropping(BIN), Action::ReleaseDrop),
        (DeviceState::Dropping(_), DeviceEvent::DropComplete) => (DeviceState::FillChecking(BIN), Action::ReadFill(BIN)),
        (DeviceState::FillChecking(_), DeviceEvent::FillLevel { blocked: true, .. }) => {
            (DeviceState::Reporting, Action::SendFullAlert(BIN))
        }
        (DeviceState::FillChecking(_), DeviceEvent::FillLevel { blocked: false, .. }) => {
            (DeviceState::Reporting, Action::SendStatus(FillReport { bin: BIN, blocked: false }))
        }
        (DeviceState::Reporting, DeviceEvent::ReportAck | DeviceEvent::ReportTimeout) => {
            (DeviceState::Idle, Action::RotateSorter(SorterPosition::Neutral))
        }
        (s, _) => (s, Action::None),
    }
}

#[test]
fn exhaustive_transition_table() {
    let mut cells = 0;
    let mut moves = 0;
    for blocked in [false, true] {
        for state in all_states() {
            for event in all_events(blocked) {
                let want = expected(state, &event);
                let got = step(state, event.clone());
                assert_eq!(got, want, "{state:?} x {}", event.name());
                cells += 1;
                moves += usize::from(got.0 != state);
            }
        }
    }
    assert_eq!(cells, 2 * 8 * 9);
    // 8 documented moves (fill counted once per flag) plus 7 fault edges, per flag value.
    assert_eq!(moves, 2 * (8 + 7));
}

#[test]
fn classified_routing_agrees_with_taxonomy() {
    for c in TrashCategory::ALL {
        let (state, action) = step(DeviceState::Classifying, DeviceEvent::Classified(ClassificationResult { category: c, confidence: 1.0 }));
        assert_eq!(state, DeviceState::Routing(bin_for(c)));
        assert_eq!(action, Action::RotateSorter(SorterPosition::for_bin(bin_for(c))));
    }
}

fn arb_event() -> impl Strategy<Value = DeviceEvent> {
    prop_oneof![
        Just(DeviceEvent::MotionDetected),
        Just(DeviceEvent::ImageReady(image())),
        (0usize..8).prop_map(|k| DeviceEvent::Classified(ClassificationResult {
            category: TrashCategory::ALL[k],
            confidence: 0.5
        })),
        Just(DeviceEvent::ServoInPosition),
        Just(DeviceEvent::DropComplete),
        (any::<bool>(), any::<bool>()).prop_map(|(r, blocked)| DeviceEvent::FillLevel {
            bin: if r { BinKind::Recyclable } else { BinKind::NonRecyclable },
            blocked
        }),
        Just(DeviceEvent::ReportAck),
        Just(DeviceEvent::ReportTimeout),
        Just(DeviceEvent::SensorFault(PortFault::failure(PortName::Camera, "x"))),
    ]
}

proptest! {
    #[test]
    fn drop_never_precedes_servo_in_position(events in proptest::collection::vec(arb_event(), 0..60)) {
        let mut state = DeviceState::Idle;
        for event in events {
            let is_servo = event == DeviceEvent::ServoInPosition;
            let (next, action) = step(state, event);
            if action == Action::ReleaseDrop {
                prop_assert!(is_servo);
                prop_assert!(matches!(state, DeviceState::Routing(_)));
            }
            state = next;
        }
    }
}
