//! Virtual PIR, camera, servos, IR sensors and reporter on a logical clock.

use serde::{Deserialize, Serialize};

use crate::classifier::BinKind;
use crate::device::{Capacities, CapturedImage, HardwarePorts, PortFault, PortName, SorterAngles};
use crate::telemetry::{Envelope, TelemetrySink};

/// Simulated seconds each hardware action takes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimTiming {
    pub capture: f64,
    pub sorter: f64,
    pub drop_gate: f64,
    pub fill_read: f64,
    pub report: f64,
}

impl Default for SimTiming {
    fn default() -> Self {
        Self { capture: 0.5, sorter: 0.3, drop_gate: 0.2, fill_read: 0.05, report: 0.1 }
    }
}

impl SimTiming {
    /// Length of a cycle with no faults and no retries.
    pub fn nominal_cycle(&self) -> f64 {
        self.capture + self.sorter + 2.0 * self.drop_gate + self.fill_read + self.report + self.sorter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinFill {
    pub item_count: u32,
    pub capacity: u32,
}

/// Item counts per receptacle. Drops into a full bin still count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinFillState {
    pub recyclable: BinFill,
    pub non_recyclable: BinFill,
}

impl BinFillState {
    pub fn new(capacities: Capacities) -> Self {
        Self {
            recyclable: BinFill { item_count: 0, capacity: capacities.recyclable },
            non_recyclable: BinFill { item_count: 0, capacity: capacities.non_recyclable },
        }
    }

    pub fn get(&self, bin: BinKind) -> &BinFill {
        match bin {
            BinKind::Recyclable => &self.recyclable,
            BinKind::NonRecyclable => &self.non_recyclable,
        }
    }

    fn get_mut(&mut self, bin: BinKind) -> &mut BinFill {
        match bin {
            BinKind::Recyclable => &mut self.recyclable,
            BinKind::NonRecyclable => &mut self.non_recyclable,
        }
    }

    pub fn total(&self) -> u32 {
        self.recyclable.item_count + self.non_recyclable.item_count
    }
}

/// The bin's physical surroundings for one simulation.
pub struct Bench<S> {
    pub(crate) clock: f64,
    pub(crate) plate: Option<CapturedImage>,
    pub(crate) fill: BinFillState,
    /// Port that fails on its next use.
    pub(crate) armed_fault: Option<PortName>,
    /// Set when the last drop landed in an already-full bin.
    pub(crate) overflowed: bool,
    pub(crate) delivered: Vec<Envelope>,
    angles: SorterAngles,
    sorter_angle: u16,
    gate_open: bool,
    timing: SimTiming,
    phase_timeout: f64,
    sink: S,
}

impl<S: TelemetrySink> Bench<S> {
    pub fn new(capacities: Capacities, angles: SorterAngles, timing: SimTiming, phase_timeout: f64, sink: S) -> Self {
        Self {
            clock: 0.0,
            plate: None,
            fill: BinFillState::new(capacities),
            armed_fault: None,
            overflowed: false,
            delivered: Vec::new(),
            sorter_angle: angles.neutral,
            angles,
            gate_open: false,
            timing,
            phase_timeout,
            sink,
        }
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    /// Consumes an armed fault for `port`, if any, after the phase timeout.
    fn check(&mut self, port: PortName) -> Result<(), PortFault> {
        if self.armed_fault == Some(port) {
            self.armed_fault = None;
            self.clock += self.phase_timeout;
            return Err(PortFault::timeout(port, format!("no response within {} s", self.phase_timeout)));
        }
        Ok(())
    }
}

impl<S: TelemetrySink> HardwarePorts for Bench<S> {
    fn now(&self) -> f64 {
        self.clock
    }

    fn motion_detected(&mut self) -> Result<bool, PortFault> {
        self.check(PortName::Pir)?;
        Ok(self.plate.is_some())
    }

    fn capture(&mut self) -> Result<CapturedImage, PortFault> {
        self.check(PortName::Camera)?;
        self.clock += self.timing.capture;
        self.plate.clone().ok_or_else(|| PortFault::failure(PortName::Camera, "plate is empty"))
    }

    fn set_sorter_angle(&mut self, degrees: u16) -> Result<(), PortFault> {
        self.check(PortName::SorterServo)?;
        self.clock += self.timing.sorter;
        self.sorter_angle = degrees;
        Ok(())
    }

    fn set_drop_gate(&mut self, open: bool) -> Result<(), PortFault> {
        self.check(PortName::DropServo)?;
        self.clock += self.timing.drop_gate;
        if open && !self.gate_open {
            let bin = if self.sorter_angle == self.angles.bin1 {
                BinKind::Recyclable
            } else if self.sorter_angle == self.angles.bin2 {
                BinKind::NonRecyclable
            } else {
                return Err(PortFault::failure(PortName::DropServo, format!("sorter at {} is over no bin", self.sorter_angle)));
            };
            if self.plate.take().is_some() {
                let fill = self.fill.get_mut(bin);
                self.overflowed = fill.item_count >= fill.capacity;
                fill.item_count += 1;
            }
        }
        self.gate_open = open;
        Ok(())
    }

    fn fill_blocked(&mut self, bin: BinKind) -> Result<bool, PortFault> {
        self.check(PortName::FillSensor)?;
        self.clock += self.timing.fill_read;
        let fill = self.fill.get(bin);
        Ok(fill.item_count >= fill.capacity)
    }

    fn send(&mut self, envelope: &Envelope) -> Result<(), PortFault> {
        self.check(PortName::Reporter)?;
        self.clock += self.timing.report;
        self.sink
            .send(envelope)
            .map_err(|e| PortFault::timeout(PortName::Reporter, e.to_string()))?;
        self.delivered.push(envelope.clone());
        Ok(())
    }

    fn classifier_ready(&mut self) -> Result<(), PortFault> {
        self.check(PortName::Classifier)
    }
}
