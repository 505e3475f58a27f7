use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bench::{Bench, BinFillState, SimTiming};
use super::{FaultInjection, ImageLibrary, Scenario, ScenarioItem, SimError};
use crate::classifier::{bin_for, BinKind, Classifier};
use crate::device::{CapturedImage, Controller, CycleReport, DeviceConfig, DeviceState};
use crate::telemetry::{Envelope, TelemetryMessage, TelemetrySink};

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Bin identity, angles and timeouts. Capacities come from the scenario.
    pub device: DeviceConfig,
    pub timing: SimTiming,
}

/// One line of the trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub item: ScenarioItem,
    pub cycle: CycleReport,
    /// The item landed in a bin that was already at capacity.
    pub overflow: bool,
    pub fill: BinFillState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    /// Every message the device emitted, registration first.
    pub messages: Vec<Envelope>,
    pub final_fill: BinFillState,
    /// Injected faults that fell between cycles.
    pub idle_faults: Vec<FaultInjection>,
}

impl SimulationTrace {
    pub fn completed_cycles(&self) -> usize {
        self.records.iter().filter(|r| r.cycle.completed()).count()
    }

    pub fn full_alerts(&self, bin: BinKind) -> usize {
        self.records.iter().flat_map(|r| r.cycle.full_alerts()).filter(|&b| b == bin).count()
    }

    /// Fraction of classified items whose predicted category is their true one.
    pub fn classification_accuracy(&self) -> f64 {
        ratio(self.records.iter().filter_map(|r| r.cycle.prediction.map(|p| p.category == r.item.category)))
    }

    /// Fraction of routed items sent to the bin their true category belongs in.
    pub fn routing_accuracy(&self) -> f64 {
        ratio(self.records.iter().filter_map(|r| r.cycle.target_bin.map(|b| b == bin_for(r.item.category))))
    }

    /// Writes one JSON object per cycle.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        buf
    }
}

fn ratio(outcomes: impl Iterator<Item = bool>) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for ok in outcomes {
        total += 1;
        hits += usize::from(ok);
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Runs every scenario item through a controller wired to virtual hardware.
///
/// Cycles run back to back: a cycle starts at the later of its arrival time
/// and the end of the previous cycle. A fault injected at `t` is armed for the
/// cycle whose nominal window `[start, start + nominal)` contains `t`; faults
/// outside every window are reported as idle faults. The controller is reset
/// after a faulted cycle and the item is discarded.
pub fn run_scenario<C, S>(
    scenario: &Scenario,
    library: &ImageLibrary,
    classifier: &C,
    sink: S,
    options: &SimOptions,
) -> Result<SimulationTrace, SimError>
where
    C: Classifier + ?Sized,
    S: TelemetrySink,
{
    scenario.validate(library)?;
    let mut config = options.device.clone();
    config.capacity = scenario.capacities;
    config.validate()?;

    let mut bench = Bench::new(scenario.capacities, config.angles, options.timing, config.timeouts.phase_seconds, sink);
    let mut controller = Controller::new(config);
    let mut messages = vec![controller.register(&mut bench).0];

    let mut faults = scenario.faults.clone();
    faults.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut faults = faults.into_iter().peekable();
    let mut idle_faults = Vec::new();
    let nominal = options.timing.nominal_cycle();

    let mut records = Vec::with_capacity(scenario.items.len());
    for (index, item) in scenario.items.iter().enumerate() {
        let start = item.t.max(bench.clock);
        while let Some(f) = faults.next_if(|f| f.t < start) {
            idle_faults.push(f);
        }
        bench.clock = start;
        bench.armed_fault = None;
        while let Some(f) = faults.next_if(|f| f.t < start + nominal) {
            bench.armed_fault.get_or_insert(f.port);
        }

        let labeled = library.get(&item.image).expect("validated");
        bench.plate = Some(CapturedImage { id: item.image.clone(), image: labeled.image.clone() });
        bench.overflowed = false;

        let cycle = controller.run_cycle(&mut bench, classifier)?.ok_or_else(|| {
            SimError::Invalid(format!("item {index}: motion sensor did not fire"))
        })?;
        if cycle.final_state == DeviceState::Fault {
            controller.reset();
            bench.plate = None;
        }
        messages.extend(cycle.sent.iter().cloned());
        records.push(TraceRecord { index, item: item.clone(), overflow: bench.overflowed && cycle.dropped, fill: bench.fill, cycle });
    }
    idle_faults.extend(faults);

    Ok(SimulationTrace { seed: scenario.seed, records, messages, final_fill: bench.fill, idle_faults })
}

/// Messages of a trace that were full alerts, in emission order.
pub fn alert_messages(trace: &SimulationTrace) -> impl Iterator<Item = &Envelope> {
    trace.messages.iter().filter(|e| matches!(e.message, TelemetryMessage::FullAlert { .. }))
}
