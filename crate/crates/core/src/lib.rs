//! Core of the sorting trash bin: image pipeline, waste classifier, bin
//! controller, deterministic simulator and fleet telemetry state.

pub mod classifier;
pub mod imaging;
pub mod rng;
pub mod telemetry;
pub mod device;
pub mod simulator;
