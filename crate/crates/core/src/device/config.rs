use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DeviceError, SorterPosition};
use crate::classifier::BinKind;
use crate::telemetry::BinRecord;

/// Device settings, read from TOML:
///
/// ```toml
/// bin_id = "bin-01"
/// server = "http://127.0.0.1:8080"
/// model = "model.bin"
/// locate = "Building A, ground floor"
///
/// [angles]
/// bin1 = 45
/// neutral = 90
/// bin2 = 135
///
/// [timeouts]
/// phase_seconds = 5.0
///
/// [capacity]
/// recyclable = 20
/// non_recyclable = 20
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub bin_id: String,
    pub server: String,
    pub model: Option<PathBuf>,
    pub locate: String,
    pub description: String,
    /// Registration date sent with the bin record.
    pub created: String,
    pub angles: SorterAngles,
    pub timeouts: Timeouts,
    pub capacity: Capacities,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            bin_id: "bin-01".into(),
            server: "http://127.0.0.1:8080".into(),
            model: None,
            locate: String::new(),
            description: String::new(),
            created: "2026-01-01T00:00:00Z".into(),
            angles: SorterAngles::default(),
            timeouts: Timeouts::default(),
            capacity: Capacities::default(),
        }
    }
}

impl DeviceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, DeviceError> {
        let config: DeviceConfig = toml::from_str(text).map_err(|e| DeviceError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DeviceError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        self.record().validate().map_err(|e| DeviceError::Config(e.to_string()))?;
        if self.capacity.recyclable == 0 || self.capacity.non_recyclable == 0 {
            return Err(DeviceError::Config("capacities must be at least 1".into()));
        }
        if !(self.timeouts.phase_seconds > 0.0 && self.timeouts.phase_seconds.is_finite()) {
            return Err(DeviceError::Config("phase timeout must be positive".into()));
        }
        if [self.angles.bin1, self.angles.neutral, self.angles.bin2].iter().any(|&a| a > 180) {
            return Err(DeviceError::Config("servo angles must be within 0..=180".into()));
        }
        Ok(())
    }

    /// The registry record this device announces.
    pub fn record(&self) -> BinRecord {
        let mut record = BinRecord::new(&self.bin_id, &self.created, &self.locate);
        record.description = self.description.clone();
        record
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SorterAngles {
    pub bin1: u16,
    pub neutral: u16,
    pub bin2: u16,
}

impl Default for SorterAngles {
    fn default() -> Self {
        Self {
            bin1: SorterPosition::Bin1.degrees(),
            neutral: SorterPosition::Neutral.degrees(),
            bin2: SorterPosition::Bin2.degrees(),
        }
    }
}

impl SorterAngles {
    pub fn degrees(&self, position: SorterPosition) -> u16 {
        match position {
            SorterPosition::Bin1 => self.bin1,
            SorterPosition::Neutral => self.neutral,
            SorterPosition::Bin2 => self.bin2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timeouts {
    /// How long any single hardware phase may take before it counts as a fault.
    pub phase_seconds: f64,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self { phase_seconds: 5.0 }
    }
}

/// Items each receptacle holds before it reads as full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacities {
    pub recyclable: u32,
    pub non_recyclable: u32,
}

impl Default for Capacities {
    fn default() -> Self {
        Self { recyclable: 20, non_recyclable: 20 }
    }
}

impl Capacities {
    pub fn get(&self, bin: BinKind) -> u32 {
        match bin {
            BinKind::Recyclable => self.recyclable,
            BinKind::NonRecyclable => self.non_recyclable,
        }
    }
}
