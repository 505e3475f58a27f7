use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::classifier::TrashCategory;
use crate::device::{Capacities, PortName};
use crate::imaging::LabeledImage;
use crate::rng;

/// Scripted arrivals, read from JSON:
///
/// ```json
/// {"seed": 7,
///  "capacities": {"recyclable": 3, "non_recyclable": 3},
///  "items": [{"t": 0.0, "image": "can-0001", "category": "can"}],
///  "faults": [{"t": 12.0, "port": "camera"}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub capacities: Capacities,
    pub items: Vec<ScenarioItem>,
    #[serde(default)]
    pub faults: Vec<FaultInjection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioItem {
    /// Arrival time in simulated seconds.
    pub t: f64,
    /// Source id of the item's image.
    pub image: String,
    pub category: TrashCategory,
}

/// Makes `port` fail in the cycle in flight at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultInjection {
    pub t: f64,
    pub port: PortName,
}

/// Labeled images addressable by source id.
#[derive(Debug, Clone, Default)]
pub struct ImageLibrary {
    items: HashMap<String, LabeledImage>,
}

impl ImageLibrary {
    pub fn new(items: impl IntoIterator<Item = LabeledImage>) -> Self {
        Self { items: items.into_iter().map(|i| (i.source_id.clone(), i)).collect() }
    }

    pub fn get(&self, id: &str) -> Option<&LabeledImage> {
        self.items.get(id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl Scenario {
    pub fn empty(seed: u64, capacities: Capacities) -> Self {
        Self { seed, capacities, items: Vec::new(), faults: Vec::new() }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Invalid(format!("scenario: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// `count` arrivals drawn uniformly from `pool`, spaced by
    /// `gap * U[0.5, 1.5)` seconds, all from `rng::seeded(seed)`.
    pub fn random(seed: u64, count: usize, pool: &[LabeledImage], capacities: Capacities, gap: f64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut t = 0.0;
        let items = (0..count)
            .map(|_| {
                let pick = &pool[rng.gen_range(0..pool.len())];
                let item = ScenarioItem { t, image: pick.source_id.clone(), category: pick.label };
                t += gap * rng.gen_range(0.5..1.5);
                item
            })
            .collect();
        Self { seed, capacities, items, faults: Vec::new() }
    }

    /// Checks the scenario against itself and the image library. Runs before
    /// any cycle.
    pub fn validate(&self, library: &ImageLibrary) -> Result<(), SimError> {
        if self.capacities.recyclable == 0 || self.capacities.non_recyclable == 0 {
            return Err(SimError::Invalid("capacities must be at least 1".into()));
        }
        let mut last = f64::NEG_INFINITY;
        for (i, item) in self.items.iter().enumerate() {
            if !item.t.is_finite() || item.t <= last {
                return Err(SimError::Invalid(format!("item {i}: arrival times must be finite and strictly increasing")));
            }
            last = item.t;
            match library.get(&item.image) {
                None => return Err(SimError::UnknownImage(item.image.clone())),
                Some(known) if known.label != item.category => {
                    return Err(SimError::Invalid(format!(
                        "item {i}: image `{}` is labeled {} but the scenario says {}",
                        item.image, known.label, item.category
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(f) = self.faults.iter().find(|f| !f.t.is_finite()) {
            return Err(SimError::Invalid(format!("fault time {} is not finite", f.t)));
        }
        Ok(())
    }
}
