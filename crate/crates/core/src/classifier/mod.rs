//! Waste taxonomy, the category to bin mapping, and the classifier interface.

mod baseline;
mod eval;
mod model_file;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{Image, ImagingError, LabeledImage};

pub use baseline::{feature_vector, train_baseline, BaselineModel, FEATURE_DIM, FEATURE_SIDE};
pub use eval::{evaluate, EvalReport};
pub use model_file::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training set has no images of category `{0}`")]
    MissingClass(TrashCategory),
    #[error("image is not known to the ground-truth classifier")]
    UnknownImage,
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The eight trash categories, in their stable ordinal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrashCategory {
    PlasticBottle,
    Can,
    Paper,
    Pen,
    PlasticBag,
    StyrofoamContainer,
    FoodPacket,
    PlasticGlass,
}

impl TrashCategory {
    pub const COUNT: usize = 8;

    pub const ALL: [TrashCategory; 8] = [
        TrashCategory::PlasticBottle,
        TrashCategory::Can,
        TrashCategory::Paper,
        TrashCategory::Pen,
        TrashCategory::PlasticBag,
        TrashCategory::StyrofoamContainer,
        TrashCategory::FoodPacket,
        TrashCategory::PlasticGlass,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    /// snake_case name used in files, directories and JSON.
    pub fn slug(self) -> &'static str {
        match self {
            TrashCategory::PlasticBottle => "plastic_bottle",
            TrashCategory::Can => "can",
            TrashCategory::Paper => "paper",
            TrashCategory::Pen => "pen",
            TrashCategory::PlasticBag => "plastic_bag",
            TrashCategory::StyrofoamContainer => "styrofoam_container",
            TrashCategory::FoodPacket => "food_packet",
            TrashCategory::PlasticGlass => "plastic_glass",
        }
    }

    pub fn bin(self) -> BinKind {
        bin_for(self)
    }
}

impl fmt::Display for TrashCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for TrashCategory {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.slug() == s)
            .ok_or_else(|| ClassifierError::InvalidArgument(format!("unknown category `{s}`")))
    }
}

/// Bin 1 takes recyclables, Bin 2 everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinKind {
    Recyclable,
    NonRecyclable,
}

impl BinKind {
    pub const ALL: [BinKind; 2] = [BinKind::Recyclable, BinKind::NonRecyclable];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 1 or 2, as printed on the bins.
    pub fn number(self) -> u8 {
        match self {
            BinKind::Recyclable => 1,
            BinKind::NonRecyclable => 2,
        }
    }
}

impl fmt::Display for BinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinKind::Recyclable => f.write_str("recyclable"),
            BinKind::NonRecyclable => f.write_str("non_recyclable"),
        }
    }
}

/// Plastic bottles, cans, paper and pens are recyclable; plastic bags,
/// styrofoam containers, food packets and plastic glasses are not.
pub fn bin_for(category: TrashCategory) -> BinKind {
    match category {
        TrashCategory::PlasticBottle | TrashCategory::Can | TrashCategory::Paper | TrashCategory::Pen => {
            BinKind::Recyclable
        }
        TrashCategory::PlasticBag
        | TrashCategory::StyrofoamContainer
        | TrashCategory::FoodPacket
        | TrashCategory::PlasticGlass => BinKind::NonRecyclable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub category: TrashCategory,
    /// In `[0, 1]`.
    pub confidence: f64,
}

/// Anything that can put a category on an image.
///
/// Implementations must be deterministic and safe to call from several threads.
pub trait Classifier: Send + Sync {
    fn classify(&self, image: &Image) -> Result<ClassificationResult, ClassifierError>;

    fn name(&self) -> &str;
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn classify(&self, image: &Image) -> Result<ClassificationResult, ClassifierError> {
        (**self).classify(image)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn classify(&self, image: &Image) -> Result<ClassificationResult, ClassifierError> {
        (**self).classify(image)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Looks the image up in a table of known labeled images. Used to drive
/// simulations where routing, not recognition, is under test.
#[derive(Debug, Clone, Default)]
pub struct GroundTruthClassifier {
    labels: HashMap<Image, TrashCategory>,
}

impl GroundTruthClassifier {
    pub fn new<'a>(items: impl IntoIterator<Item = &'a LabeledImage>) -> Self {
        let labels = items.into_iter().map(|item| (item.image.clone(), item.label)).collect();
        Self { labels }
    }
}

impl Classifier for GroundTruthClassifier {
    fn classify(&self, image: &Image) -> Result<ClassificationResult, ClassifierError> {
        self.labels
            .get(image)
            .map(|&category| ClassificationResult { category, confidence: 1.0 })
            .ok_or(ClassifierError::UnknownImage)
    }

    fn name(&self) -> &str {
        "ground-truth"
    }
}

/// Predicts the same category for every image.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier(pub TrashCategory);

impl Classifier for ConstantClassifier {
    fn classify(&self, _image: &Image) -> Result<ClassificationResult, ClassifierError> {
        Ok(ClassificationResult { category: self.0, confidence: 1.0 })
    }

    fn name(&self) -> &str {
        "constant"
    }
}
