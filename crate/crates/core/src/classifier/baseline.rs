//! Nearest-centroid baseline over 32x32 grayscale pixels.

use super::{ClassificationResult, Classifier, ClassifierError, TrashCategory};
use crate::imaging::{resize, Image, LabeledImage};

pub const FEATURE_SIDE: usize = 32;
pub const FEATURE_DIM: usize = FEATURE_SIDE * FEATURE_SIDE;

/// Resizes to 32x32 (nearest neighbor), averages channels and divides by 255.
pub fn feature_vector(img: &Image) -> Vec<f64> {
    let small = resize(img, FEATURE_SIDE, FEATURE_SIDE).expect("feature side is non-zero");
    let channels = small.channels();
    small
        .pixels()
        .chunks_exact(channels)
        .map(|px| px.iter().map(|&v| f64::from(v)).sum::<f64>() / channels as f64 / 255.0)
        .collect()
}

pub fn train_baseline(train: &[LabeledImage]) -> Result<BaselineModel, ClassifierError> {
    BaselineModel::train(train)
}

/// One mean feature vector per category, ordered by category ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    centroids: Vec<(TrashCategory, Vec<f64>)>,
}

impl BaselineModel {
    /// Averages the feature vectors of each category. Every category must be
    /// represented.
    pub fn train(train: &[LabeledImage]) -> Result<Self, ClassifierError> {
        if train.is_empty() {
            return Err(ClassifierError::InvalidArgument("training set is empty".into()));
        }
        let mut sums = vec![vec![0.0; FEATURE_DIM]; TrashCategory::COUNT];
        let mut counts = [0usize; TrashCategory::COUNT];
        for item in train {
            let k = item.label.ordinal();
            counts[k] += 1;
            for (s, v) in sums[k].iter_mut().zip(feature_vector(&item.image)) {
                *s += v;
            }
        }
        if let Some(k) = counts.iter().position(|&n| n == 0) {
            return Err(ClassifierError::MissingClass(TrashCategory::ALL[k]));
        }
        let centroids = TrashCategory::ALL
            .into_iter()
            .zip(sums)
            .zip(counts)
            .map(|((c, sum), n)| (c, sum.into_iter().map(|s| s / n as f64).collect()))
            .collect();
        Ok(Self { centroids })
    }

    /// Builds a model from explicit centroids (as loaded from disk).
    pub fn from_centroids(mut centroids: Vec<(TrashCategory, Vec<f64>)>) -> Result<Self, ClassifierError> {
        if centroids.is_empty() {
            return Err(ClassifierError::InvalidArgument("model has no categories".into()));
        }
        centroids.sort_by_key(|(c, _)| *c);
        if centroids.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(ClassifierError::InvalidArgument("category listed twice".into()));
        }
        for (c, v) in &centroids {
            if v.len() != FEATURE_DIM {
                return Err(ClassifierError::InvalidArgument(format!("centroid for {c} has {} components", v.len())));
            }
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(ClassifierError::InvalidArgument(format!("centroid for {c} leaves [0, 1]")));
            }
        }
        Ok(Self { centroids })
    }

    pub fn categories(&self) -> impl Iterator<Item = TrashCategory> + '_ {
        self.centroids.iter().map(|(c, _)| *c)
    }

    pub fn centroid(&self, category: TrashCategory) -> Option<&[f64]> {
        self.centroids.iter().find(|(c, _)| *c == category).map(|(_, v)| v.as_slice())
    }

    pub fn centroids(&self) -> &[(TrashCategory, Vec<f64>)] {
        &self.centroids
    }

    /// Euclidean distance from the image's features to each centroid.
    pub fn distances(&self, img: &Image) -> Vec<(TrashCategory, f64)> {
        let features = feature_vector(img);
        self.centroids
            .iter()
            .map(|(c, centroid)| {
                let sq: f64 = centroid.iter().zip(&features).map(|(a, b)| (a - b) * (a - b)).sum();
                (*c, sq.sqrt())
            })
            .collect()
    }
}

impl Classifier for BaselineModel {
    /// Nearest centroid wins, ties going to the lower ordinal. Confidence is the
    /// winner's share of `exp(-distance)` across all centroids.
    fn classify(&self, image: &Image) -> Result<ClassificationResult, ClassifierError> {
        let distances = self.distances(image);
        let (mut best, mut best_d) = distances[0];
        for &(c, d) in &distances[1..] {
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        let total: f64 = distances.iter().map(|(_, d)| (best_d - d).exp()).sum();
        Ok(ClassificationResult { category: best, confidence: (1.0 / total).clamp(0.0, 1.0) })
    }

    fn name(&self) -> &str {
        "nearest-centroid"
    }
}
