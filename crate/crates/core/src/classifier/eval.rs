use std::fmt;

use serde::{Deserialize, Serialize};

use super::{bin_for, Classifier, ClassifierError, TrashCategory};
use crate::imaging::LabeledImage;

/// Accuracy and an 8x8 confusion matrix indexed `[true][predicted]` by
/// category ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub total: u64,
    pub confusion: [[u64; TrashCategory::COUNT]; TrashCategory::COUNT],
}

impl EvalReport {
    pub fn correct(&self) -> u64 {
        (0..TrashCategory::COUNT).map(|k| self.confusion[k][k]).sum()
    }

    pub fn class_count(&self, category: TrashCategory) -> u64 {
        self.confusion[category.ordinal()].iter().sum()
    }

    /// Fraction of items whose prediction lands in the same bin as the truth.
    pub fn bin_accuracy(&self) -> f64 {
        let mut right = 0;
        for t in TrashCategory::ALL {
            for p in TrashCategory::ALL {
                if bin_for(t) == bin_for(p) {
                    right += self.confusion[t.ordinal()][p.ordinal()];
                }
            }
        }
        right as f64 / self.total as f64
    }
}

/// Classifies every item and tallies the results.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, items: &[LabeledImage]) -> Result<EvalReport, ClassifierError> {
    if items.is_empty() {
        return Err(ClassifierError::InvalidArgument("nothing to evaluate".into()));
    }
    let mut confusion = [[0u64; TrashCategory::COUNT]; TrashCategory::COUNT];
    for item in items {
        let predicted = model.classify(&item.image)?.category;
        confusion[item.label.ordinal()][predicted.ordinal()] += 1;
    }
    let total = items.len() as u64;
    let correct: u64 = (0..TrashCategory::COUNT).map(|k| confusion[k][k]).sum();
    Ok(EvalReport { accuracy: correct as f64 / total as f64, total, confusion })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy: {:.4} ({}/{})", self.accuracy, self.correct(), self.total)?;
        writeln!(f, "bin accuracy: {:.4}", self.bin_accuracy())?;
        write!(f, "{:>20}", "true \\ predicted")?;
        for p in 0..TrashCategory::COUNT {
            write!(f, " {p:>5}")?;
        }
        writeln!(f)?;
        for t in TrashCategory::ALL {
            write!(f, "{:>17} {:>2}", t.slug(), t.ordinal())?;
            for n in &self.confusion[t.ordinal()] {
                write!(f, " {n:>5}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
