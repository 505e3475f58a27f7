use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::{ImagingError, LabeledImage, Result};
use crate::classifier::TrashCategory;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub train: Vec<LabeledImage>,
    pub validation: Vec<LabeledImage>,
}

/// Stratified train/validation split.
///
/// Each category's items (in input order) are shuffled with the stream
/// `rng::split(seed, ordinal)`; the first `round(n * train_fraction)` go to
/// training, capped at `n - 1` when `n >= 2` so validation keeps at least one.
/// Categories are emitted in ordinal order.
pub fn split_dataset(items: &[LabeledImage], train_fraction: f64, seed: u64) -> Result<SplitResult> {
    if items.is_empty() {
        return Err(ImagingError::InvalidArgument("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ImagingError::InvalidArgument(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = items.iter().find(|i| !seen.insert(i.source_id.as_str())) {
        return Err(ImagingError::InvalidArgument(format!("duplicate source id `{}`", dup.source_id)));
    }

    let mut result = SplitResult { train: Vec::new(), validation: Vec::new() };
    for category in TrashCategory::ALL {
        let mut members: Vec<&LabeledImage> = items.iter().filter(|i| i.label == category).collect();
        let n = members.len();
        if n == 0 {
            continue;
        }
        members.shuffle(&mut rng::split(seed, category.ordinal() as u64));
        let n_train = train_count(n, train_fraction);
        result.train.extend(members[..n_train].iter().map(|i| (*i).clone()));
        result.validation.extend(members[n_train..].iter().map(|i| (*i).clone()));
    }
    Ok(result)
}

pub(crate) fn train_count(n: usize, train_fraction: f64) -> usize {
    let rounded = (n as f64 * train_fraction).round() as usize;
    if n >= 2 {
        rounded.min(n - 1)
    } else {
        rounded.min(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Image;

    fn items(per_class: &[(TrashCategory, usize)]) -> Vec<LabeledImage> {
        per_class
            .iter()
            .flat_map(|&(c, n)| {
                (0..n).map(move |i| LabeledImage::new(Image::filled(1, 1, 1, i as u8).unwrap(), c, format!("{c}-{i}")))
            })
            .collect()
    }

    #[test]
    fn single_class_eighty_twenty() {
        let s = split_dataset(&items(&[(TrashCategory::Pen, 10)]), 0.8, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (8, 2));
    }

    #[test]
    fn per_class_rounding() {
        let s = split_dataset(&items(&[(TrashCategory::Pen, 5), (TrashCategory::Can, 5)]), 0.8, 9).unwrap();
        for c in [TrashCategory::Pen, TrashCategory::Can] {
            assert_eq!(s.train.iter().filter(|i| i.label == c).count(), 4);
            assert_eq!(s.validation.iter().filter(|i| i.label == c).count(), 1);
        }
    }

    #[test]
    fn small_classes_keep_a_validation_item() {
        assert_eq!(train_count(1, 0.8), 1);
        assert_eq!(train_count(2, 0.8), 1);
        assert_eq!(train_count(2, 0.2), 0);
        assert_eq!(train_count(3, 0.8), 2);
        assert_eq!(train_count(7, 0.5), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(split_dataset(&[], 0.8, 0).is_err());
        let xs = items(&[(TrashCategory::Pen, 3)]);
        assert!(split_dataset(&xs, 0.0, 0).is_err());
        assert!(split_dataset(&xs, 1.0, 0).is_err());
        let mut dup = xs.clone();
        dup.push(xs[0].clone());
        assert!(split_dataset(&dup, 0.8, 0).is_err());
    }

    #[test]
    fn seed_changes_assignment_but_not_sizes() {
        let xs = items(&[(TrashCategory::Paper, 20)]);
        let a = split_dataset(&xs, 0.8, 1).unwrap();
        let b = split_dataset(&xs, 0.8, 2).unwrap();
        assert_eq!(a.train.len(), b.train.len());
        assert_ne!(a.validation, b.validation);
        assert_eq!(a, split_dataset(&xs, 0.8, 1).unwrap());
    }
}
