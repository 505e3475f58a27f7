use rand::Rng;

use super::ops::center;
use super::{flip_horizontal, make_shear, make_translation, random_rotation, warp_affine, LabeledImage, Result};

/// Number of images produced per input.
pub const AUGMENT_VARIANTS: usize = 4;

/// Ranges for the randomized variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    /// Translation bound as a fraction of width (for x) and height (for y).
    pub max_translate_frac: f64,
    pub max_rotation_deg: f64,
    pub max_shear: f64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self { max_translate_frac: 0.10, max_rotation_deg: 25.0, max_shear: 0.20 }
    }
}

/// Produces four new labeled images from `item`:
///
/// 1. translation by `dx ~ U[-0.1 w, 0.1 w]`, `dy ~ U[-0.1 h, 0.1 h]`
/// 2. rotation about the center by `U[-25, 25]` degrees
/// 3. horizontal shear about the center row with factor `U[-0.2, 0.2]`
/// 4. horizontal flip
///
/// Draws are taken from `rng` in exactly that order (dx, dy, angle, shear) and
/// uncovered pixels are filled with 0. Output ids are `<source_id>-aug<k>`,
/// `k` in `1..=4`.
pub fn augment_one<R: Rng + ?Sized>(item: &LabeledImage, rng: &mut R) -> Result<Vec<LabeledImage>> {
    augment_with(item, rng, &AugmentParams::default())
}

pub fn augment_with<R: Rng + ?Sized>(item: &LabeledImage, rng: &mut R, params: &AugmentParams) -> Result<Vec<LabeledImage>> {
    let img = &item.image;
    let max_dx = params.max_translate_frac * img.width() as f64;
    let max_dy = params.max_translate_frac * img.height() as f64;
    let dx = rng.gen_range(-max_dx..=max_dx);
    let dy = rng.gen_range(-max_dy..=max_dy);
    let translated = warp_affine(img, &make_translation(dx, dy)?, 0)?;
    let rotated = random_rotation(img, rng, params.max_rotation_deg)?;
    let shear = rng.gen_range(-params.max_shear..=params.max_shear);
    let sheared = warp_affine(img, &make_shear(shear, center(img.height()))?, 0)?;
    let flipped = flip_horizontal(img);

    Ok([translated, rotated, sheared, flipped]
        .into_iter()
        .enumerate()
        .map(|(i, image)| LabeledImage::new(image, item.label, format!("{}-aug{}", item.source_id, i + 1)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::TrashCategory;
    use crate::imaging::{make_rotation, Image};
    use crate::rng::seeded;

    fn sample() -> LabeledImage {
        let img = Image::new(10, 8, 3, (0..240).map(|v| (v * 7 % 256) as u8).collect()).unwrap();
        LabeledImage::new(img, TrashCategory::Can, "can-0001")
    }

    #[test]
    fn four_outputs_with_labels_and_ids() {
        let item = sample();
        let out = augment_one(&item, &mut seeded(1)).unwrap();
        assert_eq!(out.len(), AUGMENT_VARIANTS);
        for (k, o) in out.iter().enumerate() {
            assert_eq!(o.label, item.label);
            assert_eq!(o.source_id, format!("can-0001-aug{}", k + 1));
            assert_eq!((o.image.width(), o.image.height(), o.image.channels()), (10, 8, 3));
        }
    }

    #[test]
    fn replays_documented_primitives() {
        let item = sample();
        let got = augment_one(&item, &mut seeded(42)).unwrap();

        let mut rng = seeded(42);
        let dx: f64 = rng.gen_range(-1.0..=1.0);
        let dy: f64 = rng.gen_range(-0.8..=0.8);
        let angle: f64 = rng.gen_range(-25.0..=25.0);
        let shear: f64 = rng.gen_range(-0.2..=0.2);
        let img = &item.image;
        let want = [
            warp_affine(img, &make_translation(dx, dy).unwrap(), 0).unwrap(),
            warp_affine(img, &make_rotation(angle, 4.5, 3.5).unwrap(), 0).unwrap(),
            warp_affine(img, &make_shear(shear, 3.5).unwrap(), 0).unwrap(),
            flip_horizontal(img),
        ];
        for (g, w) in got.iter().zip(want.iter()) {
            assert_eq!(&g.image, w);
        }
    }
}
