//! Procedurally drawn stand-in corpus: one shape and color per category on a
//! dark noisy background, with seeded jitter in position, size and noise.

use rand::Rng;

use crate::classifier::TrashCategory;
use crate::imaging::{Image, LabeledImage};
use crate::rng;

pub const SYNTHETIC_SIDE: usize = 64;

const BACKGROUND: [u8; 3] = [20, 20, 20];
const NOISE: i32 = 20;
const MAX_SHIFT: f64 = 1.5;

/// Foreground colors; their channel means are spread 25 to 30 levels apart.
fn color(category: TrashCategory) -> [u8; 3] {
    match category {
        TrashCategory::Pen => [20, 40, 150],
        TrashCategory::Can => [200, 50, 35],
        TrashCategory::FoodPacket => [230, 110, 20],
        TrashCategory::PlasticBottle => [90, 160, 185],
        TrashCategory::PlasticGlass => [150, 200, 160],
        TrashCategory::PlasticBag => [225, 215, 145],
        TrashCategory::Paper => [235, 225, 200],
        TrashCategory::StyrofoamContainer => [250, 250, 250],
    }
}

/// Whether offset `(dx, dy)` from the shape center is inside the shape at scale `s`.
fn inside(category: TrashCategory, dx: f64, dy: f64, s: f64) -> bool {
    match category {
        TrashCategory::PlasticBottle => {
            (dx.abs() <= 7.0 * s && dy.abs() <= 20.0 * s) || (dx.abs() <= 3.0 * s && dy >= -27.0 * s && dy < -20.0 * s)
        }
        TrashCategory::Can => dx * dx + dy * dy <= (16.0 * s).powi(2),
        TrashCategory::Paper => dx.abs() <= 20.0 * s && dy.abs() <= 20.0 * s,
        TrashCategory::Pen => (dx - dy).abs() <= 3.0 && dx.abs() <= 24.0 * s,
        TrashCategory::PlasticBag => (dx / (26.0 * s)).powi(2) + (dy / (16.0 * s)).powi(2) <= 1.0,
        TrashCategory::StyrofoamContainer => {
            let edge = dx.abs().max(dy.abs());
            edge <= 22.0 * s && edge >= 14.0 * s
        }
        TrashCategory::FoodPacket => {
            (dx.abs() <= 6.0 * s && dy.abs() <= 24.0 * s) || (dy.abs() <= 6.0 * s && dx.abs() <= 24.0 * s)
        }
        TrashCategory::PlasticGlass => {
            let r2 = dx * dx + dy * dy;
            r2 >= (13.0 * s).powi(2) && r2 <= (19.0 * s).powi(2)
        }
    }
}

/// Draws image `index` of `category`. Every image has its own random stream.
pub fn synthetic_image(seed: u64, category: TrashCategory, index: usize) -> Image {
    let mut rng = rng::split(seed, ((category.ordinal() as u64) << 32) | index as u64);
    let center = (SYNTHETIC_SIDE as f64 - 1.0) / 2.0;
    let cx = center + rng.gen_range(-MAX_SHIFT..=MAX_SHIFT);
    let cy = center + rng.gen_range(-MAX_SHIFT..=MAX_SHIFT);
    let scale = rng.gen_range(0.95..=1.05);
    let fg = color(category);

    let mut pixels = Vec::with_capacity(SYNTHETIC_SIDE * SYNTHETIC_SIDE * 3);
    for y in 0..SYNTHETIC_SIDE {
        for x in 0..SYNTHETIC_SIDE {
            let base = if inside(category, x as f64 - cx, y as f64 - cy, scale) { fg } else { BACKGROUND };
            for channel in base {
                let noisy = i32::from(channel) + rng.gen_range(-NOISE..=NOISE);
                pixels.push(noisy.clamp(0, 255) as u8);
            }
        }
    }
    Image::new(SYNTHETIC_SIDE, SYNTHETIC_SIDE, 3, pixels).expect("synthetic image shape")
}

/// Source id of synthetic image `index` of `category`: `<slug>-<index:04>`.
pub fn synthetic_id(category: TrashCategory, index: usize) -> String {
    format!("{}-{index:04}", category.slug())
}

/// `per_class` 64x64 RGB images for each category, grouped by category.
pub fn generate_synthetic_corpus(seed: u64, per_class: usize) -> Vec<LabeledImage> {
    TrashCategory::ALL
        .into_iter()
        .flat_map(|c| {
            (0..per_class).map(move |i| LabeledImage::new(synthetic_image(seed, c, i), c, synthetic_id(c, i)))
        })
        .collect()
}
