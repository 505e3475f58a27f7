use rand::Rng;

use super::{make_rotation, warp_affine, Image, ImagingError, NormalizedImage, Result};

/// Nearest-neighbor resize: output `(x, y)` takes input
/// `(floor(x * w / new_w), floor(y * h / new_h))`.
pub fn resize(img: &Image, new_w: usize, new_h: usize) -> Result<Image> {
    if new_w == 0 || new_h == 0 {
        return Err(ImagingError::InvalidArgument(format!("cannot resize to {new_w}x{new_h}")));
    }
    let (w, h) = (img.width(), img.height());
    Ok(img.remap(new_w, new_h, 0, |x, y| Some((x * w / new_w, y * h / new_h))))
}

/// Divides every sample by 255.
pub fn rescale(img: &Image) -> NormalizedImage {
    NormalizedImage {
        width: img.width(),
        height: img.height(),
        channels: img.channels(),
        values: img.pixels().iter().map(|&v| f64::from(v) / 255.0).collect(),
    }
}

pub fn flip_horizontal(img: &Image) -> Image {
    let w = img.width();
    img.remap(w, img.height(), 0, |x, y| Some((w - 1 - x, y)))
}

/// Rotates about the image center by an angle drawn uniformly from
/// `[-max_deg, max_deg]`, filling uncovered pixels with 0. Exactly one draw is
/// taken from `rng`, even when `max_deg` is 0.
pub fn random_rotation<R: Rng + ?Sized>(img: &Image, rng: &mut R, max_deg: f64) -> Result<Image> {
    if !max_deg.is_finite() || max_deg < 0.0 {
        return Err(ImagingError::InvalidArgument(format!("max rotation must be a finite non-negative angle, got {max_deg}")));
    }
    let angle = rng.gen_range(-max_deg..=max_deg);
    let m = make_rotation(angle, center(img.width()), center(img.height()))?;
    warp_affine(img, &m, 0)
}

/// Center coordinate along an axis of `n` pixels.
pub(crate) fn center(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}
