//! Raster images, geometric warps, preprocessing, augmentation and dataset
//! splitting.
//!
//! Pixel `(x, y)` has its center at integer coordinates; `x` grows to the right
//! and `y` grows downward. Pixels are stored row-major with interleaved
//! channels.

mod affine;
mod augment;
mod corpus;
mod ops;
mod pnm;
mod split;

use thiserror::Error;

use crate::classifier::TrashCategory;

pub use affine::{make_rotation, make_shear, make_translation, warp_affine, AffineMatrix};
pub use augment::{augment_one, augment_with, AugmentParams, AUGMENT_VARIANTS};
pub use corpus::{image_file_name, read_corpus, write_corpus};
pub use ops::{flip_horizontal, random_rotation, rescale, resize};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm};
pub use split::{split_dataset, SplitResult};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("image decode: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ImagingError> = std::result::Result<T, E>;

/// An 8-bit grayscale or RGB raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidArgument(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::InvalidArgument(format!("unsupported channel count {channels}")));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(ImagingError::InvalidArgument(format!(
                "pixel buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self { width, height, channels, pixels })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Grayscale image from rows of intensities.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(ImagingError::InvalidArgument("ragged rows".into()));
        }
        Self::new(width, height, 1, rows.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Samples of pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let at = (y * self.width + x) * self.channels;
        &self.pixels[at..at + self.channels]
    }

    fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let at = (y * self.width + x) * self.channels;
        &mut self.pixels[at..at + self.channels]
    }

    /// Builds an image of the same shape by choosing a source pixel (or none)
    /// for every output pixel.
    pub(crate) fn remap(&self, width: usize, height: usize, fill: u8, source: impl Fn(usize, usize) -> Option<(usize, usize)>) -> Image {
        let mut out = Image { width, height, channels: self.channels, pixels: vec![fill; width * height * self.channels] };
        for y in 0..height {
            for x in 0..width {
                if let Some((sx, sy)) = source(x, y) {
                    out.pixel_mut(x, y).copy_from_slice(self.pixel(sx, sy));
                }
            }
        }
        out
    }
}

/// Image samples scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: TrashCategory,
    pub source_id: String,
}

impl LabeledImage {
    pub fn new(image: Image, label: TrashCategory, source_id: impl Into<String>) -> Self {
        Self { image, label, source_id: source_id.into() }
    }
}
