//! Binary PGM (`P5`) and PPM (`P6`) files, backed by the `image` crate's
//! netpbm codec. Grayscale images are written as `P5`, RGB as `P6`, always
//! with maxval 255.

use std::fs;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, ExtendedColorType, ImageEncoder, ImageFormat};

use super::{Image, ImagingError, Result};

pub fn encode_pnm(img: &Image) -> Result<Vec<u8>> {
    let (subtype, color) = match img.channels() {
        1 => (PnmSubtype::Graymap(SampleEncoding::Binary), ExtendedColorType::L8),
        _ => (PnmSubtype::Pixmap(SampleEncoding::Binary), ExtendedColorType::Rgb8),
    };
    let mut out = Vec::with_capacity(img.pixels().len() + 20);
    PnmEncoder::new(&mut out)
        .with_subtype(subtype)
        .write_image(img.pixels(), img.width() as u32, img.height() as u32, color)
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    Ok(out)
}

/// Decodes any netpbm image. Color inputs become RGB, everything else
/// grayscale; deeper samples are reduced to 8 bits.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let dynamic =
        image::load_from_memory_with_format(bytes, ImageFormat::Pnm).map_err(|e| ImagingError::Decode(e.to_string()))?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    match dynamic.color() {
        ColorType::Rgb8 | ColorType::Rgba8 | ColorType::Rgb16 | ColorType::Rgba16 | ColorType::Rgb32F | ColorType::Rgba32F => {
            Image::new(w, h, 3, dynamic.into_rgb8().into_raw())
        }
        _ => Image::new(w, h, 1, dynamic.into_luma8().into_raw()),
    }
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pnm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    fs::write(path, encode_pnm(img)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_body() {
        let img = Image::from_rows(&[&[1, 2, 3], &[4, 5, 6]]).unwrap();
        let bytes = encode_pnm(&img).unwrap();
        assert!(bytes.starts_with(b"P5"));
        assert!(bytes.ends_with(&[1, 2, 3, 4, 5, 6]));
        assert_eq!(decode_pnm(&bytes).unwrap(), img);
    }

    #[test]
    fn ppm_round_trip() {
        let img = Image::new(2, 2, 3, (10..22).collect()).unwrap();
        let bytes = encode_pnm(&img).unwrap();
        assert!(bytes.starts_with(b"P6"));
        assert_eq!(decode_pnm(&bytes).unwrap(), img);
    }

    #[test]
    fn reads_handwritten_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([7, 9]);
        assert_eq!(decode_pnm(&bytes).unwrap(), Image::from_rows(&[&[7, 9]]).unwrap());
    }

    #[test]
    fn garbage_is_a_decode_error() {
        assert!(matches!(decode_pnm(b"P7 nonsense"), Err(ImagingError::Decode(_))));
    }
}
