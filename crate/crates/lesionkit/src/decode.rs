//! Image file IO. Everything is decoded to 8-bit RGB; alpha is composited
//! over black.

use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageReader, Rgb};
use lesionkit_core::{BinaryMask, ColorSpace, RasterImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("cannot open {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot decode {}: {source}", path.display())]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("cannot encode {}: {source}", path.display())]
    Encode {
        path: PathBuf,
        source: image::ImageError,
    },
}

fn open(path: &Path) -> Result<DynamicImage, DecodeError> {
    let reader = ImageReader::open(path)
        .and_then(|r| r.with_guessed_format())
        .map_err(|source| DecodeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    reader.decode().map_err(|source| DecodeError::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn decode_rgb(path: &Path) -> Result<RasterImage, DecodeError> {
    Ok(to_raster(&open(path)?))
}

pub fn to_raster(img: &DynamicImage) -> RasterImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = if img.color().has_alpha() {
        let rgba = img.to_rgba8();
        let mut out = Vec::with_capacity(w * h * 3);
        for p in rgba.pixels() {
            let a = u32::from(p[3]);
            for c in 0..3 {
                out.push(((u32::from(p[c]) * a + 127) / 255) as u8);
            }
        }
        out
    } else {
        img.to_rgb8().into_raw()
    };
    RasterImage::new(w, h, ColorSpace::Rgb, data).expect("decoder returned a consistent buffer")
}

/// Any non-zero colour sample marks lesion; alpha is ignored.
pub fn load_mask(path: &Path) -> Result<BinaryMask, DecodeError> {
    let img = open(path)?.to_rgb16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        img.get_pixel(x as u32, y as u32).0.iter().any(|&v| v != 0)
    }))
}

/// Writes the raw samples as an RGB PNG regardless of the colour-space tag.
pub fn encode_png(img: &RasterImage, path: &Path) -> Result<(), DecodeError> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
            .expect("raster buffer matches its dimensions");
    buf.save(path).map_err(|source| DecodeError::Encode {
        path: path.to_path_buf(),
        source,
    })
}

/// Lesion pixels are written as 255, background as 0.
pub fn encode_mask_png(mask: &BinaryMask, path: &Path) -> Result<(), DecodeError> {
    let data = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    let buf: ImageBuffer<image::Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, data)
            .expect("mask buffer matches dimensions");
    buf.save(path).map_err(|source| DecodeError::Encode {
        path: path.to_path_buf(),
        source,
    })
}
