//! Pixel kernels over 8-bit, three-channel rasters.
//!
//! Every operation computes in `f64` and rounds once when storing, using
//! round-half-away-from-zero followed by a clamp to `[0, 255]`.

mod color;
mod filter;
mod transform;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

pub use color::{
    convert_colorspace, hsv_to_rgb, lab_to_rgb, rgb_to_hsv, rgb_to_lab, rgb_to_ycbcr, ycbcr_to_rgb,
};
pub use filter::{resize, resize_with_order, FilterKernel, PassOrder};
pub use transform::{adjust_brightness, adjust_saturation, hflip, rotate, vflip};

/// Channel semantics of a [`RasterImage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    Hsv,
    Lab,
    YCbCr,
}

impl ColorSpace {
    pub const ALL: [ColorSpace; 4] = [
        ColorSpace::Rgb,
        ColorSpace::Hsv,
        ColorSpace::Lab,
        ColorSpace::YCbCr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "RGB",
            ColorSpace::Hsv => "HSV",
            ColorSpace::Lab => "LAB",
            ColorSpace::YCbCr => "YCbCr",
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColorSpace {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        ColorSpace::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or(UnknownToken)
    }
}

/// Resampling filter used by [`resize`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResizeFilter {
    Nearest,
    Bilinear,
    Bicubic,
    Lanczos,
}

impl ResizeFilter {
    pub const ALL: [ResizeFilter; 4] = [
        ResizeFilter::Nearest,
        ResizeFilter::Bilinear,
        ResizeFilter::Bicubic,
        ResizeFilter::Lanczos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResizeFilter::Nearest => "nearest",
            ResizeFilter::Bilinear => "bilinear",
            ResizeFilter::Bicubic => "bicubic",
            ResizeFilter::Lanczos => "lanczos",
        }
    }
}

impl fmt::Display for ResizeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResizeFilter {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        ResizeFilter::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or(UnknownToken)
    }
}

/// Returned when a filter or colour-space token is not recognised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("unrecognised token")]
pub struct UnknownToken;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ImagingError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("sample buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("operation requires an RGB image, got {0}")]
    NotRgb(ColorSpace),
    #[error("no conversion from {from} to {to}")]
    UnsupportedConversion { from: ColorSpace, to: ColorSpace },
    #[error("factor must be finite and non-negative, got {0}")]
    InvalidFactor(f64),
}

/// Row-major interleaved 3-channel raster with 8-bit samples.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: usize,
    height: usize,
    space: ColorSpace,
    data: Vec<u8>,
}

impl RasterImage {
    pub const CHANNELS: usize = 3;

    pub fn new(
        width: usize,
        height: usize,
        space: ColorSpace,
        data: Vec<u8>,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyDimensions { width, height });
        }
        let expected = width * height * Self::CHANNELS;
        if data.len() != expected {
            return Err(ImagingError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            space,
            data,
        })
    }

    /// A constant image. Panics on zero dimensions.
    pub fn filled(width: usize, height: usize, space: ColorSpace, value: [u8; 3]) -> Self {
        Self::from_fn(width, height, space, |_, _| value)
    }

    /// Build an image from a per-pixel closure. Panics on zero dimensions.
    pub fn from_fn(
        width: usize,
        height: usize,
        space: ColorSpace,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            space,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, value: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&value);
    }

    /// Mean over all samples, in `[0, 255]`.
    pub fn mean_intensity(&self) -> f64 {
        let sum: u64 = self.data.iter().map(|&v| u64::from(v)).sum();
        sum as f64 / self.data.len() as f64
    }

    pub(crate) fn with_data(&self, space: ColorSpace, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            width: self.width,
            height: self.height,
            space,
            data,
        }
    }
}

/// Round half away from zero and clamp into a sample.
#[inline]
pub fn store(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    let r = libm::round(v);
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}
