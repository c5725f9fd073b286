//! Colour-space conversions from and to RGB.
//!
//! All spaces are packed into three 8-bit channels:
//! - HSV: hexcone model, hue in `[0, 1)` of a turn and saturation in `[0, 1]`
//!   both scaled to `0..=255`, value kept as the RGB maximum.
//! - LAB: sRGB -> linear -> XYZ (D65) -> CIELAB, stored as `L * 255 / 100`,
//!   `a + 128`, `b + 128`.
//! - YCbCr: ITU-R BT.601 full range.

use alloc::vec::Vec;

use super::{store, ColorSpace, ImagingError, RasterImage};

/// RGB (0..=255) to packed HSV (0..=255 per channel), unrounded.
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let sat = if max > 0.0 { delta / max } else { 0.0 };
    let sector = if delta == 0.0 {
        0.0
    } else if max == r {
        let h = (g - b) / delta;
        if h < 0.0 {
            h + 6.0
        } else {
            h
        }
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    [sector / 6.0 * 255.0, sat * 255.0, max]
}

pub fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let sector = (h / 255.0 * 6.0).rem_euclid_f(6.0);
    let s = s / 255.0;
    let chroma = v * s;
    let x = chroma * (1.0 - libm::fabs(sector.rem_euclid_f(2.0) - 1.0));
    let m = v - chroma;
    let (r, g, b) = match sector as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    [r + m, g + m, b + m]
}

trait RemEuclidF {
    fn rem_euclid_f(self, m: f64) -> f64;
}

impl RemEuclidF for f64 {
    fn rem_euclid_f(self, m: f64) -> f64 {
        let r = libm::fmod(self, m);
        if r < 0.0 {
            r + m
        } else {
            r
        }
    }
}

const WHITE_D65: [f64; 3] = [0.950_47, 1.0, 1.088_83];
const LAB_DELTA: f64 = 6.0 / 29.0;

fn srgb_decode(c: f64) -> f64 {
    let c = c / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        libm::pow((c + 0.055) / 1.055, 2.4)
    }
}

fn srgb_encode(c: f64) -> f64 {
    let v = if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * libm::pow(c, 1.0 / 2.4) - 0.055
    };
    v * 255.0
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_DELTA * LAB_DELTA * LAB_DELTA {
        libm::cbrt(t)
    } else {
        t / (3.0 * LAB_DELTA * LAB_DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > LAB_DELTA {
        t * t * t
    } else {
        3.0 * LAB_DELTA * LAB_DELTA * (t - 4.0 / 29.0)
    }
}

/// RGB to packed LAB, unrounded and unclamped.
pub fn rgb_to_lab([r, g, b]: [f64; 3]) -> [f64; 3] {
    let (r, g, b) = (srgb_decode(r), srgb_decode(g), srgb_decode(b));
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let fx = lab_f(x / WHITE_D65[0]);
    let fy = lab_f(y / WHITE_D65[1]);
    let fz = lab_f(z / WHITE_D65[2]);
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);
    [l * 255.0 / 100.0, a + 128.0, bb + 128.0]
}

pub fn lab_to_rgb([l, a, b]: [f64; 3]) -> [f64; 3] {
    let l = l * 100.0 / 255.0;
    let fy = (l + 16.0) / 116.0;
    let fx = fy + (a - 128.0) / 500.0;
    let fz = fy - (b - 128.0) / 200.0;
    let x = WHITE_D65[0] * lab_f_inv(fx);
    let y = WHITE_D65[1] * lab_f_inv(fy);
    let z = WHITE_D65[2] * lab_f_inv(fz);
    let r = 3.240_454_2 * x - 1.537_138_5 * y - 0.498_531_4 * z;
    let g = -0.969_266_0 * x + 1.876_010_8 * y + 0.041_556_0 * z;
    let bl = 0.055_643_4 * x - 0.204_025_9 * y + 1.057_225_2 * z;
    [
        srgb_encode(r.max(0.0)),
        srgb_encode(g.max(0.0)),
        srgb_encode(bl.max(0.0)),
    ]
}

pub fn rgb_to_ycbcr([r, g, b]: [f64; 3]) -> [f64; 3] {
    [
        0.299 * r + 0.587 * g + 0.114 * b,
        128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b,
        128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b,
    ]
}

pub fn ycbcr_to_rgb([y, cb, cr]: [f64; 3]) -> [f64; 3] {
    let (cb, cr) = (cb - 128.0, cr - 128.0);
    [
        y + 1.402 * cr,
        y - 0.344_136 * cb - 0.714_136 * cr,
        y + 1.772 * cb,
    ]
}

fn map_pixels(img: &RasterImage, target: ColorSpace, f: fn([f64; 3]) -> [f64; 3]) -> RasterImage {
    let data: Vec<u8> = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| {
            let out = f([f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]);
            [store(out[0]), store(out[1]), store(out[2])]
        })
        .collect();
    img.with_data(target, data)
}

/// Convert `img` to `target`.
///
/// Conversions are defined out of RGB and back into RGB; converting an image
/// to its own space returns a copy.
pub fn convert_colorspace(
    img: &RasterImage,
    target: ColorSpace,
) -> Result<RasterImage, ImagingError> {
    let from = img.space();
    if from == target {
        return Ok(img.clone());
    }
    let f: fn([f64; 3]) -> [f64; 3] = match (from, target) {
        (ColorSpace::Rgb, ColorSpace::Hsv) => rgb_to_hsv,
        (ColorSpace::Rgb, ColorSpace::Lab) => rgb_to_lab,
        (ColorSpace::Rgb, ColorSpace::YCbCr) => rgb_to_ycbcr,
        (ColorSpace::Hsv, ColorSpace::Rgb) => hsv_to_rgb,
        (ColorSpace::Lab, ColorSpace::Rgb) => lab_to_rgb,
        (ColorSpace::YCbCr, ColorSpace::Rgb) => ycbcr_to_rgb,
        _ => return Err(ImagingError::UnsupportedConversion { from, to: target }),
    };
    Ok(map_pixels(img, target, f))
}
