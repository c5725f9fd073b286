//! Geometric transforms and intensity modulation.

use alloc::vec::Vec;

use super::{store, ColorSpace, ImagingError, RasterImage};

/// Mirror left-right.
pub fn hflip(img: &RasterImage) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    RasterImage::from_fn(w, h, img.space(), |x, y| img.pixel(w - 1 - x, y))
}

/// Mirror top-bottom.
pub fn vflip(img: &RasterImage) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    RasterImage::from_fn(w, h, img.space(), |x, y| img.pixel(x, h - 1 - y))
}

fn rotate_quarter_turns(img: &RasterImage, turns: i64) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    match turns.rem_euclid(4) {
        0 => img.clone(),
        1 => RasterImage::from_fn(h, w, img.space(), |x, y| img.pixel(w - 1 - y, x)),
        2 => RasterImage::from_fn(w, h, img.space(), |x, y| img.pixel(w - 1 - x, h - 1 - y)),
        _ => RasterImage::from_fn(h, w, img.space(), |x, y| img.pixel(y, h - 1 - x)),
    }
}

/// Rotate counter-clockwise by `degrees`.
///
/// Multiples of 90 degrees are exact pixel permutations; the canvas swaps
/// width and height for odd quarter turns. Any other angle rotates about
/// the image centre with bilinear sampling on the original canvas, and
/// output pixels that map outside the source take `fill`.
pub fn rotate(img: &RasterImage, degrees: f64, fill: [u8; 3]) -> RasterImage {
    let turns = degrees / 90.0;
    if turns == libm::round(turns) {
        return rotate_quarter_turns(img, libm::fmod(turns, 4.0) as i64);
    }

    let (w, h) = (img.width(), img.height());
    let (wf, hf) = (w as f64, h as f64);
    let (cx, cy) = (wf / 2.0, hf / 2.0);
    let theta = degrees.to_radians();
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));

    RasterImage::from_fn(w, h, img.space(), |x, y| {
        let dx = x as f64 + 0.5 - cx;
        let dy = y as f64 + 0.5 - cy;
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        if !(0.0..=wf).contains(&sx) || !(0.0..=hf).contains(&sy) {
            return fill;
        }
        let u = sx - 0.5;
        let v = sy - 0.5;
        let x0 = libm::floor(u);
        let y0 = libm::floor(v);
        let (fx, fy) = (u - x0, v - y0);
        let clamp_x = |i: f64| (i.max(0.0) as usize).min(w - 1);
        let clamp_y = |i: f64| (i.max(0.0) as usize).min(h - 1);
        let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
        let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));
        let (p00, p10, p01, p11) = (
            img.pixel(xa, ya),
            img.pixel(xb, ya),
            img.pixel(xa, yb),
            img.pixel(xb, yb),
        );
        let mut out = [0u8; 3];
        for c in 0..3 {
            let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
            let bottom = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out[c] = store(v);
        }
        out
    })
}

fn check_modulation(img: &RasterImage, factor: f64) -> Result<(), ImagingError> {
    if img.space() != ColorSpace::Rgb {
        return Err(ImagingError::NotRgb(img.space()));
    }
    if !factor.is_finite() || factor < 0.0 {
        return Err(ImagingError::InvalidFactor(factor));
    }
    Ok(())
}

/// Multiply every sample by `factor`.
pub fn adjust_brightness(img: &RasterImage, factor: f64) -> Result<RasterImage, ImagingError> {
    check_modulation(img, factor)?;
    let data = img
        .data()
        .iter()
        .map(|&v| store(f64::from(v) * factor))
        .collect();
    Ok(img.with_data(ColorSpace::Rgb, data))
}

/// Blend each pixel with its BT.601 luma: `gray + factor * (pixel - gray)`.
pub fn adjust_saturation(img: &RasterImage, factor: f64) -> Result<RasterImage, ImagingError> {
    check_modulation(img, factor)?;
    let data: Vec<u8> = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| {
            let [r, g, b] = [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])];
            let gray = 0.299 * r + 0.587 * g + 0.114 * b;
            [
                store(gray + factor * (r - gray)),
                store(gray + factor * (g - gray)),
                store(gray + factor * (b - gray)),
            ]
        })
        .collect();
    Ok(img.with_data(ColorSpace::Rgb, data))
}
