//! Separable resampling.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{store, RasterImage, ResizeFilter};

/// A symmetric 1-D reconstruction kernel.
#[derive(Clone, Copy, Debug)]
pub struct FilterKernel {
    /// Half-width in source pixels at unit scale.
    pub support: f64,
    weight: fn(f64) -> f64,
}

impl FilterKernel {
    pub fn of(filter: ResizeFilter) -> Self {
        match filter {
            ResizeFilter::Nearest => FilterKernel {
                support: 0.5,
                weight: box_weight,
            },
            ResizeFilter::Bilinear => FilterKernel {
                support: 1.0,
                weight: triangle_weight,
            },
            ResizeFilter::Bicubic => FilterKernel {
                support: 2.0,
                weight: cubic_weight,
            },
            ResizeFilter::Lanczos => FilterKernel {
                support: 3.0,
                weight: lanczos3_weight,
            },
        }
    }

    pub fn weight(&self, x: f64) -> f64 {
        (self.weight)(x)
    }
}

// Half-open so that exactly one source sample falls in the window.
fn box_weight(x: f64) -> f64 {
    if (-0.5..0.5).contains(&x) {
        1.0
    } else {
        0.0
    }
}

fn triangle_weight(x: f64) -> f64 {
    let x = libm::fabs(x);
    if x < 1.0 {
        1.0 - x
    } else {
        0.0
    }
}

// Keys cubic convolution, a = -0.5 (Catmull-Rom).
fn cubic_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = libm::fabs(x);
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        (((x - 5.0) * x + 8.0) * x - 4.0) * A
    } else {
        0.0
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let a = x * PI;
        libm::sin(a) / a
    }
}

fn lanczos3_weight(x: f64) -> f64 {
    if libm::fabs(x) < 3.0 {
        sinc(x) * sinc(x / 3.0)
    } else {
        0.0
    }
}

/// Normalised taps for every output position along one axis.
struct Taps {
    spans: Vec<(usize, usize)>,
    index: Vec<usize>,
    weight: Vec<f64>,
}

impl Taps {
    fn new(in_len: usize, out_len: usize, filter: ResizeFilter) -> Self {
        let kernel = FilterKernel::of(filter);
        let scale = in_len as f64 / out_len as f64;
        // Nearest keeps its unit window so that it stays a point sampler.
        let stretch = if filter == ResizeFilter::Nearest {
            1.0
        } else {
            scale.max(1.0)
        };
        let support = kernel.support * stretch;
        let last_src = in_len as i64 - 1;

        let mut spans = Vec::with_capacity(out_len);
        let mut index = Vec::new();
        let mut weight = Vec::new();
        for i in 0..out_len {
            let center = (i as f64 + 0.5) * scale;
            let first = libm::floor(center - support - 0.5) as i64;
            let last = libm::ceil(center + support - 0.5) as i64;
            let start = index.len();
            let mut total = 0.0;
            for j in first..=last {
                let w = kernel.weight((j as f64 + 0.5 - center) / stretch);
                if w == 0.0 {
                    continue;
                }
                let src = j.clamp(0, last_src) as usize;
                total += w;
                if index.len() > start && index[index.len() - 1] == src {
                    *weight.last_mut().unwrap() += w;
                } else {
                    index.push(src);
                    weight.push(w);
                }
            }
            if total == 0.0 {
                index.truncate(start);
                weight.truncate(start);
                index.push((libm::floor(center) as i64).clamp(0, last_src) as usize);
                weight.push(1.0);
            } else {
                for w in &mut weight[start..] {
                    *w /= total;
                }
            }
            spans.push((start, index.len()));
        }
        Taps {
            spans,
            index,
            weight,
        }
    }

    fn taps(&self, out: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = self.spans[out];
        self.index[a..b]
            .iter()
            .copied()
            .zip(self.weight[a..b].iter().copied())
    }
}

/// Which axis is resampled first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PassOrder {
    HorizontalFirst,
    VerticalFirst,
}

/// Resample to `out_w` x `out_h` (horizontal pass, then vertical).
///
/// Kernel weights are normalised per output sample; when shrinking, the
/// kernel is stretched by the scale factor so it covers the source area.
/// Source coordinates outside the image are clamped to the border.
/// Panics if either output dimension is zero.
pub fn resize(img: &RasterImage, out_w: usize, out_h: usize, filter: ResizeFilter) -> RasterImage {
    resize_with_order(img, out_w, out_h, filter, PassOrder::HorizontalFirst)
}

pub fn resize_with_order(
    img: &RasterImage,
    out_w: usize,
    out_h: usize,
    filter: ResizeFilter,
    order: PassOrder,
) -> RasterImage {
    assert!(out_w > 0 && out_h > 0, "output dimensions must be non-zero");
    if out_w == img.width() && out_h == img.height() && filter == ResizeFilter::Nearest {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let htaps = Taps::new(w, out_w, filter);
    let vtaps = Taps::new(h, out_h, filter);

    let out = match order {
        PassOrder::HorizontalFirst => {
            let tmp = horizontal(&src, w, h, out_w, &htaps);
            vertical(&tmp, out_w, h, out_h, &vtaps)
        }
        PassOrder::VerticalFirst => {
            let tmp = vertical(&src, w, h, out_h, &vtaps);
            horizontal(&tmp, w, out_h, out_w, &htaps)
        }
    };
    let data = out.into_iter().map(store).collect();
    RasterImage::new(out_w, out_h, img.space(), data).expect("resize output buffer")
}

fn horizontal(src: &[f64], w: usize, h: usize, out_w: usize, taps: &Taps) -> Vec<f64> {
    let mut out = vec![0.0; out_w * h * 3];
    for y in 0..h {
        let row = &src[y * w * 3..(y + 1) * w * 3];
        for x in 0..out_w {
            let mut acc = [0.0; 3];
            for (sx, wt) in taps.taps(x) {
                for c in 0..3 {
                    acc[c] += row[sx * 3 + c] * wt;
                }
            }
            out[(y * out_w + x) * 3..(y * out_w + x) * 3 + 3].copy_from_slice(&acc);
        }
    }
    out
}

fn vertical(src: &[f64], w: usize, _h: usize, out_h: usize, taps: &Taps) -> Vec<f64> {
    let stride = w * 3;
    let mut out = vec![0.0; stride * out_h];
    for y in 0..out_h {
        let dst = &mut out[y * stride..(y + 1) * stride];
        for (sy, wt) in taps.taps(y) {
            let row = &src[sy * stride..(sy + 1) * stride];
            for (d, s) in dst.iter_mut().zip(row) {
                *d += s * wt;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ColorSpace;

    #[test]
    fn kernels_are_even_and_vanish_outside_support() {
        for f in ResizeFilter::ALL {
            let k = FilterKernel::of(f);
            for i in 1..40 {
                let x = i as f64 * 0.137;
                if f != ResizeFilter::Nearest || x != 0.5 {
                    assert!((k.weight(x) - k.weight(-x)).abs() < 1e-12, "{f} at {x}");
                }
                if x >= k.support {
                    assert_eq!(k.weight(x), 0.0, "{f} at {x}");
                }
            }
            assert_eq!(k.weight(0.0), 1.0);
        }
    }

    #[test]
    fn cubic_matches_catmull_rom_values() {
        // Catmull-Rom at half offsets: 9/16 and -1/16.
        let k = FilterKernel::of(ResizeFilter::Bicubic);
        assert!((k.weight(0.5) - 0.5625).abs() < 1e-12);
        assert!((k.weight(1.5) + 0.0625).abs() < 1e-12);
        assert_eq!(k.weight(1.0), 0.0);
    }

    #[test]
    fn taps_sum_to_one() {
        for f in ResizeFilter::ALL {
            for (a, b) in [(10, 3), (3, 10), (7, 7), (1, 5), (5, 1)] {
                let t = Taps::new(a, b, f);
                for i in 0..b {
                    let s: f64 = t.taps(i).map(|(_, w)| w).sum();
                    assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_nearest_is_bit_exact() {
        let img = RasterImage::from_fn(5, 4, ColorSpace::Rgb, |x, y| {
            [(x * 40) as u8, (y * 50) as u8, 7]
        });
        assert_eq!(resize(&img, 5, 4, ResizeFilter::Nearest), img);
        // Other filters are also exact at unit scale: only the centre tap is non-zero.
        for f in ResizeFilter::ALL {
            assert_eq!(resize(&img, 5, 4, f), img, "{f}");
        }
    }

    #[test]
    fn checkerboard_to_single_pixel_bilinear() {
        let img = RasterImage::from_fn(2, 2, ColorSpace::Rgb, |x, y| {
            if (x + y) % 2 == 0 {
                [0; 3]
            } else {
                [255; 3]
            }
        });
        let out = resize(&img, 1, 1, ResizeFilter::Bilinear);
        assert_eq!(out.pixel(0, 0), [128, 128, 128]);
    }

    #[test]
    fn single_pixel_upscales_to_constant() {
        let img = RasterImage::filled(1, 1, ColorSpace::Rgb, [13, 200, 77]);
        for f in ResizeFilter::ALL {
            let out = resize(&img, 4, 4, f);
            assert!(out.data().chunks(3).all(|p| p == [13, 200, 77]), "{f}");
        }
    }

    #[test]
    fn nearest_downscale_picks_samples() {
        let img = RasterImage::from_fn(4, 1, ColorSpace::Rgb, |x, _| [(x * 10) as u8; 3]);
        let out = resize(&img, 2, 1, ResizeFilter::Nearest);
        // centres at 1.0 and 3.0 select source columns 0 and 2
        assert_eq!(out.pixel(0, 0)[0], 0);
        assert_eq!(out.pixel(1, 0)[0], 20);
    }

    #[test]
    fn space_tag_is_kept() {
        let img = RasterImage::filled(3, 3, ColorSpace::Lab, [1, 2, 3]);
        assert_eq!(
            resize(&img, 2, 5, ResizeFilter::Lanczos).space(),
            ColorSpace::Lab
        );
    }
}
