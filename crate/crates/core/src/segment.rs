//! Lesion masks: extension, application, anomaly checks and scoring.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::imaging::RasterImage;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SegmentError {
    #[error("size mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("both masks are empty")]
    BothEmpty,
    #[error("ground truth needs at least one lesion and one background pixel")]
    DegenerateTruth,
    #[error("mask buffer holds {actual} samples, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("anomaly thresholds must satisfy 0 < min < max <= 1")]
    BadThresholds,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Interleaved samples with `channels` per pixel; any non-zero sample marks lesion.
    pub fn from_samples(
        width: usize,
        height: usize,
        channels: usize,
        samples: &[u8],
    ) -> Result<Self, SegmentError> {
        let expected = width * height * channels;
        if channels == 0 || samples.len() != expected {
            return Err(SegmentError::BufferSize {
                expected,
                actual: samples.len(),
            });
        }
        let bits = samples
            .chunks_exact(channels)
            .map(|p| p.iter().any(|&v| v != 0))
            .collect();
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    fn check_same(&self, other: &BinaryMask) -> Result<(), SegmentError> {
        if self.width != other.width || self.height != other.height {
            return Err(SegmentError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

fn isqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Dilation radius for `factor`: `factor * sqrt(area / pi)`, rounded.
pub fn extension_radius(mask: &BinaryMask, factor: f64) -> usize {
    if factor.is_nan() || factor <= 0.0 {
        return 0;
    }
    let r_eq = libm::sqrt(mask.area() as f64 / PI);
    libm::round(factor * r_eq) as usize
}

/// Dilate by a disk of radius [`extension_radius`], clipped to the frame.
pub fn extend_mask(mask: &BinaryMask, factor: f64) -> BinaryMask {
    let r = extension_radius(mask, factor);
    dilate_disk(mask, r)
}

/// Dilation by `{(dx, dy) : dx² + dy² ≤ r²}`.
pub fn dilate_disk(mask: &BinaryMask, r: usize) -> BinaryMask {
    if r == 0 || mask.area() == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width, mask.height);
    // prefix[y][x] = lesion pixels in row y before column x
    let prefix: Vec<Vec<u32>> = (0..h)
        .map(|y| {
            let mut acc = 0u32;
            let mut p = Vec::with_capacity(w + 1);
            p.push(0);
            for x in 0..w {
                acc += u32::from(mask.get(x, y));
                p.push(acc);
            }
            p
        })
        .collect();
    let half_widths: Vec<usize> = (0..=r).map(|dy| isqrt(r * r - dy * dy)).collect();

    let mut out = BinaryMask::empty(w, h);
    for y in 0..h {
        let lo_y = y.saturating_sub(r);
        let hi_y = (y + r).min(h - 1);
        for sy in lo_y..=hi_y {
            let row = &prefix[sy];
            if row[w] == 0 {
                continue;
            }
            let hw = half_widths[sy.abs_diff(y)];
            for x in 0..w {
                if out.get(x, y) {
                    continue;
                }
                let lo = x.saturating_sub(hw);
                let hi = (x + hw).min(w - 1);
                if row[hi + 1] > row[lo] {
                    out.set(x, y, true);
                }
            }
        }
    }
    out
}

/// Keep pixels under the mask, replace the rest with `background`.
pub fn apply_mask(
    img: &RasterImage,
    mask: &BinaryMask,
    background: [u8; 3],
) -> Result<RasterImage, SegmentError> {
    if img.width() != mask.width || img.height() != mask.height {
        return Err(SegmentError::DimensionMismatch(
            img.width(),
            img.height(),
            mask.width,
            mask.height,
        ));
    }
    Ok(RasterImage::from_fn(
        img.width(),
        img.height(),
        img.space(),
        |x, y| {
            if mask.get(x, y) {
                img.pixel(x, y)
            } else {
                background
            }
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Anomaly {
    NoLesion,
    TooManyComponents,
    TooSmall,
    TooBig,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnomalyThresholds {
    pub max_components: usize,
    pub min_area_frac: f64,
    pub max_area_frac: f64,
}

impl Default for AnomalyThresholds {
    fn default() -> Self {
        Self {
            max_components: 3,
            min_area_frac: 0.01,
            max_area_frac: 0.95,
        }
    }
}

impl AnomalyThresholds {
    pub fn new(
        max_components: usize,
        min_area_frac: f64,
        max_area_frac: f64,
    ) -> Result<Self, SegmentError> {
        if !(0.0 < min_area_frac && min_area_frac < max_area_frac && max_area_frac <= 1.0) {
            return Err(SegmentError::BadThresholds);
        }
        Ok(Self {
            max_components,
            min_area_frac,
            max_area_frac,
        })
    }
}

/// Number of 8-connected lesion components.
pub fn count_components(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut components = 0;
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if mask.bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    components
}

/// Flags for masks that are unlikely to be correct segmentations.
pub fn detect_anomalies(mask: &BinaryMask, thresholds: &AnomalyThresholds) -> Vec<Anomaly> {
    let area = mask.area();
    if area == 0 {
        return vec![Anomaly::NoLesion];
    }
    let mut flags = Vec::new();
    if count_components(mask) > thresholds.max_components {
        flags.push(Anomaly::TooManyComponents);
    }
    let frac = area as f64 / mask.bits.len() as f64;
    if frac < thresholds.min_area_frac {
        flags.push(Anomaly::TooSmall);
    }
    if frac > thresholds.max_area_frac {
        flags.push(Anomaly::TooBig);
    }
    flags
}

/// Intersection over union.
pub fn jaccard_index(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64, SegmentError> {
    pred.check_same(truth)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &t) in pred.bits.iter().zip(&truth.bits) {
        inter += usize::from(p && t);
        union += usize::from(p || t);
    }
    if union == 0 {
        return Err(SegmentError::BothEmpty);
    }
    Ok(inter as f64 / union as f64)
}

/// Pixel-wise `(sensitivity, specificity)` of `pred` against `truth`.
pub fn pixel_sens_spec(pred: &BinaryMask, truth: &BinaryMask) -> Result<(f64, f64), SegmentError> {
    pred.check_same(truth)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in pred.bits.iter().zip(&truth.bits) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(SegmentError::DegenerateTruth);
    }
    Ok((tp as f64 / (tp + fn_) as f64, tn as f64 / (tn + fp) as f64))
}

/// Parameters of the optional segmentation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentParams {
    pub extension_factor: f64,
    pub background: [u8; 3],
    pub thresholds: AnomalyThresholds,
}

impl SegmentParams {
    pub fn new(extension_factor: f64) -> Self {
        Self {
            extension_factor,
            background: [0; 3],
            thresholds: AnomalyThresholds::default(),
        }
    }
}

/// Check the raw mask, extend it and mask out the background.
pub fn segment_image(
    img: &RasterImage,
    mask: &BinaryMask,
    params: &SegmentParams,
) -> Result<(RasterImage, Vec<Anomaly>), SegmentError> {
    let anomalies = detect_anomalies(mask, &params.thresholds);
    let extended = extend_mask(mask, params.extension_factor);
    Ok((apply_mask(img, &extended, params.background)?, anomalies))
}
