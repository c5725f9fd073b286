//! Built-in CPU baseline: multinomial logistic regression on a coarse grid
//! of mean-pooled channel intensities, trained by plain mini-batch SGD.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::{Classifier, Model, TrainError};
use crate::imaging::RasterImage;

/// Pooling grid side; the feature vector has `GRID * GRID * 3` entries.
pub const GRID: usize = 8;
pub const LEARNING_RATE: f64 = 0.5;
const FEATURES: usize = GRID * GRID * 3;

#[derive(Clone, Copy, Debug, Default)]
pub struct BaselineClassifier;

impl Classifier for BaselineClassifier {
    fn build(&self, num_classes: usize, _seed: u64) -> Result<Box<dyn Model>, TrainError> {
        if num_classes < 2 {
            return Err(TrainError::SingleClass);
        }
        Ok(Box::new(BaselineModel::new(num_classes)))
    }
}

/// Weights are stored class-major: `[w_c0 (FEATURES), b_c0, w_c1, b_c1, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel {
    classes: usize,
    params: Vec<f64>,
}

impl BaselineModel {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            params: vec![0.0; classes * (FEATURES + 1)],
        }
    }

    pub fn feature_len() -> usize {
        FEATURES
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Cell means over an 8x8 grid, per channel, scaled to `[0, 1]` and divided by
    /// `sqrt(FEATURES)`.
    pub fn features(img: &RasterImage) -> Vec<f64> {
        let (w, h) = (img.width(), img.height());
        let data = img.data();
        let mut out = Vec::with_capacity(FEATURES);
        // keeps the feature norm at most 1 so the bias and the weights learn at comparable rates
        let scale = 1.0 / libm::sqrt(FEATURES as f64);
        for gy in 0..GRID {
            let (y0, y1) = cell(gy, h);
            for gx in 0..GRID {
                let (x0, x1) = cell(gx, w);
                let mut acc = [0u64; 3];
                for y in y0..y1 {
                    let row = &data[(y * w + x0) * 3..(y * w + x1) * 3];
                    for p in row.chunks_exact(3) {
                        for c in 0..3 {
                            acc[c] += u64::from(p[c]);
                        }
                    }
                }
                let n = ((y1 - y0) * (x1 - x0)) as f64;
                for a in acc {
                    out.push(a as f64 / n / 255.0 * scale);
                }
            }
        }
        out
    }

    /// Raw class scores for one feature vector.
    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let w = &self.params[k * (FEATURES + 1)..(k + 1) * (FEATURES + 1)];
                w[..FEATURES]
                    .iter()
                    .zip(features)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + w[FEATURES]
            })
            .collect()
    }

    fn probabilities(&self, features: &[f64]) -> Vec<f64> {
        softmax(&self.logits(features))
    }

    /// Weighted cross-entropy over a batch of feature vectors.
    pub fn loss(&self, features: &[Vec<f64>], labels: &[usize], class_weights: &[f64]) -> f64 {
        let n = labels.len() as f64;
        features
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                class_weights[y] * -libm::log(self.probabilities(x)[y].max(f64::MIN_POSITIVE))
            })
            .sum::<f64>()
            / n
    }

    /// Loss and its analytic gradient with respect to [`BaselineModel::params`].
    pub fn loss_and_gradient(
        &self,
        features: &[Vec<f64>],
        labels: &[usize],
        class_weights: &[f64],
    ) -> (f64, Vec<f64>) {
        let n = labels.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let p = self.probabilities(x);
            let wy = class_weights[y];
            loss += wy * -libm::log(p[y].max(f64::MIN_POSITIVE));
            if wy == 0.0 {
                continue;
            }
            for (k, &pk) in p.iter().enumerate() {
                let delta = wy * (pk - if k == y { 1.0 } else { 0.0 }) / n;
                let g = &mut grad[k * (FEATURES + 1)..(k + 1) * (FEATURES + 1)];
                for (gi, xi) in g[..FEATURES].iter_mut().zip(x) {
                    *gi += delta * xi;
                }
                g[FEATURES] += delta;
            }
        }
        (loss / n, grad)
    }
}

fn cell(i: usize, len: usize) -> (usize, usize) {
    let start = (i * len / GRID).min(len - 1);
    let end = ((i + 1) * len / GRID).max(start + 1).min(len);
    (start, end)
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| libm::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Model for BaselineModel {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn train_batch(
        &mut self,
        images: &[RasterImage],
        labels: &[usize],
        class_weights: &[f64],
    ) -> Result<f64, TrainError> {
        if images.len() != labels.len() {
            return Err(TrainError::Model(alloc::format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if images.is_empty() {
            return Ok(0.0);
        }
        let feats: Vec<Vec<f64>> = images.iter().map(Self::features).collect();
        let (loss, grad) = self.loss_and_gradient(&feats, labels, class_weights);
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= LEARNING_RATE * g;
        }
        Ok(loss)
    }

    fn predict(&self, images: &[RasterImage]) -> Result<Vec<Vec<f64>>, TrainError> {
        Ok(images
            .iter()
            .map(|img| self.probabilities(&Self::features(img)))
            .collect())
    }
}
