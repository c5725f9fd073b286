//! Indexed image providers and the augmentation decorator chain.
//!
//! A provider exposes a count and random access by index. An
//! [`AugmentChain`] decorates a base provider with stages; each stage
//! multiplies the index space by its factor, so a chain over `n` images
//! with stage factors `f1, f2, ...` serves `n * f1 * f2 * ...` images.
//! Index `i` decomposes in mixed radix with the base image as the most
//! significant digit: all variants of one base image are contiguous.
//!
//! Providers split work into [`ImageProvider::load`] (the image at native
//! resolution, where augmentation happens) and [`ImageProvider::finish`]
//! (output normalisation such as resizing and colour conversion).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imaging::{self, ImagingError, RasterImage};

/// Where an image came from and what was done to it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub base_index: usize,
    pub source: String,
    pub transforms: Vec<String>,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.source, self.base_index)?;
        for t in &self.transforms {
            write!(f, "+{t}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: RasterImage,
    pub label: usize,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ProviderErrorKind {
    #[error("index {index} out of range for {count} images")]
    OutOfRange { index: usize, count: usize },
    #[error("{0}")]
    Load(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Item-level failure; carries the provenance of the item that failed.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{provenance}: {kind}")]
pub struct ProviderError {
    pub provenance: Provenance,
    pub kind: ProviderErrorKind,
}

impl ProviderError {
    pub fn new(provenance: Provenance, kind: impl Into<ProviderErrorKind>) -> Self {
        Self {
            provenance,
            kind: kind.into(),
        }
    }

    pub fn out_of_range(index: usize, count: usize) -> Self {
        Self::new(
            Provenance::default(),
            ProviderErrorKind::OutOfRange { index, count },
        )
    }
}

/// Countable, indexed source of labelled images.
///
/// `get` must be deterministic: the same index yields the same bits.
pub trait ImageProvider: Send + Sync {
    fn len(&self) -> usize;

    /// The image before output normalisation.
    fn load(&self, index: usize) -> Result<Sample, ProviderError>;

    /// Output normalisation applied after all augmentation.
    fn finish(
        &self,
        image: RasterImage,
        _provenance: &Provenance,
    ) -> Result<RasterImage, ProviderError> {
        Ok(image)
    }

    fn get(&self, index: usize) -> Result<Sample, ProviderError> {
        let mut sample = self.load(index)?;
        sample.image = self.finish(sample.image, &sample.provenance)?;
        Ok(sample)
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<P: ImageProvider + ?Sized> ImageProvider for Arc<P> {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn load(&self, index: usize) -> Result<Sample, ProviderError> {
        (**self).load(index)
    }
    fn finish(
        &self,
        image: RasterImage,
        provenance: &Provenance,
    ) -> Result<RasterImage, ProviderError> {
        (**self).finish(image, provenance)
    }
    fn get(&self, index: usize) -> Result<Sample, ProviderError> {
        (**self).get(index)
    }
}

/// Images held in memory; mostly useful for tests and synthetic data.
#[derive(Clone, Debug, Default)]
pub struct InMemoryProvider {
    items: Vec<(RasterImage, usize)>,
}

impl InMemoryProvider {
    pub fn new(items: Vec<(RasterImage, usize)>) -> Self {
        Self { items }
    }
}

impl ImageProvider for InMemoryProvider {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn load(&self, index: usize) -> Result<Sample, ProviderError> {
        let (image, label) = self
            .items
            .get(index)
            .ok_or_else(|| ProviderError::out_of_range(index, self.items.len()))?;
        Ok(Sample {
            image: image.clone(),
            label: *label,
            provenance: Provenance {
                base_index: index,
                source: String::from("memory"),
                transforms: Vec::new(),
            },
        })
    }
}

/// One decorator stage: `factor` enumerated variants, variant 0 is identity.
pub trait Stage: Send + Sync + fmt::Debug {
    fn factor(&self) -> usize;
    fn apply(&self, variant: usize, image: RasterImage) -> Result<RasterImage, ImagingError>;
    fn describe(&self, variant: usize) -> String;
}

/// Factor-1 passthrough.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Stage for Identity {
    fn factor(&self) -> usize {
        1
    }
    fn apply(&self, _variant: usize, image: RasterImage) -> Result<RasterImage, ImagingError> {
        Ok(image)
    }
    fn describe(&self, _variant: usize) -> String {
        String::from("id")
    }
}

/// Variants: original, mirrored.
#[derive(Clone, Copy, Debug, Default)]
pub struct HFlip;

impl Stage for HFlip {
    fn factor(&self) -> usize {
        2
    }
    fn apply(&self, variant: usize, image: RasterImage) -> Result<RasterImage, ImagingError> {
        Ok(if variant == 0 {
            image
        } else {
            imaging::hflip(&image)
        })
    }
    fn describe(&self, variant: usize) -> String {
        String::from(if variant == 0 { "id" } else { "hflip" })
    }
}

#[derive(Clone, Debug)]
pub struct Rotation {
    angles: Vec<f64>,
    fill: [u8; 3],
}

impl Rotation {
    /// `steps` rotations evenly spaced over a full turn, starting at 0.
    pub fn uniform(steps: usize, fill: [u8; 3]) -> Self {
        assert!(steps >= 1, "rotation needs at least one step");
        let angles = (0..steps)
            .map(|k| 360.0 * k as f64 / steps as f64)
            .collect();
        Self { angles, fill }
    }

    /// The identity rotation followed by `extra` angles in degrees.
    pub fn with_angles(extra: &[f64], fill: [u8; 3]) -> Self {
        let mut angles = alloc::vec![0.0];
        angles.extend_from_slice(extra);
        Self { angles, fill }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

impl Stage for Rotation {
    fn factor(&self) -> usize {
        self.angles.len()
    }
    fn apply(&self, variant: usize, image: RasterImage) -> Result<RasterImage, ImagingError> {
        let a = self.angles[variant];
        Ok(if a == 0.0 {
            image
        } else {
            imaging::rotate(&image, a, self.fill)
        })
    }
    fn describe(&self, variant: usize) -> String {
        format!("rot{}", self.angles[variant])
    }
}

/// Identity followed by extra brightness factors.
#[derive(Clone, Debug)]
pub struct Brightness {
    factors: Vec<f64>,
}

impl Brightness {
    pub fn new(extra: &[f64]) -> Self {
        let mut factors = alloc::vec![1.0];
        factors.extend_from_slice(extra);
        Self { factors }
    }
}

impl Stage for Brightness {
    fn factor(&self) -> usize {
        self.factors.len()
    }
    fn apply(&self, variant: usize, image: RasterImage) -> Result<RasterImage, ImagingError> {
        if variant == 0 {
            return Ok(image);
        }
        imaging::adjust_brightness(&image, self.factors[variant])
    }
    fn describe(&self, variant: usize) -> String {
        format!("bright{}", self.factors[variant])
    }
}

/// Identity followed by extra saturation factors.
#[derive(Clone, Debug)]
pub struct Saturation {
    factors: Vec<f64>,
}

impl Saturation {
    pub fn new(extra: &[f64]) -> Self {
        let mut factors = alloc::vec![1.0];
        factors.extend_from_slice(extra);
        Self { factors }
    }
}

impl Stage for Saturation {
    fn factor(&self) -> usize {
        self.factors.len()
    }
    fn apply(&self, variant: usize, image: RasterImage) -> Result<RasterImage, ImagingError> {
        if variant == 0 {
            return Ok(image);
        }
        imaging::adjust_saturation(&image, self.factors[variant])
    }
    fn describe(&self, variant: usize) -> String {
        format!("sat{}", self.factors[variant])
    }
}

/// A base provider decorated by an ordered list of stages.
#[derive(Clone)]
pub struct AugmentChain {
    base: Arc<dyn ImageProvider>,
    stages: Vec<Arc<dyn Stage>>,
}

impl fmt::Debug for AugmentChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AugmentChain")
            .field("base_len", &self.base.len())
            .field("stages", &self.stages)
            .finish()
    }
}

impl AugmentChain {
    pub fn new(base: Arc<dyn ImageProvider>) -> Self {
        Self {
            base,
            stages: Vec::new(),
        }
    }

    /// Append a stage; it becomes the least significant index digit.
    pub fn with_stage(mut self, stage: impl Stage + 'static) -> Self {
        self.stages.push(Arc::new(stage));
        self
    }

    pub fn with_shared_stage(mut self, stage: Arc<dyn Stage>) -> Self {
        self.stages.push(stage);
        self
    }

    pub fn stages(&self) -> &[Arc<dyn Stage>] {
        &self.stages
    }

    pub fn base(&self) -> &Arc<dyn ImageProvider> {
        &self.base
    }

    /// Product of stage factors.
    pub fn factor(&self) -> usize {
        self.stages.iter().map(|s| s.factor()).product()
    }

    /// Split `index` into the base index and one variant per stage.
    pub fn decompose(&self, index: usize) -> (usize, Vec<usize>) {
        let mut rest = index;
        let mut variants = alloc::vec![0; self.stages.len()];
        for (slot, stage) in variants.iter_mut().zip(&self.stages).rev() {
            let f = stage.factor();
            *slot = rest % f;
            rest /= f;
        }
        (rest, variants)
    }
}

impl ImageProvider for AugmentChain {
    fn len(&self) -> usize {
        self.base.len() * self.factor()
    }

    fn load(&self, index: usize) -> Result<Sample, ProviderError> {
        let count = self.len();
        if index >= count {
            return Err(ProviderError::out_of_range(index, count));
        }
        let (base_index, variants) = self.decompose(index);
        let Sample {
            mut image,
            label,
            mut provenance,
        } = self.base.load(base_index)?;
        for (stage, &v) in self.stages.iter().zip(&variants) {
            provenance.transforms.push(stage.describe(v));
            image = stage
                .apply(v, image)
                .map_err(|e| ProviderError::new(provenance.clone(), e))?;
        }
        Ok(Sample {
            image,
            label,
            provenance,
        })
    }

    fn finish(
        &self,
        image: RasterImage,
        provenance: &Provenance,
    ) -> Result<RasterImage, ProviderError> {
        self.base.finish(image, provenance)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("unknown augmentation preset `{0}`")]
    UnknownPreset(String),
}

type PresetBuilder = fn() -> Vec<Arc<dyn Stage>>;

/// Mnemonic name -> stage list.
#[derive(Clone)]
pub struct PresetRegistry {
    entries: Vec<(String, PresetBuilder)>,
}

fn preset_none() -> Vec<Arc<dyn Stage>> {
    Vec::new()
}

fn preset_hflip() -> Vec<Arc<dyn Stage>> {
    alloc::vec![Arc::new(HFlip) as Arc<dyn Stage>]
}

fn preset_hflip_rot4() -> Vec<Arc<dyn Stage>> {
    alloc::vec![
        Arc::new(HFlip) as Arc<dyn Stage>,
        Arc::new(Rotation::uniform(4, [0; 3]))
    ]
}

fn preset_hflip_rot24() -> Vec<Arc<dyn Stage>> {
    alloc::vec![
        Arc::new(HFlip) as Arc<dyn Stage>,
        Arc::new(Rotation::uniform(24, [0; 3]))
    ]
}

impl Default for PresetRegistry {
    /// `none`, `hflip` (2x), `hflip_rot4` (8x) and `hflip_rot24` (48x).
    fn default() -> Self {
        let mut r = Self {
            entries: Vec::new(),
        };
        r.register("none", preset_none);
        r.register("hflip", preset_hflip);
        r.register("hflip_rot4", preset_hflip_rot4);
        r.register("hflip_rot24", preset_hflip_rot24);
        r
    }
}

impl PresetRegistry {
    /// Add or replace a preset.
    pub fn register(&mut self, name: &str, builder: PresetBuilder) {
        if let Some(e) = self.entries.iter_mut().find(|(n, _)| n == name) {
            e.1 = builder;
        } else {
            self.entries.push((name.to_string(), builder));
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn stages(&self, name: &str) -> Result<Vec<Arc<dyn Stage>>, AugmentError> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b())
            .ok_or_else(|| AugmentError::UnknownPreset(name.to_string()))
    }

    pub fn make_preset(
        &self,
        name: &str,
        base: Arc<dyn ImageProvider>,
    ) -> Result<AugmentChain, AugmentError> {
        let stages = self.stages(name)?;
        Ok(stages
            .into_iter()
            .fold(AugmentChain::new(base), AugmentChain::with_shared_stage))
    }
}

/// Seed value that disables shuffling.
pub const NO_SHUFFLE: u64 = u64::MAX;

/// Deterministic visiting order for one epoch.
///
/// Keyed by `(seed, epoch)`; [`NO_SHUFFLE`] yields the identity for every epoch.
pub fn epoch_order(count: usize, epoch: u64, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..count).collect();
    if seed != NO_SHUFFLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch);
        order.shuffle(&mut rng);
    }
    order
}

/// Boxed provider helper for call sites that hold concrete types.
pub fn shared<P: ImageProvider + 'static>(provider: P) -> Arc<dyn ImageProvider> {
    Arc::new(provider) as Arc<dyn ImageProvider>
}
