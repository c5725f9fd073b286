//! Classifier contract, method registry and the training loop.

mod baseline;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::augment::{ImageProvider, ProviderError, Sample};
use crate::imaging::RasterImage;

pub use baseline::{BaselineClassifier, BaselineModel, GRID, LEARNING_RATE};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TrainError {
    #[error("UnknownMethod: no classifier registered as `{0}`")]
    UnknownMethod(String),
    #[error("BackendUnavailable: `{0}` requires an external backend adapter, none is installed")]
    BackendUnavailable(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training stream produced no samples in epoch {0}")]
    EmptyStream(usize),
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("loss diverged (non-finite) in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("validation item failed: {0}")]
    Validation(ProviderError),
    #[error("model error: {0}")]
    Model(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Availability {
    Available,
    ExternalBackendRequired,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifierSpec {
    pub mnemonic: String,
    pub description: String,
    pub availability: Availability,
}

/// A trainable model instance.
pub trait Model: Send {
    fn num_classes(&self) -> usize;

    /// One optimisation step; returns the batch loss before the update.
    ///
    /// The loss is the mean over the batch of `class_weights[label] * -ln p[label]`.
    fn train_batch(
        &mut self,
        images: &[RasterImage],
        labels: &[usize],
        class_weights: &[f64],
    ) -> Result<f64, TrainError>;

    /// Class probability rows, one per image; each row sums to 1.
    fn predict(&self, images: &[RasterImage]) -> Result<Vec<Vec<f64>>, TrainError>;
}

/// A named architecture that can build fresh models.
///
/// This is also the adapter boundary for out-of-tree backends: implement it
/// and install the instance with [`ClassifierRegistry::install_adapter`].
pub trait Classifier: Send + Sync {
    fn build(&self, num_classes: usize, seed: u64) -> Result<Box<dyn Model>, TrainError>;
}

struct Entry {
    spec: ClassifierSpec,
    classifier: Option<Box<dyn Classifier>>,
}

/// Mnemonic -> classifier.
pub struct ClassifierRegistry {
    entries: Vec<Entry>,
}

impl fmt::Debug for ClassifierRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.entries.iter().map(|e| &e.spec))
            .finish()
    }
}

const EXTERNAL_METHODS: [(&str, &str); 7] = [
    ("VGG16", "VGG16 pre-trained on ImageNet, SGD"),
    ("VGG16_Nadam", "VGG16 pre-trained on ImageNet, Nadam"),
    ("VGG16_Adadelta", "VGG16 pre-trained on ImageNet, Adadelta"),
    ("VGG16_RMSProp", "VGG16 pre-trained on ImageNet, RMSProp"),
    ("VGG16_random", "VGG16, random initialisation"),
    ("SC19", "AlexNet-style network, random initialisation"),
    ("InceptionV3", "InceptionV3 pre-trained on ImageNet"),
];

impl Default for ClassifierRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: Vec::new(),
        };
        r.register(
            ClassifierSpec {
                mnemonic: "baseline".to_string(),
                description: "logistic regression over 8x8 mean-pooled channels".to_string(),
                availability: Availability::Available,
            },
            Some(Box::new(BaselineClassifier)),
        );
        for (name, desc) in EXTERNAL_METHODS {
            r.register(
                ClassifierSpec {
                    mnemonic: name.to_string(),
                    description: desc.to_string(),
                    availability: Availability::ExternalBackendRequired,
                },
                None,
            );
        }
        r
    }
}

impl ClassifierRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Add or replace an entry.
    pub fn register(&mut self, spec: ClassifierSpec, classifier: Option<Box<dyn Classifier>>) {
        self.entries.retain(|e| e.spec.mnemonic != spec.mnemonic);
        self.entries.push(Entry { spec, classifier });
    }

    /// Plug a backend into an already listed external method.
    pub fn install_adapter(
        &mut self,
        mnemonic: &str,
        classifier: Box<dyn Classifier>,
    ) -> Result<(), TrainError> {
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.spec.mnemonic == mnemonic)
            .ok_or_else(|| TrainError::UnknownMethod(mnemonic.to_string()))?;
        entry.classifier = Some(classifier);
        Ok(())
    }

    pub fn specs(&self) -> impl Iterator<Item = &ClassifierSpec> {
        self.entries.iter().map(|e| &e.spec)
    }

    pub fn build_classifier(&self, mnemonic: &str) -> Result<&dyn Classifier, TrainError> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.spec.mnemonic == mnemonic)
            .ok_or_else(|| TrainError::UnknownMethod(mnemonic.to_string()))?;
        entry
            .classifier
            .as_deref()
            .ok_or_else(|| TrainError::BackendUnavailable(mnemonic.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub class_weights: Vec<f64>,
    pub seed: u64,
    pub operating_threshold: f64,
}

impl TrainConfig {
    pub fn validate(&self, num_classes: usize) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be ≥ 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be ≥ 1");
        }
        if self.class_weights.len() != num_classes {
            return Err(TrainError::InvalidConfig(alloc::format!(
                "{} class weights given for {} classes",
                self.class_weights.len(),
                num_classes
            )));
        }
        if self
            .class_weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
            || self.class_weights.iter().all(|&w| w == 0.0)
        {
            return bad("class weights must be non-negative and not all zero");
        }
        if !(self.operating_threshold > 0.0 && self.operating_threshold < 1.0) {
            return bad("operating threshold must lie strictly inside (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_time: f64,
}

/// Seconds since an arbitrary origin.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Source of one pass over the training data per epoch.
pub trait EpochSource {
    fn epoch(
        &mut self,
        epoch: usize,
    ) -> Box<dyn Iterator<Item = Result<Sample, ProviderError>> + '_>;
}

impl<F, I> EpochSource for F
where
    F: FnMut(usize) -> I,
    I: Iterator<Item = Result<Sample, ProviderError>> + 'static,
{
    fn epoch(
        &mut self,
        epoch: usize,
    ) -> Box<dyn Iterator<Item = Result<Sample, ProviderError>> + '_> {
        Box::new((self)(epoch))
    }
}

/// Summary of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub logs: Vec<EpochLog>,
    /// Training items that failed to load and were skipped.
    pub skipped: Vec<ProviderError>,
}

/// Weighted cross-entropy of probability rows, averaged over rows.
pub fn weighted_cross_entropy(probs: &[Vec<f64>], labels: &[usize], class_weights: &[f64]) -> f64 {
    let n = labels.len().max(1) as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| class_weights[y] * -libm::log(p[y].max(f64::MIN_POSITIVE)))
        .sum::<f64>()
        / n
}

/// Build a model and train it; see [`fit`].
pub fn train(
    classifier: &dyn Classifier,
    num_classes: usize,
    source: &mut dyn EpochSource,
    validation: &dyn ImageProvider,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<(Box<dyn Model>, TrainOutcome), TrainError> {
    cfg.validate(num_classes)?;
    let mut model = classifier.build(num_classes, cfg.seed)?;
    let outcome = fit(model.as_mut(), source, validation, cfg, clock)?;
    Ok((model, outcome))
}

/// Run `cfg.epochs` epochs of mini-batch training.
///
/// Items that fail to load are skipped and reported in the outcome. The
/// validation set is loaded once; any failure there is an error.
pub fn fit(
    model: &mut dyn Model,
    source: &mut dyn EpochSource,
    validation: &dyn ImageProvider,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<TrainOutcome, TrainError> {
    let classes = model.num_classes();
    cfg.validate(classes)?;
    if validation.is_empty() {
        return Err(TrainError::EmptyValidation);
    }
    let mut val_images = Vec::with_capacity(validation.len());
    let mut val_labels = Vec::with_capacity(validation.len());
    for i in 0..validation.len() {
        let s = validation.get(i).map_err(TrainError::Validation)?;
        check_label(s.label, classes)?;
        val_images.push(s.image);
        val_labels.push(s.label);
    }

    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut skipped = Vec::new();
    let mut seen = alloc::vec![false; classes];
    for epoch in 0..cfg.epochs {
        let start = clock.now();
        let mut images = Vec::with_capacity(cfg.batch_size);
        let mut labels = Vec::with_capacity(cfg.batch_size);
        let mut loss_sum = 0.0;
        let mut count = 0usize;

        let mut flush = |images: &mut Vec<RasterImage>,
                         labels: &mut Vec<usize>,
                         model: &mut dyn Model|
         -> Result<(), TrainError> {
            let loss = model.train_batch(images, labels, &cfg.class_weights)?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            loss_sum += loss * labels.len() as f64;
            count += labels.len();
            images.clear();
            labels.clear();
            Ok(())
        };

        for item in source.epoch(epoch) {
            match item {
                Ok(s) => {
                    check_label(s.label, classes)?;
                    seen[s.label] = true;
                    images.push(s.image);
                    labels.push(s.label);
                    if images.len() == cfg.batch_size {
                        flush(&mut images, &mut labels, model)?;
                    }
                }
                Err(e) => {
                    if epoch == 0 {
                        skipped.push(e);
                    }
                }
            }
        }
        if !images.is_empty() {
            flush(&mut images, &mut labels, model)?;
        }
        if count == 0 {
            return Err(TrainError::EmptyStream(epoch));
        }
        if epoch == 0 && seen.iter().filter(|&&s| s).count() < 2 {
            return Err(TrainError::SingleClass);
        }

        let probs = model.predict(&val_images)?;
        let val_loss = weighted_cross_entropy(&probs, &val_labels, &cfg.class_weights);
        let train_loss = loss_sum / count as f64;
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        logs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            wall_time: clock.now() - start,
        });
    }
    Ok(TrainOutcome { logs, skipped })
}

fn check_label(label: usize, classes: usize) -> Result<(), TrainError> {
    if label >= classes {
        Err(TrainError::LabelOutOfRange { label, classes })
    } else {
        Ok(())
    }
}

/// Per-item prediction: class probabilities and the true label.
pub type Scored = Result<(Vec<f64>, usize), ProviderError>;

/// Score every item of `provider` in index order, `batch` images at a time.
pub fn predict_scores(
    model: &dyn Model,
    provider: &dyn ImageProvider,
    batch: usize,
) -> Result<Vec<Scored>, TrainError> {
    let batch = batch.max(1);
    let mut out: Vec<Scored> = Vec::with_capacity(provider.len());
    let mut pending: Vec<(usize, RasterImage, usize)> = Vec::with_capacity(batch);

    let run = |pending: &mut Vec<(usize, RasterImage, usize)>,
               out: &mut Vec<Scored>|
     -> Result<(), TrainError> {
        let images: Vec<RasterImage> = pending.iter().map(|(_, img, _)| img.clone()).collect();
        let probs = model.predict(&images)?;
        for ((slot, _, label), p) in pending.drain(..).zip(probs) {
            out[slot] = Ok((p, label));
        }
        Ok(())
    };

    for i in 0..provider.len() {
        match provider.get(i) {
            Ok(s) => {
                out.push(Ok((Vec::new(), s.label)));
                pending.push((i, s.image, s.label));
                if pending.len() == batch {
                    run(&mut pending, &mut out)?;
                }
            }
            Err(e) => out.push(Err(e)),
        }
    }
    if !pending.is_empty() {
        run(&mut pending, &mut out)?;
    }
    Ok(out)
}
