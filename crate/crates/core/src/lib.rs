//! Pure kernels behind the lesionkit experiment pipeline.
//!
//! Everything in this crate works on in-memory values and needs only an
//! allocator: experiment-row validation, dataset splitting, resampling and
//! colour conversion, augmentation chains, mask morphology, classification
//! metrics and the baseline classifier. File IO, threads and the CLI live in
//! the `lesionkit` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod augment;
pub mod config;
pub mod dataset;
pub mod imaging;
pub mod metrics;
pub mod record;
pub mod segment;
pub mod trainer;

pub use augment::{AugmentChain, ImageProvider, PresetRegistry, Provenance, ProviderError, Sample};
pub use config::{ClassWeightSpec, ExperimentRow, RowError, SplitSpec};
pub use dataset::{DataSplit, DatasetIndex};
pub use imaging::{ColorSpace, RasterImage, ResizeFilter};
pub use segment::BinaryMask;
