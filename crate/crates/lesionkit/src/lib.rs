//! Filesystem, codec, worker-pool and CLI layer over [`lesionkit_core`].
//!
//! The core crate holds every kernel and contract; this crate reads the
//! experiment and dataset CSV files, decodes images, runs the prefetching
//! worker pool and writes the report directory.

pub mod data;
pub mod decode;
pub mod experiment;
pub mod masks;
pub mod plots;
pub mod prefetch;
pub mod provider;
pub mod report;
pub mod runner;
pub mod synth;

pub use lesionkit_core as core;

pub use prefetch::{prefetch_stream, PrefetchError, PrefetchStream};
pub use provider::{DiskImageProvider, SegmentConfig};
pub use runner::{run_experiments, RunConfig, RunError, RunSummary};
