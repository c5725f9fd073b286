//! Two-class synthetic dataset: flat noisy "dark" and "bright" images.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesionkit_core::dataset::DatasetError;
use lesionkit_core::{ColorSpace, DatasetIndex, RasterImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::decode::{encode_png, DecodeError};

pub const DARK_MEAN: f64 = 60.0;
pub const BRIGHT_MEAN: f64 = 190.0;
pub const SIGMA: f64 = 30.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("n_per_class and img_size must be ≥ 1")]
    Empty,
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Encode(#[from] DecodeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Per-channel samples drawn from N(mean, SIGMA), rounded and clamped.
pub fn noisy_image(size: usize, mean: f64, rng: &mut ChaCha8Rng) -> RasterImage {
    let normal = Normal::new(mean, SIGMA).expect("finite parameters");
    let mut sample = || normal.sample(rng).round().clamp(0.0, 255.0) as u8;
    RasterImage::from_fn(size, size, ColorSpace::Rgb, |_, _| {
        [sample(), sample(), sample()]
    })
}

/// Writes `images/<class>_<i>.png` and `<name>.csv` (with header) under
/// `out_dir`. Records alternate dark, bright, dark, ...
pub fn make_synthetic_dataset(
    out_dir: &Path,
    name: &str,
    n_per_class: usize,
    img_size: usize,
    seed: u64,
) -> Result<DatasetIndex, SynthError> {
    if n_per_class == 0 || img_size == 0 {
        return Err(SynthError::Empty);
    }
    let img_dir = out_dir.join("images");
    fs::create_dir_all(&img_dir).map_err(|source| SynthError::Io {
        path: img_dir.clone(),
        source,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("filename,label\n");
    let mut pairs = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        for (class, mean) in [("dark", DARK_MEAN), ("bright", BRIGHT_MEAN)] {
            let rel = format!("images/{class}_{i:05}.png");
            encode_png(&noisy_image(img_size, mean, &mut rng), &out_dir.join(&rel))?;
            let _ = writeln!(csv, "{rel},{class}");
            pairs.push((rel, class));
        }
    }
    let csv_path = out_dir.join(format!("{name}.csv"));
    fs::write(&csv_path, csv).map_err(|source| SynthError::Io {
        path: csv_path,
        source,
    })?;
    Ok(DatasetIndex::from_labeled(name, pairs)?)
}
