use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesionkit_core::dataset::{sample_split, DatasetError};
use lesionkit_core::record::read_records;
use lesionkit_core::{DataSplit, DatasetIndex, SplitSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("NotFound: dataset file {}", .0.display())]
    NotFound(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{} contains no records", .0.display())]
    EmptyFile(PathBuf),
    #[error("{}:{line}: expected at least 2 columns", path.display())]
    ShortRecord { path: PathBuf, line: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub fn dataset_path(data_root: &Path, name: &str) -> PathBuf {
    data_root.join(format!("{name}.csv"))
}

/// Read `<data_root>/<name>.csv`: first column file name, second label.
pub fn load_dataset_index(
    name: &str,
    data_root: &Path,
    has_header: bool,
) -> Result<DatasetIndex, DataError> {
    let pairs = read_pairs(&dataset_path(data_root, name), has_header)?;
    Ok(DatasetIndex::from_labeled(name, pairs)?)
}

fn read_pairs(path: &Path, has_header: bool) -> Result<Vec<(String, String)>, DataError> {
    let text = fs::read_to_string(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => DataError::NotFound(path.to_path_buf()),
        _ => DataError::Io {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let records = read_records(text).into_iter().skip(usize::from(has_header));
    let mut pairs = Vec::new();
    for rec in records {
        if rec.fields.len() < 2 {
            return Err(DataError::ShortRecord {
                path: path.to_path_buf(),
                line: rec.line,
            });
        }
        let mut it = rec.fields.into_iter();
        let file = it.next().unwrap_or_default();
        let label = it.next().unwrap_or_default();
        pairs.push((file.trim().to_string(), label.trim().to_string()));
    }
    if pairs.is_empty() {
        return Err(DataError::EmptyFile(path.to_path_buf()));
    }
    Ok(pairs)
}

/// Companion files for a pre-split dataset use the `_val` and `_test` suffixes.
pub fn resolve_split(
    index: &DatasetIndex,
    spec: &SplitSpec,
    seed: u64,
    data_root: &Path,
    has_header: bool,
) -> Result<DataSplit, DataError> {
    match spec {
        SplitSpec::PreSplit => {
            let part = |suffix: &str| -> Result<DatasetIndex, DataError> {
                let name = format!("{}{suffix}", index.name);
                let pairs = read_pairs(&dataset_path(data_root, &name), has_header)?;
                Ok(DatasetIndex::from_labeled(&name, pairs)?)
            };
            let validation = part("_val")?;
            let test = part("_test")?;
            Ok(DataSplit::from_parts(
                index.clone(),
                validation,
                test,
                seed,
            )?)
        }
        SplitSpec::SampleN(n) => Ok(sample_split(index, *n, seed)?),
    }
}
