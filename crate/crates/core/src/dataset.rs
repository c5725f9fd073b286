//! Dataset indices, split resolution and class statistics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetRecord {
    /// Image path relative to the data root.
    pub path: String,
    /// Index into [`DatasetIndex::classes`].
    pub label: usize,
}

/// Ordered image/label list with its sorted class names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetIndex {
    pub name: String,
    pub records: Vec<DatasetRecord>,
    pub classes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("dataset `{0}` has no records")]
    Empty(String),
    #[error("record {record} of `{dataset}` has a blank label")]
    BlankLabel { dataset: String, record: usize },
    #[error("class `{0}` has no records")]
    EmptyClass(String),
    #[error("label `{0}` is not one of the known classes")]
    UnknownLabel(String),
    #[error("cannot draw {n} validation and {n} test records from {total}")]
    InsufficientRecords { n: usize, total: usize },
    #[error(
        "class `{class}` has {available} records but {required} are needed for validation and test"
    )]
    StratumTooSmall {
        class: String,
        available: usize,
        required: usize,
    },
}

impl DatasetIndex {
    /// Build an index from `(path, label)` pairs in file order; classes are
    /// the sorted distinct labels.
    pub fn from_labeled<I, P, L>(name: &str, pairs: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (P, L)>,
        P: Into<String>,
        L: AsRef<str>,
    {
        let raw: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(p, l)| (p.into(), l.as_ref().trim().to_string()))
            .collect();
        if let Some(i) = raw.iter().position(|(_, l)| l.is_empty()) {
            return Err(DatasetError::BlankLabel {
                dataset: name.to_string(),
                record: i,
            });
        }
        let mut classes: Vec<String> = raw.iter().map(|(_, l)| l.clone()).collect();
        classes.sort();
        classes.dedup();
        Self::with_classes(name, raw, &classes)
    }

    /// Like [`DatasetIndex::from_labeled`] but against a fixed class list.
    pub fn with_classes<I, P, L>(
        name: &str,
        pairs: I,
        classes: &[String],
    ) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = (P, L)>,
        P: Into<String>,
        L: AsRef<str>,
    {
        let mut records = Vec::new();
        for (i, (path, label)) in pairs.into_iter().enumerate() {
            let label = label.as_ref().trim();
            if label.is_empty() {
                return Err(DatasetError::BlankLabel {
                    dataset: name.to_string(),
                    record: i,
                });
            }
            let id = classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| DatasetError::UnknownLabel(label.to_string()))?;
            records.push(DatasetRecord {
                path: path.into(),
                label: id,
            });
        }
        if records.is_empty() {
            return Err(DatasetError::Empty(name.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            records,
            classes: classes.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.classes.len()];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }

    /// Re-express labels against `classes`, which must contain every current class.
    pub fn relabel(&self, classes: &[String]) -> Result<Self, DatasetError> {
        Self::with_classes(
            &self.name,
            self.records
                .iter()
                .map(|r| (r.path.clone(), self.classes[r.label].as_str())),
            classes,
        )
    }

    fn subset(&self, name: String, mut picks: Vec<usize>) -> Self {
        picks.sort_unstable();
        Self {
            name,
            records: picks.into_iter().map(|i| self.records[i].clone()).collect(),
            classes: self.classes.clone(),
        }
    }
}

/// Inverse-frequency weights normalised to sum to 1, in class order.
pub fn compute_class_weights(index: &DatasetIndex) -> Result<Vec<f64>, DatasetError> {
    let counts = index.class_counts();
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(DatasetError::EmptyClass(index.classes[i].clone()));
    }
    let inv: Vec<f64> = counts.iter().map(|&c| 1.0 / c as f64).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|w| w / total).collect())
}

/// Fraction of records per class.
pub fn class_proportions(index: &DatasetIndex) -> Result<Vec<f64>, DatasetError> {
    if index.is_empty() {
        return Err(DatasetError::Empty(index.name.clone()));
    }
    let n = index.len() as f64;
    Ok(index
        .class_counts()
        .into_iter()
        .map(|c| c as f64 / n)
        .collect())
}

/// Train / validation / test partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSplit {
    pub train: DatasetIndex,
    pub validation: DatasetIndex,
    pub test: DatasetIndex,
    pub seed: u64,
}

impl DataSplit {
    /// Combine separately loaded parts, unifying their class lists.
    pub fn from_parts(
        train: DatasetIndex,
        validation: DatasetIndex,
        test: DatasetIndex,
        seed: u64,
    ) -> Result<Self, DatasetError> {
        let mut classes: Vec<String> = train
            .classes
            .iter()
            .chain(&validation.classes)
            .chain(&test.classes)
            .cloned()
            .collect();
        classes.sort();
        classes.dedup();
        Ok(Self {
            train: train.relabel(&classes)?,
            validation: validation.relabel(&classes)?,
            test: test.relabel(&classes)?,
            seed,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.train.classes
    }
}

/// Per-class share of `n` by largest remainder, so every class lands within
/// one record of its exact proportional share.
fn apportion(counts: &[usize], n: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let mut quotas: Vec<usize> = counts.iter().map(|&c| c * n / total).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // remainder numerators c*n mod total, largest first, ties by class order
    order.sort_by(|&a, &b| {
        ((counts[b] * n) % total)
            .cmp(&((counts[a] * n) % total))
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(n - assigned) {
        quotas[i] += 1;
    }
    quotas
}

/// Draw `n` validation and `n` test records by seeded stratified sampling
/// without replacement; the remainder is the training set. Each part keeps
/// the source file order.
pub fn sample_split(index: &DatasetIndex, n: usize, seed: u64) -> Result<DataSplit, DatasetError> {
    let total = index.len();
    if n == 0 || 2 * n >= total {
        return Err(DatasetError::InsufficientRecords { n, total });
    }
    let counts = index.class_counts();
    let quotas = apportion(&counts, n);

    let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); index.classes.len()];
    for (i, r) in index.records.iter().enumerate() {
        by_class[r.label].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut val, mut test, mut train) = (Vec::new(), Vec::new(), Vec::new());
    for (class, members) in by_class.iter_mut().enumerate() {
        let q = quotas[class];
        if 2 * q > members.len() {
            return Err(DatasetError::StratumTooSmall {
                class: index.classes[class].clone(),
                available: members.len(),
                required: 2 * q,
            });
        }
        members.shuffle(&mut rng);
        val.extend_from_slice(&members[..q]);
        test.extend_from_slice(&members[q..2 * q]);
        train.extend_from_slice(&members[2 * q..]);
    }

    Ok(DataSplit {
        train: index.subset(index.name.clone(), train),
        validation: index.subset(alloc::format!("{}_val", index.name), val),
        test: index.subset(alloc::format!("{}_test", index.name), test),
        seed,
    })
}
