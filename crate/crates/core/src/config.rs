//! Experiment rows: one line of the experiment spreadsheet, validated.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::augment::PresetRegistry;
use crate::imaging::{ColorSpace, ResizeFilter};

/// How validation and test sets are obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitSpec {
    /// Companion `<name>_val` / `<name>_test` files exist next to the dataset.
    PreSplit,
    /// Draw `n` validation and `n` test records from the dataset.
    SampleN(usize),
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::PreSplit => f.write_str("pre"),
            SplitSpec::SampleN(n) => write!(f, "n={n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassWeightSpec {
    Explicit(Vec<f64>),
    /// Inverse class frequency, computed from the training set.
    Computed,
}

impl fmt::Display for ClassWeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassWeightSpec::Computed => f.write_str("compute"),
            ClassWeightSpec::Explicit(ws) => {
                f.write_str("[")?;
                for (i, w) in ws.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// The eleven required spreadsheet columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Column {
    Method,
    Dataset,
    Split,
    Epochs,
    Segment,
    ImgAug,
    BatchSize,
    ImgSize,
    ResizeFilter,
    ColorSpace,
    ClassWeights,
}

impl Column {
    pub const ALL: [Column; 11] = [
        Column::Method,
        Column::Dataset,
        Column::Split,
        Column::Epochs,
        Column::Segment,
        Column::ImgAug,
        Column::BatchSize,
        Column::ImgSize,
        Column::ResizeFilter,
        Column::ColorSpace,
        Column::ClassWeights,
    ];

    /// Header name after [`normalize_header`].
    pub fn name(self) -> &'static str {
        match self {
            Column::Method => "method",
            Column::Dataset => "dataset",
            Column::Split => "split",
            Column::Epochs => "epochs",
            Column::Segment => "segment",
            Column::ImgAug => "imgaug",
            Column::BatchSize => "batchsize",
            Column::ImgSize => "imgsize",
            Column::ResizeFilter => "resizefilter",
            Column::ColorSpace => "colorspace",
            Column::ClassWeights => "classweights",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lowercase and drop spaces and underscores: `"Batch size"` -> `"batchsize"`.
pub fn normalize_header(name: &str) -> String {
    name.trim()
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HeaderError {
    #[error("missing required column `{0}`")]
    MissingColumn(Column),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
}

/// Positions of the required columns within a header line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeaderMap {
    positions: [usize; 11],
    width: usize,
}

impl HeaderMap {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Result<Self, HeaderError> {
        let normalized: Vec<String> = header
            .iter()
            .map(|h| normalize_header(h.as_ref()))
            .collect();
        for (i, n) in normalized.iter().enumerate() {
            if normalized[..i].contains(n) {
                return Err(HeaderError::DuplicateColumn(n.clone()));
            }
        }
        let mut positions = [0usize; 11];
        for (slot, col) in positions.iter_mut().zip(Column::ALL) {
            *slot = normalized
                .iter()
                .position(|n| n == col.name())
                .ok_or(HeaderError::MissingColumn(col))?;
        }
        Ok(Self {
            positions,
            width: header.len(),
        })
    }

    pub fn position(&self, col: Column) -> usize {
        self.positions[col as usize]
    }

    /// Number of columns in the header, including extras.
    pub fn width(&self) -> usize {
        self.width
    }
}

/// Why a data line was rejected. `column` is `None` for line-shape problems.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct RowError {
    pub column: Option<Column>,
    pub reason: String,
}

impl RowError {
    fn at(column: Column, reason: impl Into<String>) -> Self {
        Self {
            column: Some(column),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(c) => write!(f, "{c}: {}", self.reason),
            None => f.write_str(&self.reason),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub method: String,
    pub dataset: String,
    pub split: SplitSpec,
    pub epochs: usize,
    /// Mask extension factor; segmentation runs only when strictly positive.
    pub segment: f64,
    pub imgaug: String,
    pub batch_size: usize,
    pub img_size: usize,
    pub resize_filter: ResizeFilter,
    pub color_space: ColorSpace,
    pub class_weights: ClassWeightSpec,
}

impl ExperimentRow {
    pub fn segmentation_enabled(&self) -> bool {
        self.segment > 0.0
    }

    /// Canonical header line for [`ExperimentRow::to_fields`].
    pub fn header() -> Vec<String> {
        Column::ALL.iter().map(|c| c.name().to_string()).collect()
    }

    /// Field values in [`Column::ALL`] order.
    pub fn to_fields(&self) -> Vec<String> {
        Column::ALL
            .iter()
            .map(|c| match c {
                Column::Method => self.method.clone(),
                Column::Dataset => self.dataset.clone(),
                Column::Split => self.split.to_string(),
                Column::Epochs => self.epochs.to_string(),
                Column::Segment => format!("{}", self.segment),
                Column::ImgAug => self.imgaug.clone(),
                Column::BatchSize => self.batch_size.to_string(),
                Column::ImgSize => self.img_size.to_string(),
                Column::ResizeFilter => self.resize_filter.to_string(),
                Column::ColorSpace => self.color_space.to_string(),
                Column::ClassWeights => self.class_weights.to_string(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("empty value")]
    Empty,
    #[error("expected `pre` or `n=<count>`, got `{0}`")]
    BadSplit(String),
    #[error("sample count must be >= 1")]
    ZeroSample,
    #[error("expected `compute` or `[w1,...,wk]`, got `{0}`")]
    BadWeightList(String),
    #[error("weight `{0}` is not a finite real")]
    BadWeight(String),
    #[error("weight {0} is negative")]
    NegativeWeight(String),
    #[error("weights are all zero")]
    AllZero,
}

pub fn parse_split(token: &str) -> Result<SplitSpec, TokenError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(TokenError::Empty);
    }
    if t.eq_ignore_ascii_case("pre") {
        return Ok(SplitSpec::PreSplit);
    }
    let count = t
        .strip_prefix("n=")
        .or_else(|| t.strip_prefix("N="))
        .ok_or_else(|| TokenError::BadSplit(t.to_string()))?;
    let n: usize = count
        .trim()
        .parse()
        .map_err(|_| TokenError::BadSplit(t.to_string()))?;
    if n == 0 {
        return Err(TokenError::ZeroSample);
    }
    Ok(SplitSpec::SampleN(n))
}

pub fn parse_class_weights(token: &str) -> Result<ClassWeightSpec, TokenError> {
    let t = token.trim();
    if t.is_empty() {
        return Err(TokenError::Empty);
    }
    if t.eq_ignore_ascii_case("compute") {
        return Ok(ClassWeightSpec::Computed);
    }
    let inner = t
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| TokenError::BadWeightList(t.to_string()))?;
    if inner.trim().is_empty() {
        return Err(TokenError::BadWeightList(t.to_string()));
    }
    let mut weights = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        let w = parse_real(part).ok_or_else(|| TokenError::BadWeight(part.to_string()))?;
        if w < 0.0 {
            return Err(TokenError::NegativeWeight(part.to_string()));
        }
        weights.push(w);
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(TokenError::AllZero);
    }
    Ok(ClassWeightSpec::Explicit(weights))
}

/// Finite real with a period decimal separator.
fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_positive(col: Column, raw: &str) -> Result<usize, RowError> {
    let t = raw.trim();
    let v: i64 = t
        .parse()
        .map_err(|_| RowError::at(col, format!("`{t}` is not an integer")))?;
    if v < 1 {
        return Err(RowError::at(col, "must be ≥ 1"));
    }
    Ok(v as usize)
}

fn non_empty(col: Column, raw: &str) -> Result<String, RowError> {
    let t = raw.trim();
    if t.is_empty() {
        Err(RowError::at(col, "must not be empty"))
    } else {
        Ok(t.to_string())
    }
}

/// Validate one data line against `header`.
pub fn parse_row<S: AsRef<str>>(
    header: &HeaderMap,
    fields: &[S],
    presets: &PresetRegistry,
) -> Result<ExperimentRow, RowError> {
    if fields.len() != header.width() {
        return Err(RowError {
            column: None,
            reason: format!("expected {} fields, found {}", header.width(), fields.len()),
        });
    }
    let get = |c: Column| fields[header.position(c)].as_ref();

    let method = non_empty(Column::Method, get(Column::Method))?;
    let dataset = non_empty(Column::Dataset, get(Column::Dataset))?;
    let split =
        parse_split(get(Column::Split)).map_err(|e| RowError::at(Column::Split, e.to_string()))?;
    let epochs = parse_positive(Column::Epochs, get(Column::Epochs))?;
    let seg_raw = get(Column::Segment).trim();
    let segment = parse_real(seg_raw).ok_or_else(|| {
        RowError::at(Column::Segment, format!("`{seg_raw}` is not a finite real"))
    })?;
    let imgaug = non_empty(Column::ImgAug, get(Column::ImgAug))?;
    if !presets.contains(&imgaug) {
        return Err(RowError::at(
            Column::ImgAug,
            format!("unknown augmentation preset `{imgaug}`"),
        ));
    }
    let batch_size = parse_positive(Column::BatchSize, get(Column::BatchSize))?;
    let img_size = parse_positive(Column::ImgSize, get(Column::ImgSize))?;
    let rf = get(Column::ResizeFilter).trim();
    let resize_filter = rf.parse().map_err(|_| {
        RowError::at(
            Column::ResizeFilter,
            format!("unknown resize filter `{rf}`"),
        )
    })?;
    let cs = get(Column::ColorSpace).trim();
    let color_space = cs
        .parse()
        .map_err(|_| RowError::at(Column::ColorSpace, format!("unknown color space `{cs}`")))?;
    let class_weights = parse_class_weights(get(Column::ClassWeights))
        .map_err(|e| RowError::at(Column::ClassWeights, e.to_string()))?;

    Ok(ExperimentRow {
        method,
        dataset,
        split,
        epochs,
        segment,
        imgaug,
        batch_size,
        img_size,
        resize_filter,
        color_space,
        class_weights,
    })
}
