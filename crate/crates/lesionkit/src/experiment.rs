use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesionkit_core::config::{parse_row, HeaderError, HeaderMap, RowError};
use lesionkit_core::record::read_records;
use lesionkit_core::{ExperimentRow, PresetRegistry};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentFileError {
    #[error("cannot read experiment file {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("experiment file {}: {source}", path.display())]
    Header { path: PathBuf, source: HeaderError },
}

/// One data line of the experiment file.
#[derive(Clone, Debug)]
pub struct ParsedRow {
    /// 1-based position among the data lines.
    pub row_number: usize,
    /// The raw fields, padded or truncated to the header width.
    pub fields: Vec<String>,
    pub parsed: Result<ExperimentRow, RowError>,
}

#[derive(Clone, Debug)]
pub struct ExperimentFile {
    /// Header exactly as written, including any extra columns.
    pub header: Vec<String>,
    pub rows: Vec<ParsedRow>,
}

pub fn parse_experiment_file(
    path: &Path,
    presets: &PresetRegistry,
) -> Result<ExperimentFile, ExperimentFileError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_experiment_text(&text, presets).map_err(|source| ExperimentFileError::Header {
        path: path.to_path_buf(),
        source,
    })
}

/// A completely empty text parses to the canonical header and no rows.
pub fn parse_experiment_text(
    text: &str,
    presets: &PresetRegistry,
) -> Result<ExperimentFile, HeaderError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records = read_records(text).into_iter();
    let Some(first) = records.next() else {
        return Ok(ExperimentFile {
            header: ExperimentRow::header(),
            rows: Vec::new(),
        });
    };
    let header = first.fields;
    let map = HeaderMap::new(&header)?;
    let rows = records
        .enumerate()
        .map(|(i, rec)| {
            let parsed = parse_row(&map, &rec.fields, presets);
            let mut fields = rec.fields;
            fields.resize(header.len(), String::new());
            ParsedRow {
                row_number: i + 1,
                fields,
                parsed,
            }
        })
        .collect();
    Ok(ExperimentFile { header, rows })
}
