//! Batch scoring of predicted masks against ground truth.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lesionkit_core::segment::{jaccard_index, pixel_sens_spec};
use thiserror::Error;

use crate::decode::load_mask;

#[derive(Debug, Error)]
pub enum MaskEvalError {
    #[error("cannot list {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskScore {
    pub file: String,
    pub result: Result<MaskMetrics, String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskMetrics {
    pub jaccard: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Scores every PNG in `truth_dir` against the file of the same name in
/// `pred_dir`, sorted by file name. Per-file failures are reported, not fatal.
pub fn eval_masks(pred_dir: &Path, truth_dir: &Path) -> Result<Vec<MaskScore>, MaskEvalError> {
    let io_err = |source| MaskEvalError::Io {
        path: truth_dir.to_path_buf(),
        source,
    };
    let mut names: Vec<String> = fs::read_dir(truth_dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok())
        .filter(|e| {
            e.path()
                .extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("png"))
        })
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    Ok(names
        .into_iter()
        .map(|file| {
            let result = score(&pred_dir.join(&file), &truth_dir.join(&file));
            MaskScore { file, result }
        })
        .collect())
}

fn score(pred: &Path, truth: &Path) -> Result<MaskMetrics, String> {
    let p = load_mask(pred).map_err(|e| e.to_string())?;
    let t = load_mask(truth).map_err(|e| e.to_string())?;
    let jaccard = jaccard_index(&p, &t).map_err(|e| e.to_string())?;
    let (sensitivity, specificity) = pixel_sens_spec(&p, &t).map_err(|e| e.to_string())?;
    Ok(MaskMetrics {
        jaccard,
        sensitivity,
        specificity,
    })
}

/// CSV with one line per file and a final `mean` line over the successes.
pub fn render_mask_report(scores: &[MaskScore]) -> String {
    let mut s = String::from("file,jaccard,sensitivity,specificity,error\n");
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for sc in scores {
        let file = lesionkit_core::record::escape_field(&sc.file);
        match &sc.result {
            Ok(m) => {
                let _ = writeln!(
                    s,
                    "{file},{},{},{},",
                    m.jaccard, m.sensitivity, m.specificity
                );
                sum[0] += m.jaccard;
                sum[1] += m.sensitivity;
                sum[2] += m.specificity;
                n += 1;
            }
            Err(e) => {
                let _ = writeln!(s, "{file},,,,{}", lesionkit_core::record::escape_field(e));
            }
        }
    }
    if n > 0 {
        let k = n as f64;
        let _ = writeln!(s, "mean,{},{},{},", sum[0] / k, sum[1] / k, sum[2] / k);
    }
    s
}
