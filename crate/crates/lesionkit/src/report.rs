use std::fs;
use std::io;
use std::path::Path;

use lesionkit_core::record::format_record;

/// Output columns appended after the echoed input columns, in order.
pub const OUTPUT_COLUMNS: [&str; 12] = [
    "val_size",
    "test_size",
    "class_proportions",
    "train_time",
    "val_accuracy",
    "val_sensitivity",
    "val_specificity",
    "test_accuracy",
    "test_sensitivity",
    "test_specificity",
    "test_roc_auc",
    "error",
];

/// Metrics of a successful row. Binary-only quantities are `None` for
/// multiclass rows; `train_time` is `None` when timing is disabled.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RowMetrics {
    pub val_size: usize,
    pub test_size: usize,
    pub class_proportions: Vec<f64>,
    pub train_time: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub val_sensitivity: Option<f64>,
    pub val_specificity: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_sensitivity: Option<f64>,
    pub test_specificity: Option<f64>,
    pub test_roc_auc: Option<f64>,
}

/// One report line: the input fields verbatim plus either metrics or an error.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub input: Vec<String>,
    pub outcome: Result<RowMetrics, String>,
}

impl TrainReport {
    pub fn output_fields(&self) -> Vec<String> {
        match &self.outcome {
            Err(msg) => {
                let mut v = vec![String::new(); OUTPUT_COLUMNS.len() - 1];
                v.push(if msg.is_empty() {
                    "error".into()
                } else {
                    msg.clone()
                });
                v
            }
            Ok(m) => {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let props = m
                    .class_proportions
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                vec![
                    m.val_size.to_string(),
                    m.test_size.to_string(),
                    format!("[{props}]"),
                    opt(m.train_time),
                    opt(m.val_accuracy),
                    opt(m.val_sensitivity),
                    opt(m.val_specificity),
                    opt(m.test_accuracy),
                    opt(m.test_sensitivity),
                    opt(m.test_specificity),
                    opt(m.test_roc_auc),
                    String::new(),
                ]
            }
        }
    }
}

pub fn report_header(input_header: &[String]) -> Vec<String> {
    input_header
        .iter()
        .cloned()
        .chain(OUTPUT_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

pub fn render_train_output(input_header: &[String], reports: &[TrainReport]) -> String {
    let mut out = format_record(&report_header(input_header));
    out.push('\n');
    for r in reports {
        let mut fields = r.input.clone();
        fields.resize(input_header.len(), String::new());
        fields.extend(r.output_fields());
        out.push_str(&format_record(&fields));
        out.push('\n');
    }
    out
}

pub fn write_train_output(
    input_header: &[String],
    reports: &[TrainReport],
    path: &Path,
) -> io::Result<()> {
    fs::write(path, render_train_output(input_header, reports))
}
