use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use lesionkit_core::augment::{epoch_order, shared, AugmentError};
use lesionkit_core::dataset::{class_proportions, compute_class_weights};
use lesionkit_core::metrics::{
    argmax_accuracy, confusion_at_threshold, roc_auc, sens_spec_acc, RocCurve,
};
use lesionkit_core::segment::{AnomalyThresholds, SegmentParams};
use lesionkit_core::trainer::{
    predict_scores, train, ClassifierRegistry, Clock, EpochLog, Model, TrainConfig, TrainError,
};
use lesionkit_core::{
    ClassWeightSpec, DataSplit, ExperimentRow, ImageProvider, PresetRegistry, ProviderError,
};
use thiserror::Error;

use crate::data::{load_dataset_index, resolve_split, DataError};
use crate::experiment::{parse_experiment_file, ExperimentFileError};
use crate::plots::emit_plots;
use crate::prefetch::{prefetch_stream, PrefetchStream};
use crate::provider::{DiskImageProvider, SegmentConfig};
use crate::report::{write_train_output, RowMetrics, TrainReport};

pub const TRAIN_OUTPUT: &str = "train_output.csv";
const EVAL_BATCH: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment_file: PathBuf,
    pub output_dir: PathBuf,
    /// Dataset CSVs, images and masks are resolved against this directory.
    pub data_root: PathBuf,
    pub workers: usize,
    /// Decoded items each worker pool may hold beyond one per worker.
    pub prefetch_capacity: usize,
    pub seed: u64,
    /// Defaults to the second class in sorted order for binary datasets.
    pub positive_class: Option<String>,
    pub operating_threshold: f64,
    /// Whether dataset CSVs start with a header line.
    pub dataset_header: bool,
    /// When false, `train_time` is left blank so reports are reproducible.
    pub timing: bool,
    pub anomaly_thresholds: AnomalyThresholds,
}

impl RunConfig {
    pub fn new(
        experiment_file: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        data_root: impl Into<PathBuf>,
    ) -> Self {
        Self {
            experiment_file: experiment_file.into(),
            output_dir: output_dir.into(),
            data_root: data_root.into(),
            workers: 1,
            prefetch_capacity: 8,
            seed: 0,
            positive_class: None,
            operating_threshold: 0.5,
            dataset_header: true,
            timing: true,
            anomaly_thresholds: AnomalyThresholds::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Experiment(#[from] ExperimentFileError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub reports: Vec<TrainReport>,
    pub output_file: PathBuf,
}

impl RunSummary {
    pub fn failed(&self) -> usize {
        self.reports.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Anything that can go wrong inside one row; rendered into the error column.
#[derive(Debug, Error)]
pub enum RowFailure {
    #[error("InvalidRow: {0}")]
    Row(#[from] lesionkit_core::RowError),
    #[error("DatasetError: {0}")]
    Data(#[from] DataError),
    #[error("UnknownPreset: {0}")]
    Preset(#[from] AugmentError),
    #[error("{0}")]
    Train(#[from] TrainError),
    #[error("EvaluationError: {0}")]
    Evaluation(ProviderError),
    #[error("IoError: {0}")]
    Io(#[from] io::Error),
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

pub fn run_experiments(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    run_experiments_with(
        cfg,
        &ClassifierRegistry::default(),
        &PresetRegistry::default(),
    )
}

/// Runs every row in order. Row failures land in the report's error column;
/// only problems with the experiment file or output directory are fatal.
pub fn run_experiments_with(
    cfg: &RunConfig,
    classifiers: &ClassifierRegistry,
    presets: &PresetRegistry,
) -> Result<RunSummary, RunError> {
    if cfg.workers == 0 || cfg.prefetch_capacity == 0 {
        return Err(RunError::Config(
            "workers and prefetch capacity must be ≥ 1".into(),
        ));
    }
    if !(cfg.operating_threshold > 0.0 && cfg.operating_threshold < 1.0) {
        return Err(RunError::Config(
            "operating threshold must lie strictly inside (0, 1)".into(),
        ));
    }
    let file = parse_experiment_file(&cfg.experiment_file, presets)?;
    let out_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Output { path, source }
    };
    fs::create_dir_all(&cfg.output_dir).map_err(out_err(&cfg.output_dir))?;

    let mut reports = Vec::with_capacity(file.rows.len());
    for row in &file.rows {
        let outcome = match &row.parsed {
            Err(e) => Err(RowFailure::Row(e.clone())),
            Ok(exp) => {
                log::info!("row {}: {} on {}", row.row_number, exp.method, exp.dataset);
                let dir = cfg
                    .output_dir
                    .join(row_dir_name(row.row_number, &exp.method));
                run_row(cfg, exp, &dir, classifiers, presets)
            }
        };
        if let Err(e) = &outcome {
            log::warn!("row {} failed: {e}", row.row_number);
        }
        reports.push(TrainReport {
            input: row.fields.clone(),
            outcome: outcome.map_err(|e| e.to_string()),
        });
    }
    let output_file = cfg.output_dir.join(TRAIN_OUTPUT);
    write_train_output(&file.header, &reports, &output_file).map_err(out_err(&output_file))?;
    Ok(RunSummary {
        reports,
        output_file,
    })
}

pub fn row_dir_name(row_number: usize, method: &str) -> String {
    let safe: String = method
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("row_{row_number}_{safe}")
}

fn run_row(
    cfg: &RunConfig,
    exp: &ExperimentRow,
    dir: &Path,
    classifiers: &ClassifierRegistry,
    presets: &PresetRegistry,
) -> Result<RowMetrics, RowFailure> {
    let classifier = classifiers.build_classifier(&exp.method)?;
    let index = load_dataset_index(&exp.dataset, &cfg.data_root, cfg.dataset_header)?;
    let split = resolve_split(
        &index,
        &exp.split,
        cfg.seed,
        &cfg.data_root,
        cfg.dataset_header,
    )?;
    let classes = split.classes().to_vec();

    let class_weights = match &exp.class_weights {
        ClassWeightSpec::Computed => {
            compute_class_weights(&split.train).map_err(DataError::from)?
        }
        ClassWeightSpec::Explicit(w) => w.clone(),
    };
    let positive = positive_class(cfg, &classes)?;

    let provider = |idx: &lesionkit_core::DatasetIndex| {
        let p = DiskImageProvider::new(
            &cfg.data_root,
            idx.clone(),
            exp.img_size,
            exp.resize_filter,
            exp.color_space,
        );
        if exp.segmentation_enabled() {
            p.with_segmentation(SegmentConfig {
                params: SegmentParams {
                    thresholds: cfg.anomaly_thresholds,
                    ..SegmentParams::new(exp.segment)
                },
                mask_dir: cfg.data_root.clone(),
            })
        } else {
            p
        }
    };
    let DataSplit {
        train: train_idx,
        validation: val_idx,
        test: test_idx,
        ..
    } = &split;
    let chain: Arc<dyn ImageProvider> =
        Arc::new(presets.make_preset(&exp.imgaug, shared(provider(train_idx)))?);
    let val = provider(val_idx);
    let test = provider(test_idx);

    let train_cfg = TrainConfig {
        epochs: exp.epochs,
        batch_size: exp.batch_size,
        class_weights,
        seed: cfg.seed,
        operating_threshold: cfg.operating_threshold,
    };
    let (workers, capacity, seed) = (cfg.workers, cfg.prefetch_capacity, cfg.seed);
    let mut source = move |epoch: usize| -> PrefetchStream {
        let order = epoch_order(chain.len(), epoch as u64, seed);
        prefetch_stream(Arc::clone(&chain), order, workers, capacity)
            .expect("pool parameters validated at run start")
    };

    let clock = WallClock(Instant::now());
    let (model, outcome) = train(
        classifier,
        classes.len(),
        &mut source,
        &val,
        &train_cfg,
        &clock,
    )?;
    let train_time = clock.now();
    for e in &outcome.skipped {
        log::warn!("skipped training item {e}");
    }

    let val_eval = evaluate(model.as_ref(), &val, positive, cfg.operating_threshold)?;
    let test_eval = evaluate(model.as_ref(), &test, positive, cfg.operating_threshold)?;

    fs::create_dir_all(dir)?;
    let logs: Vec<EpochLog> = outcome.logs;
    emit_plots(dir, &logs, val_eval.roc.as_ref(), test_eval.roc.as_ref())?;
    fs::write(
        dir.join("scores_test.csv"),
        scores_csv(test_idx, &classes, &test_eval.probs),
    )?;

    Ok(RowMetrics {
        val_size: val_idx.len(),
        test_size: test_idx.len(),
        class_proportions: class_proportions(&split.train).map_err(DataError::from)?,
        train_time: cfg.timing.then_some(train_time),
        val_accuracy: val_eval.accuracy,
        val_sensitivity: val_eval.sensitivity,
        val_specificity: val_eval.specificity,
        test_accuracy: test_eval.accuracy,
        test_sensitivity: test_eval.sensitivity,
        test_specificity: test_eval.specificity,
        test_roc_auc: test_eval.roc.as_ref().map(|r| r.auc),
    })
}

fn positive_class(cfg: &RunConfig, classes: &[String]) -> Result<Option<usize>, RowFailure> {
    match &cfg.positive_class {
        Some(name) => classes
            .iter()
            .position(|c| c == name)
            .map(Some)
            .ok_or_else(|| {
                RowFailure::Train(TrainError::InvalidConfig(format!(
                    "positive class `{name}` is not one of {classes:?}"
                )))
            }),
        None if classes.len() == 2 => Ok(Some(1)),
        None => Ok(None),
    }
}

struct Evaluation {
    probs: Vec<(Vec<f64>, usize)>,
    accuracy: Option<f64>,
    sensitivity: Option<f64>,
    specificity: Option<f64>,
    roc: Option<RocCurve>,
}

/// Binary rows get threshold metrics and ROC; otherwise argmax accuracy only.
fn evaluate(
    model: &dyn Model,
    provider: &dyn ImageProvider,
    positive: Option<usize>,
    threshold: f64,
) -> Result<Evaluation, RowFailure> {
    let probs = predict_scores(model, provider, EVAL_BATCH)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(RowFailure::Evaluation)?;
    let binary = positive.filter(|_| model.num_classes() == 2);
    let Some(pos) = binary else {
        let (dists, labels): (Vec<Vec<f64>>, Vec<usize>) = probs.iter().cloned().unzip();
        return Ok(Evaluation {
            accuracy: argmax_accuracy(&dists, &labels),
            probs,
            sensitivity: None,
            specificity: None,
            roc: None,
        });
    };
    let scored: Vec<(f64, usize)> = probs.iter().map(|(p, l)| (p[pos], *l)).collect();
    let rates = sens_spec_acc(&confusion_at_threshold(&scored, threshold, pos));
    let roc = match roc_auc(&scored, pos) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("no ROC curve: {e}");
            None
        }
    };
    Ok(Evaluation {
        probs,
        accuracy: rates.accuracy,
        sensitivity: rates.sensitivity,
        specificity: rates.specificity,
        roc,
    })
}

fn scores_csv(
    index: &lesionkit_core::DatasetIndex,
    classes: &[String],
    probs: &[(Vec<f64>, usize)],
) -> String {
    use lesionkit_core::record::format_record;
    let mut header = vec!["path".to_string(), "label".to_string()];
    header.extend(classes.iter().map(|c| format!("p_{c}")));
    let mut s = format_record(&header);
    s.push('\n');
    for (rec, (p, label)) in index.records.iter().zip(probs) {
        let mut fields = vec![rec.path.clone(), classes[*label].clone()];
        fields.extend(p.iter().map(f64::to_string));
        let _ = writeln!(s, "{}", format_record(&fields));
    }
    s
}
