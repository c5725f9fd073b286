use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lesionkit::masks::{eval_masks, render_mask_report};
use lesionkit::runner::{run_experiments, RunConfig};
use lesionkit::synth::make_synthetic_dataset;
use lesionkit_core::segment::AnomalyThresholds;

#[derive(Parser)]
#[command(
    name = "lesionkit",
    version,
    about = "Spreadsheet-driven image classification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every row of an experiment CSV and write train_output.csv.
    Run(RunArgs),
    /// Generate a two-class synthetic dataset (dark vs bright images).
    Synth {
        out_dir: PathBuf,
        /// Images per class.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Image side in pixels.
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset name; the index is written to `<out_dir>/<name>.csv`.
        #[arg(long, default_value = "synthetic")]
        name: String,
    },
    /// Score predicted masks against ground truth masks with the same file names.
    EvalMasks {
        pred_dir: PathBuf,
        truth_dir: PathBuf,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    experiment: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "DERM_DATA_ROOT")]
    data_root: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Extra decoded images the prefetch buffer may hold.
    #[arg(long, default_value_t = 8)]
    capacity: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Class treated as positive for sensitivity/specificity/AUC.
    /// Defaults to the second class in sorted order.
    #[arg(long)]
    positive_class: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Dataset CSVs have a header line (default).
    #[arg(long, overrides_with = "no_header")]
    header: bool,
    /// Dataset CSVs have no header line.
    #[arg(long)]
    no_header: bool,
    /// Leave train_time blank so repeated runs give identical reports.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value_t = AnomalyThresholds::default().max_components)]
    max_components: usize,
    #[arg(long, default_value_t = AnomalyThresholds::default().min_area_frac)]
    min_area_frac: f64,
    #[arg(long, default_value_t = AnomalyThresholds::default().max_area_frac)]
    max_area_frac: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Synth {
            out_dir,
            n,
            size,
            seed,
            name,
        } => match make_synthetic_dataset(&out_dir, &name, n, size, seed) {
            Ok(idx) => {
                println!("wrote {} images to {}", idx.len(), out_dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::EvalMasks {
            pred_dir,
            truth_dir,
            out,
        } => match eval_masks(&pred_dir, &truth_dir) {
            Ok(scores) => {
                let report = render_mask_report(&scores);
                match out {
                    Some(path) => match fs::write(&path, report) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(format!("cannot write {}: {e}", path.display())),
                    },
                    None => {
                        print!("{report}");
                        ExitCode::SUCCESS
                    }
                }
            }
            Err(e) => fail(e),
        },
    }
}

fn run(args: RunArgs) -> ExitCode {
    let anomaly_thresholds =
        match AnomalyThresholds::new(args.max_components, args.min_area_frac, args.max_area_frac) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
    let cfg = RunConfig {
        workers: args.workers,
        prefetch_capacity: args.capacity,
        seed: args.seed,
        positive_class: args.positive_class,
        operating_threshold: args.threshold,
        dataset_header: !args.no_header,
        timing: !args.no_timing,
        anomaly_thresholds,
        ..RunConfig::new(args.experiment, args.out, args.data_root)
    };
    match run_experiments(&cfg) {
        Ok(summary) => {
            println!(
                "{} rows, {} failed; report at {}",
                summary.reports.len(),
                summary.failed(),
                summary.output_file.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::FAILURE
}
