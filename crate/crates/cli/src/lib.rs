//! `nocs9d` command line: synthesize a BOP dataset, fit 9-DoF poses from
//! NOCS maps and depth, run the PCA baseline, evaluate and report.
//!
//! Every `cmd_*` function is usable in-process; [`run`] maps parsed
//! arguments onto them and returns the process exit code.

pub mod evaluate;
pub mod fit;
pub mod predictions;
mod seed;
pub mod synth;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nocs9d_bop::read_camera;
use nocs9d_core::solver::{ExtentRule, RansacConfig};
use nocs9d_core::synth::NoiseSpec;
use nocs9d_core::{EvalConfig, IouMode};

pub use evaluate::{cmd_evaluate, cmd_report, EvalOptions};
pub use fit::{cmd_baseline_pca, cmd_fit, FitOptions, FitOutcome, Method};
pub use synth::{bundled_camera, cmd_synth, ShapeName, SynthOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nocs9d", version, about = "9-DoF pose and size from NOCS maps: synthesize, fit, evaluate")]
pub struct Cli {
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic BOP dataset with NOCS sidecars.
    Synth(SynthArgs),
    /// Fit poses from NOCS maps and depth (RANSAC + Umeyama).
    Fit(FitArgs),
    /// Baseline estimators.
    #[command(subcommand)]
    Baseline(Baseline),
    /// Score predictions against the dataset ground truth.
    Evaluate(EvaluateArgs),
    /// Re-emit the CSV tables of a saved report.json.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum Baseline {
    /// Principal axes of the masked depth points.
    Pca(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset root to create.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = ShapeName::ALL)]
    pub shapes: Vec<ShapeName>,
    /// Images per shape.
    #[arg(long, default_value_t = 50)]
    pub views: usize,
    /// Images with every shape composited; 0 for none.
    #[arg(long, default_value_t = 0)]
    pub multi_views: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian NOCS noise, NOCS units.
    #[arg(long, default_value_t = 0.0)]
    pub nocs_sigma: f64,
    /// Gaussian depth noise, meters.
    #[arg(long, default_value_t = 0.0)]
    pub depth_sigma: f64,
    /// Fraction of NOCS pixels replaced by uniform values.
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    /// camera.json to use instead of the bundled YCB-Video intrinsics.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Also write shaded rgb/ images.
    #[arg(long)]
    pub rgb: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExtentArg {
    /// Twice the largest |x| per axis (box centred on the NOCS origin).
    Centered,
    /// max − min per axis.
    MinMax,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Prediction CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub ransac_iters: usize,
    /// Inlier residual, meters.
    #[arg(long, default_value_t = 0.01)]
    pub inlier_thresh: f64,
    #[arg(long, default_value_t = 10)]
    pub min_inliers: usize,
    /// Consensus must also cover this fraction of the instance's pixels.
    #[arg(long, default_value_t = 0.1)]
    pub min_inlier_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Early-stop confidence; 1 always runs every iteration.
    #[arg(long, default_value_t = 0.999)]
    pub confidence: f64,
    /// How object extents are measured from inlier NOCS points.
    #[arg(long, value_enum, default_value_t = ExtentArg::Centered)]
    pub extent: ExtentArg,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Prediction CSV.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Directory for report.json, table.csv, curves.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "aabb")]
    pub iou_mode: IouMode,
    /// Rotation/translation operating points as `deg:cm`, comma separated.
    #[arg(long, default_value = "5:5,10:5,10:10")]
    pub thresholds: String,
    /// IoU operating points, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub iou_thresholds: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json written by `evaluate`.
    #[arg(long)]
    pub report: PathBuf,
    /// Output directory; defaults to the report's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `"5:5,10:5"` into `(deg, cm)` pairs.
pub fn parse_operating_points(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|item| {
            let (a, b) = item
                .trim()
                .split_once(':')
                .with_context(|| format!("threshold {item:?} is not of the form deg:cm"))?;
            let a: f64 = a.trim().parse().with_context(|| format!("bad degrees in {item:?}"))?;
            let b: f64 = b.trim().parse().with_context(|| format!("bad centimeters in {item:?}"))?;
            Ok((a, b))
        })
        .collect()
}

fn report_failures(outcome: &FitOutcome, out: &std::path::Path) -> i32 {
    eprintln!("wrote {} predictions to {}", outcome.rows.len(), out.display());
    if outcome.failures.is_empty() {
        return EXIT_OK;
    }
    eprintln!("{} instances failed:", outcome.failures.len());
    for ((s, i, n), e) in &outcome.failures {
        eprintln!("  scene {s} image {i} instance {n}: {e}");
    }
    EXIT_PARTIAL
}

/// Executes a parsed command line; `Ok` carries [`EXIT_OK`] or [`EXIT_PARTIAL`].
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth(a) => {
            let camera = match &a.camera {
                Some(p) => read_camera(p)?,
                None => bundled_camera(),
            };
            let opts = SynthOptions {
                out: a.out,
                shapes: a.shapes,
                views: a.views,
                multi_views: a.multi_views,
                seed: a.seed,
                noise: NoiseSpec {
                    nocs_sigma: a.nocs_sigma,
                    depth_sigma: a.depth_sigma,
                    outlier_fraction: a.outlier_fraction,
                    seed: 0,
                },
                camera,
                rgb: a.rgb,
            };
            let s = fit::with_pool(cli.jobs, || cmd_synth(&opts))??;
            eprintln!("wrote {} images, {} instances to {}", s.images, s.instances, opts.out.display());
            Ok(EXIT_OK)
        }
        Command::Fit(a) => {
            let extent = match a.extent {
                ExtentArg::Centered => ExtentRule::Centered,
                ExtentArg::MinMax => ExtentRule::MinMax,
            };
            let opts = FitOptions {
                dataset: a.dataset,
                out: a.out,
                method: Method::Nocs {
                    ransac: RansacConfig {
                        max_iterations: a.ransac_iters,
                        inlier_threshold: a.inlier_thresh,
                        min_inliers: a.min_inliers,
                        min_inlier_ratio: a.min_inlier_ratio,
                        seed: a.seed,
                        confidence: a.confidence,
                    },
                    extent,
                },
                jobs: cli.jobs,
            };
            let outcome = cmd_fit(&opts)?;
            Ok(report_failures(&outcome, &opts.out))
        }
        Command::Baseline(Baseline::Pca(a)) => {
            let outcome = cmd_baseline_pca(a.dataset, a.out.clone(), cli.jobs)?;
            Ok(report_failures(&outcome, &a.out))
        }
        Command::Evaluate(a) => {
            let config = EvalConfig {
                iou_mode: a.iou_mode,
                iou_thresholds: a.iou_thresholds,
                operating_points: parse_operating_points(&a.thresholds)?,
                ..EvalConfig::default()
            };
            let opts = EvalOptions {
                dataset: a.dataset,
                predictions: a.predictions,
                out: a.out,
                config,
                jobs: cli.jobs,
            };
            let report = cmd_evaluate(&opts)?;
            print!("{}", nocs9d_core::metrics::rows_to_csv(&report.table_rows()));
            Ok(EXIT_OK)
        }
        Command::Report(a) => {
            let out = match a.out {
                Some(o) => o,
                None => a.report.parent().map(PathBuf::from).unwrap_or_default(),
            };
            print!("{}", cmd_report(&a.report, &out)?);
            Ok(EXIT_OK)
        }
    }
}
