mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Illumination-adaptive RGB/LWIR fusion toolkit.
///
/// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
#[derive(Debug, Parser)]
#[command(name = "thermofuse", version)]
pub struct Cli {
    /// TOML config supplying defaults; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for batch work (default from config, else 1).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Index a recording tree into a manifest CSV.
    Ingest(IngestArgs),
    /// Register and blend paired frames at one or more fusion levels.
    Fuse(FuseArgs),
    /// Seeded train/val split of a manifest.
    Split(SplitArgs),
    /// Categorize a lux trace and list switch events.
    Categorize(CategorizeArgs),
    /// Reduce trial detection logs to the full statistics suite.
    Evaluate(EvaluateArgs),
    /// Composite-score ranking of one category from a statistics CSV.
    Rank(RankArgs),
    /// Run the live loop over recorded or synthetic frames.
    Run(RunArgs),
    /// Probe a detection service for wire-protocol conformance.
    ProtocolCheck(ProtocolCheckArgs),
    /// Write a synthetic fixture tree.
    GenFixtures(GenFixturesArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Root holding `<recording>/{rgb,lwir,labels}` and `meta.csv`.
    #[arg(long)]
    pub root: PathBuf,
    /// Manifest CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Flat directory of RGB PNGs (paired by file stem with --lwir).
    #[arg(long, requires = "lwir", conflicts_with_all = ["root", "manifest"])]
    pub rgb: Option<PathBuf>,
    #[arg(long, requires = "rgb")]
    pub lwir: Option<PathBuf>,
    /// Flat directory of `<stem>.txt` annotation files.
    #[arg(long, requires = "rgb")]
    pub labels: Option<PathBuf>,
    /// Recording tree, as accepted by `ingest`.
    #[arg(long, conflicts_with = "manifest")]
    pub root: Option<PathBuf>,
    /// Manifest CSV written by `ingest` or `split`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `all` or a comma list of RGB percentages, e.g. `80,90,40`.
    #[arg(long, default_value = "all")]
    pub levels: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Train fraction (default from config, else 0.75).
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep whole recordings on one side.
    #[arg(long)]
    pub group_by_recording: bool,
    /// none, category, color or category_color.
    #[arg(long)]
    pub stratify: Option<String>,
    /// Directory for train.csv and val.csv (default: next to the manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CategorizeArgs {
    /// `timestamp_ms,lux` CSV.
    #[arg(long)]
    pub lux_trace: PathBuf,
    #[arg(long)]
    pub hysteresis: Option<f64>,
    /// Per-reading CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of `<trial_id>.csv` (or `<trial_id>/detections.csv`) logs.
    #[arg(long)]
    pub logs: PathBuf,
    /// Trial manifest: `trial_id,model_id,category,color,held_out`.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Divide by n-1 instead of n.
    #[arg(long)]
    pub sample_std: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with `category,model_id,fusion_rgb_percent,mean,std` (extra columns ignored).
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long)]
    pub category: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset root or a single recording directory.
    #[arg(long, conflicts_with = "synthetic")]
    pub source: Option<PathBuf>,
    /// Only this recording of the source.
    #[arg(long, requires = "source")]
    pub recording: Option<String>,
    /// Synthetic 10 s trial with these lux segments, e.g. `2000,500,5`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// mock or remote.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    /// Mock confidence table CSV.
    #[arg(long)]
    pub mock_table: Option<PathBuf>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rankings CSV; its rank-1 models replace the active model of each
    /// category it covers.
    #[arg(long)]
    pub rankings: Option<PathBuf>,
    /// Serve every frame with this model.
    #[arg(long)]
    pub model: Option<String>,
    /// Trial duration in seconds; 0 for the whole source.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Three-stage threaded loop paced at capture timestamps.
    #[arg(long)]
    pub threaded: bool,
    #[arg(long)]
    pub measure_latency: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProtocolCheckArgs {
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value_t = thermofuse::detection::DEFAULT_TIMEOUT_MS)]
    pub timeout_ms: u64,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenFixturesArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
