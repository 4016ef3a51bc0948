use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod batch;
mod commands;

#[derive(Parser)]
#[command(name = "fidt", version, about = "FIDT map generation, detection and evaluation")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, short = 'j', global = true, env = "FIDT_JOBS")]
    jobs: Option<usize>,

    /// Ignore unknown keys in annotation files instead of rejecting them.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate distance, IDT or FIDT maps from annotation files.
    GenGt(GenGtArgs),
    /// Detect head positions in map files.
    Detect(DetectArgs),
    /// Pseudo boxes for a list of points.
    Boxes(BoxesArgs),
    /// MSE + I-SSIM loss between a predicted and a ground-truth map.
    Loss(LossArgs),
    /// Localization precision / recall / F1.
    EvalLoc(EvalLocArgs),
    /// Counting MAE / MSE.
    EvalCount(EvalCountArgs),
    /// Tabulate IDT and FIDT responses against distance.
    Profile(ProfileArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GtMode {
    Dt,
    Idt,
    Fidt,
}

#[derive(Args)]
pub struct GenGtArgs {
    /// Annotation file or directory of `*.json`.
    #[arg(long)]
    pub ann: PathBuf,
    /// Output map file or directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "fidt")]
    pub mode: GtMode,
    #[arg(long, default_value_t = 0.02)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.75)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Args)]
pub struct DetectArgs {
    /// Map file or directory of `*.fidt` maps.
    #[arg(long)]
    pub map: PathBuf,
    /// Output CSV file or directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100.0 / 255.0)]
    pub threshold_ratio: f64,
    #[arg(long, default_value_t = 0.10)]
    pub negative_cutoff: f64,
    #[arg(long, default_value_t = 3)]
    pub pool_size: usize,
    /// Report one pixel per plateau of equal maxima.
    #[arg(long)]
    pub dedup_plateaus: bool,
    /// Also write the `image_id,count,is_negative` summary to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoxesArgs {
    /// Point CSV (`x,y` per line).
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub img_w: usize,
    #[arg(long)]
    pub img_h: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub f: f64,
    /// Box CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct LossArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub ann: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub window: usize,
    /// Compare the analytic gradient with central finite differences.
    #[arg(long)]
    pub grad_check: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SigmaMode {
    BoxSmall,
    BoxLarge,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MatchingArg {
    Optimal,
    Greedy,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("threshold").required(true).args(["sigma", "sigma_mode", "sweep"]))]
pub struct EvalLocArgs {
    /// Prediction CSV or directory of `*.csv`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Annotation file or directory of `*.json`.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub sigma_mode: Option<SigmaMode>,
    /// Inclusive threshold range `A:B`, e.g. `1:100`.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, value_enum, default_value = "optimal")]
    pub matching: MatchingArg,
}

#[derive(Args)]
pub struct EvalCountArgs {
    /// CSV of `image_id,count[,...]` lines (e.g. the detect summary).
    #[arg(long)]
    pub pred: PathBuf,
    /// Annotation file, directory of `*.json`, or CSV of `image_id,count`.
    #[arg(long)]
    pub gt: PathBuf,
    /// Add the per-density-bucket MAE table.
    #[arg(long)]
    pub scene_report: bool,
}

#[derive(Args)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 0.02)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.75)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 100.0)]
    pub max_d: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool> {
    let options = fidt_core::io::ReadOptions { strict: !cli.lenient };
    match cli.command {
        Command::GenGt(a) => commands::gen_gt(&a, options),
        Command::Detect(a) => commands::detect(&a),
        Command::Boxes(a) => commands::boxes(&a),
        Command::Loss(a) => commands::loss(&a, options),
        Command::EvalLoc(a) => commands::eval_loc(&a, options),
        Command::EvalCount(a) => commands::eval_count(&a, options),
        Command::Profile(a) => commands::profile(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_pool(cli.jobs).and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn build_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        anyhow::ensure!(n >= 1, "--jobs must be at least 1");
        builder = builder.num_threads(n);
    }
    builder.build().context("starting worker pool")
}
