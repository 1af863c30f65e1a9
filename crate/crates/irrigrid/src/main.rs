//! irrigrid: irrigated/rainfed cropland classification from monthly NDVI.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use irrigrid_core::raster::GeoBox;

fn main() {
    let cli = Cli::parse();
    let level = log_level();
    let code = match commands::run(cli, level) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("irrigrid: error: {msg}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("irrigrid: error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

/// Verbosity from IRRIGRID_LOG: error < warn < info < debug. Default warn.
fn log_level() -> u8 {
    match std::env::var("IRRIGRID_LOG").as_deref() {
        Ok("error") => 0,
        Ok("warn") => 1,
        Ok("info") => 2,
        Ok("debug") => 3,
        _ => 1,
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit 2.
    Usage(String),
    /// Failure while running: exit 1.
    Runtime(String),
}

impl From<irrigrid_core::Error> for CliError {
    fn from(e: irrigrid_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "irrigrid",
    version,
    about = "Classify cropland as irrigated or rainfed from monthly NDVI signatures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Predict irrigation labels over an area of interest.
    Predict(PredictArgs),
    /// Compare predictions against eight spatially shifted runs.
    Consistency(ConsistencyArgs),
    /// Score a labeled raster against ground-truth coordinates.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic scene with known ground truth.
    Synth(SynthArgs),
    /// Print per-k clustering quality metrics for a points CSV.
    Metrics(MetricsArgs),
    /// Dump IRG1/IRGS file headers.
    Info(InfoArgs),
}

fn parse_aoi(s: &str) -> Result<GeoBox, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected lon_min,lat_min,lon_max,lat_max".to_string());
    }
    let mut vals = [0.0f64; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| format!("bad coordinate `{p}`"))?;
    }
    GeoBox::new(vals[0], vals[1], vals[2], vals[3]).map_err(|e| e.to_string())
}

fn parse_mask_codes(s: &str) -> Result<(u8, u8, u8), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected water,non_cropland,cropland".to_string());
    }
    let mut vals = [0u8; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse().map_err(|_| format!("bad code `{p}`"))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

/// Input rasters shared by predict and consistency.
#[derive(Args)]
pub struct InputArgs {
    /// Monthly NDVI: an IRGS stack, or an observation CSV
    /// (pixel_row,pixel_col,date,nir,red,valid) composited on the fly.
    #[arg(long)]
    pub ndvi: PathBuf,

    /// Cropland mask (IRG1, mask band).
    #[arg(long)]
    pub mask: PathBuf,

    /// Monthly precipitation in mm (IRGS).
    #[arg(long)]
    pub precip: PathBuf,

    /// Monthly mean temperature in degrees C (IRGS).
    #[arg(long)]
    pub temp: PathBuf,

    /// Mask class codes as water,non_cropland,cropland.
    #[arg(long, default_value = "0,1,2", value_parser = parse_mask_codes)]
    pub mask_codes: (u8, u8, u8),

    /// Pixel size in degrees, used only when --ndvi is an observation CSV.
    #[arg(long, default_value_t = irrigrid_core::pipeline::DEFAULT_PIXEL_SIZE)]
    pub pixel_size: f64,
}

/// Heuristic thresholds (strict inequalities).
#[derive(Args)]
pub struct HeuristicArgs {
    /// NDVI a peak must exceed to indicate cultivation.
    #[arg(long, default_value_t = 0.3)]
    pub ndvi_peak: f64,

    /// Monthly crop water need in mm.
    #[arg(long, default_value_t = 100.0)]
    pub precip_mm: f64,

    /// Water need for cool seasons, mm.
    #[arg(long, default_value_t = 85.0)]
    pub cold_precip_mm: f64,

    /// Season temperature below which the cool threshold applies.
    #[arg(long, default_value_t = 15.0)]
    pub cold_temp_c: f64,

    /// Minimum circular distance between crop-season peaks, months.
    #[arg(long, default_value_t = 3)]
    pub min_peak_sep: u32,
}

#[derive(Args)]
pub struct ClusterArgs {
    /// Smallest k to try.
    #[arg(long, default_value_t = 2)]
    pub k_lo: usize,

    /// Largest k to try.
    #[arg(long, default_value_t = 6)]
    pub k_hi: usize,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Area of interest as lon_min,lat_min,lon_max,lat_max.
    #[arg(long, value_parser = parse_aoi)]
    pub aoi: GeoBox,

    #[command(flatten)]
    pub inputs: InputArgs,

    /// Output label raster (IRG1).
    #[arg(long)]
    pub out: PathBuf,

    /// Per-tile run report, JSON lines. Default: `<out>.report.jsonl`
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Optional color-mapped preview (rainfed red, irrigated green).
    #[arg(long)]
    pub png: Option<PathBuf>,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Parallel tile workers.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,

    #[command(flatten)]
    pub cluster: ClusterArgs,

    #[command(flatten)]
    pub heuristic: HeuristicArgs,
}

#[derive(Args)]
pub struct ConsistencyArgs {
    /// Area of interest as lon_min,lat_min,lon_max,lat_max. Inputs must
    /// cover a one-third-edge margin around it.
    #[arg(long, value_parser = parse_aoi)]
    pub aoi: GeoBox,

    #[command(flatten)]
    pub inputs: InputArgs,

    /// Report path (JSON). Omit to print to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,

    #[command(flatten)]
    pub cluster: ClusterArgs,

    #[command(flatten)]
    pub heuristic: HeuristicArgs,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Label raster to score (IRG1).
    #[arg(long)]
    pub raster: PathBuf,

    /// Ground-truth CSV with header lon,lat,label (irrigated|rainfed).
    #[arg(long)]
    pub points: PathBuf,

    /// Report path (JSON). Omit to print to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Scene description (JSON; see README for the schema).
    #[arg(long)]
    pub spec: PathBuf,

    /// Directory for ndvi.irgs, mask.irg1, precip.irgs, temp.irgs,
    /// truth.irg1.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Overrides the scene's seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Optional color-mapped truth preview.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Points CSV: 12 numeric columns, no header.
    #[arg(long)]
    pub points: PathBuf,

    #[command(flatten)]
    pub cluster: ClusterArgs,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args)]
pub struct InfoArgs {
    /// IRG1/IRGS files to inspect.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}
