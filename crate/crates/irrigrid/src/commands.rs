//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use irrigrid_core::clustering::{
    calinski_harabasz, davies_bouldin, fit_with_restarts, silhouette, PointMatrix,
};
use irrigrid_core::eval::{
    consistency_check, evaluate_points, parse_points_csv, synth_generate, SceneSpec,
};
use irrigrid_core::ingest::{composite_csv_to_stack, load_climate, load_mask, MaskCodes};
use irrigrid_core::pipeline::{PredictConfig, PredictionRaster, RegionInputs};
use irrigrid_core::raster::{
    geobox_to_grid, read_raster, read_stack, BandKind, GeoBox, MonthlyStack,
    SIGNATURE_STACK,
};
use irrigrid_core::season::HeuristicConfig;

use crate::output::{atomic_write, label_png, ToBytes};
use crate::{
    Cli, CliError, Command, ConsistencyArgs, EvaluateArgs, HeuristicArgs, InfoArgs, InputArgs,
    MetricsArgs, PredictArgs, SynthArgs,
};

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli, log_level: u8) -> CliResult<i32> {
    match cli.command {
        Command::Predict(args) => predict(args, log_level),
        Command::Consistency(args) => consistency(args, log_level),
        Command::Evaluate(args) => evaluate(args),
        Command::Synth(args) => synth(args, log_level),
        Command::Metrics(args) => metrics(args),
        Command::Info(args) => info(args),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn heuristic_config(args: &HeuristicArgs) -> CliResult<HeuristicConfig> {
    let config = HeuristicConfig {
        ndvi_peak_threshold: args.ndvi_peak,
        precip_threshold_mm: args.precip_mm,
        cold_precip_threshold_mm: args.cold_precip_mm,
        cold_temp_c: args.cold_temp_c,
        min_peak_separation_months: args.min_peak_sep,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn predict_config(
    heuristic: &HeuristicArgs,
    k_lo: usize,
    k_hi: usize,
) -> CliResult<PredictConfig> {
    let config = PredictConfig {
        heuristic: heuristic_config(heuristic)?,
        k_lo,
        k_hi,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

/// Load the four input rasters. NDVI dispatches on the file signature:
/// IRGS stacks are read directly, anything else is parsed as an
/// observation CSV and composited onto the aoi grid.
fn load_inputs(args: &InputArgs, aoi: &GeoBox, log_level: u8) -> CliResult<RegionInputs> {
    if args.pixel_size.is_nan() || args.pixel_size <= 0.0 {
        return Err(usage("pixel-size must be positive"));
    }
    let ndvi = if sniff_stack(&args.ndvi)? {
        read_stack(&args.ndvi)?
    } else {
        if log_level >= 2 {
            eprintln!(
                "irrigrid: compositing observations from {}",
                args.ndvi.display()
            );
        }
        let grid = geobox_to_grid(aoi, args.pixel_size)?;
        composite_csv_to_stack(&args.ndvi, &grid)?
    };
    if ndvi.band_kind() != BandKind::Ndvi {
        return Err(CliError::Runtime(format!(
            "{}: expected an NDVI stack, found {:?}",
            args.ndvi.display(),
            ndvi.band_kind()
        )));
    }

    let (water, non_cropland, cropland) = args.mask_codes;
    let mask = load_mask(
        &args.mask,
        MaskCodes {
            water,
            non_cropland,
            cropland,
        },
    )?;

    // climate lands on the NDVI lattice so shifted windows stay covered
    let (precip, temp) = load_climate(&args.precip, &args.temp, ndvi.meta())?;

    Ok(RegionInputs {
        ndvi,
        mask,
        precip,
        temp,
    })
}

fn sniff_stack(path: &Path) -> CliResult<bool> {
    let bytes = fs::read(path).map_err(|e| {
        CliError::Runtime(format!("{}: {e}", path.display()))
    })?;
    Ok(bytes.len() >= 4 && bytes[0..4] == SIGNATURE_STACK)
}

fn report_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".report.jsonl");
        out.with_file_name(name)
    })
}

fn warn_failures(prediction: &PredictionRaster, log_level: u8) {
    if log_level < 1 {
        return;
    }
    for report in prediction.reports.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "irrigrid: warning: tile ({}, {}) failed: {}",
            report.tile_row,
            report.tile_col,
            report.error.as_deref().unwrap_or("unknown")
        );
    }
}

fn predict(args: PredictArgs, log_level: u8) -> CliResult<i32> {
    let config = predict_config(&args.heuristic, args.cluster.k_lo, args.cluster.k_hi)?;
    let inputs = load_inputs(&args.inputs, &args.aoi, log_level)?;

    let prediction = irrigrid_core::pipeline::predict_region(
        &args.aoi,
        &inputs,
        &config,
        args.seed,
        args.workers as usize,
    )?;

    atomic_write(&args.out, &prediction.grid.to_bytes())?;
    let mut report_lines = String::new();
    for report in &prediction.reports {
        report_lines.push_str(&serde_json::to_string(report).map_err(|e| {
            CliError::Runtime(format!("serializing report: {e}"))
        })?);
        report_lines.push('\n');
    }
    atomic_write(&report_path(&args.out, &args.report), report_lines.as_bytes())?;
    if let Some(png) = &args.png {
        atomic_write(png, &label_png(&prediction.grid)?)?;
    }

    warn_failures(&prediction, log_level);
    if log_level >= 2 {
        eprintln!(
            "irrigrid: labeled {} tiles -> {}",
            prediction.reports.len(),
            args.out.display()
        );
    }
    Ok(if prediction.has_failures() { 1 } else { 0 })
}

fn consistency(args: ConsistencyArgs, log_level: u8) -> CliResult<i32> {
    let config = predict_config(&args.heuristic, args.cluster.k_lo, args.cluster.k_hi)?;
    let inputs = load_inputs(&args.inputs, &args.aoi, log_level)?;

    let report = consistency_check(
        &args.aoi,
        &inputs,
        &config,
        args.seed,
        args.workers as usize,
    )?;

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))?;
    match &args.out {
        Some(path) => atomic_write(path, json.as_bytes())?,
        None => println!("{json}"),
    }
    if log_level >= 2 {
        match report.overall {
            Some(v) => eprintln!(
                "irrigrid: consistency {:.4} over {} comparisons",
                v, report.total_compared
            ),
            None => eprintln!("irrigrid: consistency undefined (no comparable pixels)"),
        }
    }
    Ok(0)
}

fn evaluate(args: EvaluateArgs) -> CliResult<i32> {
    let raster = read_raster(&args.raster)?;
    if raster.band_kind() != BandKind::Label {
        return Err(CliError::Runtime(format!(
            "{}: expected a label raster, found {:?}",
            args.raster.display(),
            raster.band_kind()
        )));
    }
    let text = fs::read_to_string(&args.points)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.points.display())))?;
    let points = parse_points_csv(&text, &args.points.display().to_string())?;
    let report = evaluate_points(&raster, &points);
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))?;
    match &args.out {
        Some(path) => atomic_write(path, json.as_bytes())?,
        None => println!("{json}"),
    }
    Ok(0)
}

fn synth(args: SynthArgs, log_level: u8) -> CliResult<i32> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.spec.display())))?;
    let mut spec: SceneSpec = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = Some(seed);
    }

    let out = synth_generate(&spec)?;
    fs::create_dir_all(&args.out_dir)?;
    atomic_write(&args.out_dir.join("ndvi.irgs"), &out.ndvi.to_bytes())?;
    atomic_write(&args.out_dir.join("mask.irg1"), &out.mask.grid().to_bytes())?;
    atomic_write(&args.out_dir.join("precip.irgs"), &out.precip.to_bytes())?;
    atomic_write(&args.out_dir.join("temp.irgs"), &out.temp.to_bytes())?;
    atomic_write(&args.out_dir.join("truth.irg1"), &out.truth.to_bytes())?;
    if let Some(png) = &args.png {
        atomic_write(png, &label_png(&out.truth)?)?;
    }
    if log_level >= 2 {
        let meta = out.truth.meta();
        eprintln!(
            "irrigrid: wrote {}x{} scene to {}",
            meta.width,
            meta.height,
            args.out_dir.display()
        );
    }
    Ok(0)
}

fn metrics(args: MetricsArgs) -> CliResult<i32> {
    if args.cluster.k_lo < 2 || args.cluster.k_lo > args.cluster.k_hi {
        return Err(usage(format!(
            "k range [{}, {}] must satisfy 2 <= k_lo <= k_hi",
            args.cluster.k_lo, args.cluster.k_hi
        )));
    }
    let text = fs::read_to_string(&args.points)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.points.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 12 {
            return Err(CliError::Runtime(format!(
                "{}:{}: expected 12 columns, got {}",
                args.points.display(),
                idx + 1,
                fields.len()
            )));
        }
        let row: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        rows.push(row.map_err(|_| {
            CliError::Runtime(format!("{}:{}: non-numeric value", args.points.display(), idx + 1))
        })?);
    }
    let points = PointMatrix::from_rows(rows)?;
    if points.n() <= args.cluster.k_hi {
        return Err(CliError::Runtime(format!(
            "need more than {} points, got {}",
            args.cluster.k_hi,
            points.n()
        )));
    }

    println!("k,inertia,silhouette,calinski_harabasz,davies_bouldin");
    for k in args.cluster.k_lo..=args.cluster.k_hi {
        let model = fit_with_restarts(&points, k, args.seed)?;
        let sil = silhouette(&points, &model);
        let ch = calinski_harabasz(&points, &model);
        let db = davies_bouldin(&points, &model);
        println!(
            "{},{},{},{},{}",
            k,
            model.inertia,
            metric_field(sil),
            metric_field(ch),
            metric_field(db),
        );
    }
    Ok(0)
}

fn metric_field(value: irrigrid_core::Result<f64>) -> String {
    match value {
        Ok(v) => format!("{v}"),
        Err(_) => "NaN".to_string(),
    }
}

fn info(args: InfoArgs) -> CliResult<i32> {
    for path in &args.paths {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if bytes.len() >= 4 && bytes[0..4] == SIGNATURE_STACK {
            let stack: MonthlyStack = read_stack(path)?;
            let meta = stack.meta();
            println!(
                "{}: IRGS months=12 band={:?} origin=({}, {}) pixel_size={} size={}x{}",
                path.display(),
                stack.band_kind(),
                meta.origin_lon,
                meta.origin_lat,
                meta.pixel_size,
                meta.width,
                meta.height
            );
        } else {
            let grid = read_raster(path)?;
            let meta = grid.meta();
            println!(
                "{}: IRG1 band={:?} origin=({}, {}) pixel_size={} size={}x{}",
                path.display(),
                grid.band_kind(),
                meta.origin_lon,
                meta.origin_lat,
                meta.pixel_size,
                meta.width,
                meta.height
            );
        }
    }
    Ok(0)
}
