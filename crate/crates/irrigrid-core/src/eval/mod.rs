//! Evaluation instruments: the shifted-region consistency metric, point
//! accuracy against labeled coordinates, and the synthetic-scene generator
//! that supplies ground truth for both.

mod synth;

pub use synth::{synth_generate, LandKind, RegionSpec, SceneSpec, SynthOutputs};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{predict_region, LabelCode, PredictConfig, PredictionRaster, RegionInputs};
use crate::raster::{GeoBox, RasterGrid};
use crate::season::Verdict;

/// Agreement with one shifted prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftAgreement {
    /// Offset in pixels (east positive, north positive).
    pub dx_pixels: i64,
    pub dy_pixels: i64,
    /// The same offset in degrees, after snapping to the pixel grid.
    pub dx_degrees: f64,
    pub dy_degrees: f64,
    /// Pixels compared (both scorable) and pixels that agreed.
    pub compared: u64,
    pub agreed: u64,
    /// agreed / compared, or null when nothing was comparable.
    pub agreement: Option<f64>,
}

/// Output of the consistency protocol.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub aoi: GeoBox,
    pub seed: u64,
    pub shifts: Vec<ShiftAgreement>,
    pub total_compared: u64,
    pub total_agreed: u64,
    /// Pooled agreement over all shifts, or null when nothing overlapped.
    pub overall: Option<f64>,
}

/// Compare a base prediction of `aoi` against eight predictions shifted by
/// a third of the box edge in each direction (axis and diagonal), and
/// report per-pixel label agreement on the overlaps.
///
/// Offsets are snapped to whole pixels so overlapping pixel centers
/// coincide exactly. Not-cultivated folds into rainfed; non-cropland and
/// nodata pixels are excluded from comparison. Inputs must cover the box
/// plus the shift margin on all sides.
pub fn consistency_check(
    aoi: &GeoBox,
    inputs: &RegionInputs,
    config: &PredictConfig,
    seed: u64,
    workers: usize,
) -> Result<ConsistencyReport> {
    aoi.validate()?;
    let pixel_size = inputs.ndvi.meta().pixel_size;
    let dx_pixels = (aoi.width() / 3.0 / pixel_size).round() as i64;
    let dy_pixels = (aoi.height() / 3.0 / pixel_size).round() as i64;
    if dx_pixels == 0 || dy_pixels == 0 {
        return Err(Error::invalid(
            "area of interest is too small for a one-third shift of at least one pixel",
        ));
    }

    let coverage = inputs.ndvi.meta().geobox();
    let margin_lon = dx_pixels as f64 * pixel_size;
    let margin_lat = dy_pixels as f64 * pixel_size;
    let needed = GeoBox {
        lon_min: aoi.lon_min - margin_lon,
        lat_min: aoi.lat_min - margin_lat,
        lon_max: aoi.lon_max + margin_lon,
        lat_max: aoi.lat_max + margin_lat,
    };
    // sub-pixel slack: edge coordinates carry f64 rounding from grid math
    let tol = 1e-6 * pixel_size;
    let covered = coverage.lon_min <= needed.lon_min + tol
        && coverage.lat_min <= needed.lat_min + tol
        && coverage.lon_max >= needed.lon_max - tol
        && coverage.lat_max >= needed.lat_max - tol;
    if !covered {
        return Err(Error::invalid(format!(
            "inputs cover {coverage:?} but the shift protocol needs {needed:?}"
        )));
    }

    let base = predict_region(aoi, inputs, config, seed, workers)?;

    let mut shifts = Vec::with_capacity(8);
    let mut total_compared = 0u64;
    let mut total_agreed = 0u64;
    for sy in [-1i64, 0, 1] {
        for sx in [-1i64, 0, 1] {
            if sx == 0 && sy == 0 {
                continue;
            }
            let dx = sx * dx_pixels;
            let dy = sy * dy_pixels;
            let dx_degrees = dx as f64 * pixel_size;
            let dy_degrees = dy as f64 * pixel_size;
            let shifted_aoi = aoi.translated(dx_degrees, dy_degrees);
            let shifted = predict_region(&shifted_aoi, inputs, config, seed, workers)?;
            let (compared, agreed) = label_agreement(&base.grid, &shifted.grid)?;
            total_compared += compared;
            total_agreed += agreed;
            shifts.push(ShiftAgreement {
                dx_pixels: dx,
                dy_pixels: dy,
                dx_degrees,
                dy_degrees,
                compared,
                agreed,
                agreement: fraction(agreed, compared),
            });
        }
    }

    Ok(ConsistencyReport {
        aoi: *aoi,
        seed,
        shifts,
        total_compared,
        total_agreed,
        overall: fraction(total_agreed, total_compared),
    })
}

fn fraction(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Count label agreement between two label rasters on their overlap.
/// Grids must share a pixel lattice. Returns (compared, agreed):
/// not-cultivated folds into rainfed, and a pixel is compared only when
/// both sides carry a cropland label.
pub fn label_agreement(a: &RasterGrid, b: &RasterGrid) -> Result<(u64, u64)> {
    let (row_off, col_off) = a.meta().lattice_offset(b.meta()).ok_or_else(|| {
        Error::invalid("label rasters do not share a pixel lattice".to_string())
    })?;

    // overlap in a's pixel coordinates
    let row_lo = row_off.max(0);
    let col_lo = col_off.max(0);
    let row_hi = (row_off + b.meta().height as i64).min(a.meta().height as i64);
    let col_hi = (col_off + b.meta().width as i64).min(a.meta().width as i64);

    let mut compared = 0u64;
    let mut agreed = 0u64;
    for row in row_lo..row_hi {
        for col in col_lo..col_hi {
            let va = scorable_verdict(a.get(row as u32, col as u32));
            let vb = scorable_verdict(b.get((row - row_off) as u32, (col - col_off) as u32));
            if let (Some(va), Some(vb)) = (va, vb) {
                compared += 1;
                if va == vb {
                    agreed += 1;
                }
            }
        }
    }
    Ok((compared, agreed))
}

/// Binary verdict carried by a label-raster pixel, if it has one.
/// Not-cultivated counts as rainfed; non-cropland and nodata do not score.
pub fn scorable_verdict(code: f32) -> Option<Verdict> {
    match LabelCode::from_code(code) {
        Some(LabelCode::Irrigated) => Some(Verdict::Irrigated),
        Some(LabelCode::Rainfed) | Some(LabelCode::NotCultivated) => Some(Verdict::Rainfed),
        Some(LabelCode::NonCropland) | None => None,
    }
}

/// A ground-truth coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub lon: f64,
    pub lat: f64,
    pub truth: Verdict,
}

/// Why a point could not be scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnscorableReason {
    OutsideRaster,
    NonCropland,
    Nodata,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointOutcome {
    pub lon: f64,
    pub lat: f64,
    pub truth: Verdict,
    pub predicted: Option<Verdict>,
    pub matched: Option<bool>,
    pub unscorable: Option<UnscorableReason>,
}

/// Accuracy protocol output. The confusion matrix is indexed
/// `[truth][predicted]` with irrigated = 0, rainfed = 1.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyReport {
    pub scored: u64,
    pub matched: u64,
    /// matched/scored, or null when no point was scorable.
    pub accuracy: Option<f64>,
    pub unscorable: u64,
    pub confusion: [[u64; 2]; 2],
    pub outcomes: Vec<PointOutcome>,
}

/// Score labeled coordinates against a prediction raster. A point takes the
/// label of the pixel containing it; not-cultivated folds into rainfed.
/// Points outside the raster or on non-cropland/nodata pixels are excluded
/// from the denominator and reported separately.
pub fn evaluate_points(raster: &RasterGrid, points: &[EvalPoint]) -> AccuracyReport {
    let meta = raster.meta();
    let mut outcomes = Vec::with_capacity(points.len());
    let mut scored = 0u64;
    let mut matched = 0u64;
    let mut unscorable = 0u64;
    let mut confusion = [[0u64; 2]; 2];

    for p in points {
        let outcome = match meta.pixel_containing(p.lon, p.lat) {
            None => PointOutcome {
                lon: p.lon,
                lat: p.lat,
                truth: p.truth,
                predicted: None,
                matched: None,
                unscorable: Some(UnscorableReason::OutsideRaster),
            },
            Some((row, col)) => {
                let code = raster.get(row, col);
                match scorable_verdict(code) {
                    Some(predicted) => {
                        scored += 1;
                        let hit = predicted == p.truth;
                        if hit {
                            matched += 1;
                        }
                        confusion[verdict_index(p.truth)][verdict_index(predicted)] += 1;
                        PointOutcome {
                            lon: p.lon,
                            lat: p.lat,
                            truth: p.truth,
                            predicted: Some(predicted),
                            matched: Some(hit),
                            unscorable: None,
                        }
                    }
                    None => {
                        let reason = if code == LabelCode::NonCropland.code() {
                            UnscorableReason::NonCropland
                        } else {
                            UnscorableReason::Nodata
                        };
                        PointOutcome {
                            lon: p.lon,
                            lat: p.lat,
                            truth: p.truth,
                            predicted: None,
                            matched: None,
                            unscorable: Some(reason),
                        }
                    }
                }
            }
        };
        if outcome.unscorable.is_some() {
            unscorable += 1;
        }
        outcomes.push(outcome);
    }

    AccuracyReport {
        scored,
        matched,
        accuracy: fraction(matched, scored),
        unscorable,
        confusion,
        outcomes,
    }
}

fn verdict_index(v: Verdict) -> usize {
    match v {
        Verdict::Irrigated => 0,
        Verdict::Rainfed => 1,
    }
}

/// Parse a points CSV with header `lon,lat,label`, label irrigated|rainfed.
pub fn parse_points_csv(text: &str, path: &str) -> Result<Vec<EvalPoint>> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if header.1.trim() != "lon,lat,label" {
        return Err(parse_err(path, 1, "header must be `lon,lat,label`"));
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(path, lineno, "expected 3 fields"));
        }
        let lon: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, "bad lon"))?;
        let lat: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, "bad lat"))?;
        let truth = match fields[2].to_ascii_lowercase().as_str() {
            "irrigated" => Verdict::Irrigated,
            "rainfed" => Verdict::Rainfed,
            other => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("label must be irrigated or rainfed, got `{other}`"),
                ))
            }
        };
        points.push(EvalPoint { lon, lat, truth });
    }
    Ok(points)
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Fraction of scorable pixels whose labels agree with the truth raster,
/// pixel for pixel. Both rasters must share one grid.
pub fn truth_recovery(prediction: &PredictionRaster, truth: &RasterGrid) -> Result<Option<f64>> {
    if prediction.grid.meta() != truth.meta() {
        return Err(Error::GridMismatch {
            expected: Box::new(*truth.meta()),
            actual: Box::new(*prediction.grid.meta()),
        });
    }
    let (compared, agreed) = label_agreement(&prediction.grid, truth)?;
    Ok(fraction(agreed, compared))
}
