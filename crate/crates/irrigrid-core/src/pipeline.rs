//! Per-tile prediction, 0.5-degree tiling, parallel execution, and the
//! deterministic merge into one labeled raster.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{mix_seed, select_model, KCandidate, PointMatrix};
use crate::error::{Error, Result};
use crate::ingest::{apply_mask, CroplandMask};
use crate::raster::{
    geobox_to_grid, snap_ceil, BandKind, GeoBox, GridMeta, MonthlyStack, RasterGrid, MONTHS,
    NODATA_CODE,
};
use crate::season::{label_cluster, ClusterLabel, HeuristicConfig, OverallLabel};

/// Tile edge length in degrees.
pub const TILE_EDGE_DEGREES: f64 = 0.5;

/// Pixel edge in degrees approximating 30 m at the equator.
pub const DEFAULT_PIXEL_SIZE: f64 = 0.00025;

/// Below this many cropland pixels a tile skips clustering and labels each
/// pixel from its own signature.
pub fn min_pixels_for_clustering(k_hi: usize) -> usize {
    2 * k_hi
}

/// Output label codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelCode {
    Rainfed,
    Irrigated,
    NotCultivated,
    NonCropland,
}

impl LabelCode {
    pub fn code(self) -> f32 {
        match self {
            LabelCode::Rainfed => 0.0,
            LabelCode::Irrigated => 1.0,
            LabelCode::NotCultivated => 2.0,
            LabelCode::NonCropland => 3.0,
        }
    }

    pub fn from_code(value: f32) -> Option<LabelCode> {
        if value == 0.0 {
            Some(LabelCode::Rainfed)
        } else if value == 1.0 {
            Some(LabelCode::Irrigated)
        } else if value == 2.0 {
            Some(LabelCode::NotCultivated)
        } else if value == 3.0 {
            Some(LabelCode::NonCropland)
        } else {
            None
        }
    }

    pub fn from_overall(overall: OverallLabel) -> LabelCode {
        match overall {
            OverallLabel::Irrigated => LabelCode::Irrigated,
            OverallLabel::Rainfed => LabelCode::Rainfed,
            OverallLabel::NotCultivated => LabelCode::NotCultivated,
        }
    }
}

/// One tile of the area of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TileSpec {
    pub geobox: GeoBox,
    pub row: u32,
    pub col: u32,
}

/// Knobs for prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictConfig {
    pub heuristic: HeuristicConfig,
    pub k_lo: usize,
    pub k_hi: usize,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            heuristic: HeuristicConfig::default(),
            k_lo: 2,
            k_hi: 6,
        }
    }
}

impl PredictConfig {
    pub fn validate(&self) -> Result<()> {
        self.heuristic.validate()?;
        if self.k_lo < 2 || self.k_lo > self.k_hi {
            return Err(Error::invalid(format!(
                "k range [{}, {}] must satisfy 2 <= k_lo <= k_hi",
                self.k_lo, self.k_hi
            )));
        }
        Ok(())
    }
}

/// How a tile was labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileMode {
    /// K-means over cropland signatures, labels per cluster.
    Kmeans,
    /// Too few pixels; each pixel labeled from its own signature.
    PerPixel,
    /// No usable cropland pixels.
    Empty,
    /// Tile failed; painted nodata.
    Failed,
}

/// Per-cluster provenance.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub cluster: usize,
    pub size: usize,
    pub centroid: Vec<f64>,
    pub label: ClusterLabel,
}

/// One line of the run report: everything that determined a tile's labels.
#[derive(Debug, Clone, Serialize)]
pub struct TileReport {
    pub tile_row: u32,
    pub tile_col: u32,
    pub geobox: GeoBox,
    pub seed: u64,
    pub mode: TileMode,
    pub cropland_pixels: usize,
    pub k: Option<usize>,
    pub metric_sample: Option<usize>,
    pub candidates: Vec<KCandidate>,
    pub clusters: Vec<ClusterReport>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl TileReport {
    fn new(tile: &TileSpec, seed: u64) -> Self {
        TileReport {
            tile_row: tile.row,
            tile_col: tile.col,
            geobox: tile.geobox,
            seed,
            mode: TileMode::Empty,
            cropland_pixels: 0,
            k: None,
            metric_sample: None,
            candidates: Vec::new(),
            clusters: Vec::new(),
            warnings: Vec::new(),
            error: None,
        }
    }
}

/// A labeled raster plus the per-tile reports that produced it.
#[derive(Debug, Clone)]
pub struct PredictionRaster {
    pub grid: RasterGrid,
    pub reports: Vec<TileReport>,
}

impl PredictionRaster {
    pub fn has_failures(&self) -> bool {
        self.reports.iter().any(|r| r.error.is_some())
    }
}

/// Aligned per-tile inputs for one prediction.
#[derive(Debug, Clone)]
pub struct TileInputs {
    pub ndvi: MonthlyStack,
    pub mask: CroplandMask,
    pub precip: MonthlyStack,
    pub temp: MonthlyStack,
}

impl TileInputs {
    fn check_aligned(&self) -> Result<()> {
        let meta = self.ndvi.meta();
        for other in [self.mask.meta(), self.precip.meta(), self.temp.meta()] {
            if other != meta {
                return Err(Error::GridMismatch {
                    expected: Box::new(*meta),
                    actual: Box::new(*other),
                });
            }
        }
        Ok(())
    }
}

/// Classify one tile. All inputs must share the tile grid.
pub fn predict_tile(
    tile: &TileSpec,
    inputs: &TileInputs,
    config: &PredictConfig,
    seed: u64,
) -> Result<(RasterGrid, TileReport)> {
    config.validate()?;
    inputs.check_aligned()?;
    let meta = *inputs.ndvi.meta();
    let mut report = TileReport::new(tile, seed);
    let mut grid = RasterGrid::filled(meta, BandKind::Label, NODATA_CODE);

    paint_non_cropland(&mut grid, &inputs.mask);

    let masked = apply_mask(&inputs.ndvi, &inputs.mask)?;
    report.cropland_pixels = masked.len();

    let incomplete = count_incomplete_cropland(&inputs.ndvi, &inputs.mask, masked.len());
    if incomplete > 0 {
        report.warnings.push(format!(
            "{incomplete} cropland pixels have incomplete signatures and stay nodata"
        ));
    }

    if masked.is_empty() {
        report.mode = TileMode::Empty;
        report
            .warnings
            .push("no cropland pixels with complete signatures".to_string());
        return Ok((grid, report));
    }

    if masked.len() < min_pixels_for_clustering(config.k_hi) {
        report.mode = TileMode::PerPixel;
        report.warnings.push(format!(
            "{} cropland pixels are too few for clustering; labeling per pixel",
            masked.len()
        ));
        label_per_pixel(&mut grid, &mut report, inputs, &masked, config)?;
        return Ok((grid, report));
    }

    let points = PointMatrix::from_rows(
        masked
            .iter()
            .map(|(_, sig)| sig.iter().map(|&v| v as f64).collect::<Vec<f64>>()),
    )?;

    match select_model(&points, (config.k_lo, config.k_hi), seed) {
        Ok(selection) => {
            report.mode = TileMode::Kmeans;
            report.k = Some(selection.model.k);
            report.metric_sample = selection.metric_sample;
            report.candidates = selection.candidates;

            let model = &selection.model;
            for c in 0..model.k {
                let members = model.cluster_members(c);
                let (precip, temp) =
                    cluster_climate(inputs, &masked, &members).map_err(|e| {
                        Error::invalid(format!("cluster {c}: {e}"))
                    })?;
                let centroid: [f64; MONTHS] = model
                    .centroid(c)
                    .try_into()
                    .expect("12-dimensional centroid");
                let mut label = label_cluster(&centroid, &precip, &temp, &config.heuristic);
                label.cluster = c;
                let code = LabelCode::from_overall(label.overall).code();
                for &m in &members {
                    let idx = masked[m].0;
                    grid.set(
                        (idx / meta.width as usize) as u32,
                        (idx % meta.width as usize) as u32,
                        code,
                    );
                }
                report.clusters.push(ClusterReport {
                    cluster: c,
                    size: members.len(),
                    centroid: model.centroid(c).to_vec(),
                    label,
                });
            }
        }
        Err(Error::InvalidModel(msg)) | Err(Error::UndefinedMetric(msg)) => {
            // Degenerate signatures (e.g. a constant tile); the heuristic
            // still applies pixel by pixel.
            report.mode = TileMode::PerPixel;
            report
                .warnings
                .push(format!("clustering degenerate ({msg}); labeling per pixel"));
            label_per_pixel(&mut grid, &mut report, inputs, &masked, config)?;
        }
        Err(e) => return Err(e),
    }

    Ok((grid, report))
}

fn paint_non_cropland(grid: &mut RasterGrid, mask: &CroplandMask) {
    let meta = *grid.meta();
    for row in 0..meta.height {
        for col in 0..meta.width {
            if mask.is_nodata(row, col) {
                continue; // stays nodata
            }
            if !mask.is_cropland(row, col) {
                grid.set(row, col, LabelCode::NonCropland.code());
            }
        }
    }
}

fn count_incomplete_cropland(ndvi: &MonthlyStack, mask: &CroplandMask, complete: usize) -> usize {
    let meta = ndvi.meta();
    let mut cropland = 0usize;
    for row in 0..meta.height {
        for col in 0..meta.width {
            if mask.is_cropland(row, col) {
                cropland += 1;
            }
        }
    }
    cropland - complete
}

/// Label each masked pixel from its own signature and climate series.
fn label_per_pixel(
    grid: &mut RasterGrid,
    report: &mut TileReport,
    inputs: &TileInputs,
    masked: &[(usize, [f32; MONTHS])],
    config: &PredictConfig,
) -> Result<()> {
    let width = inputs.ndvi.meta().width as usize;
    let mut climate_gaps = 0usize;
    for (idx, sig) in masked {
        let row = (idx / width) as u32;
        let col = (idx % width) as u32;
        let precip = inputs.precip.pixel_series(row, col);
        let temp = inputs.temp.pixel_series(row, col);
        if precip.iter().any(|v| v.is_nan()) || temp.iter().any(|v| v.is_nan()) {
            climate_gaps += 1;
            continue; // stays nodata
        }
        let signature: [f64; MONTHS] = sig.map(|v| v as f64);
        let precip: [f64; MONTHS] = precip.map(|v| v as f64);
        let temp: [f64; MONTHS] = temp.map(|v| v as f64);
        let label = label_cluster(&signature, &precip, &temp, &config.heuristic);
        grid.set(row, col, LabelCode::from_overall(label.overall).code());
    }
    if climate_gaps == masked.len() {
        return Err(Error::invalid(
            "no climate coverage for any cropland pixel".to_string(),
        ));
    }
    if climate_gaps > 0 {
        report.warnings.push(format!(
            "{climate_gaps} pixels lack climate coverage and stay nodata"
        ));
    }
    Ok(())
}

/// Spatial mean of the climate series over a cluster's member pixels,
/// month by month over the pixels with data. A month with no data at all
/// means the climate inputs do not cover this tile.
fn cluster_climate(
    inputs: &TileInputs,
    masked: &[(usize, [f32; MONTHS])],
    members: &[usize],
) -> Result<([f64; MONTHS], [f64; MONTHS])> {
    let width = inputs.ndvi.meta().width as usize;
    let mut precip = [0.0f64; MONTHS];
    let mut temp = [0.0f64; MONTHS];
    let mut precip_n = [0usize; MONTHS];
    let mut temp_n = [0usize; MONTHS];
    for &m in members {
        let idx = masked[m].0;
        let row = (idx / width) as u32;
        let col = (idx % width) as u32;
        for month in 0..MONTHS {
            let p = inputs.precip.month(month).get(row, col);
            if !p.is_nan() {
                precip[month] += p as f64;
                precip_n[month] += 1;
            }
            let t = inputs.temp.month(month).get(row, col);
            if !t.is_nan() {
                temp[month] += t as f64;
                temp_n[month] += 1;
            }
        }
    }
    for month in 0..MONTHS {
        if precip_n[month] == 0 || temp_n[month] == 0 {
            return Err(Error::invalid(format!(
                "no climate coverage for month {}",
                month + 1
            )));
        }
        precip[month] /= precip_n[month] as f64;
        temp[month] /= temp_n[month] as f64;
    }
    Ok((precip, temp))
}

/// Split an area of interest into tiles of the given edge, row-major from
/// the north-west corner. Boundary tiles are clipped to the box, never
/// padded.
pub fn tile_aoi(aoi: &GeoBox, edge: f64) -> Result<Vec<TileSpec>> {
    aoi.validate()?;
    if edge.is_nan() || edge <= 0.0 || !edge.is_finite() {
        return Err(Error::invalid("tile edge must be positive"));
    }
    let cols = snap_ceil(aoi.width() / edge);
    let rows = snap_ceil(aoi.height() / edge);
    let mut tiles = Vec::with_capacity(rows as usize * cols as usize);
    for row in 0..rows {
        let lat_max = aoi.lat_max - row as f64 * edge;
        let lat_min = (aoi.lat_max - (row + 1) as f64 * edge).max(aoi.lat_min);
        for col in 0..cols {
            let lon_min = aoi.lon_min + col as f64 * edge;
            let lon_max = (aoi.lon_min + (col + 1) as f64 * edge).min(aoi.lon_max);
            tiles.push(TileSpec {
                geobox: GeoBox {
                    lon_min,
                    lat_min,
                    lon_max,
                    lat_max,
                },
                row,
                col,
            });
        }
    }
    Ok(tiles)
}

/// Region-level inputs on their native grids. NDVI and mask must share the
/// analysis lattice; climate may be arbitrarily coarse and is resampled.
#[derive(Debug, Clone)]
pub struct RegionInputs {
    pub ndvi: MonthlyStack,
    pub mask: CroplandMask,
    pub precip: MonthlyStack,
    pub temp: MonthlyStack,
}

/// Classify an area of interest tile by tile and merge into one raster.
///
/// The analysis grid is laid over `aoi` at the NDVI stack's pixel size; the
/// NDVI and mask inputs must cover it on the same lattice. Each tile gets a
/// seed derived from (seed, tile row, tile col), so the output is
/// bit-identical for any worker count. A tile that fails (for example,
/// missing climate coverage) is painted nodata, recorded in its report, and
/// does not stop the run.
pub fn predict_region(
    aoi: &GeoBox,
    inputs: &RegionInputs,
    config: &PredictConfig,
    seed: u64,
    workers: usize,
) -> Result<PredictionRaster> {
    config.validate()?;
    if workers == 0 {
        return Err(Error::invalid("workers must be at least 1"));
    }
    let pixel_size = inputs.ndvi.meta().pixel_size;
    let region_meta = geobox_to_grid(aoi, pixel_size)?;

    let ndvi = inputs.ndvi.extract_window(&region_meta)?;
    let mask = inputs.mask.extract_window(&region_meta)?;
    let precip = crate::ingest::resample_stack(&inputs.precip, &region_meta)?;
    let temp = crate::ingest::resample_stack(&inputs.temp, &region_meta)?;

    let tiles = tile_aoi(aoi, TILE_EDGE_DEGREES)?;
    let windows = tile_windows(&region_meta, &tiles);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;

    let results: Vec<(Option<RasterGrid>, TileReport)> = pool.install(|| {
        tiles
            .par_iter()
            .zip(&windows)
            .map(|(tile, window)| {
                let tile_seed = mix_seed(seed, tile.row as u64, tile.col as u64);
                run_tile(tile, window, &ndvi, &mask, &precip, &temp, config, tile_seed)
            })
            .collect()
    });

    let mut grid = RasterGrid::filled(region_meta, BandKind::Label, NODATA_CODE);
    let mut reports = Vec::with_capacity(results.len());
    for ((tile_grid, report), window) in results.into_iter().zip(&windows) {
        if let Some(tile_grid) = tile_grid {
            grid.blit(&tile_grid, window.row_start, window.col_start);
        }
        reports.push(report);
    }

    Ok(PredictionRaster { grid, reports })
}

#[derive(Debug, Clone, Copy)]
struct PixelWindow {
    row_start: u32,
    col_start: u32,
    height: u32,
    width: u32,
}

/// Partition the region grid's pixels among tiles: a pixel belongs to the
/// tile containing its center. Windows are contiguous and disjoint even
/// when the tile edge is not a pixel multiple.
fn tile_windows(meta: &GridMeta, tiles: &[TileSpec]) -> Vec<PixelWindow> {
    let cols = tiles.iter().map(|t| t.col).max().unwrap_or(0) + 1;
    let rows = tiles.iter().map(|t| t.row).max().unwrap_or(0) + 1;
    let col_bounds = window_bounds(meta.width, meta.pixel_size, cols, TILE_EDGE_DEGREES);
    let row_bounds = window_bounds(meta.height, meta.pixel_size, rows, TILE_EDGE_DEGREES);
    tiles
        .iter()
        .map(|t| {
            let (col_start, col_end) = (col_bounds[t.col as usize], col_bounds[t.col as usize + 1]);
            let (row_start, row_end) = (row_bounds[t.row as usize], row_bounds[t.row as usize + 1]);
            PixelWindow {
                row_start,
                col_start,
                height: row_end - row_start,
                width: col_end - col_start,
            }
        })
        .collect()
}

/// Pixel index of each tile boundary: the first pixel whose center lies at
/// or past `i * edge` from the grid origin.
fn window_bounds(extent: u32, pixel_size: f64, tiles: u32, edge: f64) -> Vec<u32> {
    let mut bounds = Vec::with_capacity(tiles as usize + 1);
    bounds.push(0u32);
    for i in 1..tiles {
        let boundary = i as f64 * edge / pixel_size;
        let first = (boundary - 0.5 - 1e-9).ceil().max(0.0) as u32;
        bounds.push(first.min(extent));
    }
    bounds.push(extent);
    bounds
}

#[allow(clippy::too_many_arguments)]
fn run_tile(
    tile: &TileSpec,
    window: &PixelWindow,
    ndvi: &MonthlyStack,
    mask: &CroplandMask,
    precip: &MonthlyStack,
    temp: &MonthlyStack,
    config: &PredictConfig,
    tile_seed: u64,
) -> (Option<RasterGrid>, TileReport) {
    let mut fallback_report = TileReport::new(tile, tile_seed);
    if window.width == 0 || window.height == 0 {
        fallback_report.mode = TileMode::Empty;
        fallback_report
            .warnings
            .push("tile owns no pixel centers".to_string());
        return (None, fallback_report);
    }
    let sliced = (|| -> Result<TileInputs> {
        Ok(TileInputs {
            ndvi: ndvi.subgrid(window.row_start, window.col_start, window.height, window.width)?,
            mask: mask.subgrid(window.row_start, window.col_start, window.height, window.width)?,
            precip: precip.subgrid(
                window.row_start,
                window.col_start,
                window.height,
                window.width,
            )?,
            temp: temp.subgrid(window.row_start, window.col_start, window.height, window.width)?,
        })
    })();
    match sliced.and_then(|inputs| predict_tile(tile, &inputs, config, tile_seed)) {
        Ok((grid, report)) => (Some(grid), report),
        Err(e) => {
            fallback_report.mode = TileMode::Failed;
            fallback_report.error = Some(e.to_string());
            (None, fallback_report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division_gives_four_tiles() {
        let aoi = GeoBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let tiles = tile_aoi(&aoi, 0.5).unwrap();
        assert_eq!(tiles.len(), 4);
        assert_eq!((tiles[0].row, tiles[0].col), (0, 0));
        assert_eq!(tiles[0].geobox, GeoBox::new(0.0, 0.5, 0.5, 1.0).unwrap());
        // row-major: second tile is east of the first
        assert_eq!((tiles[1].row, tiles[1].col), (0, 1));
        assert_eq!(tiles[3].geobox, GeoBox::new(0.5, 0.0, 1.0, 0.5).unwrap());
    }

    #[test]
    fn boundary_tiles_are_clipped() {
        let aoi = GeoBox::new(0.0, 0.0, 0.7, 0.5).unwrap();
        let tiles = tile_aoi(&aoi, 0.5).unwrap();
        assert_eq!(tiles.len(), 2);
        assert!((tiles[1].geobox.width() - 0.2).abs() < 1e-12);
        assert_eq!(tiles[1].geobox.lon_max, 0.7);
    }

    #[test]
    fn small_aoi_is_one_clipped_tile() {
        let aoi = GeoBox::new(0.0, 0.0, 0.3, 0.3).unwrap();
        let tiles = tile_aoi(&aoi, 0.5).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0].geobox, aoi);
    }

    #[test]
    fn windows_partition_the_grid() {
        let aoi = GeoBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let meta = geobox_to_grid(&aoi, 0.004).unwrap(); // 250x250
        let tiles = tile_aoi(&aoi, 0.5).unwrap();
        let windows = tile_windows(&meta, &tiles);
        let total: u64 = windows
            .iter()
            .map(|w| w.width as u64 * w.height as u64)
            .sum();
        assert_eq!(total, meta.pixel_count() as u64);
        assert_eq!(windows[0].width, 125);
        assert_eq!(windows[0].height, 125);
    }

    #[test]
    fn uneven_pixel_tile_ratio_still_partitions() {
        // 0.5 / 0.003 is not an integer; centers decide ownership.
        let aoi = GeoBox::new(0.0, 0.0, 1.0, 0.5).unwrap();
        let meta = geobox_to_grid(&aoi, 0.003).unwrap();
        let tiles = tile_aoi(&aoi, 0.5).unwrap();
        let windows = tile_windows(&meta, &tiles);
        assert_eq!(tiles.len(), 2);
        let total: u64 = windows
            .iter()
            .map(|w| w.width as u64 * w.height as u64)
            .sum();
        assert_eq!(total, meta.pixel_count() as u64);
        assert_eq!(windows[0].width + windows[1].width, meta.width);
    }

    #[test]
    fn label_codes_round_trip() {
        for code in [
            LabelCode::Rainfed,
            LabelCode::Irrigated,
            LabelCode::NotCultivated,
            LabelCode::NonCropland,
        ] {
            assert_eq!(LabelCode::from_code(code.code()), Some(code));
        }
        assert_eq!(LabelCode::from_code(255.0), None);
    }
}
