//! Synthetic scenes with known ground truth.
//!
//! A scene is a set of rectangular regions that partition a grid. Cropland
//! regions carry a crop calendar (peak month, peak NDVI, irrigated flag)
//! and a monthly climate; the generator renders NDVI/mask/climate stacks
//! plus the truth raster the labeling heuristic should recover. The whole
//! construction is deterministic in the scene seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CroplandMask, MaskCodes};
use crate::pipeline::LabelCode;
use crate::raster::{
    geobox_to_grid, BandKind, GeoBox, GridMeta, MonthlyStack, RasterGrid, MONTHS,
};
use crate::season::{circular_month_distance, label_cluster, HeuristicConfig, OverallLabel};

/// Default seed used when a scene omits one.
pub const DEFAULT_SCENE_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandKind {
    Cropland,
    NonCropland,
    Water,
}

/// One rectangular region of a scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSpec {
    /// [lon_min, lat_min, lon_max, lat_max]
    pub geobox: [f64; 4],
    pub land: LandKind,
    /// Crop calendar, cropland only.
    #[serde(default)]
    pub peak_month: Option<u8>,
    #[serde(default)]
    pub peak_ndvi: Option<f64>,
    #[serde(default)]
    pub irrigated: Option<bool>,
    /// Monthly climate; defaults are consistent with the irrigated flag.
    #[serde(default)]
    pub precip_mm: Option<[f64; MONTHS]>,
    #[serde(default)]
    pub temp_c: Option<[f64; MONTHS]>,
    /// Off-season NDVI level, default 0.1.
    #[serde(default)]
    pub base_ndvi: Option<f64>,
}

/// A full scene description; the JSON schema of `irrigrid synth --spec`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    /// [lon_min, lat_min, lon_max, lat_max]
    pub geobox: [f64; 4],
    pub pixel_size: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Standard deviation of additive Gaussian NDVI noise.
    #[serde(default)]
    pub noise_sigma: f64,
    pub regions: Vec<RegionSpec>,
}

/// Everything the generator produces for one scene.
#[derive(Debug, Clone)]
pub struct SynthOutputs {
    pub ndvi: MonthlyStack,
    pub mask: CroplandMask,
    pub precip: MonthlyStack,
    pub temp: MonthlyStack,
    pub truth: RasterGrid,
}

struct ResolvedRegion {
    geobox: GeoBox,
    land: LandKind,
    ndvi: [f64; MONTHS],
    precip: [f64; MONTHS],
    temp: [f64; MONTHS],
    truth: f32,
}

/// NDVI level for non-cropland and open water.
const NON_CROPLAND_NDVI: f64 = 0.15;
const WATER_NDVI: f64 = -0.1;

pub fn synth_generate(spec: &SceneSpec) -> Result<SynthOutputs> {
    let geobox = GeoBox::new(
        spec.geobox[0],
        spec.geobox[1],
        spec.geobox[2],
        spec.geobox[3],
    )?;
    let meta = geobox_to_grid(&geobox, spec.pixel_size)?;
    if spec.noise_sigma.is_nan() || spec.noise_sigma < 0.0 {
        return Err(Error::invalid("noise_sigma must be non-negative"));
    }
    if spec.regions.is_empty() {
        return Err(Error::invalid("scene has no regions"));
    }

    let regions: Vec<ResolvedRegion> = spec
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| resolve_region(i, r))
        .collect::<Result<Vec<_>>>()?;

    let membership = assign_pixels(&meta, &regions)?;

    let seed = spec.seed.unwrap_or(DEFAULT_SCENE_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n = meta.pixel_count();
    let month_vecs = || -> Vec<Vec<f32>> { (0..MONTHS).map(|_| Vec::with_capacity(n)).collect() };
    let mut ndvi_values = month_vecs();
    let mut precip_values = month_vecs();
    let mut temp_values = month_vecs();
    let mut mask_values: Vec<f32> = Vec::with_capacity(n);
    let mut truth_values: Vec<f32> = Vec::with_capacity(n);

    for &region_idx in &membership {
        let region = &regions[region_idx];
        for month in 0..MONTHS {
            let clean = region.ndvi[month];
            let value = if spec.noise_sigma > 0.0 {
                (clean + spec.noise_sigma * standard_normal(&mut rng)).clamp(-1.0, 1.0)
            } else {
                clean
            };
            ndvi_values[month].push(value as f32);
            precip_values[month].push(region.precip[month] as f32);
            temp_values[month].push(region.temp[month] as f32);
        }
        mask_values.push(match region.land {
            LandKind::Cropland => 2.0,
            LandKind::NonCropland => 1.0,
            LandKind::Water => 0.0,
        });
        truth_values.push(region.truth);
    }

    Ok(SynthOutputs {
        ndvi: stack(meta, BandKind::Ndvi, ndvi_values)?,
        mask: CroplandMask::new(
            RasterGrid::new(meta, BandKind::Mask, mask_values)?,
            MaskCodes::default(),
        )?,
        precip: stack(meta, BandKind::PrecipMm, precip_values)?,
        temp: stack(meta, BandKind::TempC, temp_values)?,
        truth: RasterGrid::new(meta, BandKind::Label, truth_values)?,
    })
}

fn stack(meta: GridMeta, kind: BandKind, values: Vec<Vec<f32>>) -> Result<MonthlyStack> {
    MonthlyStack::new(
        values
            .into_iter()
            .map(|v| RasterGrid::new(meta, kind, v))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Region index per pixel (row-major). Every pixel center must fall in
/// exactly one region.
fn assign_pixels(meta: &GridMeta, regions: &[ResolvedRegion]) -> Result<Vec<usize>> {
    let mut membership = Vec::with_capacity(meta.pixel_count());
    for row in 0..meta.height {
        for col in 0..meta.width {
            let (lon, lat) = meta.pixel_center(row, col);
            let mut owner = None;
            for (i, region) in regions.iter().enumerate() {
                if region.geobox.contains(lon, lat) {
                    if owner.is_some() {
                        return Err(Error::invalid(format!(
                            "regions overlap at pixel ({row}, {col})"
                        )));
                    }
                    owner = Some(i);
                }
            }
            match owner {
                Some(i) => membership.push(i),
                None => {
                    return Err(Error::invalid(format!(
                        "pixel ({row}, {col}) at ({lon}, {lat}) is covered by no region"
                    )))
                }
            }
        }
    }
    Ok(membership)
}

fn resolve_region(index: usize, spec: &RegionSpec) -> Result<ResolvedRegion> {
    let geobox = GeoBox::new(spec.geobox[0], spec.geobox[1], spec.geobox[2], spec.geobox[3])
        .map_err(|e| Error::invalid(format!("region {index}: {e}")))?;

    if spec.land != LandKind::Cropland {
        let level = if spec.land == LandKind::Water {
            WATER_NDVI
        } else {
            NON_CROPLAND_NDVI
        };
        return Ok(ResolvedRegion {
            geobox,
            land: spec.land,
            ndvi: [level; MONTHS],
            precip: spec.precip_mm.unwrap_or([60.0; MONTHS]),
            temp: spec.temp_c.unwrap_or([20.0; MONTHS]),
            truth: LabelCode::NonCropland.code(),
        });
    }

    let peak_month = spec
        .peak_month
        .ok_or_else(|| Error::invalid(format!("region {index}: cropland needs peak_month")))?;
    if !(1..=12).contains(&peak_month) {
        return Err(Error::invalid(format!(
            "region {index}: peak_month {peak_month} out of range"
        )));
    }
    let peak_ndvi = spec
        .peak_ndvi
        .ok_or_else(|| Error::invalid(format!("region {index}: cropland needs peak_ndvi")))?;
    if !(-1.0..=1.0).contains(&peak_ndvi) {
        return Err(Error::invalid(format!(
            "region {index}: peak_ndvi {peak_ndvi} outside [-1, 1]"
        )));
    }
    let irrigated = spec
        .irrigated
        .ok_or_else(|| Error::invalid(format!("region {index}: cropland needs irrigated flag")))?;
    let base = spec.base_ndvi.unwrap_or(0.1);
    if base >= peak_ndvi {
        return Err(Error::invalid(format!(
            "region {index}: base_ndvi {base} must be below peak_ndvi {peak_ndvi}"
        )));
    }

    let ndvi = crop_signature(peak_month, peak_ndvi, base);
    let precip = spec.precip_mm.unwrap_or(default_precip(peak_month, irrigated));
    let temp = spec.temp_c.unwrap_or([22.0; MONTHS]);
    for (name, series) in [("precip_mm", &precip), ("temp_c", &temp)] {
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("region {index}: {name} not finite")));
        }
    }
    if precip.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid(format!("region {index}: negative precip")));
    }

    // The truth label is what the heuristic says about the clean
    // construction; a contradicting irrigated flag is a scene bug.
    let config = HeuristicConfig::default();
    let derived = label_cluster(&ndvi, &precip, &temp, &config);
    let truth = match derived.overall {
        OverallLabel::NotCultivated => LabelCode::NotCultivated,
        OverallLabel::Irrigated if irrigated => LabelCode::Irrigated,
        OverallLabel::Rainfed if !irrigated => LabelCode::Rainfed,
        other => {
            return Err(Error::invalid(format!(
                "region {index}: declared irrigated={irrigated} but the construction labels {other:?} \
                 (peak {peak_ndvi} at month {peak_month}, season precip {:.1} mm)",
                season_precip(&precip, peak_month)
            )));
        }
    };

    Ok(ResolvedRegion {
        geobox,
        land: LandKind::Cropland,
        ndvi,
        precip,
        temp,
        truth: truth.code(),
    })
}

/// Smooth single-peak NDVI year: a squared-cosine bump over the three
/// months on each side of the peak, flat base elsewhere.
fn crop_signature(peak_month: u8, peak_ndvi: f64, base: f64) -> [f64; MONTHS] {
    let mut signature = [base; MONTHS];
    for (m, value) in signature.iter_mut().enumerate() {
        let d = circular_month_distance(m as u8 + 1, peak_month) as f64;
        let shape = (std::f64::consts::PI * d / 6.0).cos().max(0.0).powi(2);
        *value = base + (peak_ndvi - base) * shape;
    }
    signature
}

/// Climate consistent with the flag: dry at the peak for irrigated regions,
/// well-watered at and before the peak for rainfed ones.
fn default_precip(peak_month: u8, irrigated: bool) -> [f64; MONTHS] {
    if irrigated {
        return [20.0; MONTHS];
    }
    let mut precip = [60.0; MONTHS];
    let at = (peak_month - 1) as usize;
    precip[at] = 150.0;
    precip[(at + MONTHS - 1) % MONTHS] = 150.0;
    precip
}

fn season_precip(precip: &[f64; MONTHS], peak_month: u8) -> f64 {
    let at = (peak_month - 1) as usize;
    (precip[(at + MONTHS - 1) % MONTHS] + precip[at]) / 2.0
}

/// Standard normal via Box-Muller; two uniform draws per sample keeps the
/// stream layout independent of the rand crate's distribution internals.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
