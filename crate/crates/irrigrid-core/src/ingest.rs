//! From raw observations to model inputs: monthly NDVI compositing, the
//! cropland mask, and climate stacks resampled onto the analysis grid.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{
    read_raster, read_stack, resample_nearest, BandKind, GridMeta, MonthlyStack, RasterGrid,
    MONTHS, NODATA_F32,
};

/// Calendar date, only as structured as compositing needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl Date {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month {month} out of range")));
        }
        if !(1..=31).contains(&day) {
            return Err(Error::invalid(format!("day {day} out of range")));
        }
        Ok(Date { year, month, day })
    }

    /// Strict `YYYY-MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
            return Err(Error::invalid(format!("date `{s}` is not YYYY-MM-DD")));
        }
        let year: i32 = parts[0]
            .parse()
            .map_err(|_| Error::invalid(format!("bad year in `{s}`")))?;
        let month: u8 = parts[1]
            .parse()
            .map_err(|_| Error::invalid(format!("bad month in `{s}`")))?;
        let day: u8 = parts[2]
            .parse()
            .map_err(|_| Error::invalid(format!("bad day in `{s}`")))?;
        Date::new(year, month, day)
    }
}

/// One satellite observation of a pixel: the two reflectance bands NDVI
/// needs plus a cloud-free flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub date: Date,
    pub nir: f32,
    pub red: f32,
    pub valid: bool,
}

impl Observation {
    pub fn new(date: Date, nir: f32, red: f32, valid: bool) -> Result<Self> {
        if valid && !((0.0..=1.0).contains(&nir) && (0.0..=1.0).contains(&red)) {
            return Err(Error::invalid(format!(
                "valid observation has reflectance outside [0,1]: nir={nir} red={red}"
            )));
        }
        Ok(Observation {
            date,
            nir,
            red,
            valid,
        })
    }
}

/// Normalized difference of the NIR and red bands. Returns nodata when both
/// bands are zero; negative reflectances are a caller bug.
pub fn compute_ndvi(nir: f32, red: f32) -> Result<f32> {
    if nir.is_nan() || red.is_nan() || nir < 0.0 || red < 0.0 {
        return Err(Error::invalid(format!(
            "reflectances must be non-negative, got nir={nir} red={red}"
        )));
    }
    let sum = nir + red;
    if sum == 0.0 {
        return Ok(NODATA_F32);
    }
    Ok((nir - red) / sum)
}

/// Composite a pixel's observations into 12 monthly NDVI values.
///
/// Each month is the mean NDVI of its valid observations. Months without a
/// usable observation are filled by linear interpolation between the nearest
/// populated months, treating the year as circular; a pixel with no usable
/// observation at all comes back all-nodata.
pub fn composite_monthly(observations: &[Observation]) -> [f32; MONTHS] {
    // Collect per-month NDVI samples from valid observations.
    let mut samples: [Vec<f32>; MONTHS] = Default::default();
    for obs in observations.iter().filter(|o| o.valid) {
        if let Ok(v) = compute_ndvi(obs.nir, obs.red) {
            if !v.is_nan() {
                samples[(obs.date.month - 1) as usize].push(v);
            }
        }
    }

    let mut months = [NODATA_F32; MONTHS];
    for (m, vals) in samples.iter_mut().enumerate() {
        if vals.is_empty() {
            continue;
        }
        // Sort before summing so the mean is invariant to observation order.
        vals.sort_by(|a, b| a.total_cmp(b));
        let sum: f64 = vals.iter().map(|&v| v as f64).sum();
        months[m] = (sum / vals.len() as f64) as f32;
    }

    fill_circular(&mut months);
    months
}

/// Fill nodata months by circular linear interpolation between the nearest
/// populated months. All-nodata input is left untouched.
fn fill_circular(months: &mut [f32; MONTHS]) {
    let known: Vec<usize> = (0..MONTHS).filter(|&m| !months[m].is_nan()).collect();
    if known.is_empty() || known.len() == MONTHS {
        return;
    }
    let filled = *months;
    for m in 0..MONTHS {
        if !filled[m].is_nan() {
            continue;
        }
        let mut d_prev = 0;
        for d in 1..MONTHS {
            if !filled[(m + MONTHS - d) % MONTHS].is_nan() {
                d_prev = d;
                break;
            }
        }
        let mut d_next = 0;
        for d in 1..MONTHS {
            if !filled[(m + d) % MONTHS].is_nan() {
                d_next = d;
                break;
            }
        }
        let prev = filled[(m + MONTHS - d_prev) % MONTHS] as f64;
        let next = filled[(m + d_next) % MONTHS] as f64;
        let span = (d_prev + d_next) as f64;
        months[m] = ((prev * d_next as f64 + next * d_prev as f64) / span) as f32;
    }
}

/// Cropland mask class codes. GFSAD30-style products use 0 water,
/// 1 non-cropland, 2 cropland; other products can remap via the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskCodes {
    pub water: u8,
    pub non_cropland: u8,
    pub cropland: u8,
}

impl Default for MaskCodes {
    fn default() -> Self {
        MaskCodes {
            water: 0,
            non_cropland: 1,
            cropland: 2,
        }
    }
}

/// Categorical raster separating cropland from everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct CroplandMask {
    grid: RasterGrid,
    codes: MaskCodes,
}

impl MaskCodes {
    pub fn validate(&self) -> Result<()> {
        let codes = [self.water, self.non_cropland, self.cropland];
        if codes.contains(&255) {
            return Err(Error::invalid("mask code 255 is reserved for nodata"));
        }
        if codes[0] == codes[1] || codes[0] == codes[2] || codes[1] == codes[2] {
            return Err(Error::invalid(format!("mask codes must be distinct: {codes:?}")));
        }
        Ok(())
    }
}

impl CroplandMask {
    pub fn new(grid: RasterGrid, codes: MaskCodes) -> Result<Self> {
        codes.validate()?;
        if grid.band_kind() != BandKind::Mask {
            return Err(Error::invalid(format!(
                "mask raster has band {:?}, expected Mask",
                grid.band_kind()
            )));
        }
        let allowed = [
            codes.water as f32,
            codes.non_cropland as f32,
            codes.cropland as f32,
            255.0,
        ];
        for (i, &v) in grid.values().iter().enumerate() {
            if !allowed.contains(&v) {
                return Err(Error::invalid(format!(
                    "mask value {v} at pixel {i} is not one of {allowed:?}"
                )));
            }
        }
        Ok(CroplandMask { grid, codes })
    }

    pub fn grid(&self) -> &RasterGrid {
        &self.grid
    }

    pub fn meta(&self) -> &GridMeta {
        self.grid.meta()
    }

    pub fn codes(&self) -> MaskCodes {
        self.codes
    }

    pub fn is_cropland(&self, row: u32, col: u32) -> bool {
        self.grid.get(row, col) == self.codes.cropland as f32
    }

    pub fn is_nodata(&self, row: u32, col: u32) -> bool {
        self.grid.get(row, col) == 255.0
    }

    pub fn extract_window(&self, target: &GridMeta) -> Result<CroplandMask> {
        Ok(CroplandMask {
            grid: self.grid.extract_window(target)?,
            codes: self.codes,
        })
    }

    pub fn subgrid(&self, row: u32, col: u32, height: u32, width: u32) -> Result<CroplandMask> {
        Ok(CroplandMask {
            grid: self.grid.subgrid(row, col, height, width)?,
            codes: self.codes,
        })
    }
}

pub fn load_mask(path: impl AsRef<Path>, codes: MaskCodes) -> Result<CroplandMask> {
    CroplandMask::new(read_raster(path)?, codes)
}

/// Cropland pixels with complete 12-month signatures, in row-major order.
/// The index is `row * width + col` in the shared grid.
pub fn apply_mask(
    stack: &MonthlyStack,
    mask: &CroplandMask,
) -> Result<Vec<(usize, [f32; MONTHS])>> {
    if stack.meta() != mask.meta() {
        return Err(Error::GridMismatch {
            expected: Box::new(*stack.meta()),
            actual: Box::new(*mask.meta()),
        });
    }
    let meta = stack.meta();
    let mut out = Vec::new();
    for row in 0..meta.height {
        for col in 0..meta.width {
            if !mask.is_cropland(row, col) {
                continue;
            }
            let series = stack.pixel_series(row, col);
            if series.iter().any(|v| v.is_nan()) {
                continue;
            }
            out.push((row as usize * meta.width as usize + col as usize, series));
        }
    }
    Ok(out)
}

/// Read precipitation and temperature year-stacks and bring them onto the
/// target grid with nearest-neighbor resampling.
pub fn load_climate(
    precip_path: impl AsRef<Path>,
    temp_path: impl AsRef<Path>,
    target: &GridMeta,
) -> Result<(MonthlyStack, MonthlyStack)> {
    let precip = read_stack(precip_path)?;
    if precip.band_kind() != BandKind::PrecipMm {
        return Err(Error::invalid(format!(
            "precipitation stack has band {:?}, expected PrecipMm",
            precip.band_kind()
        )));
    }
    let temp = read_stack(temp_path)?;
    if temp.band_kind() != BandKind::TempC {
        return Err(Error::invalid(format!(
            "temperature stack has band {:?}, expected TempC",
            temp.band_kind()
        )));
    }
    Ok((
        resample_stack(&precip, target)?,
        resample_stack(&temp, target)?,
    ))
}

pub fn resample_stack(stack: &MonthlyStack, target: &GridMeta) -> Result<MonthlyStack> {
    MonthlyStack::new(
        stack
            .months()
            .iter()
            .map(|g| resample_nearest(g, target))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Parse an observation CSV (`pixel_row,pixel_col,date,nir,red,valid`) and
/// composite it into a monthly NDVI stack on the given grid. Pixels absent
/// from the CSV stay all-nodata. All dates must fall in one calendar year.
pub fn composite_csv_to_stack(path: impl AsRef<Path>, meta: &GridMeta) -> Result<MonthlyStack> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let header = lines
        .next()
        .ok_or_else(|| parse_err(&display, 1, "empty file"))?;
    if header.1.trim() != "pixel_row,pixel_col,date,nir,red,valid" {
        return Err(parse_err(
            &display,
            1,
            "header must be `pixel_row,pixel_col,date,nir,red,valid`",
        ));
    }

    let mut per_pixel: Vec<Vec<Observation>> = vec![Vec::new(); meta.pixel_count()];
    let mut year: Option<i32> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(parse_err(&display, lineno, "expected 6 fields"));
        }
        let row: u32 = fields[0]
            .parse()
            .map_err(|_| parse_err(&display, lineno, "bad pixel_row"))?;
        let col: u32 = fields[1]
            .parse()
            .map_err(|_| parse_err(&display, lineno, "bad pixel_col"))?;
        if row >= meta.height || col >= meta.width {
            return Err(parse_err(
                &display,
                lineno,
                format!("pixel ({row},{col}) outside {}x{} grid", meta.height, meta.width),
            ));
        }
        let date = Date::parse(fields[2]).map_err(|e| parse_err(&display, lineno, e.to_string()))?;
        match year {
            None => year = Some(date.year),
            Some(y) if y != date.year => {
                return Err(parse_err(
                    &display,
                    lineno,
                    format!("observation year {} differs from {}", date.year, y),
                ));
            }
            _ => {}
        }
        let nir: f32 = fields[3]
            .parse()
            .map_err(|_| parse_err(&display, lineno, "bad nir"))?;
        let red: f32 = fields[4]
            .parse()
            .map_err(|_| parse_err(&display, lineno, "bad red"))?;
        let valid = match fields[5] {
            "true" => true,
            "false" => false,
            other => {
                return Err(parse_err(
                    &display,
                    lineno,
                    format!("valid must be true or false, got `{other}`"),
                ))
            }
        };
        let obs = Observation::new(date, nir, red, valid)
            .map_err(|e| parse_err(&display, lineno, e.to_string()))?;
        per_pixel[row as usize * meta.width as usize + col as usize].push(obs);
    }

    let mut month_values: Vec<Vec<f32>> =
        (0..MONTHS).map(|_| Vec::with_capacity(meta.pixel_count())).collect();
    for obs in &per_pixel {
        let series = composite_monthly(obs);
        for (m, v) in series.iter().enumerate() {
            month_values[m].push(*v);
        }
    }
    MonthlyStack::new(
        month_values
            .into_iter()
            .map(|values| RasterGrid::new(*meta, BandKind::Ndvi, values))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}
