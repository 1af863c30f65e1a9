//! Georeferenced grid types and the geometry they share.
//!
//! All grids live on a flat WGS84 lon/lat plane: pixel (0, 0) covers the
//! top-left corner, rows increase southward, columns increase eastward, and
//! pixels are square in degree space. Float bands mark missing data with the
//! canonical quiet NaN; categorical bands (mask, label) use 255.

mod io;
mod resample;

pub use io::{
    encode_raster, encode_stack, read_raster, read_stack, write_raster, write_stack,
    SIGNATURE_GRID, SIGNATURE_STACK,
};
pub use resample::resample_nearest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodata sentinel for float bands: the canonical quiet NaN bit pattern,
/// preserved bit-exactly through file round-trips.
pub const NODATA_F32: f32 = f32::from_bits(0x7FC0_0000);

/// Nodata sentinel for categorical bands (mask, label), stored as a float.
pub const NODATA_CODE: f32 = 255.0;

/// Relative tolerance used when snapping nearly-integer pixel counts and
/// pixel offsets. Guards ceil() against f64 rounding in extent ratios.
const SNAP_TOL: f64 = 1e-9;

/// A lon/lat bounding box in decimal degrees (WGS84).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl GeoBox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Result<Self> {
        let b = GeoBox {
            lon_min,
            lat_min,
            lon_max,
            lat_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.lon_min, self.lat_min, self.lon_max, self.lat_max] {
            if !v.is_finite() {
                return Err(Error::invalid("geobox corner is not finite"));
            }
        }
        if self.lon_min >= self.lon_max || self.lat_min >= self.lat_max {
            return Err(Error::invalid(format!(
                "degenerate geobox: ({}, {}) .. ({}, {})",
                self.lon_min, self.lat_min, self.lon_max, self.lat_max
            )));
        }
        if self.lon_min < -180.0 || self.lon_max > 180.0 {
            return Err(Error::invalid("longitude outside [-180, 180]"));
        }
        if self.lat_min < -90.0 || self.lat_max > 90.0 {
            return Err(Error::invalid("latitude outside [-90, 90]"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.lon_max - self.lon_min
    }

    pub fn height(&self) -> f64 {
        self.lat_max - self.lat_min
    }

    /// Half-open containment: west/north edges inclusive, east/south exclusive,
    /// so adjacent boxes partition the plane without double-counting.
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.lon_min && lon < self.lon_max && lat > self.lat_min && lat <= self.lat_max
    }

    /// Box translated by (dlon, dlat) degrees.
    pub fn translated(&self, dlon: f64, dlat: f64) -> GeoBox {
        GeoBox {
            lon_min: self.lon_min + dlon,
            lat_min: self.lat_min + dlat,
            lon_max: self.lon_max + dlon,
            lat_max: self.lat_max + dlat,
        }
    }

    pub fn contains_box(&self, other: &GeoBox) -> bool {
        other.lon_min >= self.lon_min
            && other.lon_max <= self.lon_max
            && other.lat_min >= self.lat_min
            && other.lat_max <= self.lat_max
    }
}

/// Pixel layout of a grid: top-left corner, square pixel size in degrees,
/// and pixel counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub pixel_size: f64,
    pub width: u32,
    pub height: u32,
}

impl GridMeta {
    pub fn new(
        origin_lon: f64,
        origin_lat: f64,
        pixel_size: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        if pixel_size.is_nan() || pixel_size <= 0.0 || !pixel_size.is_finite() {
            return Err(Error::invalid("pixel_size must be positive and finite"));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid must be at least 1x1"));
        }
        Ok(GridMeta {
            origin_lon,
            origin_lat,
            pixel_size,
            width,
            height,
        })
    }

    /// Pixel count; never zero since both dimensions are at least 1.
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Geographic extent covered by the pixel grid.
    pub fn geobox(&self) -> GeoBox {
        GeoBox {
            lon_min: self.origin_lon,
            lat_min: self.origin_lat - self.height as f64 * self.pixel_size,
            lon_max: self.origin_lon + self.width as f64 * self.pixel_size,
            lat_max: self.origin_lat,
        }
    }

    /// Center coordinate of pixel (row, col).
    pub fn pixel_center(&self, row: u32, col: u32) -> (f64, f64) {
        (
            self.origin_lon + (col as f64 + 0.5) * self.pixel_size,
            self.origin_lat - (row as f64 + 0.5) * self.pixel_size,
        )
    }

    /// Pixel containing the coordinate, or None if outside the grid.
    /// West/north edges are inclusive, east/south edges exclusive.
    pub fn pixel_containing(&self, lon: f64, lat: f64) -> Option<(u32, u32)> {
        let u = (lon - self.origin_lon) / self.pixel_size;
        let v = (self.origin_lat - lat) / self.pixel_size;
        let col = u.floor();
        let row = v.floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((row as u32, col as u32))
    }

    /// Sub-grid covering `rows` x `cols` pixels of this grid.
    pub fn subgrid(
        &self,
        row_start: u32,
        col_start: u32,
        height: u32,
        width: u32,
    ) -> Result<GridMeta> {
        if row_start as u64 + height as u64 > self.height as u64
            || col_start as u64 + width as u64 > self.width as u64
        {
            return Err(Error::invalid("subgrid window exceeds parent grid"));
        }
        GridMeta::new(
            self.origin_lon + col_start as f64 * self.pixel_size,
            self.origin_lat - row_start as f64 * self.pixel_size,
            self.pixel_size,
            width,
            height,
        )
    }

    /// Integer pixel offset of `other`'s origin within this grid, if the two
    /// grids share a pixel lattice (same pixel size, origins an integer
    /// number of pixels apart). Returns (row_offset, col_offset), which may
    /// be negative.
    pub fn lattice_offset(&self, other: &GridMeta) -> Option<(i64, i64)> {
        if self.pixel_size != other.pixel_size {
            return None;
        }
        let dc = (other.origin_lon - self.origin_lon) / self.pixel_size;
        let dr = (self.origin_lat - other.origin_lat) / self.pixel_size;
        let col = dc.round();
        let row = dr.round();
        let tol = SNAP_TOL.max(SNAP_TOL * dc.abs().max(dr.abs()));
        if (dc - col).abs() > tol || (dr - row).abs() > tol {
            return None;
        }
        Some((row as i64, col as i64))
    }
}

/// ceil() with a snap to the nearest integer when the ratio is within
/// rounding error of it, so exact extents do not gain a phantom pixel.
pub(crate) fn snap_ceil(ratio: f64) -> u32 {
    let nearest = ratio.round();
    let snapped = if (ratio - nearest).abs() <= SNAP_TOL * ratio.abs().max(1.0) && nearest >= 1.0 {
        nearest
    } else {
        ratio.ceil()
    };
    snapped.max(1.0) as u32
}

/// Lay a pixel grid over a geobox. The grid is anchored at the north-west
/// corner; fractional extents round up so the box is fully covered.
pub fn geobox_to_grid(geobox: &GeoBox, pixel_size: f64) -> Result<GridMeta> {
    geobox.validate()?;
    if pixel_size.is_nan() || pixel_size <= 0.0 || !pixel_size.is_finite() {
        return Err(Error::invalid("pixel_size must be positive and finite"));
    }
    let width = snap_ceil(geobox.width() / pixel_size);
    let height = snap_ceil(geobox.height() / pixel_size);
    GridMeta::new(geobox.lon_min, geobox.lat_max, pixel_size, width, height)
}

/// Semantic band carried by a raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandKind {
    Ndvi,
    PrecipMm,
    TempC,
    Mask,
    Label,
}

impl BandKind {
    pub fn code(self) -> u8 {
        match self {
            BandKind::Ndvi => 0,
            BandKind::PrecipMm => 1,
            BandKind::TempC => 2,
            BandKind::Mask => 3,
            BandKind::Label => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<BandKind> {
        Some(match code {
            0 => BandKind::Ndvi,
            1 => BandKind::PrecipMm,
            2 => BandKind::TempC,
            3 => BandKind::Mask,
            4 => BandKind::Label,
            _ => return None,
        })
    }

    /// Categorical bands store codes; float bands store measurements.
    pub fn is_categorical(self) -> bool {
        matches!(self, BandKind::Mask | BandKind::Label)
    }

    pub fn nodata(self) -> f32 {
        if self.is_categorical() {
            NODATA_CODE
        } else {
            NODATA_F32
        }
    }

    pub fn is_nodata(self, value: f32) -> bool {
        if self.is_categorical() {
            value == NODATA_CODE
        } else {
            value.is_nan()
        }
    }
}

/// One georeferenced band: a width x height array of f32 in row-major order
/// from the top-left pixel. Immutable once built; cheap to clone only when
/// small, so operations pass references.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    meta: GridMeta,
    band_kind: BandKind,
    values: Vec<f32>,
}

impl RasterGrid {
    pub fn new(meta: GridMeta, band_kind: BandKind, values: Vec<f32>) -> Result<Self> {
        if values.len() != meta.pixel_count() {
            return Err(Error::invalid(format!(
                "value count {} does not match {}x{} grid",
                values.len(),
                meta.width,
                meta.height
            )));
        }
        Ok(RasterGrid {
            meta,
            band_kind,
            values,
        })
    }

    pub fn filled(meta: GridMeta, band_kind: BandKind, value: f32) -> Self {
        let n = meta.pixel_count();
        RasterGrid {
            meta,
            band_kind,
            values: vec![value; n],
        }
    }

    pub fn nodata(meta: GridMeta, band_kind: BandKind) -> Self {
        Self::filled(meta, band_kind, band_kind.nodata())
    }

    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }

    pub fn band_kind(&self) -> BandKind {
        self.band_kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: u32, col: u32) -> f32 {
        debug_assert!(row < self.meta.height && col < self.meta.width);
        self.values[row as usize * self.meta.width as usize + col as usize]
    }

    pub fn set(&mut self, row: u32, col: u32, value: f32) {
        debug_assert!(row < self.meta.height && col < self.meta.width);
        self.values[row as usize * self.meta.width as usize + col as usize] = value;
    }

    pub fn is_nodata_at(&self, row: u32, col: u32) -> bool {
        self.band_kind.is_nodata(self.get(row, col))
    }

    /// Copy of the window starting at (row_start, col_start).
    pub fn subgrid(
        &self,
        row_start: u32,
        col_start: u32,
        height: u32,
        width: u32,
    ) -> Result<RasterGrid> {
        let meta = self.meta.subgrid(row_start, col_start, height, width)?;
        let mut values = Vec::with_capacity(meta.pixel_count());
        for r in row_start..row_start + height {
            let base = r as usize * self.meta.width as usize + col_start as usize;
            values.extend_from_slice(&self.values[base..base + width as usize]);
        }
        Ok(RasterGrid {
            meta,
            band_kind: self.band_kind,
            values,
        })
    }

    /// Extract the window of this grid that covers `target`, which must lie
    /// on the same pixel lattice. Values are copied; the result carries
    /// `target` as its meta.
    pub fn extract_window(&self, target: &GridMeta) -> Result<RasterGrid> {
        let (row_off, col_off) = self.meta.lattice_offset(target).ok_or_else(|| {
            Error::invalid(format!(
                "grid {:?} is not aligned to the requested window {:?}",
                self.meta, target
            ))
        })?;
        if row_off < 0
            || col_off < 0
            || row_off as u64 + target.height as u64 > self.meta.height as u64
            || col_off as u64 + target.width as u64 > self.meta.width as u64
        {
            return Err(Error::invalid(format!(
                "grid {:?} does not cover the requested window {:?}",
                self.meta, target
            )));
        }
        let mut out = self.subgrid(
            row_off as u32,
            col_off as u32,
            target.height,
            target.width,
        )?;
        out.meta = *target;
        Ok(out)
    }

    /// Paint `src` into this grid at the given pixel offset.
    pub fn blit(&mut self, src: &RasterGrid, row_start: u32, col_start: u32) {
        debug_assert!(row_start + src.meta.height <= self.meta.height);
        debug_assert!(col_start + src.meta.width <= self.meta.width);
        for r in 0..src.meta.height {
            let dst_base =
                (row_start + r) as usize * self.meta.width as usize + col_start as usize;
            let src_base = r as usize * src.meta.width as usize;
            self.values[dst_base..dst_base + src.meta.width as usize]
                .copy_from_slice(&src.values[src_base..src_base + src.meta.width as usize]);
        }
    }
}

/// Twelve co-registered grids of one band: January through December of a
/// single calendar year.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyStack {
    months: Vec<RasterGrid>,
}

pub const MONTHS: usize = 12;

impl MonthlyStack {
    pub fn new(months: Vec<RasterGrid>) -> Result<Self> {
        if months.len() != MONTHS {
            return Err(Error::invalid(format!(
                "monthly stack needs exactly 12 grids, got {}",
                months.len()
            )));
        }
        let meta = *months[0].meta();
        let kind = months[0].band_kind();
        for (i, g) in months.iter().enumerate() {
            if *g.meta() != meta {
                return Err(Error::GridMismatch {
                    expected: Box::new(meta),
                    actual: Box::new(*g.meta()),
                });
            }
            if g.band_kind() != kind {
                return Err(Error::invalid(format!(
                    "month {} has band {:?}, expected {:?}",
                    i + 1,
                    g.band_kind(),
                    kind
                )));
            }
        }
        Ok(MonthlyStack { months })
    }

    pub fn meta(&self) -> &GridMeta {
        self.months[0].meta()
    }

    pub fn band_kind(&self) -> BandKind {
        self.months[0].band_kind()
    }

    /// Grid for a month, 0-based (0 = January).
    pub fn month(&self, index: usize) -> &RasterGrid {
        &self.months[index]
    }

    pub fn months(&self) -> &[RasterGrid] {
        &self.months
    }

    /// The 12 values of one pixel, January first.
    pub fn pixel_series(&self, row: u32, col: u32) -> [f32; MONTHS] {
        let mut out = [0.0f32; MONTHS];
        for (m, g) in self.months.iter().enumerate() {
            out[m] = g.get(row, col);
        }
        out
    }

    pub fn extract_window(&self, target: &GridMeta) -> Result<MonthlyStack> {
        let months = self
            .months
            .iter()
            .map(|g| g.extract_window(target))
            .collect::<Result<Vec<_>>>()?;
        MonthlyStack::new(months)
    }

    pub fn subgrid(
        &self,
        row_start: u32,
        col_start: u32,
        height: u32,
        width: u32,
    ) -> Result<MonthlyStack> {
        let months = self
            .months
            .iter()
            .map(|g| g.subgrid(row_start, col_start, height, width))
            .collect::<Result<Vec<_>>>()?;
        MonthlyStack::new(months)
    }
}
