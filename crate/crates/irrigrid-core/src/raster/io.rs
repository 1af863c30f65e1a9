//! IRG1 / IRGS raster file formats.
//!
//! IRG1 holds one band (all integers little-endian):
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `"IRG1"`                               |
//! | 4      | 1    | band kind (0 NDVI, 1 precip, 2 temp, 3 mask, 4 label) |
//! | 5      | 3    | reserved, zero                               |
//! | 8      | 8    | origin_lon f64                               |
//! | 16     | 8    | origin_lat f64                               |
//! | 24     | 8    | pixel_size f64                               |
//! | 32     | 4    | width u32                                    |
//! | 36     | 4    | height u32                                   |
//! | 40     | 4*w*h| payload, f32 row-major from the top-left     |
//!
//! IRGS holds a calendar year: magic `"IRGS"`, a month count byte (must be
//! 12), then 12 concatenated IRG1 records, January first.
//!
//! Payload floats are copied bit-for-bit in both directions, so NaN nodata
//! keeps its exact bit pattern through a write/read round trip.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{BandKind, GridMeta, MonthlyStack, RasterGrid, MONTHS};

pub const SIGNATURE_GRID: [u8; 4] = *b"IRG1";
pub const SIGNATURE_STACK: [u8; 4] = *b"IRGS";

const HEADER_LEN: usize = 40;

/// Pixel-count cap; anything above this is treated as a corrupt header
/// rather than an allocation request.
const MAX_PIXELS: u64 = 1 << 31;

pub fn write_raster(grid: &RasterGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_raster(grid))?;
    Ok(())
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<RasterGrid> {
    let bytes = fs::read(path)?;
    let (grid, used) = decode_raster(&bytes, 0)?;
    if used != bytes.len() as u64 {
        return Err(Error::format(used, "trailing bytes after raster payload"));
    }
    Ok(grid)
}

pub fn write_stack(stack: &MonthlyStack, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_stack(stack))?;
    Ok(())
}

pub fn read_stack(path: impl AsRef<Path>) -> Result<MonthlyStack> {
    let bytes = fs::read(path)?;
    decode_stack(&bytes)
}

/// Serialize one grid to IRG1 bytes.
pub fn encode_raster(grid: &RasterGrid) -> Vec<u8> {
    let meta = grid.meta();
    let mut out = Vec::with_capacity(HEADER_LEN + grid.values().len() * 4);
    out.extend_from_slice(&SIGNATURE_GRID);
    out.push(grid.band_kind().code());
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&meta.origin_lon.to_le_bytes());
    out.extend_from_slice(&meta.origin_lat.to_le_bytes());
    out.extend_from_slice(&meta.pixel_size.to_le_bytes());
    out.extend_from_slice(&meta.width.to_le_bytes());
    out.extend_from_slice(&meta.height.to_le_bytes());
    for v in grid.values() {
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    out
}

/// Serialize a year stack to IRGS bytes.
pub fn encode_stack(stack: &MonthlyStack) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&SIGNATURE_STACK);
    out.push(MONTHS as u8);
    for month in stack.months() {
        out.extend_from_slice(&encode_raster(month));
    }
    out
}

/// Decode one IRG1 record starting at `base` (an absolute offset used for
/// error reporting). Returns the grid and the offset one past its payload.
pub(crate) fn decode_raster(bytes: &[u8], base: u64) -> Result<(RasterGrid, u64)> {
    let at = |rel: usize| base + rel as u64;
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            at(bytes.len()),
            format!("truncated header: need {HEADER_LEN} bytes"),
        ));
    }
    if bytes[0..4] != SIGNATURE_GRID {
        return Err(Error::format(
            at(0),
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[0..4]),
                String::from_utf8_lossy(&SIGNATURE_GRID)
            ),
        ));
    }
    let band_kind = BandKind::from_code(bytes[4])
        .ok_or_else(|| Error::format(at(4), format!("unknown band kind {}", bytes[4])))?;
    let origin_lon = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let origin_lat = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let pixel_size = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    if pixel_size.is_nan() || pixel_size <= 0.0 || !pixel_size.is_finite() {
        return Err(Error::format(at(24), "pixel_size must be positive"));
    }
    let width = u32::from_le_bytes(bytes[32..36].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[36..40].try_into().unwrap());
    if width == 0 {
        return Err(Error::format(at(32), "width must be at least 1"));
    }
    if height == 0 {
        return Err(Error::format(at(36), "height must be at least 1"));
    }
    let pixels = width as u64 * height as u64;
    if pixels > MAX_PIXELS {
        return Err(Error::format(
            at(32),
            format!("dimension overflow: {width}x{height} pixels"),
        ));
    }
    let payload_len = pixels as usize * 4;
    let available = bytes.len() - HEADER_LEN;
    if available < payload_len {
        return Err(Error::format(
            at(bytes.len()),
            format!(
                "truncated payload: expected {payload_len} bytes after header, found {available}"
            ),
        ));
    }
    let mut values = Vec::with_capacity(pixels as usize);
    for chunk in bytes[HEADER_LEN..HEADER_LEN + payload_len].chunks_exact(4) {
        values.push(f32::from_bits(u32::from_le_bytes(chunk.try_into().unwrap())));
    }
    let meta = GridMeta::new(origin_lon, origin_lat, pixel_size, width, height)
        .map_err(|e| Error::format(at(8), e.to_string()))?;
    let grid = RasterGrid::new(meta, band_kind, values)?;
    Ok((grid, at(HEADER_LEN + payload_len)))
}

pub(crate) fn decode_stack(bytes: &[u8]) -> Result<MonthlyStack> {
    if bytes.len() < 5 {
        return Err(Error::format(bytes.len() as u64, "truncated stack header"));
    }
    if bytes[0..4] != SIGNATURE_STACK {
        return Err(Error::format(
            0,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[0..4]),
                String::from_utf8_lossy(&SIGNATURE_STACK)
            ),
        ));
    }
    if bytes[4] as usize != MONTHS {
        return Err(Error::format(
            4,
            format!("month count must be 12, got {}", bytes[4]),
        ));
    }
    let mut months = Vec::with_capacity(MONTHS);
    let mut offset = 5u64;
    for _ in 0..MONTHS {
        let (grid, next) = decode_raster(&bytes[offset as usize..], offset)?;
        months.push(grid);
        offset = next;
    }
    if offset != bytes.len() as u64 {
        return Err(Error::format(offset, "trailing bytes after last month"));
    }
    MonthlyStack::new(months)
}
