//! Output helpers: atomic file writes and the label-raster colormap.

use std::fs;
use std::path::Path;
use std::process;

use irrigrid_core::raster::{encode_raster, encode_stack, MonthlyStack, RasterGrid};

use crate::CliError;

/// Write via a sibling temp file and rename, so interrupted runs never
/// leave a partial output behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp.{}", process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Runtime(format!("{}: {e}", path.display()))
    })?;
    Ok(())
}

pub trait ToBytes {
    fn to_bytes(&self) -> Vec<u8>;
}

impl ToBytes for RasterGrid {
    fn to_bytes(&self) -> Vec<u8> {
        encode_raster(self)
    }
}

impl ToBytes for MonthlyStack {
    fn to_bytes(&self) -> Vec<u8> {
        encode_stack(self)
    }
}

/// Label colors: rainfed red, irrigated green, not-cultivated straw,
/// non-cropland gray, nodata black.
fn label_color(code: f32) -> [u8; 3] {
    if code == 0.0 {
        [214, 73, 51]
    } else if code == 1.0 {
        [62, 168, 91]
    } else if code == 2.0 {
        [222, 212, 140]
    } else if code == 3.0 {
        [200, 200, 200]
    } else {
        [0, 0, 0]
    }
}

/// Encode a label raster as an RGB8 PNG.
pub fn label_png(grid: &RasterGrid) -> Result<Vec<u8>, CliError> {
    let meta = grid.meta();
    let mut rgb = Vec::with_capacity(grid.values().len() * 3);
    for &v in grid.values() {
        rgb.extend_from_slice(&label_color(v));
    }
    let mut bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut bytes, meta.width, meta.height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| CliError::Runtime(format!("png: {e}")))?;
        writer
            .write_image_data(&rgb)
            .map_err(|e| CliError::Runtime(format!("png: {e}")))?;
    }
    Ok(bytes)
}
