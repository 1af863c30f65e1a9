//! Nearest-neighbor resampling between pixel grids.

use crate::error::Result;
use crate::raster::{GridMeta, RasterGrid};

/// Resample `src` onto `dst_meta`: each destination pixel takes the value of
/// the source pixel whose center is nearest to the destination pixel center.
/// Destination pixels whose centers fall outside the source extent become
/// nodata. Used to bring coarse climate grids onto the analysis grid.
pub fn resample_nearest(src: &RasterGrid, dst_meta: &GridMeta) -> Result<RasterGrid> {
    let sm = src.meta();
    let nodata = src.band_kind().nodata();
    let mut values = Vec::with_capacity(dst_meta.pixel_count());
    for row in 0..dst_meta.height {
        for col in 0..dst_meta.width {
            let (lon, lat) = dst_meta.pixel_center(row, col);
            // The containing source pixel is the one with the nearest
            // center; points on a pixel boundary resolve eastward/southward.
            let u = (lon - sm.origin_lon) / sm.pixel_size;
            let v = (sm.origin_lat - lat) / sm.pixel_size;
            let sc = u.floor();
            let sr = v.floor();
            let value = if sc < 0.0 || sr < 0.0 || sc >= sm.width as f64 || sr >= sm.height as f64
            {
                nodata
            } else {
                src.get(sr as u32, sc as u32)
            };
            values.push(value);
        }
    }
    RasterGrid::new(*dst_meta, src.band_kind(), values)
}
