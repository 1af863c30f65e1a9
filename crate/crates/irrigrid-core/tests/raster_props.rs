//! Raster geometry, file format, and resampling contracts.

mod common;

use proptest::prelude::*;

use irrigrid_core::raster::{
    geobox_to_grid, read_raster, resample_nearest, write_raster, BandKind, GeoBox, GridMeta,
    RasterGrid,
};

/// Reference IRG1 bytes assembled by hand from the documented layout
/// (see README): NDVI band, origin (10, 20), pixel 0.5, 3x3 grid of
/// 0.0..0.8 in steps of 0.1.
const REFERENCE_HEX: &str = "49524731000000000000000000002440\
0000000000003440000000000000e03f\
030000000300000000000000cdcccc3d\
cdcc4c3e9a99993ecdcccc3e0000003f\
9a99193f3333333fcdcc4c3f";

fn unhex(s: &str) -> Vec<u8> {
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
        .collect()
}

#[test]
fn reference_fixture_decodes_to_documented_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reference.irg1");
    std::fs::write(&path, unhex(REFERENCE_HEX)).unwrap();
    let grid = read_raster(&path).unwrap();
    assert_eq!(grid.band_kind(), BandKind::Ndvi);
    assert_eq!(
        *grid.meta(),
        GridMeta::new(10.0, 20.0, 0.5, 3, 3).unwrap()
    );
    for (i, &v) in grid.values().iter().enumerate() {
        assert_eq!(v, i as f32 * 0.1);
    }
}

#[test]
fn writer_reproduces_the_reference_fixture_bit_for_bit() {
    let meta = GridMeta::new(10.0, 20.0, 0.5, 3, 3).unwrap();
    let values: Vec<f32> = (0..9).map(|i| i as f32 * 0.1).collect();
    let grid = RasterGrid::new(meta, BandKind::Ndvi, values).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("written.irg1");
    write_raster(&grid, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), unhex(REFERENCE_HEX));
}

#[test]
fn upsample_matches_exhaustive_nearest_center_search() {
    let src_meta = GridMeta::new(0.0, 1.0, 0.5, 2, 2).unwrap();
    let src = RasterGrid::new(src_meta, BandKind::PrecipMm, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let dst_meta = GridMeta::new(0.0, 1.0, 0.25, 4, 4).unwrap();
    let out = resample_nearest(&src, &dst_meta).unwrap();
    for row in 0..4 {
        for col in 0..4 {
            let (lon, lat) = dst_meta.pixel_center(row, col);
            let (sr, sc) = common::nearest_source_pixel(0.0, 1.0, 0.5, 2, 2, lon, lat);
            assert_eq!(
                out.get(row, col),
                src.get(sr, sc),
                "dst ({row},{col}) disagrees with exhaustive search"
            );
        }
    }
    // quadrant-constant by construction
    assert_eq!(out.get(0, 0), out.get(1, 1));
    assert_eq!(out.get(0, 3), out.get(1, 2));
}

fn arbitrary_grid() -> impl Strategy<Value = RasterGrid> {
    (
        1u32..12,
        1u32..12,
        -170.0f64..170.0,
        -80.0f64..80.0,
        0.001f64..0.5,
        0u8..5,
        any::<u64>(),
    )
        .prop_map(|(w, h, lon, lat, ps, kind, value_seed)| {
            use rand::{Rng, SeedableRng};
            let kind = BandKind::from_code(kind).unwrap();
            let meta = GridMeta::new(lon, lat, ps, w, h).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(value_seed);
            let values: Vec<f32> = (0..meta.pixel_count())
                .map(|_| {
                    if rng.random::<f64>() < 0.15 {
                        kind.nodata()
                    } else {
                        match kind {
                            BandKind::Ndvi => rng.random_range(-1.0f32..1.0),
                            BandKind::PrecipMm => rng.random_range(0.0f32..400.0),
                            BandKind::TempC => rng.random_range(-30.0f32..45.0),
                            BandKind::Mask => *[0.0f32, 1.0, 2.0].get(rng.random_range(0..3)).unwrap(),
                            BandKind::Label => *[0.0f32, 1.0, 2.0, 3.0].get(rng.random_range(0..4)).unwrap(),
                        }
                    }
                })
                .collect();
            RasterGrid::new(meta, kind, values).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_read_round_trip_is_bit_exact(grid in arbitrary_grid()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.irg1");
        write_raster(&grid, &path).unwrap();
        let back = read_raster(&path).unwrap();
        prop_assert_eq!(back.meta(), grid.meta());
        prop_assert_eq!(back.band_kind(), grid.band_kind());
        let bits: Vec<u32> = back.values().iter().map(|v| v.to_bits()).collect();
        let expect: Vec<u32> = grid.values().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(bits, expect);
    }

    #[test]
    fn smaller_pixels_never_shrink_the_grid(
        lon in -10.0f64..10.0,
        lat in -10.0f64..10.0,
        w in 0.01f64..2.0,
        h in 0.01f64..2.0,
        ps in 0.001f64..0.6,
        shrink in 0.1f64..1.0,
    ) {
        let geobox = GeoBox::new(lon, lat, lon + w, lat + h).unwrap();
        let coarse = geobox_to_grid(&geobox, ps).unwrap();
        let fine = geobox_to_grid(&geobox, ps * shrink).unwrap();
        prop_assert!(fine.width >= coarse.width);
        prop_assert!(fine.height >= coarse.height);
    }

    #[test]
    fn resample_identity_and_constant(grid in arbitrary_grid(), c in -0.5f32..0.5) {
        // identity on the same meta (bit comparison: nodata is NaN)
        let same = resample_nearest(&grid, grid.meta()).unwrap();
        prop_assert_eq!(same.meta(), grid.meta());
        let bits_same: Vec<u32> = same.values().iter().map(|v| v.to_bits()).collect();
        let bits_grid: Vec<u32> = grid.values().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(bits_same, bits_grid);

        // a constant field stays constant on any overlapping target
        let constant = RasterGrid::filled(*grid.meta(), BandKind::Ndvi, c);
        let meta = grid.meta();
        let dst = GridMeta::new(
            meta.origin_lon,
            meta.origin_lat,
            meta.pixel_size / 2.0,
            meta.width,
            meta.height,
        ).unwrap();
        let out = resample_nearest(&constant, &dst).unwrap();
        prop_assert!(out.values().iter().all(|&v| v == c));
    }

    #[test]
    fn geobox_of_grid_round_trips(
        lon in -10.0f64..10.0,
        lat in -10.0f64..10.0,
        ps in 0.001f64..0.05,
        w in 1u32..300,
        h in 1u32..300,
    ) {
        let meta = GridMeta::new(lon, lat, ps, w, h).unwrap();
        let back = geobox_to_grid(&meta.geobox(), ps).unwrap();
        prop_assert_eq!(meta, back);
    }
}
