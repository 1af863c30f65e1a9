//! Evaluation-protocol invariants: consistency accounting, shift snapping,
//! and point-accuracy behavior.

use irrigrid_core::eval::{
    consistency_check, evaluate_points, label_agreement, synth_generate, EvalPoint, LandKind,
    RegionSpec, SceneSpec,
};
use irrigrid_core::pipeline::{predict_region, PredictConfig, RegionInputs};
use irrigrid_core::raster::{BandKind, GeoBox, GridMeta, RasterGrid};
use irrigrid_core::season::Verdict;

fn region(geobox: [f64; 4], land: LandKind, peak_month: u8, irrigated: bool) -> RegionSpec {
    let cropland = land == LandKind::Cropland;
    RegionSpec {
        geobox,
        land,
        peak_month: cropland.then_some(peak_month),
        peak_ndvi: cropland.then_some(0.6),
        irrigated: cropland.then_some(irrigated),
        precip_mm: None,
        temp_c: None,
        base_ndvi: None,
    }
}

/// Scene covering `aoi` expanded by `margin` degrees, split into an
/// irrigated west strip and a rainfed east strip.
fn strip_scene_with_margin(
    aoi: &GeoBox,
    margin: f64,
    pixel_size: f64,
    noise: f64,
    seed: u64,
) -> SceneSpec {
    let outer = [
        aoi.lon_min - margin,
        aoi.lat_min - margin,
        aoi.lon_max + margin,
        aoi.lat_max + margin,
    ];
    let mid = (outer[0] + outer[2]) / 2.0;
    SceneSpec {
        geobox: outer,
        pixel_size,
        seed: Some(seed),
        noise_sigma: noise,
        regions: vec![
            region([outer[0], outer[1], mid, outer[3]], LandKind::Cropland, 7, true),
            region([mid, outer[1], outer[2], outer[3]], LandKind::Cropland, 2, false),
        ],
    }
}

fn inputs_of(out: &irrigrid_core::eval::SynthOutputs) -> RegionInputs {
    RegionInputs {
        ndvi: out.ndvi.clone(),
        mask: out.mask.clone(),
        precip: out.precip.clone(),
        temp: out.temp.clone(),
    }
}

#[test]
fn consistency_overall_is_the_pooled_count_ratio() {
    let aoi = GeoBox::new(0.0, 0.0, 0.5, 0.5).unwrap();
    let pixel_size = 0.01;
    // snapped third: 0.5/3/0.01 = 16.67 -> 17 pixels = 0.17 degrees
    let margin = 17.0 * pixel_size;
    let scene = strip_scene_with_margin(&aoi, margin, pixel_size, 0.05, 31);
    let out = synth_generate(&scene).unwrap();
    let report =
        consistency_check(&aoi, &inputs_of(&out), &PredictConfig::default(), 8, 2).unwrap();

    assert_eq!(report.shifts.len(), 8);
    let sum_compared: u64 = report.shifts.iter().map(|s| s.compared).sum();
    let sum_agreed: u64 = report.shifts.iter().map(|s| s.agreed).sum();
    assert_eq!(sum_compared, report.total_compared);
    assert_eq!(sum_agreed, report.total_agreed);
    assert_eq!(
        report.overall.unwrap(),
        sum_agreed as f64 / sum_compared as f64
    );

    // offsets snapped to whole pixels
    for s in &report.shifts {
        assert_eq!(s.dx_degrees, s.dx_pixels as f64 * pixel_size);
        assert_eq!(s.dy_degrees, s.dy_pixels as f64 * pixel_size);
        assert!(s.dx_pixels.unsigned_abs() == 17 || s.dx_pixels == 0);
        assert!(s.dy_pixels.unsigned_abs() == 17 || s.dy_pixels == 0);

        // overlapping pixel centers of base and shifted grids coincide
        let base = irrigrid_core::raster::geobox_to_grid(&aoi, pixel_size).unwrap();
        let shifted = irrigrid_core::raster::geobox_to_grid(
            &aoi.translated(s.dx_degrees, s.dy_degrees),
            pixel_size,
        )
        .unwrap();
        // base pixel (r, c) overlaps shifted pixel (r + dy, c - dx) when dy
        // is a northward shift in rows
        let (row_off, col_off) = base.lattice_offset(&shifted).unwrap();
        let probe_row = row_off.max(0) as u32;
        let probe_col = col_off.max(0) as u32;
        let (lon_a, lat_a) = base.pixel_center(probe_row, probe_col);
        let (lon_b, lat_b) = shifted.pixel_center(
            (probe_row as i64 - row_off) as u32,
            (probe_col as i64 - col_off) as u32,
        );
        assert!((lon_a - lon_b).abs() < 1e-12, "{lon_a} vs {lon_b}");
        assert!((lat_a - lat_b).abs() < 1e-12, "{lat_a} vs {lat_b}");
    }
}

#[test]
fn insufficient_margin_is_rejected() {
    let aoi = GeoBox::new(0.0, 0.0, 0.5, 0.5).unwrap();
    let scene = strip_scene_with_margin(&aoi, 0.05, 0.01, 0.0, 1); // margin < e/3
    let out = synth_generate(&scene).unwrap();
    assert!(
        consistency_check(&aoi, &inputs_of(&out), &PredictConfig::default(), 1, 1).is_err()
    );
}

#[test]
fn all_non_cropland_scene_has_undefined_consistency() {
    let aoi = GeoBox::new(0.0, 0.0, 0.5, 0.5).unwrap();
    let pixel_size = 0.01;
    let margin = 17.0 * pixel_size;
    let outer = [
        aoi.lon_min - margin,
        aoi.lat_min - margin,
        aoi.lon_max + margin,
        aoi.lat_max + margin,
    ];
    let scene = SceneSpec {
        geobox: outer,
        pixel_size,
        seed: Some(2),
        noise_sigma: 0.0,
        regions: vec![region(outer, LandKind::NonCropland, 0, false)],
    };
    let out = synth_generate(&scene).unwrap();
    let report =
        consistency_check(&aoi, &inputs_of(&out), &PredictConfig::default(), 1, 1).unwrap();
    assert_eq!(report.total_compared, 0);
    assert_eq!(report.overall, None);
    assert!(report.shifts.iter().all(|s| s.agreement.is_none()));
}

#[test]
fn base_prediction_agrees_with_itself() {
    let aoi = GeoBox::new(0.0, 0.0, 0.3, 0.3).unwrap();
    let scene = strip_scene_with_margin(&aoi, 0.0, 0.01, 0.05, 3);
    let out = synth_generate(&scene).unwrap();
    let prediction =
        predict_region(&aoi, &inputs_of(&out), &PredictConfig::default(), 1, 1).unwrap();
    let (compared, agreed) = label_agreement(&prediction.grid, &prediction.grid).unwrap();
    assert!(compared > 0);
    assert_eq!(compared, agreed);
}

#[test]
fn point_accuracy_is_order_invariant() {
    let meta = GridMeta::new(0.0, 1.0, 0.1, 10, 10).unwrap();
    let values: Vec<f32> = (0..100)
        .map(|i| match i % 5 {
            0 => 1.0,
            1 => 0.0,
            2 => 2.0,
            3 => 3.0,
            _ => 255.0,
        })
        .collect();
    let grid = RasterGrid::new(meta, BandKind::Label, values).unwrap();
    let points: Vec<EvalPoint> = (0..meta.height)
        .flat_map(|r| (0..meta.width).map(move |c| (r, c)))
        .map(|(r, c)| {
            let (lon, lat) = meta.pixel_center(r, c);
            EvalPoint {
                lon,
                lat,
                truth: if (r + c) % 2 == 0 {
                    Verdict::Irrigated
                } else {
                    Verdict::Rainfed
                },
            }
        })
        .collect();

    let forward = evaluate_points(&grid, &points);
    let mut reversed_points = points.clone();
    reversed_points.reverse();
    let reversed = evaluate_points(&grid, &reversed_points);
    assert_eq!(forward.accuracy, reversed.accuracy);
    assert_eq!(forward.scored, reversed.scored);
    assert_eq!(forward.unscorable, reversed.unscorable);
    assert_eq!(forward.confusion, reversed.confusion);
}

#[test]
fn synth_outputs_are_bit_identical_across_runs() {
    let aoi = GeoBox::new(5.0, 5.0, 5.3, 5.3).unwrap();
    let scene = strip_scene_with_margin(&aoi, 0.1, 0.01, 0.07, 99);
    let a = synth_generate(&scene).unwrap();
    let b = synth_generate(&scene).unwrap();
    for (ga, gb) in a.ndvi.months().iter().zip(b.ndvi.months()) {
        let bits_a: Vec<u32> = ga.values().iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u32> = gb.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.mask.grid(), b.mask.grid());
}
