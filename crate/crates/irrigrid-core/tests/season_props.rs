//! Peak-detection and labeling properties.

mod common;

use proptest::prelude::*;

use irrigrid_core::season::{
    circular_month_distance, detect_peaks, label_season, CropSeason, HeuristicConfig, Verdict,
};

const MONTHS: usize = 12;

fn monthly_values() -> impl Strategy<Value = [f64; MONTHS]> {
    prop::array::uniform12(-0.2f64..0.9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn accepted_peaks_respect_separation(values in monthly_values(), sep in 1u32..6) {
        let config = HeuristicConfig {
            min_peak_separation_months: sep,
            ..HeuristicConfig::default()
        };
        let peaks = detect_peaks(&values, &config);
        for (i, &a) in peaks.iter().enumerate() {
            for &b in &peaks[i + 1..] {
                prop_assert!(circular_month_distance(a, b) >= sep);
            }
        }
    }

    #[test]
    fn detection_is_rotation_equivariant(values in monthly_values(), r in 1usize..12) {
        let config = HeuristicConfig::default();
        let mut rotated = [0.0f64; MONTHS];
        for m in 0..MONTHS {
            rotated[(m + r) % MONTHS] = values[m];
        }
        let base = detect_peaks(&values, &config);
        let moved = detect_peaks(&rotated, &config);
        let expected: Vec<u8> = base
            .iter()
            .map(|&m| ((m as usize - 1 + r) % MONTHS) as u8 + 1)
            .collect();
        prop_assert_eq!(moved, expected);
    }

    #[test]
    fn matches_oracle_on_random_series(values in monthly_values()) {
        let config = HeuristicConfig::default();
        prop_assert_eq!(detect_peaks(&values, &config), common::detect_peaks_brute(&values, 3));
    }

    /// Less rain never turns an irrigated season rainfed; a higher peak
    /// never does either.
    #[test]
    fn labeling_is_monotone(
        peak in 0.0f64..1.0,
        precip in 0.0f64..300.0,
        temp in -5.0f64..35.0,
        less_rain in 0.0f64..1.0,
        more_peak in 0.0f64..0.5,
    ) {
        let config = HeuristicConfig::default();
        let season = CropSeason {
            peak_month: 6,
            peak_ndvi: peak,
            mean_precip_mm: precip,
            mean_temp_c: temp,
        };
        let verdict = label_season(&season, &config).verdict;
        if verdict == Verdict::Irrigated {
            let drier = CropSeason { mean_precip_mm: precip * less_rain, ..season };
            prop_assert_eq!(label_season(&drier, &config).verdict, Verdict::Irrigated);
            let greener = CropSeason { peak_ndvi: (peak + more_peak).min(1.0), ..season };
            prop_assert_eq!(label_season(&greener, &config).verdict, Verdict::Irrigated);
        }
    }
}
