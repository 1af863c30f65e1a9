//! Crop-season detection on 12-month NDVI signatures and the
//! irrigated/rainfed labeling heuristic.
//!
//! A crop season is an NDVI peak. A season counts as irrigated when the peak
//! is high enough to indicate cultivation but the rain at and just before
//! the peak falls short of typical crop water need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::MONTHS;

/// Thresholds of the labeling heuristic. Defaults: cultivation needs an
/// NDVI peak above 0.3; crop water need is 100 mm/month, reduced to 85 mm
/// for cool seasons (below 15 °C); distinct seasons are at least 3 months
/// apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub ndvi_peak_threshold: f64,
    pub precip_threshold_mm: f64,
    pub cold_precip_threshold_mm: f64,
    pub cold_temp_c: f64,
    pub min_peak_separation_months: u32,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            ndvi_peak_threshold: 0.3,
            precip_threshold_mm: 100.0,
            cold_precip_threshold_mm: 85.0,
            cold_temp_c: 15.0,
            min_peak_separation_months: 3,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ndvi-peak", self.ndvi_peak_threshold),
            ("precip-mm", self.precip_threshold_mm),
            ("cold-precip-mm", self.cold_precip_threshold_mm),
            ("cold-temp-c", self.cold_temp_c),
        ] {
            if v.is_nan() || v <= 0.0 || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cold_precip_threshold_mm >= self.precip_threshold_mm {
            return Err(Error::invalid(
                "cold-precip-mm must be below precip-mm".to_string(),
            ));
        }
        if self.min_peak_separation_months == 0 {
            return Err(Error::invalid("min-peak-sep must be positive".to_string()));
        }
        Ok(())
    }

    /// Water-need threshold active at a given season temperature.
    pub fn active_precip_threshold(&self, mean_temp_c: f64) -> f64 {
        if mean_temp_c < self.cold_temp_c {
            self.cold_precip_threshold_mm
        } else {
            self.precip_threshold_mm
        }
    }
}

/// One detected crop season on a signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropSeason {
    /// Peak month, 1 = January.
    pub peak_month: u8,
    pub peak_ndvi: f64,
    /// Mean precipitation over the peak month and the month before.
    pub mean_precip_mm: f64,
    /// Mean temperature over the same two months.
    pub mean_temp_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Irrigated,
    Rainfed,
}

/// Cluster-level outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallLabel {
    Irrigated,
    Rainfed,
    NotCultivated,
}

/// A season with its verdict; `cultivated` records whether the peak cleared
/// the NDVI threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeason {
    pub season: CropSeason,
    pub verdict: Verdict,
    pub cultivated: bool,
}

/// Verdicts for one cluster: all its seasons plus the overall label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster: usize,
    pub seasons: Vec<LabeledSeason>,
    pub overall: OverallLabel,
}

/// Circular distance between two months (1-based), in months.
pub fn circular_month_distance(a: u8, b: u8) -> u32 {
    let d = (a as i32 - b as i32).unsigned_abs();
    d.min(MONTHS as u32 - d)
}

/// Detect crop-season peak months on a 12-month signature.
///
/// Candidates are circular local maxima, strictly higher than both
/// neighboring values; a plateau counts once, at its first month in
/// circular order. Candidates are then accepted greedily in descending
/// NDVI order (ties to the earlier month), rejecting any candidate within
/// `min_peak_separation_months` of an accepted peak.
///
/// Returns 1-based months in acceptance order.
pub fn detect_peaks(signature: &[f64; MONTHS], config: &HeuristicConfig) -> Vec<u8> {
    // Decompose the circle into runs of equal consecutive values.
    let run_starts: Vec<usize> = (0..MONTHS)
        .filter(|&m| signature[m] != signature[(m + MONTHS - 1) % MONTHS])
        .collect();
    if run_starts.is_empty() {
        return Vec::new(); // constant signature
    }

    let mut candidates: Vec<(u8, f64)> = Vec::new();
    let runs = run_starts.len();
    for (r, &start) in run_starts.iter().enumerate() {
        let value = signature[start];
        let prev_value = signature[(start + MONTHS - 1) % MONTHS];
        let next_start = run_starts[(r + 1) % runs];
        let next_value = signature[next_start];
        if value > prev_value && value > next_value {
            candidates.push((start as u8 + 1, value));
        }
    }

    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut accepted: Vec<u8> = Vec::new();
    for (month, _) in candidates {
        let clear = accepted
            .iter()
            .all(|&p| circular_month_distance(p, month) >= config.min_peak_separation_months);
        if clear {
            accepted.push(month);
        }
    }
    accepted
}

/// Assemble the season around a peak: the climate window is the peak month
/// and the month before, wrapping December into January.
pub fn build_season(
    peak_month: u8,
    signature: &[f64; MONTHS],
    precip_mm: &[f64; MONTHS],
    temp_c: &[f64; MONTHS],
) -> CropSeason {
    debug_assert!((1..=12).contains(&peak_month));
    let at = (peak_month - 1) as usize;
    let before = (at + MONTHS - 1) % MONTHS;
    CropSeason {
        peak_month,
        peak_ndvi: signature[at],
        mean_precip_mm: (precip_mm[before] + precip_mm[at]) / 2.0,
        mean_temp_c: (temp_c[before] + temp_c[at]) / 2.0,
    }
}

/// Label one season. Irrigated means the peak clears the cultivation
/// threshold while rain over the season window stays strictly below the
/// active water need; everything else is rainfed.
pub fn label_season(season: &CropSeason, config: &HeuristicConfig) -> LabeledSeason {
    let cultivated = season.peak_ndvi > config.ndvi_peak_threshold;
    let threshold = config.active_precip_threshold(season.mean_temp_c);
    let verdict = if cultivated && season.mean_precip_mm < threshold {
        Verdict::Irrigated
    } else {
        Verdict::Rainfed
    };
    LabeledSeason {
        season: *season,
        verdict,
        cultivated,
    }
}

/// Label a whole cluster from its centroid signature and climate series.
/// Irrigated if any season is; not-cultivated if no season clears the NDVI
/// threshold (including the no-peaks case).
pub fn label_cluster(
    signature: &[f64; MONTHS],
    precip_mm: &[f64; MONTHS],
    temp_c: &[f64; MONTHS],
    config: &HeuristicConfig,
) -> ClusterLabel {
    let seasons: Vec<LabeledSeason> = detect_peaks(signature, config)
        .into_iter()
        .map(|peak| label_season(&build_season(peak, signature, precip_mm, temp_c), config))
        .collect();

    let overall = if seasons.iter().any(|s| s.verdict == Verdict::Irrigated) {
        OverallLabel::Irrigated
    } else if seasons.iter().any(|s| s.cultivated) {
        OverallLabel::Rainfed
    } else {
        OverallLabel::NotCultivated
    };

    ClusterLabel {
        cluster: 0,
        seasons,
        overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> HeuristicConfig {
        HeuristicConfig::default()
    }

    fn series(pairs: &[(usize, f64)], base: f64) -> [f64; MONTHS] {
        let mut s = [base; MONTHS];
        for &(month, v) in pairs {
            s[month - 1] = v;
        }
        s
    }

    #[test]
    fn constant_series_has_no_peaks() {
        assert!(detect_peaks(&[0.4; MONTHS], &cfg()).is_empty());
    }

    #[test]
    fn single_bump_is_found() {
        let s = series(&[(6, 0.3), (7, 0.6), (8, 0.3)], 0.1);
        assert_eq!(detect_peaks(&s, &cfg()), vec![7]);
    }

    #[test]
    fn close_peaks_keep_the_taller() {
        // bumps at months 4 (0.6) and 6 (0.5): circular distance 2 < 3
        let s = series(&[(4, 0.6), (6, 0.5)], 0.1);
        assert_eq!(detect_peaks(&s, &cfg()), vec![4]);
    }

    #[test]
    fn distant_peaks_both_accepted_in_value_order() {
        let s = series(&[(3, 0.5), (9, 0.6)], 0.1);
        assert_eq!(detect_peaks(&s, &cfg()), vec![9, 3]);
    }

    #[test]
    fn plateau_takes_its_first_month() {
        let s = series(&[(5, 0.6), (6, 0.6), (7, 0.6)], 0.1);
        assert_eq!(detect_peaks(&s, &cfg()), vec![5]);
    }

    #[test]
    fn plateau_across_year_boundary_starts_in_december() {
        let s = series(&[(12, 0.6), (1, 0.6)], 0.1);
        assert_eq!(detect_peaks(&s, &cfg()), vec![12]);
    }

    #[test]
    fn equal_value_peaks_tie_to_earlier_month() {
        let s = series(&[(2, 0.6), (8, 0.6)], 0.1);
        assert_eq!(detect_peaks(&s, &cfg()), vec![2, 8]);
    }

    #[test]
    fn season_window_wraps_january_to_december() {
        let sig = series(&[(1, 0.6)], 0.1);
        let mut precip = [0.0; MONTHS];
        precip[11] = 20.0; // December
        precip[0] = 40.0; // January
        let temp = [20.0; MONTHS];
        let season = build_season(1, &sig, &precip, &temp);
        assert_eq!(season.mean_precip_mm, 30.0);
        assert_eq!(season.peak_ndvi, 0.6);
    }

    #[test]
    fn season_means_are_two_month_averages() {
        let sig = series(&[(5, 0.6)], 0.1);
        let mut precip = [0.0; MONTHS];
        precip[3] = 80.0;
        precip[4] = 120.0;
        let mut temp = [0.0; MONTHS];
        temp[3] = 14.0;
        temp[4] = 16.0;
        let season = build_season(5, &sig, &precip, &temp);
        assert_eq!(season.mean_precip_mm, 100.0);
        assert_eq!(season.mean_temp_c, 15.0);
    }

    fn season(peak_ndvi: f64, precip: f64, temp: f64) -> CropSeason {
        CropSeason {
            peak_month: 6,
            peak_ndvi,
            mean_precip_mm: precip,
            mean_temp_c: temp,
        }
    }

    #[test]
    fn heuristic_verdicts() {
        let c = cfg();
        // dry, warm, cultivated
        let s = label_season(&season(0.6, 40.0, 25.0), &c);
        assert_eq!(s.verdict, Verdict::Irrigated);
        assert!(s.cultivated);
        // peak below cultivation threshold
        let s = label_season(&season(0.25, 10.0, 25.0), &c);
        assert_eq!(s.verdict, Verdict::Rainfed);
        assert!(!s.cultivated);
        // 90mm is below the warm threshold
        assert_eq!(
            label_season(&season(0.6, 90.0, 20.0), &c).verdict,
            Verdict::Irrigated
        );
        // but not below the cold one
        assert_eq!(
            label_season(&season(0.6, 90.0, 10.0), &c).verdict,
            Verdict::Rainfed
        );
    }

    #[test]
    fn thresholds_are_strict() {
        let c = cfg();
        // precipitation exactly at the active threshold: rainfed
        assert_eq!(
            label_season(&season(0.6, 100.0, 25.0), &c).verdict,
            Verdict::Rainfed
        );
        assert_eq!(
            label_season(&season(0.6, 85.0, 10.0), &c).verdict,
            Verdict::Rainfed
        );
        // peak exactly at 0.3: not cultivated
        let s = label_season(&season(0.3, 10.0, 25.0), &c);
        assert_eq!(s.verdict, Verdict::Rainfed);
        assert!(!s.cultivated);
        // temperature exactly at 15 °C uses the warm threshold
        assert_eq!(
            label_season(&season(0.6, 90.0, 15.0), &c).verdict,
            Verdict::Irrigated
        );
    }

    #[test]
    fn flat_cluster_is_not_cultivated() {
        let label = label_cluster(&[0.1; MONTHS], &[50.0; MONTHS], &[20.0; MONTHS], &cfg());
        assert_eq!(label.overall, OverallLabel::NotCultivated);
        assert!(label.seasons.is_empty());
    }

    #[test]
    fn one_dry_season_makes_the_cluster_irrigated() {
        let sig = series(&[(6, 0.3), (7, 0.6), (8, 0.3)], 0.1);
        let label = label_cluster(&sig, &[20.0; MONTHS], &[25.0; MONTHS], &cfg());
        assert_eq!(label.overall, OverallLabel::Irrigated);
        assert_eq!(label.seasons.len(), 1);
    }

    #[test]
    fn mixed_seasons_count_as_irrigated_overall() {
        let sig = series(&[(3, 0.6), (9, 0.6)], 0.1);
        let mut precip = [40.0; MONTHS];
        precip[1] = 150.0; // February
        precip[2] = 150.0; // March: wet season at month 3
        precip[7] = 20.0;
        precip[8] = 20.0; // dry season at month 9
        let label = label_cluster(&sig, &precip, &[25.0; MONTHS], &cfg());
        assert_eq!(label.overall, OverallLabel::Irrigated);
        let by_month: Vec<(u8, Verdict)> = label
            .seasons
            .iter()
            .map(|s| (s.season.peak_month, s.verdict))
            .collect();
        assert!(by_month.contains(&(3, Verdict::Rainfed)));
        assert!(by_month.contains(&(9, Verdict::Irrigated)));
    }

    #[test]
    fn sub_threshold_peak_cluster_is_not_cultivated() {
        let sig = series(&[(7, 0.25)], 0.1);
        let label = label_cluster(&sig, &[20.0; MONTHS], &[25.0; MONTHS], &cfg());
        assert_eq!(label.overall, OverallLabel::NotCultivated);
        assert_eq!(label.seasons.len(), 1);
        assert!(!label.seasons[0].cultivated);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut bad = cfg();
        bad.cold_precip_threshold_mm = 120.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg();
        bad.ndvi_peak_threshold = 0.0;
        assert!(bad.validate().is_err());
    }
}
