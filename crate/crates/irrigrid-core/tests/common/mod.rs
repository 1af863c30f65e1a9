//! Independent oracles for cross-checking the library.
//!
//! Everything here is written from the definitions, structured differently
//! from the library code (full distance matrices, per-month walks), and must
//! stay independent of the implementation paths it checks.

#![allow(dead_code)]
// index-explicit loops on purpose: the oracles mirror the written definitions
#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MONTHS: usize = 12;

// ---------------------------------------------------------------------------
// cluster-quality oracles, from the definitions via a full distance matrix
// ---------------------------------------------------------------------------

pub struct LabeledPoints {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub k: usize,
}

fn distance_matrix(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut m = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            m[i][j] = d.sqrt();
        }
    }
    m
}

fn members_of(data: &LabeledPoints, c: usize) -> Vec<usize> {
    (0..data.rows.len())
        .filter(|&i| data.labels[i] == c)
        .collect()
}

fn mean_point(rows: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = rows[0].len();
    let mut mean = vec![0.0f64; dim];
    for &i in members {
        for d in 0..dim {
            mean[d] += rows[i][d];
        }
    }
    for v in mean.iter_mut() {
        *v /= members.len() as f64;
    }
    mean
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean of (b - a) / max(a, b) over all points; singletons and 0/0 score 0.
pub fn silhouette_brute(data: &LabeledPoints) -> f64 {
    let n = data.rows.len();
    let dm = distance_matrix(&data.rows);
    let mut total = 0.0;
    for i in 0..n {
        let own = members_of(data, data.labels[i]);
        if own.len() == 1 {
            continue;
        }
        let a: f64 = own
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| dm[i][j])
            .sum::<f64>()
            / (own.len() - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..data.k {
            if c == data.labels[i] {
                continue;
            }
            let other = members_of(data, c);
            let mean = other.iter().map(|&j| dm[i][j]).sum::<f64>() / other.len() as f64;
            b = b.min(mean);
        }
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

/// (between dispersion / (k-1)) / (within dispersion / (n-k)).
pub fn calinski_harabasz_brute(data: &LabeledPoints) -> f64 {
    let n = data.rows.len();
    let all: Vec<usize> = (0..n).collect();
    let overall = mean_point(&data.rows, &all);
    let mut between = 0.0;
    let mut within = 0.0;
    for c in 0..data.k {
        let members = members_of(data, c);
        let centroid = mean_point(&data.rows, &members);
        between += members.len() as f64 * euclid(&centroid, &overall).powi(2);
        for &i in &members {
            within += euclid(&data.rows[i], &centroid).powi(2);
        }
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    (between / (data.k - 1) as f64) / (within / (n - data.k) as f64)
}

/// Mean over clusters of max_j (s_i + s_j) / d_ij. None when two centroids
/// coincide (the index is undefined there).
pub fn davies_bouldin_brute(data: &LabeledPoints) -> Option<f64> {
    let centroids: Vec<Vec<f64>> = (0..data.k)
        .map(|c| mean_point(&data.rows, &members_of(data, c)))
        .collect();
    let scatter: Vec<f64> = (0..data.k)
        .map(|c| {
            let members = members_of(data, c);
            members
                .iter()
                .map(|&i| euclid(&data.rows[i], &centroids[c]))
                .sum::<f64>()
                / members.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..data.k {
        let mut worst = 0.0f64;
        for j in 0..data.k {
            if i == j {
                continue;
            }
            let sep = euclid(&centroids[i], &centroids[j]);
            if sep == 0.0 {
                return None;
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Some(total / data.k as f64)
}

/// Random instance with every cluster guaranteed non-empty.
pub fn random_labeled_instance(seed: u64) -> LabeledPoints {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=5usize);
    let n = rng.random_range(k.max(6)..=50usize);
    let dim = rng.random_range(2..=12usize);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    // shuffle labels so cluster order is arbitrary
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    LabeledPoints { rows, labels, k }
}

// ---------------------------------------------------------------------------
// peak-detection oracle: per-month walks instead of run decomposition
// ---------------------------------------------------------------------------

/// A month starts a peak when the nearest differing values both backward and
/// forward are lower, and its immediate predecessor is not equal (so each
/// plateau counts once, at its circular start).
fn is_peak_start(values: &[f64; MONTHS], m: usize) -> bool {
    let v = values[m];
    if values[(m + MONTHS - 1) % MONTHS] == v {
        return false; // not the first month of its plateau
    }
    let mut back = None;
    for step in 1..MONTHS {
        let u = values[(m + MONTHS - step) % MONTHS];
        if u != v {
            back = Some(u);
            break;
        }
    }
    let mut fwd = None;
    for step in 1..MONTHS {
        let u = values[(m + step) % MONTHS];
        if u != v {
            fwd = Some(u);
            break;
        }
    }
    match (back, fwd) {
        (Some(b), Some(f)) => b < v && f < v,
        _ => false, // constant series
    }
}

/// Same contract as `detect_peaks`, from the naive definition: candidate
/// plateau starts, greedy acceptance in descending value (ties to the
/// earlier month), circular separation enforced against accepted peaks.
pub fn detect_peaks_brute(values: &[f64; MONTHS], min_separation: u32) -> Vec<u8> {
    let mut candidates: Vec<usize> = (0..MONTHS).filter(|&m| is_peak_start(values, m)).collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut accepted: Vec<u8> = Vec::new();
    for m in candidates {
        let month = m as u8 + 1;
        let ok = accepted.iter().all(|&p| {
            let d = (p as i32 - month as i32).unsigned_abs();
            d.min(12 - d) >= min_separation
        });
        if ok {
            accepted.push(month);
        }
    }
    accepted
}

// ---------------------------------------------------------------------------
// nearest-center resampling oracle: exhaustive distance comparison
// ---------------------------------------------------------------------------

/// Index of the source pixel whose center is nearest to (lon, lat), by
/// scanning every source pixel. Ties keep the first (row-major) pixel.
pub fn nearest_source_pixel(
    origin_lon: f64,
    origin_lat: f64,
    pixel_size: f64,
    width: u32,
    height: u32,
    lon: f64,
    lat: f64,
) -> (u32, u32) {
    let mut best = (0u32, 0u32);
    let mut best_d = f64::INFINITY;
    for row in 0..height {
        for col in 0..width {
            let clon = origin_lon + (col as f64 + 0.5) * pixel_size;
            let clat = origin_lat - (row as f64 + 0.5) * pixel_size;
            let d = (clon - lon) * (clon - lon) + (clat - lat) * (clat - lat);
            if d < best_d {
                best_d = d;
                best = (row, col);
            }
        }
    }
    best
}
