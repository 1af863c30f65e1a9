//! Cluster validity indices: silhouette, Calinski-Harabasz, Davies-Bouldin.
//!
//! All three are computed from (points, labels) with centroids re-derived as
//! member means, so they apply equally to a full model and to a metric
//! subsample.

use rayon::prelude::*;

use crate::clustering::{kmeans::dist2, ClusterModel, PointMatrix};
use crate::error::{Error, Result};

/// Mean silhouette coefficient over all points. Requires k >= 2 and every
/// cluster non-empty; a point alone in its cluster scores 0.
pub fn silhouette(points: &PointMatrix, model: &ClusterModel) -> Result<f64> {
    silhouette_labeled(points, &model.assignments, model.k)
}

pub(crate) fn silhouette_labeled(
    points: &PointMatrix,
    labels: &[u32],
    k: usize,
) -> Result<f64> {
    check_labeled(points, labels, k, "silhouette")?;
    let n = points.n();
    let sizes = cluster_sizes(labels, k);

    // Quadratic in n; the per-point scores are independent, and the final
    // sum runs in index order so thread count cannot change the result.
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i] as usize;
            if sizes[own] == 1 {
                return 0.0; // a point alone in its cluster scores 0
            }
            let mut sums = vec![0.0f64; k];
            for j in 0..n {
                if j == i {
                    continue;
                }
                sums[labels[j] as usize] += dist2(points.row(i), points.row(j)).sqrt();
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let mut b = f64::INFINITY;
            for (c, (&sum, &size)) in sums.iter().zip(&sizes).enumerate() {
                if c == own {
                    continue;
                }
                let mean = sum / size as f64;
                if mean < b {
                    b = mean;
                }
            }
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

/// Calinski-Harabasz index: between-cluster dispersion over within-cluster
/// dispersion, each normalized by its degrees of freedom. Zero within-cluster
/// dispersion yields +infinity.
pub fn calinski_harabasz(points: &PointMatrix, model: &ClusterModel) -> Result<f64> {
    calinski_harabasz_labeled(points, &model.assignments, model.k)
}

pub(crate) fn calinski_harabasz_labeled(
    points: &PointMatrix,
    labels: &[u32],
    k: usize,
) -> Result<f64> {
    check_labeled(points, labels, k, "calinski-harabasz")?;
    let n = points.n();
    let dim = points.dim();
    let sizes = cluster_sizes(labels, k);
    let centroids = member_means(points, labels, k);

    let mut overall = vec![0.0f64; dim];
    for i in 0..n {
        for (o, &v) in overall.iter_mut().zip(points.row(i)) {
            *o += v;
        }
    }
    for o in overall.iter_mut() {
        *o /= n as f64;
    }

    let mut within = 0.0f64;
    for (i, &label) in labels.iter().enumerate() {
        let c = label as usize;
        within += dist2(points.row(i), &centroids[c * dim..(c + 1) * dim]);
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut between = 0.0f64;
    for c in 0..k {
        between += sizes[c] as f64 * dist2(&centroids[c * dim..(c + 1) * dim], &overall);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Davies-Bouldin index: mean over clusters of the worst ratio of summed
/// scatters to centroid separation. Coincident centroids make the index
/// undefined and are reported as an invalid model.
pub fn davies_bouldin(points: &PointMatrix, model: &ClusterModel) -> Result<f64> {
    davies_bouldin_labeled(points, &model.assignments, model.k)
}

pub(crate) fn davies_bouldin_labeled(
    points: &PointMatrix,
    labels: &[u32],
    k: usize,
) -> Result<f64> {
    check_labeled(points, labels, k, "davies-bouldin")?;
    let dim = points.dim();
    let sizes = cluster_sizes(labels, k);
    let centroids = member_means(points, labels, k);

    let mut scatter = vec![0.0f64; k];
    for (i, &label) in labels.iter().enumerate() {
        let c = label as usize;
        scatter[c] += dist2(points.row(i), &centroids[c * dim..(c + 1) * dim]).sqrt();
    }
    for (s, &size) in scatter.iter_mut().zip(&sizes) {
        *s /= size as f64;
    }

    let mut total = 0.0f64;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = dist2(
                &centroids[i * dim..(i + 1) * dim],
                &centroids[j * dim..(j + 1) * dim],
            )
            .sqrt();
            if sep == 0.0 {
                return Err(Error::InvalidModel(format!(
                    "clusters {i} and {j} have coincident centroids"
                )));
            }
            let ratio = (scatter[i] + scatter[j]) / sep;
            if ratio > worst {
                worst = ratio;
            }
        }
        total += worst;
    }
    Ok(total / k as f64)
}

fn check_labeled(points: &PointMatrix, labels: &[u32], k: usize, what: &str) -> Result<()> {
    if k < 2 {
        return Err(Error::UndefinedMetric(format!(
            "{what} requires at least 2 clusters, got {k}"
        )));
    }
    if labels.len() != points.n() {
        return Err(Error::invalid(format!(
            "{} labels for {} points",
            labels.len(),
            points.n()
        )));
    }
    let sizes = cluster_sizes(labels, k);
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::UndefinedMetric(format!(
            "{what} requires every cluster non-empty; cluster {c} is empty"
        )));
    }
    Ok(())
}

fn cluster_sizes(labels: &[u32], k: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; k];
    for &a in labels {
        sizes[a as usize] += 1;
    }
    sizes
}

// A uniform column keeps its exact value, matching the k-means update rule;
// clusters of coincident points must yield exactly coincident centroids.
fn member_means(points: &PointMatrix, labels: &[u32], k: usize) -> Vec<f64> {
    let dim = points.dim();
    let mut sums = vec![0.0f64; k * dim];
    let mut mins = vec![f64::INFINITY; k * dim];
    let mut maxs = vec![f64::NEG_INFINITY; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &a) in labels.iter().enumerate() {
        let c = a as usize;
        counts[c] += 1;
        for (d, &v) in points.row(i).iter().enumerate() {
            let j = c * dim + d;
            sums[j] += v;
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        for d in 0..dim {
            let j = c * dim + d;
            sums[j] = if mins[j] == maxs[j] {
                mins[j]
            } else {
                sums[j] / count as f64
            };
        }
    }
    sums
}
