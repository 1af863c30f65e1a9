//! K-means over 12-month NDVI signatures and the validity indices used to
//! pick k.

mod kmeans;
mod quality;

pub use kmeans::kmeans_fit;
pub use quality::{calinski_harabasz, davies_bouldin, silhouette};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Metric computation switches to a seeded subsample above this point count;
/// silhouette is quadratic in n.
pub const METRIC_SAMPLE_CAP: usize = 10_000;

/// Seeded restarts per k during model selection; lowest inertia wins.
const RESTARTS: u64 = 5;

/// Dense row-major point storage.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMatrix {
    values: Vec<f64>,
    dim: usize,
}

impl PointMatrix {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not fill rows of {dim}",
                values.len()
            )));
        }
        Ok(PointMatrix { values, dim })
    }

    pub fn from_rows<I, R>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut values = Vec::new();
        let mut dim = None;
        for row in rows {
            let row = row.as_ref();
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::invalid("ragged rows"));
                }
                _ => {}
            }
            values.extend_from_slice(row);
        }
        let dim = dim.ok_or_else(|| Error::invalid("no rows"))?;
        PointMatrix::new(values, dim)
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Matrix holding the given rows of self, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        PointMatrix {
            values,
            dim: self.dim,
        }
    }
}

/// A fitted k-means model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub dim: usize,
    /// k x dim, row-major.
    pub centroids: Vec<f64>,
    /// Cluster index per point, parallel to the fitted matrix rows.
    pub assignments: Vec<u32>,
    /// Sum of squared distances of points to their assigned centroid.
    pub inertia: f64,
    /// Inertia recorded after each assignment pass; non-increasing.
    pub inertia_per_iteration: Vec<f64>,
    pub seed: u64,
    pub converged: bool,
}

impl ClusterModel {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn cluster_members(&self, c: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize == c)
            .map(|(i, _)| i)
            .collect()
    }
}

/// The three validity indices for one fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterQuality {
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
}

/// Per-k outcome recorded during model selection.
#[derive(Debug, Clone, Serialize)]
pub struct KCandidate {
    pub k: usize,
    pub inertia: f64,
    pub quality: Option<ClusterQuality>,
    /// Why the quality indices could not be computed, when they could not.
    pub error: Option<String>,
}

/// Result of scanning a k range.
#[derive(Debug, Clone)]
pub struct ModelSelection {
    pub model: ClusterModel,
    pub candidates: Vec<KCandidate>,
    /// Number of points metrics were computed on, when subsampled.
    pub metric_sample: Option<usize>,
}

/// Fit every k in `[k_lo, k_hi]` (5 seeded restarts each, lowest inertia
/// kept) and return the model with the highest silhouette; ties break to the
/// lower Davies-Bouldin index, then to the lower k. All candidate metrics
/// are retained for the run report.
pub fn select_model(
    points: &PointMatrix,
    k_range: (usize, usize),
    seed: u64,
) -> Result<ModelSelection> {
    let (k_lo, k_hi) = k_range;
    if k_lo < 2 {
        return Err(Error::invalid(format!("k_lo must be at least 2, got {k_lo}")));
    }
    if k_lo > k_hi {
        return Err(Error::invalid(format!("empty k range [{k_lo}, {k_hi}]")));
    }
    let n = points.n();
    if n <= k_hi {
        return Err(Error::invalid(format!(
            "need more than {k_hi} points to scan k up to {k_hi}, got {n}"
        )));
    }

    // One shared subsample keeps the three indices comparable across k.
    let sample_indices = metric_sample_indices(n, seed);
    let sample_points = sample_indices.as_ref().map(|idx| points.select(idx));

    let mut candidates = Vec::new();
    let mut best: Option<(f64, f64, ClusterModel)> = None;

    for k in k_lo..=k_hi {
        let model = fit_with_restarts(points, k, seed)?;

        let quality = match &sample_points {
            None => model_quality(points, &model.assignments, model.k),
            Some(sample) => {
                let idx = sample_indices.as_ref().unwrap();
                let labels: Vec<u32> = idx.iter().map(|&i| model.assignments[i]).collect();
                model_quality(sample, &labels, model.k)
            }
        };

        match quality {
            Ok(q) => {
                candidates.push(KCandidate {
                    k,
                    inertia: model.inertia,
                    quality: Some(q),
                    error: None,
                });
                let better = match &best {
                    None => true,
                    Some((sil, db, prev)) => {
                        q.silhouette > *sil
                            || (q.silhouette == *sil
                                && (q.davies_bouldin < *db
                                    || (q.davies_bouldin == *db && model.k < prev.k)))
                    }
                };
                if better {
                    best = Some((q.silhouette, q.davies_bouldin, model));
                }
            }
            Err(e) => {
                candidates.push(KCandidate {
                    k,
                    inertia: model.inertia,
                    quality: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    match best {
        Some((_, _, model)) => Ok(ModelSelection {
            model,
            candidates,
            metric_sample: sample_indices.map(|idx| idx.len()),
        }),
        None => {
            // Every k failed its quality computation; surface the first failure.
            let first = candidates
                .iter()
                .find_map(|c| c.error.clone())
                .unwrap_or_else(|| "no candidate models".to_string());
            Err(Error::InvalidModel(format!(
                "model selection failed for all k: {first}"
            )))
        }
    }
}

/// Best of 5 seeded k-means runs by inertia, as model selection uses.
pub fn fit_with_restarts(points: &PointMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    let mut best: Option<ClusterModel> = None;
    for restart in 0..RESTARTS {
        let fitted = kmeans_fit(points, k, mix_seed(seed, k as u64, restart))?;
        if best.as_ref().is_none_or(|m| fitted.inertia < m.inertia) {
            best = Some(fitted);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn model_quality(points: &PointMatrix, labels: &[u32], k: usize) -> Result<ClusterQuality> {
    Ok(ClusterQuality {
        silhouette: quality::silhouette_labeled(points, labels, k)?,
        calinski_harabasz: quality::calinski_harabasz_labeled(points, labels, k)?,
        davies_bouldin: quality::davies_bouldin_labeled(points, labels, k)?,
    })
}

/// Uniform sample without replacement of METRIC_SAMPLE_CAP indices, or None
/// when the whole set fits.
fn metric_sample_indices(n: usize, seed: u64) -> Option<Vec<usize>> {
    if n <= METRIC_SAMPLE_CAP {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5a3137, 0));
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..METRIC_SAMPLE_CAP {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(METRIC_SAMPLE_CAP);
    Some(pool)
}

/// Stable seed derivation (splitmix64 chain); identical on every platform.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15;
    z = splitmix64(z.wrapping_add(a.wrapping_mul(0xBF58_476D_1CE4_E5B9)));
    splitmix64(z.wrapping_add(b.wrapping_mul(0x94D0_49BB_1331_11EB)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
