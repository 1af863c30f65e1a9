//! Lloyd's algorithm with k-means++ initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clustering::{ClusterModel, PointMatrix};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 300;

/// Fit k clusters. Deterministic in (points, k, seed): the same inputs give
/// the same model, on any worker count.
///
/// Initialization samples over a value-sorted view of the points, so a
/// permutation of the input rows permutes the assignments and leaves the
/// centroid set unchanged up to accumulation rounding.
pub fn kmeans_fit(points: &PointMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    let n = points.n();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n < k {
        return Err(Error::invalid(format!("{n} points cannot form {k} clusters")));
    }
    debug_assert!(
        points.values().iter().all(|v| v.is_finite()),
        "points must be nodata-free"
    );

    let dim = points.dim();
    let order = canonical_order(points);
    let mut centroids = plus_plus_init(points, &order, k, seed);
    let mut assignments: Vec<u32> = vec![u32::MAX; n];
    let mut inertia_per_iteration = Vec::new();
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<u32> = (0..n)
            .into_par_iter()
            .map(|i| nearest_centroid(points.row(i), &centroids, dim) as u32)
            .collect();

        repair_empty_clusters(points, &order, &mut centroids, &mut next, k);

        let inertia: f64 = (0..n)
            .map(|i| dist2(points.row(i), centroid(&centroids, next[i] as usize, dim)))
            .sum();
        inertia_per_iteration.push(inertia);

        let stable = next == assignments;
        assignments = next;
        update_centroids(points, &assignments, &mut centroids, k);
        if stable {
            converged = true;
            break;
        }
    }

    let inertia: f64 = (0..n)
        .map(|i| dist2(points.row(i), centroid(&centroids, assignments[i] as usize, dim)))
        .sum();

    Ok(ClusterModel {
        k,
        dim,
        centroids,
        assignments,
        inertia,
        inertia_per_iteration,
        seed,
        converged,
    })
}

/// Point indices sorted by value (lexicographic per component). Gives the
/// RNG a processing order that does not depend on input row order.
fn canonical_order(points: &PointMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.n()).collect();
    order.sort_by(|&a, &b| {
        points
            .row(a)
            .iter()
            .zip(points.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// k-means++: first centroid uniform, each further centroid sampled with
/// probability proportional to squared distance from the nearest chosen one.
fn plus_plus_init(points: &PointMatrix, order: &[usize], k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.n();
    let dim = points.dim();
    let mut centroids = Vec::with_capacity(k * dim);

    let first = order[rng.random_range(0..n)];
    centroids.extend_from_slice(points.row(first));

    let mut dist: Vec<f64> = order
        .iter()
        .map(|&i| dist2(points.row(i), &centroids[0..dim]))
        .collect();

    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick_pos = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pos = dist.len() - 1;
            for (j, &d) in dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    pos = j;
                    break;
                }
            }
            pos
        } else {
            // All remaining mass is zero (duplicate-heavy data); any point works.
            rng.random_range(0..n)
        };
        let chosen = order[pick_pos];
        centroids.extend_from_slice(points.row(chosen));
        let new = &centroids[c * dim..(c + 1) * dim];
        for (j, &i) in order.iter().enumerate() {
            let d = dist2(points.row(i), new);
            if d < dist[j] {
                dist[j] = d;
            }
        }
    }
    centroids
}

fn centroid(centroids: &[f64], c: usize, dim: usize) -> &[f64] {
    &centroids[c * dim..(c + 1) * dim]
}

fn nearest_centroid(point: &[f64], centroids: &[f64], dim: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, cent) in centroids.chunks_exact(dim).enumerate() {
        let d = dist2(point, cent);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Give every empty cluster the point farthest from its current centroid,
/// moving both the centroid and the point's assignment. Candidates come
/// from clusters that keep at least one member, scanned in canonical order
/// so the repair is input-order independent.
fn repair_empty_clusters(
    points: &PointMatrix,
    order: &[usize],
    centroids: &mut [f64],
    assignments: &mut [u32],
    k: usize,
) {
    let dim = points.dim();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a as usize] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        let mut best_d = f64::NEG_INFINITY;
        for &i in order {
            let a = assignments[i] as usize;
            if counts[a] < 2 {
                continue;
            }
            let d = dist2(points.row(i), centroid(centroids, a, dim));
            if d > best_d {
                best_d = d;
                donor = Some(i);
            }
        }
        // n >= k guarantees a donor: an empty cluster implies some cluster
        // holds at least two points.
        let i = donor.expect("empty cluster with no donor point");
        let from = assignments[i] as usize;
        counts[from] -= 1;
        counts[empty] += 1;
        assignments[i] = empty as u32;
        centroids[empty * dim..(empty + 1) * dim].copy_from_slice(points.row(i));
    }
}

/// Recompute centroids as member means, accumulating in point-index order
/// so results do not depend on thread count. A column whose members all
/// share one value keeps that value exactly; summation must not perturb the
/// mean of identical points, or duplicate-heavy data never converges.
fn update_centroids(points: &PointMatrix, assignments: &[u32], centroids: &mut [f64], k: usize) {
    let dim = points.dim();
    let mut sums = vec![0.0f64; k * dim];
    let mut mins = vec![f64::INFINITY; k * dim];
    let mut maxs = vec![f64::NEG_INFINITY; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
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
        debug_assert!(count > 0, "cluster {c} empty after repair");
        for d in 0..dim {
            let j = c * dim + d;
            centroids[j] = if mins[j] == maxs[j] {
                mins[j]
            } else {
                sums[j] / count as f64
            };
        }
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> PointMatrix {
        PointMatrix::from_rows(rows.iter().map(|r| r.to_vec())).unwrap()
    }

    #[test]
    fn k1_returns_column_mean() {
        let points = matrix(&[&[1.0, 2.0], &[3.0, 6.0], &[5.0, 1.0]]);
        let model = kmeans_fit(&points, 1, 7).unwrap();
        assert_eq!(model.assignments, vec![0, 0, 0]);
        assert!((model.centroids[0] - 3.0).abs() < 1e-12);
        assert!((model.centroids[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let points = matrix(&[&[0.0, 0.0], &[5.0, 0.0], &[0.0, 5.0], &[5.0, 5.0]]);
        let model = kmeans_fit(&points, 4, 3).unwrap();
        assert_eq!(model.inertia, 0.0);
        let mut seen: Vec<u32> = model.assignments.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn too_few_points_rejected() {
        let points = matrix(&[&[0.0, 0.0]]);
        assert!(kmeans_fit(&points, 2, 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 7) as f64 * 0.3, (i % 5) as f64 * 0.7])
            .collect();
        let points = PointMatrix::from_rows(rows).unwrap();
        let a = kmeans_fit(&points, 3, 99).unwrap();
        let b = kmeans_fit(&points, 3, 99).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
    }

    #[test]
    fn inertia_is_monotone_per_iteration() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let base = if i % 2 == 0 { 0.0 } else { 8.0 };
                vec![base + (i as f64 * 0.37).sin(), base + (i as f64 * 0.73).cos()]
            })
            .collect();
        let points = PointMatrix::from_rows(rows).unwrap();
        let model = kmeans_fit(&points, 3, 5).unwrap();
        for w in model.inertia_per_iteration.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "inertia rose: {:?}", w);
        }
    }

    #[test]
    fn identical_points_converge_with_all_clusters_populated() {
        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![0.4, 0.4, 0.4]).collect();
        let points = PointMatrix::from_rows(rows).unwrap();
        let model = kmeans_fit(&points, 2, 1).unwrap();
        assert!(model.converged);
        assert_eq!(model.inertia, 0.0);
        let mut counts = [0usize; 2];
        for &a in &model.assignments {
            counts[a as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn centroids_are_member_means_at_convergence() {
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| {
                let blob = (i % 3) as f64 * 10.0;
                vec![blob + (i as f64 * 0.91).sin() * 0.1, blob]
            })
            .collect();
        let points = PointMatrix::from_rows(rows).unwrap();
        let model = kmeans_fit(&points, 3, 11).unwrap();
        assert!(model.converged);
        for c in 0..3 {
            let members: Vec<usize> = (0..points.n())
                .filter(|&i| model.assignments[i] == c as u32)
                .collect();
            for d in 0..2 {
                let mean: f64 = members.iter().map(|&i| points.row(i)[d]).sum::<f64>()
                    / members.len() as f64;
                assert!((mean - model.centroids[c * 2 + d]).abs() < 1e-9);
            }
        }
    }
}
