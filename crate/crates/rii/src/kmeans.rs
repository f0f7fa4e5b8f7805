//! Lloyd k-means over flat `f32` data, used for codebook training.
//!
//! Deterministic for a fixed seed: k-means++ seeding draws from a seeded
//! generator, argmin ties go to the lowest index, and accumulation order is
//! fixed.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Index of the nearest centroid, ties broken by the lowest index.
pub(crate) fn nearest_centroid(centroids: &[f32], dim: usize, point: &[f32]) -> (usize, f32) {
    let mut best = 0usize;
    let mut best_d = f32::INFINITY;
    for (c, chunk) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(chunk, point);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// k-means++ seeding: the first center is drawn uniformly, subsequent ones
/// proportionally to the squared distance from the nearest chosen center.
fn seed_centroids(points: &[f32], n: usize, dim: usize, k: usize, rng: &mut StdRng) -> Vec<f32> {
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);

    let mut min_d: Vec<f64> = points
        .chunks_exact(dim)
        .map(|p| squared_distance(p, &centroids[..dim]) as f64)
        .collect();

    while centroids.len() < k * dim {
        let total: f64 = min_d.iter().sum();
        let chosen = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut idx = 0usize;
            for (i, w) in min_d.iter().enumerate() {
                t -= w;
                if t <= 0.0 {
                    idx = i;
                    break;
                }
                idx = i;
            }
            idx
        } else {
            // All remaining points coincide with a chosen center; spread
            // deterministically.
            rng.gen_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(&points[chosen * dim..(chosen + 1) * dim]);
        let new_c = &centroids[start..start + dim];
        for (p, slot) in points.chunks_exact(dim).zip(min_d.iter_mut()) {
            let d = squared_distance(p, new_c) as f64;
            if d < *slot {
                *slot = d;
            }
        }
    }
    centroids
}

/// Runs `n_iters` Lloyd iterations over `n` points of dimension `dim` and
/// returns the `k * dim` centroid array.
///
/// Clusters that come out of an assignment pass empty are re-seeded with the
/// point farthest from its current centroid.
pub(crate) fn lloyd(
    points: &[f32],
    n: usize,
    dim: usize,
    k: usize,
    n_iters: usize,
    seed: u64,
) -> Vec<f32> {
    debug_assert_eq!(points.len(), n * dim);
    debug_assert!(k >= 1 && k <= n);

    let mut rng = StdRng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, n, dim, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut counts = vec![0usize; k];

    for _ in 0..n_iters {
        let mut changed = false;
        let mut dists = vec![0.0f32; n];
        for (i, p) in points.chunks_exact(dim).enumerate() {
            let (c, d) = nearest_centroid(&centroids, dim, p);
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
            dists[i] = d;
        }

        counts.iter_mut().for_each(|c| *c = 0);
        for &a in &assignments {
            counts[a] += 1;
        }

        // Re-seed empty clusters from the globally farthest point among
        // clusters that can spare a member.
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut far_i = usize::MAX;
            let mut far_d = -1.0f32;
            for i in 0..n {
                if counts[assignments[i]] > 1 && dists[i] > far_d {
                    far_d = dists[i];
                    far_i = i;
                }
            }
            if far_i == usize::MAX {
                continue;
            }
            counts[assignments[far_i]] -= 1;
            assignments[far_i] = empty;
            counts[empty] = 1;
            dists[far_i] = 0.0;
            centroids[empty * dim..(empty + 1) * dim]
                .copy_from_slice(&points[far_i * dim..(far_i + 1) * dim]);
            changed = true;
        }

        // Mean update, accumulated in f64 in point order.
        let mut sums = vec![0.0f64; k * dim];
        for (i, p) in points.chunks_exact(dim).enumerate() {
            let row = &mut sums[assignments[i] * dim..(assignments[i] + 1) * dim];
            for (s, &v) in row.iter_mut().zip(p.iter()) {
                *s += v as f64;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            for j in 0..dim {
                centroids[c * dim + j] = (sums[c * dim + j] * inv) as f32;
            }
        }

        if !changed {
            break;
        }
    }

    centroids
}
