//! k-means over PQ-codes under the symmetric distance, without decoding.
//!
//! Centers are themselves codes. The update step picks, per cluster and per
//! subspace, the symbol minimizing the summed codeword-pair distance to the
//! members' symbols, which is the exact minimizer of the SDC objective for
//! that cluster.

use std::collections::HashSet;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::error::{Result, RiiError};
use crate::pq::SymmetricTables;

/// Default Lloyd iterations for code clustering.
pub const DEFAULT_PQ_KMEANS_ITERS: usize = 10;

#[derive(Debug, Clone)]
pub struct PqKmeansResult {
    /// `k * m` flat center codes.
    pub centers: Vec<u8>,
    /// Cluster index per input code, SDC-argmin with ties to the lowest
    /// center index.
    pub assignments: Vec<u32>,
    /// Objective `sum sdc(code, assigned center)` recorded after each
    /// assignment pass; non-increasing.
    pub objectives: Vec<f64>,
}

/// Per-subspace `Z x k` distance table from symbol to each center's symbol.
/// Turns assignment into contiguous row sums over the centers axis.
struct CenterTables {
    k: usize,
    /// `m * z * k`, row `(m, z)` contiguous over centers.
    data: Vec<f32>,
}

impl CenterTables {
    fn build(centers: &[u8], m: usize, tables: &SymmetricTables) -> CenterTables {
        let k = centers.len() / m;
        let z = tables.num_codewords();
        let mut data = vec![0.0f32; m * z * k];
        for mi in 0..m {
            for zi in 0..z {
                let row = tables.row(mi, zi);
                let out = &mut data[(mi * z + zi) * k..(mi * z + zi + 1) * k];
                for (c, slot) in out.iter_mut().enumerate() {
                    *slot = row[centers[c * m + mi] as usize];
                }
            }
        }
        CenterTables { k, data }
    }

    #[inline]
    fn row(&self, mi: usize, z: usize, num_codewords: usize) -> &[f32] {
        let start = (mi * num_codewords + z) * self.k;
        &self.data[start..start + self.k]
    }
}

/// Nearest center for one code, ties to the lowest index.
pub(crate) fn assign_one(code: &[u8], centers: &[u8], m: usize, tables: &SymmetricTables) -> usize {
    let mut best = 0usize;
    let mut best_d = f32::INFINITY;
    for (c, center) in centers.chunks_exact(m).enumerate() {
        let d = tables.sdc(code, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Cap on the restructured center-table size (in `f32`s, 256 MB); beyond
/// it assignment falls back to the direct per-center loop, which computes
/// the same sums in the same order.
const CENTER_TABLE_LIMIT: usize = 1 << 26;

/// Assigns every code to its SDC-nearest center. Returns assignments and
/// the summed objective.
pub(crate) fn assign_all(
    codes: &[u8],
    m: usize,
    centers: &[u8],
    tables: &SymmetricTables,
) -> (Vec<u32>, f64) {
    let n = codes.len() / m;
    let k = centers.len() / m;
    let z = tables.num_codewords();
    if m * z * k > CENTER_TABLE_LIMIT {
        let mut assignments = vec![0u32; n];
        let mut objective = 0.0f64;
        for (i, code) in codes.chunks_exact(m).enumerate() {
            let best = assign_one(code, centers, m, tables);
            assignments[i] = best as u32;
            objective += tables.sdc(code, &centers[best * m..(best + 1) * m]) as f64;
        }
        return (assignments, objective);
    }
    let ct = CenterTables::build(centers, m, tables);
    let mut assignments = vec![0u32; n];
    let mut objective = 0.0f64;
    let mut acc = vec![0.0f32; k];
    for (i, code) in codes.chunks_exact(m).enumerate() {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for (mi, &s) in code.iter().enumerate() {
            let row = ct.row(mi, s as usize, z);
            for (a, r) in acc.iter_mut().zip(row.iter()) {
                *a += r;
            }
        }
        let mut best = 0usize;
        let mut best_d = f32::INFINITY;
        for (c, &d) in acc.iter().enumerate() {
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best as u32;
        objective += best_d as f64;
    }
    (assignments, objective)
}

/// Picks `k` initial centers from the input codes: a seeded shuffle walked
/// until `k` byte-distinct codes are found, falling back to duplicates when
/// fewer distinct codes exist.
fn initial_centers(codes: &[u8], m: usize, k: usize, seed: u64) -> Vec<u8> {
    let n = codes.len() / m;
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut centers = Vec::with_capacity(k * m);
    let mut seen: HashSet<&[u8]> = HashSet::new();
    let mut leftovers = Vec::new();
    for &i in &order {
        if centers.len() == k * m {
            break;
        }
        let code = &codes[i as usize * m..(i as usize + 1) * m];
        if seen.insert(code) {
            centers.extend_from_slice(code);
        } else {
            leftovers.push(i);
        }
    }
    let mut spill = leftovers.into_iter();
    while centers.len() < k * m {
        let i = spill.next().expect("k <= n guarantees enough codes") as usize;
        centers.extend_from_slice(&codes[i * m..(i + 1) * m]);
    }
    centers
}

/// Clusters `codes` (flat, `m` bytes each) into `k` groups.
pub fn pq_kmeans(
    codes: &[u8],
    m: usize,
    k: usize,
    n_iters: usize,
    seed: u64,
    tables: &SymmetricTables,
) -> Result<PqKmeansResult> {
    if m == 0 || !codes.len().is_multiple_of(m) {
        return Err(RiiError::input(format!(
            "code buffer of {} bytes is not a multiple of m={m}",
            codes.len()
        )));
    }
    let n = codes.len() / m;
    if k == 0 || k > n {
        return Err(RiiError::input(format!(
            "cluster count {k} must be in 1..={n}"
        )));
    }
    let z = tables.num_codewords();

    let mut centers = initial_centers(codes, m, k, seed);
    let mut assignments = vec![0u32; n];
    let mut objectives = Vec::with_capacity(n_iters);
    let mut counts = vec![0usize; k];
    let mut hist = vec![0u32; z];
    let mut cost = vec![0.0f32; z];

    for _ in 0..n_iters.max(1) {
        let (new_assign, objective) = assign_all(codes, m, &centers, tables);
        let changed = new_assign != assignments;
        assignments = new_assign;
        objectives.push(objective);

        counts.iter_mut().for_each(|c| *c = 0);
        for &a in &assignments {
            counts[a as usize] += 1;
        }

        // Re-seed each empty cluster with the member of the largest cluster
        // farthest from its center.
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let largest = (0..k).max_by_key(|&c| counts[c]).unwrap_or(0);
            if counts[largest] < 2 {
                continue;
            }
            let center = &centers[largest * m..(largest + 1) * m];
            let mut far_i = usize::MAX;
            let mut far_d = -1.0f32;
            for (i, code) in codes.chunks_exact(m).enumerate() {
                if assignments[i] as usize == largest {
                    let d = tables.sdc(code, center);
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
            }
            if far_i == usize::MAX {
                continue;
            }
            counts[largest] -= 1;
            counts[empty] = 1;
            assignments[far_i] = empty as u32;
            centers[empty * m..(empty + 1) * m].copy_from_slice(&codes[far_i * m..(far_i + 1) * m]);
        }

        if !changed && objectives.len() > 1 {
            break;
        }

        // Update: per cluster and subspace, the symbol minimizing the summed
        // pair distance to the member symbols (computed from a symbol
        // histogram, skipping empty bins).
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); k];
        for (i, &a) in assignments.iter().enumerate() {
            members[a as usize].push(i as u32);
        }
        for (c, ids) in members.iter().enumerate() {
            if ids.is_empty() {
                continue;
            }
            for mi in 0..m {
                hist.iter_mut().for_each(|h| *h = 0);
                for &i in ids {
                    hist[codes[i as usize * m + mi] as usize] += 1;
                }
                cost.iter_mut().for_each(|v| *v = 0.0);
                for (zp, &h) in hist.iter().enumerate() {
                    if h == 0 {
                        continue;
                    }
                    let w = h as f32;
                    let row = tables.row(mi, zp);
                    for (slot, &r) in cost.iter_mut().zip(row.iter()) {
                        *slot += w * r;
                    }
                }
                let mut best = 0usize;
                let mut best_c = f32::INFINITY;
                for (zi, &v) in cost.iter().enumerate() {
                    if v < best_c {
                        best_c = v;
                        best = zi;
                    }
                }
                centers[c * m + mi] = best as u8;
            }
        }
    }

    // Final assignment against the final centers.
    let (assignments, objective) = assign_all(codes, m, &centers, tables);
    objectives.push(objective);

    Ok(PqKmeansResult {
        centers,
        assignments,
        objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pq::Codebook;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_codebook(dim: usize, m: usize, z: usize, seed: u64) -> Codebook {
        let mut rng = StdRng::seed_from_u64(seed);
        let codewords = (0..z * dim).map(|_| rng.gen::<f32>() * 2.0 - 1.0).collect();
        Codebook::from_parts(dim, m, z, codewords).unwrap()
    }

    fn random_codes(n: usize, m: usize, z: u8, seed: u64) -> Vec<u8> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n * m).map(|_| rng.gen_range(0..z)).collect()
    }

    #[test]
    fn distinct_repeated_values_recover_exact_centers() {
        let cb = random_codebook(8, 4, 16, 3);
        let st = cb.symmetric_tables();
        let values: Vec<[u8; 4]> = vec![[0, 1, 2, 3], [5, 5, 5, 5], [15, 0, 7, 9]];
        let mut codes = Vec::new();
        for rep in 0..20 {
            let v = values[rep % 3];
            codes.extend_from_slice(&v);
        }
        let out = pq_kmeans(&codes, 4, 3, 10, 11, &st).unwrap();
        assert_eq!(*out.objectives.last().unwrap(), 0.0);
        let mut got: Vec<Vec<u8>> = out.centers.chunks_exact(4).map(|c| c.to_vec()).collect();
        got.sort();
        let mut expect: Vec<Vec<u8>> = values.iter().map(|v| v.to_vec()).collect();
        expect.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn single_cluster_center_minimizes_each_subspace() {
        let cb = random_codebook(8, 2, 8, 5);
        let st = cb.symmetric_tables();
        let codes = random_codes(60, 2, 8, 17);
        let out = pq_kmeans(&codes, 2, 1, 10, 23, &st).unwrap();
        for mi in 0..2 {
            let chosen = out.centers[mi] as usize;
            let total = |z: usize| -> f64 {
                codes
                    .chunks_exact(2)
                    .map(|c| st.entry(mi, z, c[mi] as usize) as f64)
                    .sum()
            };
            let chosen_cost = total(chosen);
            for z in 0..8 {
                assert!(
                    chosen_cost <= total(z) + 1e-9,
                    "subspace {mi}: symbol {chosen} cost {chosen_cost} vs {z} cost {}",
                    total(z)
                );
            }
        }
    }

    #[test]
    fn beats_random_center_baseline() {
        let cb = random_codebook(16, 4, 16, 7);
        let st = cb.symmetric_tables();
        let codes = random_codes(500, 4, 16, 29);
        let out = pq_kmeans(&codes, 4, 8, 10, 31, &st).unwrap();
        let final_obj = *out.objectives.last().unwrap();

        let mut rng = StdRng::seed_from_u64(97);
        let mut baseline_centers = Vec::new();
        for _ in 0..8 {
            let i = rng.gen_range(0..500);
            baseline_centers.extend_from_slice(&codes[i * 4..(i + 1) * 4]);
        }
        let (_, baseline_obj) = assign_all(&codes, 4, &baseline_centers, &st);
        assert!(
            final_obj <= baseline_obj,
            "kmeans {final_obj} vs random baseline {baseline_obj}"
        );
    }

    #[test]
    fn objective_is_non_increasing() {
        let cb = random_codebook(8, 4, 16, 9);
        let st = cb.symmetric_tables();
        for seed in 0..5 {
            let codes = random_codes(300, 4, 16, 1000 + seed);
            let out = pq_kmeans(&codes, 4, 10, 10, seed, &st).unwrap();
            for w in out.objectives.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-6,
                    "objective increased: {:?}",
                    out.objectives
                );
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cb = random_codebook(8, 4, 16, 9);
        let st = cb.symmetric_tables();
        let codes = random_codes(200, 4, 16, 2);
        let a = pq_kmeans(&codes, 4, 12, 10, 77, &st).unwrap();
        let b = pq_kmeans(&codes, 4, 12, 10, 77, &st).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.assignments, b.assignments);
    }

    #[test]
    fn rejects_more_clusters_than_codes() {
        let cb = random_codebook(8, 4, 16, 9);
        let st = cb.symmetric_tables();
        let codes = random_codes(5, 4, 16, 2);
        assert!(pq_kmeans(&codes, 4, 6, 10, 0, &st).is_err());
    }

    #[test]
    fn assignments_are_sdc_argmin() {
        let cb = random_codebook(8, 4, 16, 9);
        let st = cb.symmetric_tables();
        let codes = random_codes(200, 4, 16, 55);
        let out = pq_kmeans(&codes, 4, 7, 10, 3, &st).unwrap();
        for (i, code) in codes.chunks_exact(4).enumerate() {
            let expect = assign_one(code, &out.centers, 4, &st);
            assert_eq!(out.assignments[i] as usize, expect, "code {i}");
        }
    }
}
