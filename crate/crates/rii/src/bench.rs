//! Benchmark harness: synthetic data, exact ground truth, recall, the
//! post-checking baseline for engines without native subset search, and the
//! subset/reconfigure benchmark loops.
//!
//! Latency is wall-clock mean over the query set after three warm-up
//! queries, single-threaded. Indexes built here use the analytic threshold
//! so that recall columns are reproducible from the seed alone.

use std::fmt;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::calibrate::CalibrationMode;
use crate::error::{Result, RiiError};
use crate::index::{default_num_centers, BuildOptions, RiiIndex};
use crate::pq::Codebook;
use crate::search::{Neighbor, SubsetIds, Target};

/// Multiplier for the post-checking retry loop.
pub const DEFAULT_POST_CHECK_GROWTH: usize = 5;

const WARMUP_QUERIES: usize = 3;

/// Passes per timing measurement; the fastest pass is reported.
const TIMING_PASSES: usize = 3;

/// Spread of each synthetic cluster relative to unit-scale centers.
const DEFAULT_CLUSTER_STD: f32 = 0.25;

/// Seeded Gaussian-mixture vectors: `n_clusters` centers drawn from a
/// scaled normal, points scattered around a uniformly chosen center.
pub fn generate_synthetic(n: usize, d: usize, n_clusters: usize, seed: u64) -> Vec<Vec<f32>> {
    generate_synthetic_with_std(n, d, n_clusters, DEFAULT_CLUSTER_STD, seed)
}

pub fn generate_synthetic_with_std(
    n: usize,
    d: usize,
    n_clusters: usize,
    cluster_std: f32,
    seed: u64,
) -> Vec<Vec<f32>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> = (0..n_clusters)
        .map(|_| {
            (0..d)
                .map(|_| rng.sample::<f32, _>(StandardNormal))
                .collect()
        })
        .collect();
    (0..n)
        .map(|_| {
            let c = &centers[rng.gen_range(0..n_clusters)];
            c.iter()
                .map(|&v| v + cluster_std * rng.sample::<f32, _>(StandardNormal))
                .collect()
        })
        .collect()
}

fn squared_distance(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact top-`r` over the whole base, ranked by squared distance with ties
/// to the lower id.
pub fn exact_top_r(base: &[Vec<f32>], q: &[f32], r: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = base
        .iter()
        .enumerate()
        .map(|(id, v)| Neighbor {
            id: id as u32,
            distance: squared_distance(q, v),
        })
        .collect();
    let r = r.min(all.len());
    if r < all.len() {
        all.select_nth_unstable_by(r, |a, b| {
            a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id))
        });
        all.truncate(r);
    }
    all.sort_unstable_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
    all
}

/// Exact top-`r` restricted to the subset members.
pub fn exact_top_r_subset(
    base: &[Vec<f32>],
    q: &[f32],
    r: usize,
    subset: &SubsetIds,
) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = subset
        .ids()
        .iter()
        .map(|&id| Neighbor {
            id,
            distance: squared_distance(q, &base[id as usize]),
        })
        .collect();
    all.sort_unstable_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
    all.truncate(r.min(all.len()));
    all
}

/// Exact top-`r` identifier lists for every query.
pub fn ground_truth(base: &[Vec<f32>], queries: &[Vec<f32>], r: usize) -> Vec<Vec<u32>> {
    queries
        .iter()
        .map(|q| exact_top_r(base, q, r).into_iter().map(|h| h.id).collect())
        .collect()
}

/// Fraction of queries whose true nearest neighbor (`truth[q][0]`) appears
/// in the first `r` returned ids.
pub fn recall_at_r(results: &[Vec<u32>], truth: &[Vec<u32>], r: usize) -> f64 {
    assert_eq!(results.len(), truth.len(), "query count mismatch");
    if results.is_empty() {
        return 0.0;
    }
    let hits = results
        .iter()
        .zip(truth)
        .filter(|(res, tru)| {
            tru.first()
                .is_some_and(|t| res.iter().take(r).any(|id| id == t))
        })
        .count();
    hits as f64 / results.len() as f64
}

/// Subset search through an engine that only supports whole-database top-r
/// queries: ask for a growing prefix of the ranking, keep the subset
/// members, and stop once `r` are found or the engine has nothing more to
/// return. Results keep the engine's rank order.
pub fn post_check_search<F>(
    mut engine: F,
    q: &[f32],
    subset: &SubsetIds,
    r: usize,
    growth: usize,
) -> Vec<Neighbor>
where
    F: FnMut(&[f32], usize) -> Vec<Neighbor>,
{
    assert!(growth >= 2, "growth multiplier must be at least 2");
    let mut found = Vec::new();
    if r == 0 || subset.is_empty() {
        return found;
    }
    let mut request = r;
    let mut checked = 0usize;
    loop {
        let ranked = engine(q, request);
        for hit in ranked.iter().skip(checked) {
            if subset.contains(hit.id) {
                found.push(*hit);
                if found.len() == r {
                    return found;
                }
            }
        }
        if ranked.len() < request {
            // Engine exhausted; return what was found.
            return found;
        }
        checked = ranked.len();
        request = request.saturating_mul(growth);
    }
}

/// Mean wall-clock milliseconds per query, after warm-up; the fastest of
/// three passes over the query set is reported.
pub fn time_per_query<F: FnMut(&[f32])>(queries: &[Vec<f32>], mut f: F) -> f64 {
    assert!(!queries.is_empty());
    for q in queries.iter().cycle().take(WARMUP_QUERIES) {
        f(q);
    }
    let mut best = f64::INFINITY;
    for _ in 0..TIMING_PASSES {
        let start = Instant::now();
        for q in queries {
            f(q);
        }
        best = best.min(start.elapsed().as_secs_f64() * 1e3 / queries.len() as f64);
    }
    best
}

/// One benchmark configuration's measurements.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: String,
    pub k: usize,
    pub m: usize,
    pub l: Option<usize>,
    pub r: usize,
    pub subset_size: usize,
    /// Queries measured per cell.
    pub queries: usize,
    pub mean_latency_ms: f64,
    pub recall: Option<f64>,
    pub index_bytes: u64,
    pub seed: u64,
    pub dataset: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,k,m,l,r,subset_size,queries,mean_latency_ms,recall,index_bytes,seed,dataset\n",
        );
        for row in &self.rows {
            let l = row.l.map(|v| v.to_string()).unwrap_or_default();
            let recall = row.recall.map(|v| format!("{v:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{},{},{},{}\n",
                row.method,
                row.k,
                row.m,
                l,
                row.r,
                row.subset_size,
                row.queries,
                row.mean_latency_ms,
                recall,
                row.index_bytes,
                row.seed,
                row.dataset
            ));
        }
        out
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

/// Runs the subset-search benchmark: for every `(subset size, r)` cell a
/// fresh seeded subset is drawn and both the native subset query and the
/// post-checking baseline over an exact scan are timed against it.
///
/// Every returned identifier is audited for subset membership.
pub fn bench_subset(
    idx: &RiiIndex,
    base: &[Vec<f32>],
    queries: &[Vec<f32>],
    subset_sizes: &[usize],
    r_list: &[usize],
    seed: u64,
    dataset: &str,
) -> Result<BenchReport> {
    if base.len() != idx.num_vectors() {
        return Err(RiiError::input(format!(
            "base has {} vectors, index stores {}",
            base.len(),
            idx.num_vectors()
        )));
    }
    let n = idx.num_vectors();
    let index_bytes = idx.serialized_len();
    let mut report = BenchReport::default();

    for (cell, (&size, &r)) in subset_sizes
        .iter()
        .flat_map(|s| r_list.iter().map(move |r| (s, r)))
        .enumerate()
    {
        let subset = SubsetIds::sample(n, size, seed.wrapping_add(cell as u64))?;

        let mut rii_results: Vec<Vec<u32>> = Vec::with_capacity(queries.len());
        for q in queries {
            let hits = idx.query(q, r, Target::Subset(&subset), None)?;
            rii_results.push(hits.iter().map(|h| h.id).collect());
        }
        for ids in &rii_results {
            for &id in ids {
                if !subset.contains(id) {
                    return Err(RiiError::input(format!(
                        "containment audit failed: id {id} not in subset of size {size}"
                    )));
                }
            }
        }
        let rii_ms = time_per_query(queries, |q| {
            idx.query(q, r, Target::Subset(&subset), None)
                .expect("query failed during benchmark");
        });

        let mut pc_results: Vec<Vec<u32>> = Vec::with_capacity(queries.len());
        for q in queries {
            let hits = post_check_search(
                |q, req| exact_top_r(base, q, req),
                q,
                &subset,
                r,
                DEFAULT_POST_CHECK_GROWTH,
            );
            pc_results.push(hits.iter().map(|h| h.id).collect());
        }
        let pc_ms = time_per_query(queries, |q| {
            post_check_search(
                |q, req| exact_top_r(base, q, req),
                q,
                &subset,
                r,
                DEFAULT_POST_CHECK_GROWTH,
            );
        });

        let truth: Vec<Vec<u32>> = queries
            .iter()
            .map(|q| {
                exact_top_r_subset(base, q, 1, &subset)
                    .into_iter()
                    .map(|h| h.id)
                    .collect()
            })
            .collect();

        report.rows.push(BenchRow {
            method: "rii".into(),
            k: idx.num_centers(),
            m: idx.codebook().num_subspaces(),
            l: Some(idx.default_l()),
            r,
            subset_size: size,
            queries: queries.len(),
            mean_latency_ms: rii_ms,
            recall: Some(recall_at_r(&rii_results, &truth, r)),
            index_bytes,
            seed,
            dataset: dataset.into(),
        });
        report.rows.push(BenchRow {
            method: "exact+postcheck".into(),
            k: idx.num_centers(),
            m: idx.codebook().num_subspaces(),
            l: None,
            r,
            subset_size: size,
            queries: queries.len(),
            mean_latency_ms: pc_ms,
            recall: Some(recall_at_r(&pc_results, &truth, r)),
            index_bytes,
            seed,
            dataset: dataset.into(),
        });
    }
    Ok(report)
}

/// Recall/latency sweep over candidate budgets for whole-database queries.
pub fn bench_recall(
    idx: &RiiIndex,
    queries: &[Vec<f32>],
    truth: &[Vec<u32>],
    l_grid: &[usize],
    r: usize,
    seed: u64,
    dataset: &str,
) -> Result<BenchReport> {
    if queries.len() != truth.len() {
        return Err(RiiError::input(format!(
            "{} queries but {} ground-truth rows",
            queries.len(),
            truth.len()
        )));
    }
    let mut report = BenchReport::default();
    for &l in l_grid {
        let mut results: Vec<Vec<u32>> = Vec::with_capacity(queries.len());
        for q in queries {
            let hits = idx.query(q, r, Target::All, Some(l))?;
            results.push(hits.iter().map(|h| h.id).collect());
        }
        let ms = time_per_query(queries, |q| {
            idx.query(q, r, Target::All, Some(l))
                .expect("query failed during benchmark");
        });
        report.rows.push(BenchRow {
            method: "rii".into(),
            k: idx.num_centers(),
            m: idx.codebook().num_subspaces(),
            l: Some(l),
            r,
            subset_size: idx.num_vectors(),
            queries: queries.len(),
            mean_latency_ms: ms,
            recall: Some(recall_at_r(&results, truth, r)),
            index_bytes: idx.serialized_len(),
            seed,
            dataset: dataset.into(),
        });
    }
    Ok(report)
}

/// How the reconfigure benchmark picks the number of coarse centers.
#[derive(Debug, Clone, Copy)]
pub enum KRule {
    /// `ceil(sqrt(N))` for the current database size.
    SqrtOfN,
    Fixed(usize),
}

impl KRule {
    fn apply(&self, n: usize) -> usize {
        match *self {
            KRule::SqrtOfN => default_num_centers(n),
            KRule::Fixed(k) => k,
        }
    }
}

/// Builds a synthetic index, grows it by each factor through appends, and
/// measures query latency before and after re-clustering for the new size.
/// Both measurements use the `L = ceil(N / K)` budget for their respective
/// `K`. A `reconfigure` row records the re-clustering wall-clock time.
pub fn bench_reconfigure(
    initial_n: usize,
    d: usize,
    m: usize,
    growth_factors: &[usize],
    k_rule: KRule,
    seed: u64,
    dataset: &str,
) -> Result<BenchReport> {
    let max_factor = growth_factors.iter().copied().max().unwrap_or(1).max(1);
    let total = initial_n * max_factor;
    // Queries come from the same mixture as the base so recall is
    // meaningful.
    let mut base = generate_synthetic(total + 16, d, 64, seed);
    let queries = base.split_off(total);
    let codebook = Codebook::train(
        &base[..initial_n.min(50_000)],
        m,
        crate::pq::MAX_CODEWORDS.min(256),
        crate::pq::DEFAULT_TRAIN_ITERS,
        seed,
    )?;

    let mut report = BenchReport::default();
    for &factor in growth_factors {
        let factor = factor.max(1);
        let n_new = initial_n * factor;
        let k0 = k_rule.apply(initial_n);
        let mut idx = RiiIndex::build_with(
            codebook.clone(),
            &base[..initial_n],
            k0,
            seed,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )?;
        for v in &base[initial_n..n_new] {
            idx.add(v)?;
        }

        let truth = ground_truth(&base[..n_new], &queries, 1);
        let r = 1;

        let l_before = n_new.div_ceil(k0);
        let mut before_results: Vec<Vec<u32>> = Vec::with_capacity(queries.len());
        for q in &queries {
            let hits = idx.query(q, r, Target::All, Some(l_before))?;
            before_results.push(hits.iter().map(|h| h.id).collect());
        }
        let before_ms = time_per_query(&queries, |q| {
            idx.query(q, r, Target::All, Some(l_before))
                .expect("query failed during benchmark");
        });
        report.rows.push(BenchRow {
            method: "pre-reconfigure".into(),
            k: k0,
            m,
            l: Some(l_before),
            r,
            subset_size: n_new,
            queries: queries.len(),
            mean_latency_ms: before_ms,
            recall: Some(recall_at_r(&before_results, &truth, r)),
            index_bytes: idx.serialized_len(),
            seed,
            dataset: dataset.into(),
        });

        let k_new = k_rule.apply(n_new);
        let start = Instant::now();
        idx.reconfigure_with(k_new, seed, CalibrationMode::Analytic)?;
        let reconfigure_ms = start.elapsed().as_secs_f64() * 1e3;
        report.rows.push(BenchRow {
            method: "reconfigure".into(),
            k: k_new,
            m,
            l: None,
            r,
            subset_size: n_new,
            queries: 0,
            mean_latency_ms: reconfigure_ms,
            recall: None,
            index_bytes: idx.serialized_len(),
            seed,
            dataset: dataset.into(),
        });

        let l_after = n_new.div_ceil(k_new);
        let mut after_results: Vec<Vec<u32>> = Vec::with_capacity(queries.len());
        for q in &queries {
            let hits = idx.query(q, r, Target::All, Some(l_after))?;
            after_results.push(hits.iter().map(|h| h.id).collect());
        }
        let after_ms = time_per_query(&queries, |q| {
            idx.query(q, r, Target::All, Some(l_after))
                .expect("query failed during benchmark");
        });
        report.rows.push(BenchRow {
            method: "post-reconfigure".into(),
            k: k_new,
            m,
            l: Some(l_after),
            r,
            subset_size: n_new,
            queries: queries.len(),
            mean_latency_ms: after_ms,
            recall: Some(recall_at_r(&after_results, &truth, r)),
            index_bytes: idx.serialized_len(),
            seed,
            dataset: dataset.into(),
        });
    }
    Ok(report)
}
