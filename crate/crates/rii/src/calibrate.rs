//! Calibration of the subset-size threshold that switches queries between
//! the linear scan and the inverted index.
//!
//! Both paths are timed on seeded subsets of geometrically spaced sizes, the
//! crossover size is located per candidate budget by log-linear
//! interpolation, and a line is fitted through the (budget, crossover)
//! points. When timing is unusable (too few sizes to interpolate, or the
//! clock resolves a whole pass to zero), the crossover of the two
//! operation-count models is used instead and the index is flagged
//! accordingly.

use std::time::Instant;

use crate::error::{Result, RiiError};
use crate::index::RiiIndex;
use crate::search::{SubsetIds, Target};

/// Indexes smaller than this always take the linear scan; no calibration
/// runs for them.
const MIN_CALIBRATED_SIZE: usize = 100;

/// Timed passes per measurement cell; the fastest pass is kept.
const TIMED_PASSES: u32 = 3;

/// How the switching threshold is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Time both search paths and fit the crossover. Machine-dependent;
    /// falls back to the cost model when timing is unusable.
    Timed,
    /// Use the operation-count model only. Deterministic across machines.
    Analytic,
}

/// The calibrated threshold and how it was found.
#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub theta: u64,
    /// True when the cost model supplied the value.
    pub analytic: bool,
    /// Crossover subset size fitted for each candidate budget in the grid.
    pub per_budget: Vec<(usize, f64)>,
}

impl RiiIndex {
    /// Calibrates and stores the switching threshold by timing both paths
    /// with the supplied trial queries over the given candidate-budget grid.
    /// The stored value is the fitted line evaluated at the index's default
    /// budget.
    pub fn calibrate_threshold(
        &mut self,
        l_grid: &[usize],
        trial_queries: &[Vec<f32>],
        seed: u64,
    ) -> Result<CalibrationOutcome> {
        self.calibrate_threshold_with_mode(l_grid, trial_queries, seed, CalibrationMode::Timed)
    }

    pub(crate) fn calibrate_threshold_with_mode(
        &mut self,
        l_grid: &[usize],
        trial_queries: &[Vec<f32>],
        seed: u64,
        mode: CalibrationMode,
    ) -> Result<CalibrationOutcome> {
        let n = self.num_vectors();
        if n < MIN_CALIBRATED_SIZE {
            self.theta = n as u64;
            self.analytic_theta = false;
            return Ok(CalibrationOutcome {
                theta: self.theta,
                analytic: false,
                per_budget: Vec::new(),
            });
        }
        if l_grid.is_empty() {
            return Err(RiiError::input("empty candidate-budget grid".to_string()));
        }

        let outcome = match mode {
            CalibrationMode::Analytic => self.analytic_outcome(l_grid),
            CalibrationMode::Timed => match self.timed_outcome(l_grid, trial_queries, seed)? {
                Some(out) => out,
                None => self.analytic_outcome(l_grid),
            },
        };
        self.theta = outcome.theta;
        self.analytic_theta = outcome.analytic;
        Ok(outcome)
    }

    fn clamp_theta(&self, theta: f64) -> u64 {
        let n = self.num_vectors() as f64;
        theta.round().clamp(2.0, (n - 1.0).max(2.0)) as u64
    }

    /// Subset sizes 2^7, 2^9, ... up to the largest power of two not
    /// exceeding the database size.
    fn measurement_sizes(&self) -> Vec<usize> {
        let n = self.num_vectors();
        let max_exp = (n as f64).log2().floor() as u32;
        (7..=max_exp).step_by(2).map(|e| 1usize << e).collect()
    }

    fn timed_outcome(
        &self,
        l_grid: &[usize],
        trial_queries: &[Vec<f32>],
        seed: u64,
    ) -> Result<Option<CalibrationOutcome>> {
        let n = self.num_vectors();
        let sizes = self.measurement_sizes();
        if sizes.len() < 2 || trial_queries.is_empty() || self.num_centers() == 0 {
            return Ok(None);
        }

        let mut linear_time = Vec::with_capacity(sizes.len());
        let mut subsets = Vec::with_capacity(sizes.len());
        for (si, &size) in sizes.iter().enumerate() {
            let subset = SubsetIds::sample(n, size, seed ^ ((si as u64 + 1) << 32))?;
            let t_lin = self.time_path(trial_queries, |q| {
                self.pq_linear_scan(q, 1, &subset).map(|_| ())
            })?;
            linear_time.push(t_lin);
            subsets.push(subset);
        }
        if linear_time.iter().any(|&t| t <= 0.0) {
            // Clock resolution swallowed a pass; timing is unusable here.
            return Ok(None);
        }

        let mut per_budget = Vec::with_capacity(l_grid.len());
        for &l in l_grid {
            // Subsets no larger than the budget saturate the list selection
            // and both paths score the subset directly; only sizes above
            // the budget discriminate.
            let informative: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] > l).collect();
            if informative.len() < 2 {
                per_budget.push((l, self.analytic_crossover(l)));
                continue;
            }
            let mut sub_sizes = Vec::with_capacity(informative.len());
            let mut diffs = Vec::with_capacity(informative.len());
            for &i in &informative {
                let t_inv = self.time_path(trial_queries, |q| {
                    self.inverted_index_search(q, 1, Target::Subset(&subsets[i]), l)
                        .map(|_| ())
                })?;
                if t_inv <= 0.0 {
                    return Ok(None);
                }
                sub_sizes.push(sizes[i]);
                diffs.push(t_inv - linear_time[i]);
            }
            per_budget.push((l, interpolate_crossover(&sub_sizes, &diffs, n)));
        }

        let theta = self.clamp_theta(fit_at(&per_budget, self.default_l() as f64));
        Ok(Some(CalibrationOutcome {
            theta,
            analytic: false,
            per_budget,
        }))
    }

    /// Fastest-of-`TIMED_PASSES` mean wall-clock seconds per query, after
    /// one warmup pass.
    fn time_path<F>(&self, queries: &[Vec<f32>], mut run: F) -> Result<f64>
    where
        F: FnMut(&[f32]) -> Result<()>,
    {
        for q in queries {
            run(q)?;
        }
        let mut best = f64::INFINITY;
        for _ in 0..TIMED_PASSES {
            let start = Instant::now();
            for q in queries {
                run(q)?;
            }
            let pass = start.elapsed().as_secs_f64() / queries.len() as f64;
            best = best.min(pass);
        }
        Ok(best)
    }

    fn analytic_outcome(&self, l_grid: &[usize]) -> CalibrationOutcome {
        let per_budget: Vec<(usize, f64)> = l_grid
            .iter()
            .map(|&l| (l, self.analytic_crossover(l)))
            .collect();
        let theta = self.clamp_theta(fit_at(&per_budget, self.default_l() as f64));
        CalibrationOutcome {
            theta,
            analytic: true,
            per_budget,
        }
    }

    /// Operation-count models of the two paths with unit constants, solved
    /// for the subset size where they meet.
    fn analytic_crossover(&self, l: usize) -> f64 {
        let n = self.num_vectors() as f64;
        let k = self.num_centers().max(1) as f64;
        let m = self.codebook().num_subspaces() as f64;
        let d = self.dim() as f64;
        let z = self.codebook().num_codewords() as f64;
        let l = l as f64;

        let linear_cost = |s: f64| d * z + m * s;
        let inverted_cost = |s: f64| {
            if s <= l {
                // Saturated list selection: the subset is scored directly,
                // leaving only the budget bookkeeping on top of the scan.
                return linear_cost(s) + k;
            }
            let lists = (k * l / s).min(k).max(2.0);
            let traversed = (l * n / s).min(n);
            d * z + k * m + k * lists.log2() + traversed * s.max(2.0).log2() + l * m
        };

        let mut sizes = Vec::new();
        let mut s = 2.0f64;
        while s < n {
            sizes.push(s);
            s *= 2.0;
        }
        sizes.push(n);
        let diffs: Vec<f64> = sizes
            .iter()
            .map(|&s| inverted_cost(s) - linear_cost(s))
            .collect();
        let int_sizes: Vec<usize> = sizes.iter().map(|&s| s as usize).collect();
        interpolate_crossover(&int_sizes, &diffs, self.num_vectors())
    }
}

/// Locates where `diff` (inverted minus linear) crosses zero, interpolating
/// between grid sizes on the log2 axis. `diff` is positive where the linear
/// scan wins.
fn interpolate_crossover(sizes: &[usize], diffs: &[f64], n: usize) -> f64 {
    if diffs.first().is_some_and(|&d| d <= 0.0) {
        // Inverted wins even at the smallest measured size.
        return sizes[0] as f64;
    }
    for i in 0..diffs.len().saturating_sub(1) {
        let (d0, d1) = (diffs[i], diffs[i + 1]);
        if d0 > 0.0 && d1 <= 0.0 {
            let x0 = (sizes[i] as f64).log2();
            let x1 = (sizes[i + 1] as f64).log2();
            let t = d0 / (d0 - d1);
            return (x0 + t * (x1 - x0)).exp2();
        }
    }
    // Linear wins everywhere on the grid.
    n as f64
}

/// Least-squares line through the (budget, crossover) points, evaluated at
/// `x`.
fn fit_at(points: &[(usize, f64)], x: f64) -> f64 {
    if points.len() == 1 {
        return points[0].1;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(px, py) in points {
        let dx = px as f64 - mean_x;
        cov += dx * (py - mean_y);
        var += dx * dx;
    }
    if var == 0.0 {
        return mean_y;
    }
    let a = cov / var;
    let b = mean_y - a * mean_x;
    a * x + b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::BuildOptions;
    use crate::pq::Codebook;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f32>() * 2.0 - 1.0).collect())
            .collect()
    }

    #[test]
    fn tiny_index_always_scans_linearly() {
        let data = random_vectors(60, 8, 1);
        let cb = Codebook::train(&data, 4, 16, 10, 1).unwrap();
        let idx = RiiIndex::build(cb, &data, 7, 1).unwrap();
        assert_eq!(idx.theta(), 60);
        assert!(!idx.theta_is_analytic());
    }

    #[test]
    fn analytic_theta_is_within_bounds_and_flagged() {
        let data = random_vectors(4000, 8, 2);
        let cb = Codebook::train(&data, 4, 16, 10, 2).unwrap();
        let idx = RiiIndex::build_with(
            cb,
            &data,
            64,
            2,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap();
        assert!(
            idx.theta() >= 2 && idx.theta() < 4000,
            "theta {}",
            idx.theta()
        );
        assert!(idx.theta_is_analytic());
    }

    #[test]
    fn analytic_crossover_grows_with_budget() {
        let data = random_vectors(4000, 8, 3);
        let cb = Codebook::train(&data, 4, 16, 10, 3).unwrap();
        let mut idx = RiiIndex::build_with(
            cb,
            &data,
            64,
            3,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap();
        let out = idx
            .calibrate_threshold_with_mode(&[63, 126, 252, 504], &[], 9, CalibrationMode::Analytic)
            .unwrap();
        for w in out.per_budget.windows(2) {
            assert!(
                w[1].1 >= w[0].1,
                "crossover shrank with budget: {:?}",
                out.per_budget
            );
        }
    }

    #[test]
    fn interpolation_handles_edges() {
        let sizes = [128usize, 512, 2048];
        assert_eq!(
            interpolate_crossover(&sizes, &[-1.0, -2.0, -3.0], 5000),
            128.0
        );
        assert_eq!(
            interpolate_crossover(&sizes, &[3.0, 2.0, 1.0], 5000),
            5000.0
        );
        let x = interpolate_crossover(&sizes, &[1.0, -1.0, -2.0], 5000);
        assert!(x > 128.0 && x < 512.0, "interpolated {x}");
    }

    #[test]
    fn line_fit_evaluates_exactly_on_collinear_points() {
        let points = vec![(10usize, 100.0), (20, 200.0), (30, 300.0)];
        assert!((fit_at(&points, 25.0) - 250.0).abs() < 1e-9);
        assert_eq!(fit_at(&points[..1], 99.0), 100.0);
    }
}
