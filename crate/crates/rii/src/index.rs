//! The reconfigurable inverted index: a flat array of PQ-codes, coarse
//! centers that are themselves PQ-codes, and posting lists mapping each
//! center to the identifiers assigned to it.
//!
//! Codes are stored contiguously, so any code is addressable by identifier
//! in constant time regardless of which posting list it belongs to. That is
//! what makes both the linear-scan search path and cheap re-clustering
//! possible.

use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::SeedableRng;

use crate::calibrate::CalibrationMode;
use crate::error::{Result, RiiError};
use crate::opq::Rotation;
use crate::pq::{Codebook, SymmetricTables};
use crate::pq_kmeans::{assign_all, assign_one, pq_kmeans, DEFAULT_PQ_KMEANS_ITERS};

/// The `K = ceil(sqrt(N))` convention for picking the number of coarse
/// centers.
pub fn default_num_centers(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

/// Construction options for [`RiiIndex::build_with`].
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Rotation applied to every stored vector and every query.
    pub rotation: Option<Rotation>,
    /// How the linear-scan/inverted-index switching threshold is obtained.
    pub calibration: CalibrationMode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            rotation: None,
            calibration: CalibrationMode::Timed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiiIndex {
    pub(crate) codebook: Codebook,
    pub(crate) rotation: Option<Rotation>,
    /// `N * M` bytes, code `n` at `n * M`.
    pub(crate) codes: Vec<u8>,
    /// `K * M` bytes.
    pub(crate) centers: Vec<u8>,
    /// `K` ascending identifier lists partitioning `0..N`.
    pub(crate) postings: Vec<Vec<u32>>,
    pub(crate) sym_tables: SymmetricTables,
    /// Subset sizes below this use the linear scan.
    pub(crate) theta: u64,
    /// Candidate budget used when the caller does not pass one; the average
    /// posting-list length `ceil(N / K)`.
    pub(crate) default_l: usize,
    /// Whether `theta` came from the cost-model fallback instead of timing.
    pub(crate) analytic_theta: bool,
}

impl RiiIndex {
    /// Encodes `vectors` and clusters them into `k` posting lists. The
    /// switching threshold is calibrated by timing both search paths.
    pub fn build(codebook: Codebook, vectors: &[Vec<f32>], k: usize, seed: u64) -> Result<Self> {
        Self::build_with(codebook, vectors, k, seed, BuildOptions::default())
    }

    pub fn build_with(
        codebook: Codebook,
        vectors: &[Vec<f32>],
        k: usize,
        seed: u64,
        options: BuildOptions,
    ) -> Result<Self> {
        if let Some(rot) = &options.rotation {
            if rot.dim() != codebook.dim() {
                return Err(RiiError::input(format!(
                    "rotation dimension {} does not match codebook dimension {}",
                    rot.dim(),
                    codebook.dim()
                )));
            }
        }
        let sym_tables = codebook.symmetric_tables();
        let mut index = RiiIndex {
            codebook,
            rotation: options.rotation,
            codes: Vec::new(),
            centers: Vec::new(),
            postings: Vec::new(),
            sym_tables,
            theta: 0,
            default_l: 1,
            analytic_theta: false,
        };
        if vectors.is_empty() {
            // Empty index: no centers, every query takes the linear scan.
            return Ok(index);
        }

        let m = index.codebook.num_subspaces();
        index.codes = vec![0u8; vectors.len() * m];
        for (i, v) in vectors.iter().enumerate() {
            let encoded = index.encode_vector(v)?;
            index.codes[i * m..(i + 1) * m].copy_from_slice(&encoded);
        }

        index.recluster(k, seed)?;
        index.recalibrate(seed, options.calibration)?;
        Ok(index)
    }

    /// Rotates (when configured) and encodes one vector.
    fn encode_vector(&self, x: &[f32]) -> Result<Vec<u8>> {
        match &self.rotation {
            Some(rot) => {
                let rx = rot.rotate(x)?;
                Ok(self.codebook.encode(&rx)?.symbols().to_vec())
            }
            None => Ok(self.codebook.encode(x)?.symbols().to_vec()),
        }
    }

    /// Appends one vector. The code lands at the next identifier and the
    /// identifier joins the posting list of its nearest center; the rest of
    /// the structure is untouched.
    pub fn add(&mut self, x: &[f32]) -> Result<u32> {
        let encoded = self.encode_vector(x)?;
        let id = self.num_vectors() as u32;
        self.codes.extend_from_slice(&encoded);
        if !self.centers.is_empty() {
            let m = self.codebook.num_subspaces();
            let c = assign_one(&encoded, &self.centers, m, &self.sym_tables);
            self.postings[c].push(id);
        }
        Ok(id)
    }

    /// Re-clusters the stored codes into `k_new` posting lists and
    /// recalibrates the switching threshold. Deterministic for a fixed seed.
    pub fn reconfigure(&mut self, k_new: usize, seed: u64) -> Result<()> {
        self.reconfigure_with(k_new, seed, CalibrationMode::Timed)
    }

    pub fn reconfigure_with(
        &mut self,
        k_new: usize,
        seed: u64,
        calibration: CalibrationMode,
    ) -> Result<()> {
        self.recluster(k_new, seed)?;
        self.recalibrate(seed, calibration)
    }

    /// Cluster training runs on at most `100 * k` codes sampled uniformly;
    /// assignment always covers every stored code.
    fn recluster(&mut self, k: usize, seed: u64) -> Result<()> {
        let n = self.num_vectors();
        if k == 0 || k > n {
            return Err(RiiError::input(format!(
                "center count {k} must be in 1..={n}"
            )));
        }
        let m = self.codebook.num_subspaces();

        let cap = n.min(100 * k);
        let sampled;
        let training: &[u8] = if cap == n {
            &self.codes
        } else {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut picked = sample(&mut rng, n, cap).into_vec();
            picked.sort_unstable();
            let mut buf = Vec::with_capacity(cap * m);
            for i in picked {
                buf.extend_from_slice(&self.codes[i * m..(i + 1) * m]);
            }
            sampled = buf;
            &sampled
        };

        let clustering = pq_kmeans(
            training,
            m,
            k,
            DEFAULT_PQ_KMEANS_ITERS,
            seed,
            &self.sym_tables,
        )?;
        self.centers = clustering.centers;

        let (assignments, _) = assign_all(&self.codes, m, &self.centers, &self.sym_tables);
        let mut postings: Vec<Vec<u32>> = vec![Vec::new(); k];
        for (i, &a) in assignments.iter().enumerate() {
            postings[a as usize].push(i as u32);
        }
        self.postings = postings;
        self.default_l = n.div_ceil(k);
        Ok(())
    }

    fn recalibrate(&mut self, seed: u64, mode: CalibrationMode) -> Result<()> {
        let queries = self.sample_trial_queries(seed, 3)?;
        let l_grid = [self.default_l.max(1)];
        self.calibrate_threshold_with_mode(&l_grid, &queries, seed, mode)?;
        Ok(())
    }

    /// Trial queries for calibration: reconstructions of sampled codes,
    /// mapped back to the original space when a rotation is configured.
    fn sample_trial_queries(&self, seed: u64, count: usize) -> Result<Vec<Vec<f32>>> {
        let n = self.num_vectors();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut rng = StdRng::seed_from_u64(seed ^ 0x7157_9ED1);
        let picked = sample(&mut rng, n, count.min(n)).into_vec();
        picked
            .into_iter()
            .map(|i| self.reconstruct(i as u32))
            .collect()
    }

    /// Approximate original-space vector stored under `id`.
    pub fn reconstruct(&self, id: u32) -> Result<Vec<f32>> {
        let decoded = self.codebook.decode_symbols(self.code(id)?)?;
        match &self.rotation {
            Some(rot) => Ok(rot.inverse_rotate(&decoded)),
            None => Ok(decoded),
        }
    }

    pub fn num_vectors(&self) -> usize {
        self.codes.len() / self.codebook.num_subspaces()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn num_centers(&self) -> usize {
        self.postings.len()
    }

    pub fn dim(&self) -> usize {
        self.codebook.dim()
    }

    pub fn code(&self, id: u32) -> Result<&[u8]> {
        let m = self.codebook.num_subspaces();
        let start = id as usize * m;
        if start + m > self.codes.len() {
            return Err(RiiError::input(format!(
                "identifier {id} out of range for {} stored codes",
                self.num_vectors()
            )));
        }
        Ok(&self.codes[start..start + m])
    }

    pub fn center(&self, k: usize) -> &[u8] {
        let m = self.codebook.num_subspaces();
        &self.centers[k * m..(k + 1) * m]
    }

    pub fn posting_list(&self, k: usize) -> &[u32] {
        &self.postings[k]
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn rotation(&self) -> Option<&Rotation> {
        self.rotation.as_ref()
    }

    pub fn symmetric_tables(&self) -> &SymmetricTables {
        &self.sym_tables
    }

    /// Subset-size threshold below which queries take the linear scan.
    pub fn theta(&self) -> u64 {
        self.theta
    }

    /// Whether the threshold came from the analytic cost model rather than
    /// timing.
    pub fn theta_is_analytic(&self) -> bool {
        self.analytic_theta
    }

    /// Default candidate budget for the inverted-index path.
    pub fn default_l(&self) -> usize {
        self.default_l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pq_kmeans::assign_one;
    use crate::search::{SubsetIds, Target};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub(crate) fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f32>() * 2.0 - 1.0).collect())
            .collect()
    }

    fn small_index(n: usize, k: usize, seed: u64) -> RiiIndex {
        let data = random_vectors(n, 8, seed);
        let cb = Codebook::train(&data, 4, 16, 10, seed).unwrap();
        RiiIndex::build_with(
            cb,
            &data,
            k,
            seed,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap()
    }

    fn check_partition(idx: &RiiIndex) {
        let mut seen = vec![false; idx.num_vectors()];
        for k in 0..idx.num_centers() {
            let list = idx.posting_list(k);
            for w in list.windows(2) {
                assert!(w[0] < w[1], "posting list {k} not strictly ascending");
            }
            for &id in list {
                assert!(!seen[id as usize], "id {id} in two lists");
                seen[id as usize] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "some id missing from postings");
    }

    fn check_assignments(idx: &RiiIndex) {
        for k in 0..idx.num_centers() {
            for &id in idx.posting_list(k) {
                let code = idx.code(id).unwrap();
                let best = assign_one(
                    code,
                    &idx.centers,
                    idx.codebook.num_subspaces(),
                    &idx.sym_tables,
                );
                assert_eq!(best, k, "id {id} assigned to {k}, nearest is {best}");
            }
        }
    }

    #[test]
    fn single_vector_index() {
        let training = random_vectors(200, 8, 5);
        let cb = Codebook::train(&training, 4, 16, 10, 5).unwrap();
        let idx = RiiIndex::build(cb, &training[..1], 1, 5).unwrap();
        assert_eq!(idx.num_vectors(), 1);
        assert_eq!(idx.posting_list(0), &[0]);
        assert_eq!(idx.center(0), idx.code(0).unwrap());
    }

    #[test]
    fn build_partitions_and_assigns_correctly() {
        let idx = small_index(1000, 31, 9);
        let total: usize = (0..31).map(|k| idx.posting_list(k).len()).sum();
        assert_eq!(total, 1000);
        check_partition(&idx);
        check_assignments(&idx);
    }

    #[test]
    fn add_to_empty_index() {
        let data = random_vectors(300, 8, 12);
        let cb = Codebook::train(&data, 4, 16, 10, 12).unwrap();
        let mut idx = RiiIndex::build(cb, &[], 0, 1).unwrap();
        assert_eq!(idx.num_vectors(), 0);
        assert_eq!(idx.num_centers(), 0);

        let id = idx.add(&data[0]).unwrap();
        assert_eq!(id, 0);
        let s = SubsetIds::new(vec![0]).unwrap();
        let hits = idx.query(&data[0], 1, Target::Subset(&s), None).unwrap();
        assert_eq!(hits[0].id, 0);
    }

    #[test]
    fn added_vector_is_findable_via_singleton_subset() {
        let mut idx = small_index(200, 14, 21);
        let x = random_vectors(1, 8, 99).pop().unwrap();
        let id = idx.add(&x).unwrap();
        assert_eq!(id, 200);
        let s = SubsetIds::new(vec![id]).unwrap();
        let hits = idx.query(&x, 1, Target::Subset(&s), None).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].id, id);
    }

    #[test]
    fn add_applies_the_rotation() {
        let data = random_vectors(300, 8, 91);
        let (rot, cb) = crate::opq::train_rotation_with_iters(&data, 4, 16, 10, 2, 91).unwrap();
        let mut idx = RiiIndex::build_with(
            cb.clone(),
            &data[..200],
            14,
            91,
            BuildOptions {
                rotation: Some(rot.clone()),
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap();
        let x = &data[250];
        let id = idx.add(x).unwrap();
        let expect = cb.encode(&rot.rotate(x).unwrap()).unwrap();
        assert_eq!(idx.code(id).unwrap(), expect.symbols());
    }

    #[test]
    fn reconfigure_rejects_bad_k() {
        let mut idx = small_index(50, 5, 93);
        assert!(idx
            .reconfigure_with(51, 1, CalibrationMode::Analytic)
            .is_err());
        assert!(idx
            .reconfigure_with(0, 1, CalibrationMode::Analytic)
            .is_err());
    }

    #[test]
    fn adds_maintain_partition_and_nearest_assignment() {
        let mut idx = small_index(1000, 31, 33);
        for x in random_vectors(100, 8, 44) {
            idx.add(&x).unwrap();
        }
        assert_eq!(idx.num_vectors(), 1100);
        check_partition(&idx);
        // Appends only guarantee the appended item's own assignment.
        let m = idx.codebook.num_subspaces();
        for id in 1000u32..1100 {
            let code = idx.code(id).unwrap();
            let best = assign_one(code, &idx.centers, m, &idx.sym_tables);
            assert!(idx.posting_list(best).contains(&id));
        }
    }

    #[test]
    fn reconfigure_with_k_equal_n_gives_singletons() {
        // Vectors sitting exactly on distinct codeword combinations so the
        // stored codes are pairwise distinct.
        let data = random_vectors(64, 8, 50);
        let cb = Codebook::train(&data, 2, 16, 15, 50).unwrap();
        let mut points = Vec::new();
        for i in 0..16 {
            for j in 0..16 {
                let mut v = cb.codeword(0, i).to_vec();
                v.extend_from_slice(cb.codeword(1, j));
                points.push(v);
            }
        }
        let mut idx = RiiIndex::build_with(
            cb,
            &points,
            4,
            1,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap();
        idx.reconfigure_with(points.len(), 3, CalibrationMode::Analytic)
            .unwrap();
        for k in 0..idx.num_centers() {
            assert_eq!(idx.posting_list(k).len(), 1);
        }
        check_assignments(&idx);
    }

    #[test]
    fn reconfigure_is_deterministic() {
        let mut a = small_index(500, 10, 3);
        let mut b = a.clone();
        a.reconfigure_with(22, 77, CalibrationMode::Analytic)
            .unwrap();
        b.reconfigure_with(22, 77, CalibrationMode::Analytic)
            .unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.postings, b.postings);
        assert_eq!(a.default_l, b.default_l);
    }

    #[test]
    fn reconfigure_updates_default_l() {
        let mut idx = small_index(500, 10, 3);
        assert_eq!(idx.default_l(), 50);
        idx.reconfigure_with(23, 5, CalibrationMode::Analytic)
            .unwrap();
        assert_eq!(idx.default_l(), 500usize.div_ceil(23));
        check_partition(&idx);
        check_assignments(&idx);
    }

    #[test]
    fn codes_are_linearly_addressable() {
        let data = random_vectors(300, 8, 60);
        let cb = Codebook::train(&data, 4, 16, 10, 60).unwrap();
        // Independent copy of what each identifier's code should be.
        let expected: Vec<Vec<u8>> = data
            .iter()
            .map(|v| cb.encode(v).unwrap().symbols().to_vec())
            .collect();
        let idx = RiiIndex::build_with(
            cb,
            &data,
            17,
            60,
            BuildOptions {
                rotation: None,
                calibration: CalibrationMode::Analytic,
            },
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..50 {
            let id = rng.gen_range(0..300u32);
            assert_eq!(idx.code(id).unwrap(), expected[id as usize].as_slice());
        }
    }

    #[test]
    fn build_rejects_bad_k() {
        let data = random_vectors(50, 8, 70);
        let cb = Codebook::train(&data, 4, 16, 10, 70).unwrap();
        assert!(RiiIndex::build(cb.clone(), &data, 51, 1).is_err());
        assert!(RiiIndex::build(cb, &data, 0, 1).is_err());
    }

    #[test]
    fn add_rejects_dimension_mismatch() {
        let mut idx = small_index(100, 10, 80);
        assert!(idx.add(&[0.0; 7]).is_err());
    }

    #[test]
    fn default_num_centers_is_sqrt() {
        assert_eq!(default_num_centers(1_000_000), 1000);
        assert_eq!(default_num_centers(1000), 32);
        assert_eq!(default_num_centers(1), 1);
    }
}
