//! Product quantization: codebook training, encoding, and the asymmetric /
//! symmetric distance computations over codes.
//!
//! A `D`-dimensional vector is split into `M` sub-vectors of `D/M` entries.
//! Each sub-vector is replaced by the index of its nearest codeword among
//! the `Z` codewords trained for that subspace, so a vector compresses to
//! `M` bytes (codeword indices are 0-based and `Z` is capped at 256).
//!
//! Distances against codes never decompress anything: a query is turned
//! into an `M x Z` lookup table once, after which the distance to any code
//! is `M` table fetches (asymmetric distance). Distances between two codes
//! go through precomputed codeword-pair tables (symmetric distance).

use crate::error::{Result, RiiError};
use crate::kmeans;

/// Largest codebook size representable by single-byte symbols.
pub const MAX_CODEWORDS: usize = 256;

/// Default number of Lloyd iterations for codebook training.
pub const DEFAULT_TRAIN_ITERS: usize = 20;

/// Per-subspace codeword tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    num_subspaces: usize,
    num_codewords: usize,
    /// Flat `M * Z * (D/M)` array; codeword `(m, z)` starts at
    /// `(m * Z + z) * sub_dim`.
    codewords: Vec<f32>,
}

/// A product-quantized vector: one symbol per subspace, each `< Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqCode {
    symbols: Vec<u8>,
}

impl PqCode {
    pub fn new(symbols: Vec<u8>) -> Self {
        PqCode { symbols }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Query-specific `M x Z` table of squared distances to every codeword.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    num_subspaces: usize,
    num_codewords: usize,
    entries: Vec<f32>,
}

impl DistanceTable {
    pub fn entry(&self, m: usize, z: usize) -> f32 {
        self.entries[m * self.num_codewords + z]
    }

    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    pub fn num_codewords(&self) -> usize {
        self.num_codewords
    }

    /// Asymmetric distance: sum of the table entries selected by `code`.
    /// Equals the squared distance between the query and the code's
    /// reconstruction, up to float summation error.
    #[inline]
    pub fn adc(&self, code: &[u8]) -> f32 {
        debug_assert_eq!(code.len(), self.num_subspaces);
        let z = self.num_codewords;
        let mut acc = 0.0f32;
        for (m, &s) in code.iter().enumerate() {
            acc += self.entries[m * z + s as usize];
        }
        acc
    }
}

/// Per-subspace `Z x Z` codeword-pair squared distances.
#[derive(Debug, Clone)]
pub struct SymmetricTables {
    num_subspaces: usize,
    num_codewords: usize,
    tables: Vec<f32>,
}

impl SymmetricTables {
    pub fn entry(&self, m: usize, i: usize, j: usize) -> f32 {
        let z = self.num_codewords;
        self.tables[(m * z + i) * z + j]
    }

    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    pub fn num_codewords(&self) -> usize {
        self.num_codewords
    }

    /// Row `tables[m][i][..]`, used by code clustering.
    #[inline]
    pub(crate) fn row(&self, m: usize, i: usize) -> &[f32] {
        let z = self.num_codewords;
        let start = (m * z + i) * z;
        &self.tables[start..start + z]
    }

    /// Symmetric distance between two codes: the squared distance between
    /// their reconstructions, up to float summation error.
    #[inline]
    pub fn sdc(&self, a: &[u8], b: &[u8]) -> f32 {
        debug_assert_eq!(a.len(), self.num_subspaces);
        debug_assert_eq!(b.len(), self.num_subspaces);
        let z = self.num_codewords;
        let mut acc = 0.0f32;
        for (m, (&i, &j)) in a.iter().zip(b.iter()).enumerate() {
            acc += self.tables[(m * z + i as usize) * z + j as usize];
        }
        acc
    }
}

impl Codebook {
    /// Builds a codebook from raw codeword data, validating the shape
    /// invariants. `codewords` is flat `m * z * (dim / m)`.
    pub fn from_parts(
        dim: usize,
        num_subspaces: usize,
        num_codewords: usize,
        codewords: Vec<f32>,
    ) -> Result<Self> {
        if num_subspaces == 0 || dim == 0 || !dim.is_multiple_of(num_subspaces) {
            return Err(RiiError::input(format!(
                "dimension {dim} must be a positive multiple of the subspace count {num_subspaces}"
            )));
        }
        if num_codewords == 0 || num_codewords > MAX_CODEWORDS {
            return Err(RiiError::input(format!(
                "codewords per subspace must be in 1..={MAX_CODEWORDS}, got {num_codewords}"
            )));
        }
        if codewords.len() != num_subspaces * num_codewords * (dim / num_subspaces) {
            return Err(RiiError::input(format!(
                "codeword table has {} values, expected {}",
                codewords.len(),
                num_subspaces * num_codewords * (dim / num_subspaces)
            )));
        }
        Ok(Codebook {
            dim,
            num_subspaces,
            num_codewords,
            codewords,
        })
    }

    /// Trains per-subspace codebooks with Lloyd k-means (k-means++ seeding,
    /// deterministic for a fixed seed).
    pub fn train(
        training: &[Vec<f32>],
        num_subspaces: usize,
        num_codewords: usize,
        n_iters: usize,
        seed: u64,
    ) -> Result<Self> {
        if training.is_empty() {
            return Err(RiiError::Training("no training vectors".into()));
        }
        let dim = training[0].len();
        if num_subspaces == 0 || dim == 0 || !dim.is_multiple_of(num_subspaces) {
            return Err(RiiError::input(format!(
                "dimension {dim} must be a positive multiple of the subspace count {num_subspaces}"
            )));
        }
        if num_codewords == 0 || num_codewords > MAX_CODEWORDS {
            return Err(RiiError::input(format!(
                "codewords per subspace must be in 1..={MAX_CODEWORDS}, got {num_codewords}"
            )));
        }
        if training.len() < num_codewords {
            return Err(RiiError::Training(format!(
                "need at least {num_codewords} training vectors, got {}",
                training.len()
            )));
        }
        if let Some(bad) = training.iter().find(|v| v.len() != dim) {
            return Err(RiiError::input(format!(
                "training vector has dimension {}, expected {dim}",
                bad.len()
            )));
        }

        let sub_dim = dim / num_subspaces;
        let n = training.len();
        let mut codewords = Vec::with_capacity(num_subspaces * num_codewords * sub_dim);
        let mut sub = vec![0.0f32; n * sub_dim];
        for m in 0..num_subspaces {
            for (i, v) in training.iter().enumerate() {
                sub[i * sub_dim..(i + 1) * sub_dim]
                    .copy_from_slice(&v[m * sub_dim..(m + 1) * sub_dim]);
            }
            let sub_seed = seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let centroids = kmeans::lloyd(&sub, n, sub_dim, num_codewords, n_iters, sub_seed);
            codewords.extend_from_slice(&centroids);
        }

        Ok(Codebook {
            dim,
            num_subspaces,
            num_codewords,
            codewords,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    pub fn num_codewords(&self) -> usize {
        self.num_codewords
    }

    pub fn sub_dim(&self) -> usize {
        self.dim / self.num_subspaces
    }

    pub fn codeword(&self, m: usize, z: usize) -> &[f32] {
        let sub_dim = self.sub_dim();
        let start = (m * self.num_codewords + z) * sub_dim;
        &self.codewords[start..start + sub_dim]
    }

    pub(crate) fn raw_codewords(&self) -> &[f32] {
        &self.codewords
    }

    fn check_dim(&self, x: &[f32]) -> Result<()> {
        if x.len() != self.dim {
            return Err(RiiError::input(format!(
                "vector has dimension {}, codebook expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Encodes a vector: per subspace the nearest codeword index, ties to
    /// the lowest index.
    pub fn encode(&self, x: &[f32]) -> Result<PqCode> {
        self.check_dim(x)?;
        let mut symbols = vec![0u8; self.num_subspaces];
        self.encode_into(x, &mut symbols);
        Ok(PqCode { symbols })
    }

    pub(crate) fn encode_into(&self, x: &[f32], out: &mut [u8]) {
        let sub_dim = self.sub_dim();
        for (m, slot) in out.iter_mut().enumerate() {
            let sub = &x[m * sub_dim..(m + 1) * sub_dim];
            let table = &self.codewords
                [m * self.num_codewords * sub_dim..(m + 1) * self.num_codewords * sub_dim];
            let (best, _) = kmeans::nearest_centroid(table, sub_dim, sub);
            *slot = best as u8;
        }
    }

    /// Reconstructs the vector a code stands for: the concatenation of the
    /// selected codewords.
    pub fn decode(&self, code: &PqCode) -> Result<Vec<f32>> {
        self.decode_symbols(code.symbols())
    }

    pub(crate) fn decode_symbols(&self, symbols: &[u8]) -> Result<Vec<f32>> {
        if symbols.len() != self.num_subspaces {
            return Err(RiiError::input(format!(
                "code has {} symbols, codebook expects {}",
                symbols.len(),
                self.num_subspaces
            )));
        }
        let mut out = Vec::with_capacity(self.dim);
        for (m, &s) in symbols.iter().enumerate() {
            if s as usize >= self.num_codewords {
                return Err(RiiError::input(format!(
                    "symbol {s} out of range for {} codewords",
                    self.num_codewords
                )));
            }
            out.extend_from_slice(self.codeword(m, s as usize));
        }
        Ok(out)
    }

    /// Builds the query's `M x Z` squared-distance lookup table. Costs
    /// `O(D * Z)` arithmetic.
    pub fn distance_table(&self, q: &[f32]) -> Result<DistanceTable> {
        self.check_dim(q)?;
        let sub_dim = self.sub_dim();
        let z = self.num_codewords;
        let mut entries = vec![0.0f32; self.num_subspaces * z];
        for m in 0..self.num_subspaces {
            let sub = &q[m * sub_dim..(m + 1) * sub_dim];
            for zi in 0..z {
                entries[m * z + zi] = kmeans::squared_distance(sub, self.codeword(m, zi));
            }
        }
        Ok(DistanceTable {
            num_subspaces: self.num_subspaces,
            num_codewords: z,
            entries,
        })
    }

    /// Precomputes per-subspace codeword-pair distances for symmetric
    /// distance computation.
    pub fn symmetric_tables(&self) -> SymmetricTables {
        let z = self.num_codewords;
        let mut tables = vec![0.0f32; self.num_subspaces * z * z];
        for m in 0..self.num_subspaces {
            for i in 0..z {
                for j in (i + 1)..z {
                    let d = kmeans::squared_distance(self.codeword(m, i), self.codeword(m, j));
                    tables[(m * z + i) * z + j] = d;
                    tables[(m * z + j) * z + i] = d;
                }
            }
        }
        SymmetricTables {
            num_subspaces: self.num_subspaces,
            num_codewords: z,
            tables,
        }
    }

    /// Total squared reconstruction error of `vectors` under this codebook.
    pub fn quantization_error(&self, vectors: &[Vec<f32>]) -> Result<f64> {
        let mut total = 0.0f64;
        let mut symbols = vec![0u8; self.num_subspaces];
        for v in vectors {
            self.check_dim(v)?;
            self.encode_into(v, &mut symbols);
            let rec = self.decode_symbols(&symbols)?;
            total += kmeans::squared_distance(v, &rec) as f64;
        }
        Ok(total)
    }
}
