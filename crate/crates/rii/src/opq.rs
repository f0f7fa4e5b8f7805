//! Learned rotation applied before encoding (the OPQ variant).
//!
//! Training alternates between quantizing the rotated data and solving the
//! orthogonal Procrustes problem between the original data and the
//! reconstructions. The candidate with the lowest training-set quantization
//! error across iterations is kept, so the result is never worse than plain
//! training with the same seed.

use nalgebra::DMatrix;

use crate::error::{Result, RiiError};
use crate::pq::Codebook;

/// Default number of alternating-minimization iterations.
pub const DEFAULT_OPQ_ITERS: usize = 10;

/// A `D x D` orthonormal matrix applied to vectors before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    dim: usize,
    /// Row-major `dim * dim`.
    matrix: Vec<f32>,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0f32; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Rotation { dim, matrix }
    }

    /// Builds a rotation from a row-major matrix without checking
    /// orthonormality; used by deserialization.
    pub fn from_matrix(dim: usize, matrix: Vec<f32>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(RiiError::input(format!(
                "rotation matrix has {} entries, expected {}",
                matrix.len(),
                dim * dim
            )));
        }
        Ok(Rotation { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    /// Applies the rotation: `matrix * x`. Preserves Euclidean norms.
    pub fn rotate(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.dim {
            return Err(RiiError::input(format!(
                "vector has dimension {}, rotation expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.rotate_unchecked(x))
    }

    pub(crate) fn rotate_unchecked(&self, x: &[f32]) -> Vec<f32> {
        let d = self.dim;
        let mut out = vec![0.0f32; d];
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.matrix[i * d..(i + 1) * d];
            let mut acc = 0.0f32;
            for (r, v) in row.iter().zip(x.iter()) {
                acc += r * v;
            }
            *slot = acc;
        }
        out
    }

    /// Undoes the rotation (`matrix^T * y`; the transpose is the inverse of
    /// an orthonormal matrix).
    pub fn inverse_rotate(&self, y: &[f32]) -> Vec<f32> {
        let d = self.dim;
        let mut out = vec![0.0f32; d];
        for (i, &v) in y.iter().enumerate() {
            let row = &self.matrix[i * d..(i + 1) * d];
            for (slot, r) in out.iter_mut().zip(row.iter()) {
                *slot += r * v;
            }
        }
        out
    }

    /// Max absolute deviation of `R * R^T` from the identity.
    pub fn orthonormality_error(&self) -> f32 {
        let d = self.dim;
        let mut worst = 0.0f32;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0f32;
                for k in 0..d {
                    acc += self.matrix[i * d + k] * self.matrix[j * d + k];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

/// Trains a rotation and codebook jointly.
///
/// With `n_opq_iters == 0` this degenerates to the identity rotation and a
/// plain codebook trained with the same seed and iteration budget.
pub fn train_rotation(
    training: &[Vec<f32>],
    num_subspaces: usize,
    num_codewords: usize,
    n_opq_iters: usize,
    seed: u64,
) -> Result<(Rotation, Codebook)> {
    train_rotation_with_iters(
        training,
        num_subspaces,
        num_codewords,
        crate::pq::DEFAULT_TRAIN_ITERS,
        n_opq_iters,
        seed,
    )
}

/// As [`train_rotation`], with an explicit codebook-training iteration count.
pub fn train_rotation_with_iters(
    training: &[Vec<f32>],
    num_subspaces: usize,
    num_codewords: usize,
    n_train_iters: usize,
    n_opq_iters: usize,
    seed: u64,
) -> Result<(Rotation, Codebook)> {
    let codebook = Codebook::train(training, num_subspaces, num_codewords, n_train_iters, seed)?;
    let dim = codebook.dim();
    let mut rotation = Rotation::identity(dim);
    if n_opq_iters == 0 {
        return Ok((rotation, codebook));
    }

    let mut best_rotation = rotation.clone();
    let mut best_codebook = codebook.clone();
    let mut best_err = training_error(&rotation, &codebook, training)?;

    let mut current = codebook;
    for _ in 0..n_opq_iters {
        // Reconstructions of the rotated data under the current codebook.
        let mut recs: Vec<Vec<f32>> = Vec::with_capacity(training.len());
        for x in training {
            let rx = rotation.rotate_unchecked(x);
            let code = current.encode(&rx)?;
            recs.push(current.decode(&code)?);
        }

        rotation = procrustes_rotation(training, &recs, dim);

        let rotated: Vec<Vec<f32>> = training
            .iter()
            .map(|x| rotation.rotate_unchecked(x))
            .collect();
        current = Codebook::train(&rotated, num_subspaces, num_codewords, n_train_iters, seed)?;

        let err = training_error(&rotation, &current, training)?;
        if err < best_err {
            best_err = err;
            best_rotation = rotation.clone();
            best_codebook = current.clone();
        }
    }

    Ok((best_rotation, best_codebook))
}

fn training_error(rot: &Rotation, cb: &Codebook, training: &[Vec<f32>]) -> Result<f64> {
    let rotated: Vec<Vec<f32>> = training.iter().map(|x| rot.rotate_unchecked(x)).collect();
    cb.quantization_error(&rotated)
}

/// Orthogonal Procrustes: the orthonormal `R` minimizing
/// `sum_i || R x_i - y_i ||^2`, via the SVD of `sum_i x_i y_i^T`.
fn procrustes_rotation(data: &[Vec<f32>], recs: &[Vec<f32>], dim: usize) -> Rotation {
    let mut cross = DMatrix::<f64>::zeros(dim, dim);
    for (x, y) in data.iter().zip(recs.iter()) {
        for (a, &xa) in x.iter().enumerate() {
            for (b, &yb) in y.iter().enumerate() {
                cross[(a, b)] += xa as f64 * yb as f64;
            }
        }
    }
    let svd = cross.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    // maximize tr(R * cross) => R = V U^T
    let r = v_t.transpose() * u.transpose();
    let mut matrix = vec![0.0f32; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            matrix[i * dim + j] = r[(i, j)] as f32;
        }
    }
    Rotation { dim, matrix }
}
