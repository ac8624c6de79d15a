//! Explicit RKHS coordinates via the empirical kernel map.
//!
//! Fitting eigendecomposes a PSD training gram G = U L U^T and keeps the
//! top spectrum; training points get coordinates Z = U_d L_d^{1/2} and new
//! points embed as z(x) = L_d^{-1/2} U_d^T k_x, so inner products of
//! embedded points reproduce kernel values up to the dropped eigenvalues.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::linalg;

/// Requested embedding dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedDim {
    /// Keep every eigenvalue above 1e-8 of the largest (numerical rank).
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalKernelMap {
    /// Kept eigenvalues, descending, all above the tolerance.
    pub eigvals: Vec<f64>,
    /// N x d eigenvector block.
    pub eigvecs: Array2<f64>,
    pub dim: usize,
    pub eig_tol: f64,
}

/// Fit the map on a square symmetric PSD gram (clip indefinite kernels
/// before calling).
pub fn fit_empirical_map(
    g_train: &GramMatrix,
    dim: EmbedDim,
    eig_tol: f64,
) -> Result<EmpiricalKernelMap> {
    if !g_train.is_square() {
        return Err(Error::Input(format!(
            "training gram must be square, got {}x{}",
            g_train.nrows(),
            g_train.ncols()
        )));
    }
    let (vals, vecs) = linalg::symmetric_eigen_desc(&g_train.values)?;
    let max_val = vals[0];
    let threshold = match dim {
        EmbedDim::Auto => eig_tol.max(1e-8 * max_val.max(0.0)),
        EmbedDim::Fixed(_) => eig_tol,
    };
    let mut keep = vals.iter().take_while(|&&l| l > threshold).count();
    if let EmbedDim::Fixed(d) = dim {
        if d == 0 {
            return Err(Error::Parameter("embedding dimension must be >= 1".into()));
        }
        keep = keep.min(d);
    }
    if keep == 0 {
        return Err(Error::Degenerate(format!(
            "no eigenvalue above tolerance {threshold} (largest is {max_val})"
        )));
    }
    Ok(EmpiricalKernelMap {
        eigvals: vals[..keep].to_vec(),
        eigvecs: vecs.slice(ndarray::s![.., ..keep]).to_owned(),
        dim: keep,
        eig_tol,
    })
}

impl EmpiricalKernelMap {
    pub fn train_size(&self) -> usize {
        self.eigvecs.nrows()
    }

    /// Coordinates of the training points: Z = U_d L_d^{1/2}.
    pub fn train_coords(&self) -> Array2<f64> {
        let mut z = self.eigvecs.clone();
        for (j, &l) in self.eigvals.iter().enumerate() {
            let s = l.sqrt();
            z.column_mut(j).mapv_inplace(|v| v * s);
        }
        z
    }

    /// Out-of-sample embedding: rows of `g_cross` are kernel evaluations
    /// of test points against the training set.
    pub fn embed_points(&self, g_cross: &GramMatrix) -> Result<Array2<f64>> {
        if g_cross.ncols() != self.train_size() {
            return Err(Error::Input(format!(
                "cross gram has {} columns, map was fit on {} points",
                g_cross.ncols(),
                self.train_size()
            )));
        }
        // z(x) = L^{-1/2} U^T k_x, i.e. G_cross U L^{-1/2} row-wise
        let mut z = g_cross.values.dot(&self.eigvecs);
        for (j, &l) in self.eigvals.iter().enumerate() {
            let s = 1.0 / l.sqrt();
            z.column_mut(j).mapv_inplace(|v| v * s);
        }
        Ok(z)
    }
}
