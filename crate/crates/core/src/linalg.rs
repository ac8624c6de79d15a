//! Small dense linear-algebra helpers shared by the subspace, kernel and
//! embedding code. Symmetric eigendecomposition is delegated to nalgebra;
//! everything here adds the deterministic ordering and sign conventions the
//! rest of the crate relies on.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending
/// order, eigenvectors as columns with the deterministic sign convention
/// (the largest-magnitude entry of each column is positive; ties go to the
/// lowest index).
pub fn symmetric_eigen_desc(m: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Input(format!(
            "symmetric eigendecomposition needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }

    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = dm.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        for row in 0..n {
            vectors[[row, col]] = eig.eigenvectors[(row, idx)];
        }
    }
    fix_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// Flip columns so the largest-magnitude entry of each is positive.
/// Keeps eigenbases and projectors reproducible across platforms.
pub fn fix_column_signs(m: &mut Array2<f64>) {
    for mut col in m.columns_mut() {
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Orthonormalize columns in order (modified Gram-Schmidt). Errors if a
/// column is linearly dependent on its predecessors.
pub fn orthonormalize_columns(m: &Array2<f64>) -> Result<Array2<f64>> {
    let mut q = m.clone();
    let cols = q.ncols();
    for j in 0..cols {
        for k in 0..j {
            let proj = q.column(k).dot(&q.column(j));
            let qk = q.column(k).to_owned();
            let mut cj = q.column_mut(j);
            cj.zip_mut_with(&qk, |c, &b| *c -= proj * b);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm <= 1e-10 {
            return Err(Error::Degenerate(format!(
                "column {j} is linearly dependent; cannot orthonormalize"
            )));
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}

/// Frobenius norm.
pub fn fro_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared Euclidean distance between two rows.
pub fn sq_dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
