//! Linear subspace extractors: PCA (eigenfaces) and PCA+LDA
//! (fisherfaces). Both produce projectors with orthonormal columns and a
//! deterministic sign convention, so fitted models are reproducible.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureTag};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorKind {
    Pca,
    Lda,
}

/// A fitted linear projection x -> (x - mean) B with orthonormal B.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceProjector {
    pub mean: Array1<f64>,
    /// D x d, orthonormal columns.
    pub basis: Array2<f64>,
    pub kind: ProjectorKind,
    /// Descending spectrum associated with the columns (PCA variances, or
    /// discriminability scores for LDA).
    pub eigenvalues: Vec<f64>,
}

impl SubspaceProjector {
    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Project rows into the subspace.
    pub fn project(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.basis.nrows() {
            return Err(Error::Input(format!(
                "projector expects dimension {}, got {}",
                self.basis.nrows(),
                rows.ncols()
            )));
        }
        let centered = rows - &self.mean.view().insert_axis(Axis(0));
        Ok(centered.dot(&self.basis))
    }

    pub fn project_set(&self, fs: &FeatureSet, tag: FeatureTag) -> Result<FeatureSet> {
        FeatureSet::new(self.project(&fs.vectors)?, fs.labels.clone(), tag)
    }
}

/// PCA on raw-pixel rows: top-`dim` principal components of the
/// mean-centered data, descending eigenvalue order.
///
/// When D > N the N x N snapshot matrix is decomposed instead of the D x D
/// covariance, which is what makes pixel-level training sets tractable.
pub fn fit_eigenfaces(train: &FeatureSet, dim: usize) -> Result<SubspaceProjector> {
    let x = &train.vectors;
    let (n, d) = (x.nrows(), x.ncols());
    if dim == 0 || dim > usize::min(n.saturating_sub(1), d) {
        return Err(Error::Parameter(format!(
            "pca dim {dim} out of range (must be 1..=min(N-1, D) = {})",
            usize::min(n.saturating_sub(1), d)
        )));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty rows");
    let centered = x - &mean.view().insert_axis(Axis(0));
    let denom = (n - 1) as f64;

    let total_var: f64 = centered.iter().map(|v| v * v).sum::<f64>() / denom;
    if total_var <= 1e-12 {
        return Err(Error::Degenerate("pca on zero-variance data".into()));
    }

    let (eigvals, basis) = if d <= n {
        let cov = centered.t().dot(&centered) / denom;
        let (vals, vecs) = linalg::symmetric_eigen_desc(&cov)?;
        let kept = vecs.slice(ndarray::s![.., ..dim]).to_owned();
        (vals[..dim].to_vec(), kept)
    } else {
        // snapshot method: eigenvectors of the N x N inner-product matrix
        // lift to input space via u = X^T v / ||X^T v||
        let small = centered.dot(&centered.t()) / denom;
        let (vals, vecs) = linalg::symmetric_eigen_desc(&small)?;
        let max_val = vals[0].max(0.0);
        let mut basis = Array2::<f64>::zeros((d, dim));
        for j in 0..dim {
            if vals[j] <= 1e-12 * max_val.max(1.0) {
                return Err(Error::Degenerate(format!(
                    "requested pca dim {dim} exceeds the numerical rank of the data"
                )));
            }
            let u = centered.t().dot(&vecs.column(j));
            let norm = u.dot(&u).sqrt();
            let u = u / norm;
            basis.column_mut(j).assign(&u);
        }
        linalg::fix_column_signs(&mut basis);
        (vals[..dim].to_vec(), basis)
    };

    Ok(SubspaceProjector {
        mean,
        basis,
        kind: ProjectorKind::Pca,
        eigenvalues: eigvals,
    })
}

/// Fisherfaces: PCA to at most N-C dimensions, then LDA in the reduced
/// space, maximizing between-class over within-class scatter. The
/// within-class scatter carries a small ridge so it is always invertible,
/// and the final columns are re-orthonormalized.
pub fn fit_fisherfaces(train: &FeatureSet, dim: usize) -> Result<SubspaceProjector> {
    let class_ids = train.class_ids();
    let c = class_ids.len();
    if c < 2 {
        return Err(Error::Parameter("fisherfaces needs at least 2 classes".into()));
    }
    if dim == 0 || dim > c - 1 {
        return Err(Error::Parameter(format!(
            "lda dim {dim} out of range (must be 1..=C-1 = {})",
            c - 1
        )));
    }
    let n = train.len();
    let d = train.dim();

    // PCA stage; keep enough dimensions for the discriminant step.
    let pca_dim = usize::max(n.saturating_sub(c), dim).min(usize::min(n - 1, d));
    let pca = fit_eigenfaces(train, pca_dim)?;
    let reduced = pca.project(&train.vectors)?;
    let p = reduced.ncols();

    // scatter matrices in the PCA space
    let overall = reduced.mean_axis(Axis(0)).unwrap();
    let mut sw = Array2::<f64>::zeros((p, p));
    let mut sb = Array2::<f64>::zeros((p, p));
    for &cid in &class_ids {
        let idx: Vec<usize> = train
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cid)
            .map(|(i, _)| i)
            .collect();
        let nk = idx.len() as f64;
        let mut mu = Array1::<f64>::zeros(p);
        for &i in &idx {
            mu += &reduced.row(i);
        }
        mu /= nk;
        for &i in &idx {
            let diff = &reduced.row(i) - &mu;
            for a in 0..p {
                for b in 0..p {
                    sw[[a, b]] += diff[a] * diff[b];
                }
            }
        }
        let dm = &mu - &overall;
        for a in 0..p {
            for b in 0..p {
                sb[[a, b]] += nk * dm[a] * dm[b];
            }
        }
    }

    // ridge keeps Sw invertible even with singleton classes
    let trace: f64 = (0..p).map(|i| sw[[i, i]]).sum();
    let ridge = if trace > 0.0 { 1e-6 * trace / p as f64 } else { 1e-6 };
    for i in 0..p {
        sw[[i, i]] += ridge;
    }

    // whiten Sw, then eigendecompose the transformed between-class scatter
    let (sw_vals, sw_vecs) = linalg::symmetric_eigen_desc(&sw)?;
    let mut inv_sqrt = Array2::<f64>::zeros((p, p));
    for (j, &l) in sw_vals.iter().enumerate() {
        if l <= 0.0 {
            return Err(Error::Degenerate("within-class scatter not positive definite".into()));
        }
        let col = sw_vecs.column(j).to_owned() / l.sqrt();
        inv_sqrt.column_mut(j).assign(&col);
    }
    let whiten = inv_sqrt.dot(&sw_vecs.t()); // Sw^{-1/2}, symmetric
    let sb_w = whiten.dot(&sb).dot(&whiten.t());
    let (sb_vals, sb_vecs) = linalg::symmetric_eigen_desc(&sb_w)?;

    let mut directions = Array2::<f64>::zeros((p, dim));
    for j in 0..dim {
        let w = whiten.t().dot(&sb_vecs.column(j));
        directions.column_mut(j).assign(&w);
    }
    let ortho = linalg::orthonormalize_columns(&directions)?;

    let mut basis = pca.basis.dot(&ortho);
    linalg::fix_column_signs(&mut basis);

    Ok(SubspaceProjector {
        mean: pca.mean,
        basis,
        kind: ProjectorKind::Lda,
        eigenvalues: sb_vals[..dim].to_vec(),
    })
}
