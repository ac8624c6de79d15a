//! The six kernel functions used by the feature-kernel learner, plus the
//! Gram-matrix machinery built on them: cross/self Gram computation, cosine
//! normalization, PSD checking, and projection onto the PSD cone for the
//! kernels that are not guaranteed positive semi-definite.
//!
//! The `rbf` kind deliberately uses the *unsquared* distance in its
//! exponent, exp(-||x-y|| / (2 sigma^2)); set `rbf_squared_norm` on the
//! spec to get the conventional squared-distance reading instead.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Gaussian,
    Rbf,
    ChiSquare,
    RbfChiSquare,
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Gaussian => "gaussian",
            KernelKind::Rbf => "rbf",
            KernelKind::ChiSquare => "chi_square",
            KernelKind::RbfChiSquare => "rbf_chi_square",
        };
        f.write_str(s)
    }
}

/// A fully resolved kernel: kind plus every parameter it may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Offset for linear/polynomial.
    #[serde(default)]
    pub c: f64,
    /// Scale for polynomial.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Degree for polynomial.
    #[serde(default = "default_degree")]
    pub degree: u32,
    /// Bandwidth for gaussian/rbf (and the rbf term of rbf_chi_square).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Use exp(-||x-y||^2 / (2 sigma^2)) for the rbf kinds instead of the
    /// unsquared-distance form.
    #[serde(default)]
    pub rbf_squared_norm: bool,
}

fn default_alpha() -> f64 {
    1.0
}
fn default_degree() -> u32 {
    2
}
fn default_sigma() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            c: 0.0,
            alpha: default_alpha(),
            degree: default_degree(),
            sigma: default_sigma(),
            rbf_squared_norm: false,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    fn uses_sigma(&self) -> bool {
        matches!(
            self.kind,
            KernelKind::Gaussian | KernelKind::Rbf | KernelKind::RbfChiSquare
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.uses_sigma() && !(self.sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "{} kernel requires sigma > 0, got {}",
                self.kind, self.sigma
            )));
        }
        if self.kind == KernelKind::Polynomial && self.degree < 1 {
            return Err(Error::Parameter("polynomial degree must be >= 1".into()));
        }
        Ok(())
    }
}

/// An N x M matrix of kernel evaluations, tagged with the spec that
/// produced it and whether cosine normalization has been applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramMatrix {
    pub values: Array2<f64>,
    pub spec: KernelSpec,
    pub normalized: bool,
}

impl GramMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }
}

fn chi_square_term(x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        if a < 0.0 || b < 0.0 {
            return Err(Error::Input(
                "chi-square kernels require nonnegative inputs".into(),
            ));
        }
        let denom = 0.5 * (a + b);
        if denom > 0.0 {
            let d = a - b;
            acc += d * d / denom;
        }
        // a + b == 0 contributes 0 (limit convention)
    }
    Ok(1.0 - acc)
}

fn rbf_term(x: ArrayView1<f64>, y: ArrayView1<f64>, sigma: f64, squared: bool) -> f64 {
    let sq: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let dist = if squared { sq } else { sq.sqrt() };
    (-dist / (2.0 * sigma * sigma)).exp()
}

/// Evaluate one kernel on a pair of vectors.
pub fn kernel_eval(x: ArrayView1<f64>, y: ArrayView1<f64>, spec: &KernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "kernel_eval dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    spec.validate()?;
    let value = match spec.kind {
        KernelKind::Linear => x.dot(&y) + spec.c,
        KernelKind::Polynomial => (spec.alpha * x.dot(&y) + spec.c).powi(spec.degree as i32),
        KernelKind::Gaussian => rbf_term(x, y, spec.sigma, true),
        KernelKind::Rbf => rbf_term(x, y, spec.sigma, spec.rbf_squared_norm),
        KernelKind::ChiSquare => chi_square_term(x, y)?,
        KernelKind::RbfChiSquare => {
            chi_square_term(x, y)? + rbf_term(x, y, spec.sigma, spec.rbf_squared_norm)
        }
    };
    if !value.is_finite() {
        return Err(Error::Input(format!(
            "kernel evaluation produced a non-finite value for {} kernel",
            spec.kind
        )));
    }
    Ok(value)
}

/// Gram matrix over two row-sample matrices: values[i][j] = k(a_i, b_j).
pub fn gram_matrix(a: &Array2<f64>, b: &Array2<f64>, spec: &KernelSpec) -> Result<GramMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::Input(format!(
            "gram dimension mismatch: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let mut values = Array2::<f64>::zeros((a.nrows(), b.nrows()));
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            values[[i, j]] = kernel_eval(a.row(i), b.row(j), spec)?;
        }
    }
    Ok(GramMatrix {
        values,
        spec: spec.clone(),
        normalized: false,
    })
}

/// Gram over two feature sets (rows of `a` against rows of `b`).
pub fn gram(a: &FeatureSet, b: &FeatureSet, spec: &KernelSpec) -> Result<GramMatrix> {
    gram_matrix(&a.vectors, &b.vectors, spec)
}

/// Self-evaluation diagonal k(x_i, x_i) for every row, used by
/// [`normalize_gram`].
pub fn self_diagonal(a: &Array2<f64>, spec: &KernelSpec) -> Result<Vec<f64>> {
    (0..a.nrows())
        .map(|i| kernel_eval(a.row(i), a.row(i), spec))
        .collect()
}

/// Cosine normalization k'(x,y) = k(x,y) / sqrt(k(x,x) k(y,y)). Aligns the
/// scales of heterogeneous kernels before they are combined.
pub fn normalize_gram(g: &GramMatrix, self_a: &[f64], self_b: &[f64]) -> Result<GramMatrix> {
    if self_a.len() != g.nrows() || self_b.len() != g.ncols() {
        return Err(Error::Input(
            "self-evaluation diagonals do not match gram dimensions".into(),
        ));
    }
    if let Some(bad) = self_a.iter().chain(self_b.iter()).find(|v| **v <= 0.0) {
        return Err(Error::Normalization(format!(
            "cannot normalize: non-positive self-evaluation {bad}"
        )));
    }
    let mut values = g.values.clone();
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            values[[i, j]] /= (self_a[i] * self_b[j]).sqrt();
        }
    }
    Ok(GramMatrix {
        values,
        spec: g.spec.clone(),
        normalized: true,
    })
}

/// Report whether a square symmetric gram is PSD at tolerance `tol`,
/// together with its smallest eigenvalue.
pub fn check_psd(g: &GramMatrix, tol: f64) -> Result<(bool, f64)> {
    require_symmetric(&g.values, tol)?;
    let (vals, _) = linalg::symmetric_eigen_desc(&g.values)?;
    let min_eig = *vals.last().expect("non-empty eigenvalue list");
    Ok((min_eig >= -tol, min_eig))
}

/// Project a square symmetric gram onto the PSD cone by zeroing negative
/// eigenvalues. Leaves grams that are already PSD at `tol` untouched.
pub fn clip_psd(g: &GramMatrix, tol: f64) -> Result<GramMatrix> {
    require_symmetric(&g.values, tol.max(1e-8))?;
    let (vals, vecs) = linalg::symmetric_eigen_desc(&g.values)?;
    let min_eig = *vals.last().unwrap();
    if min_eig >= -tol {
        return Ok(g.clone());
    }
    let n = g.nrows();
    let clipped: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let mut scaled = vecs.clone();
    for (j, &l) in clipped.iter().enumerate() {
        scaled.column_mut(j).mapv_inplace(|v| v * l);
    }
    let rebuilt = scaled.dot(&vecs.t());
    // re-symmetrize against round-off
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            values[[i, j]] = 0.5 * (rebuilt[[i, j]] + rebuilt[[j, i]]);
        }
    }
    Ok(GramMatrix {
        values,
        spec: g.spec.clone(),
        normalized: g.normalized,
    })
}

fn require_symmetric(m: &Array2<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Input(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[[i, j]] - m[[j, i]]).abs() > tol {
                return Err(Error::Input(format!(
                    "matrix is asymmetric beyond tolerance at ({i},{j}): {} vs {}",
                    m[[i, j]],
                    m[[j, i]]
                )));
            }
        }
    }
    Ok(())
}

/// Median pairwise Euclidean distance, the default bandwidth when a config
/// leaves sigma unset. Falls back to 1.0 for degenerate inputs.
pub fn median_heuristic_sigma(rows: &Array2<f64>) -> f64 {
    let n = rows.nrows();
    if n < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = rows
                .row(i)
                .iter()
                .zip(rows.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(d.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = dists[dists.len() / 2];
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Dump a gram to CSV for debugging.
pub fn export_gram_csv(g: &GramMatrix, path: &std::path::Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..g.nrows() {
        let row: Vec<String> = (0..g.ncols()).map(|j| g.values[[i, j]].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
