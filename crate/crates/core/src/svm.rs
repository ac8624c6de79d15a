//! Soft-margin SVM dual solver over precomputed Gram matrices.
//!
//! The solver is a pairwise working-set SMO with second-order pair
//! selection, operating entirely on kernel values. It supports per-sample
//! box constraints, which the domain-adaptation stage uses to weight
//! source and target hinge terms differently.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

pub const DEFAULT_TOL: f64 = 1e-6;

/// Default iteration budget, scaled with problem size.
pub fn default_max_iter(n: usize) -> usize {
    100_000 * n.max(1)
}

/// Dual solution of one binary machine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinarySvmModel {
    /// Nonnegative dual variables, one per training sample.
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Indices with alpha above 1e-10.
    pub support_indices: Vec<usize>,
    /// Training labels in {-1, +1}.
    pub labels: Vec<f64>,
    /// Box constraint the machine was trained with.
    pub c: f64,
}

/// One-vs-rest ensemble over K classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    pub machines: Vec<BinarySvmModel>,
    pub class_ids: Vec<usize>,
}

/// Raw SMO output before being packaged into a model.
pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO over a precomputed kernel with per-sample box constraints.
///
/// Minimizes 1/2 a^T Q a - e^T a subject to 0 <= a_i <= c_i and
/// sum a_i y_i = 0, with Q_ij = y_i y_j K_ij. Pair selection follows the
/// maximal-violating-pair rule with a second-order gain estimate.
pub(crate) fn smo_solve(
    kernel: &Array2<f64>,
    y: &[f64],
    c: &[f64],
    tol: f64,
    max_iter: usize,
) -> SmoSolution {
    let n = y.len();
    let mut alpha = vec![0.0f64; n];
    // gradient of the dual objective at alpha = 0
    let mut grad = vec![-1.0f64; n];
    const TAU: f64 = 1e-12;

    let in_up = |t: usize, alpha: &[f64]| -> bool {
        (y[t] > 0.0 && alpha[t] < c[t]) || (y[t] < 0.0 && alpha[t] > 0.0)
    };
    let in_low = |t: usize, alpha: &[f64]| -> bool {
        (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c[t])
    };

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < max_iter {
        // first index: most violating in the up set
        let mut i = usize::MAX;
        let mut m_val = f64::NEG_INFINITY;
        for t in 0..n {
            if in_up(t, &alpha) {
                let v = -y[t] * grad[t];
                if v > m_val {
                    m_val = v;
                    i = t;
                }
            }
        }
        // lowest value over the low set, for the stopping criterion
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            if in_low(t, &alpha) {
                let v = -y[t] * grad[t];
                if v < m_low {
                    m_low = v;
                }
            }
        }
        if i == usize::MAX || m_val - m_low <= tol {
            converged = true;
            break;
        }

        // second index: best second-order gain among eligible partners
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY; // most negative objective change
        for t in 0..n {
            if !in_low(t, &alpha) {
                continue;
            }
            let vt = -y[t] * grad[t];
            let b_it = m_val - vt;
            if b_it <= 0.0 {
                continue;
            }
            // curvature along the feasible pair direction is the squared
            // kernel-space distance, independent of the label signs
            let mut a_it = kernel[[i, i]] + kernel[[t, t]] - 2.0 * kernel[[i, t]];
            if a_it <= 0.0 {
                a_it = TAU;
            }
            let gain = -(b_it * b_it) / a_it;
            if gain < best_gain {
                best_gain = gain;
                j = t;
            }
        }
        if j == usize::MAX {
            converged = true;
            break;
        }

        let old_ai = alpha[i];
        let old_aj = alpha[j];
        let mut quad = kernel[[i, i]] + kernel[[j, j]] - 2.0 * kernel[[i, j]];
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > c[i] - c[j] {
                if alpha[i] > c[i] {
                    alpha[i] = c[i];
                    alpha[j] = c[i] - diff;
                }
            } else if alpha[j] > c[j] {
                alpha[j] = c[j];
                alpha[i] = c[j] + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c[i] {
                if alpha[i] > c[i] {
                    alpha[i] = c[i];
                    alpha[j] = sum - c[i];
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c[j] {
                if alpha[j] > c[j] {
                    alpha[j] = c[j];
                    alpha[i] = sum - c[j];
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        if dai != 0.0 || daj != 0.0 {
            for t in 0..n {
                grad[t] += y[t] * y[i] * kernel[[t, i]] * dai + y[t] * y[j] * kernel[[t, j]] * daj;
            }
        }
        iterations += 1;
    }

    let bias = compute_bias(&alpha, &grad, y, c);
    SmoSolution {
        alpha,
        bias,
        iterations,
        converged,
    }
}

/// Bias from the trained duals: average of -y_t * grad_t over free support
/// vectors, or the midpoint of the feasible interval when none are free.
///
/// With v_t = -y_t grad_t = y_t - sum_j alpha_j y_j K_tj, the KKT
/// conditions give b >= v_t for margin-satisfied points (y=+1, alpha=0 or
/// y=-1, alpha=C) and b <= v_t for margin-violating-capable points
/// (y=+1, alpha=C or y=-1, alpha=0); free vectors pin b = v_t.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let n = y.len();
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        let at_lower = alpha[t] <= 1e-12;
        let at_upper = alpha[t] >= c[t] - 1e-12;
        if !at_lower && !at_upper {
            free_sum += v;
            free_count += 1;
        } else if (y[t] > 0.0 && at_lower) || (y[t] < 0.0 && at_upper) {
            lower = lower.max(v);
        } else {
            upper = upper.min(v);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let hi = if upper.is_finite() { upper } else { lower };
        let lo = if lower.is_finite() { lower } else { upper };
        0.5 * (hi + lo)
    }
}

/// Train one binary machine on a square Gram matrix (assumed PSD; clip
/// indefinite kernels first). Labels must contain both classes.
pub fn train_binary(
    g: &GramMatrix,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BinarySvmModel> {
    if !g.is_square() {
        return Err(Error::Input(format!(
            "training gram must be square, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if y.len() != g.nrows() {
        return Err(Error::Input(format!(
            "label count {} does not match gram size {}",
            y.len(),
            g.nrows()
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Input("labels must be +1 or -1".into()));
    }
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(Error::Parameter("training labels contain a single class".into()));
    }
    if c <= 0.0 {
        return Err(Error::Parameter(format!("C must be > 0, got {c}")));
    }

    let cs = vec![c; y.len()];
    let sol = smo_solve(&g.values, y, &cs, tol, max_iter);
    let model = BinarySvmModel {
        support_indices: support_indices(&sol.alpha),
        alpha: sol.alpha,
        bias: sol.bias,
        labels: y.to_vec(),
        c,
    };
    if !sol.converged {
        return Err(Error::SvmIterationCap {
            context: format!("{} iterations", sol.iterations),
            best: Box::new(model),
        });
    }
    Ok(model)
}

fn support_indices(alpha: &[f64]) -> Vec<usize> {
    alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 1e-10)
        .map(|(i, _)| i)
        .collect()
}

/// Decision values f(x) = sum_i alpha_i y_i k(x, x_i) + b for kernel rows
/// of test points against the training set.
pub fn decision_values(model: &BinarySvmModel, g_test: &GramMatrix) -> Result<Vec<f64>> {
    if g_test.ncols() != model.alpha.len() {
        return Err(Error::Input(format!(
            "test gram has {} columns, model expects {}",
            g_test.ncols(),
            model.alpha.len()
        )));
    }
    let mut out = Vec::with_capacity(g_test.nrows());
    for row in g_test.values.rows() {
        let mut f = model.bias;
        for &i in &model.support_indices {
            f += model.alpha[i] * model.labels[i] * row[i];
        }
        out.push(f);
    }
    Ok(out)
}

/// Largest KKT violation m(alpha) - M(alpha); below the training tolerance
/// for a converged model.
pub fn kkt_violation(model: &BinarySvmModel, g: &GramMatrix) -> Result<f64> {
    let n = model.alpha.len();
    if !g.is_square() || g.nrows() != n {
        return Err(Error::Input("gram does not match model".into()));
    }
    let y = &model.labels;
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let mut qa = 0.0;
        for i in 0..n {
            qa += y[t] * y[i] * g.values[[t, i]] * model.alpha[i];
        }
        let v = -y[t] * (qa - 1.0);
        let in_up = (y[t] > 0.0 && model.alpha[t] < model.c) || (y[t] < 0.0 && model.alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && model.alpha[t] > 0.0) || (y[t] < 0.0 && model.alpha[t] < model.c);
        if in_up {
            m_up = m_up.max(v);
        }
        if in_low {
            m_low = m_low.min(v);
        }
    }
    Ok(m_up - m_low)
}

/// Dual objective sum(a) - 1/2 a^T Q a of a trained machine.
pub fn dual_objective(alpha: &[f64], y: &[f64], g: &GramMatrix) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] == 0.0 {
                continue;
            }
            quad += alpha[i] * alpha[j] * y[i] * y[j] * g.values[[i, j]];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Train a one-vs-rest ensemble. Machine k is trained with +1 for samples
/// of class k and -1 for everything else.
pub fn train_one_vs_rest(
    g: &GramMatrix,
    labels: &[usize],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MulticlassSvmModel> {
    let mut class_ids: Vec<usize> = labels.to_vec();
    class_ids.sort_unstable();
    class_ids.dedup();
    if class_ids.len() < 2 {
        return Err(Error::Parameter(
            "one-vs-rest needs at least 2 classes".into(),
        ));
    }
    let mut machines = Vec::with_capacity(class_ids.len());
    for &cid in &class_ids {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == cid { 1.0 } else { -1.0 })
            .collect();
        let machine = train_binary(g, &y, c, tol, max_iter).map_err(|e| match e {
            Error::SvmIterationCap { context, best } => Error::SvmIterationCap {
                context: format!("class {cid}: {context}"),
                best,
            },
            other => other,
        })?;
        machines.push(machine);
    }
    Ok(MulticlassSvmModel { machines, class_ids })
}

impl MulticlassSvmModel {
    /// Decision values per machine: rows = test points, columns = classes.
    pub fn decision_matrix(&self, g_test: &GramMatrix) -> Result<Array2<f64>> {
        let mut out = Array2::<f64>::zeros((g_test.nrows(), self.machines.len()));
        for (k, machine) in self.machines.iter().enumerate() {
            let vals = decision_values(machine, g_test)?;
            for (i, v) in vals.into_iter().enumerate() {
                out[[i, k]] = v;
            }
        }
        Ok(out)
    }

    /// Argmax classification (ties go to the lowest class index).
    pub fn predict(&self, g_test: &GramMatrix) -> Result<Vec<usize>> {
        let dm = self.decision_matrix(g_test)?;
        Ok(dm
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0usize;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                self.class_ids[best]
            })
            .collect())
    }
}
