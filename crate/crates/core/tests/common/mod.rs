//! Shared oracles for the integration suites. Everything here is written
//! independently of the library's solver paths: the QP oracle is plain
//! projected gradient ascent on the SVM dual, and the simplex search is
//! exhaustive enumeration.

use ndarray::Array2;

/// Dual objective sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij, computed with
/// naive loops.
pub fn dual_value(alpha: &[f64], y: &[f64], kernel: &Array2<f64>) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[[i, j]];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto {0 <= a_i <= c_i, sum y_i a_i = 0} via
/// bisection on the hyperplane multiplier. With a_i(lam) =
/// clamp(v_i - lam y_i, 0, c_i), the constraint residual
/// g(lam) = sum y_i a_i(lam) is continuous and non-increasing, going from
/// sum of positive-class capacity to minus the negative-class capacity.
fn project(v: &[f64], y: &[f64], c: &[f64], out: &mut [f64]) {
    let residual = |lam: f64| -> f64 {
        v.iter()
            .zip(y.iter())
            .zip(c.iter())
            .map(|((&vi, &yi), &ci)| yi * (vi - lam * yi).clamp(0.0, ci))
            .sum()
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ((&vi, &yi), &ci) in v.iter().zip(y.iter()).zip(c.iter()) {
        for bound in [vi * yi, (vi - ci * yi) * yi, (vi + ci * yi) * yi] {
            lo = lo.min(bound);
            hi = hi.max(bound);
        }
    }
    let (mut lo, mut hi) = (lo - 1.0, hi + 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    for (o, ((&vi, &yi), &ci)) in out.iter_mut().zip(v.iter().zip(y.iter()).zip(c.iter())) {
        *o = (vi - lam * yi).clamp(0.0, ci);
    }
}

/// Projected gradient ascent on the SVM dual with per-sample boxes.
/// Budget of `max_iter` steps at the safe step size 1/L (Gershgorin bound
/// on the quadratic term); exits early only at a numerical fixed point,
/// which leaves the iterate where the full budget would.
pub fn brute_force_qp(
    kernel: &Array2<f64>,
    y: &[f64],
    c: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = y.len();
    // Gershgorin upper bound on the largest eigenvalue of Q
    let mut lipschitz = 0.0f64;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| kernel[[i, j]].abs()).sum();
        lipschitz = lipschitz.max(row);
    }
    let step = 1.0 / lipschitz.max(1e-12);

    let mut alpha = vec![0.0f64; n];
    let mut proposal = vec![0.0f64; n];
    let mut projected = vec![0.0f64; n];
    let mut stalled_value = f64::NEG_INFINITY;
    for iter in 0..max_iter {
        // gradient of the dual: 1 - Q alpha
        for i in 0..n {
            let mut qa = 0.0;
            for j in 0..n {
                qa += y[i] * y[j] * kernel[[i, j]] * alpha[j];
            }
            proposal[i] = alpha[i] + step * (1.0 - qa);
        }
        project(&proposal, y, c, &mut projected);
        let moved = projected
            .iter()
            .zip(alpha.iter())
            .any(|(a, b)| (a - b).abs() > 0.0);
        alpha.copy_from_slice(&projected);
        if !moved {
            break;
        }
        if iter % 4096 == 0 {
            let value = dual_value(&alpha, y, kernel);
            if value - stalled_value <= 1e-15 * (1.0 + value.abs()) {
                break;
            }
            stalled_value = value;
        }
    }
    let value = dual_value(&alpha, y, kernel);
    (alpha, value)
}

/// Hinge-primal value of a linear machine on weighted points, used to
/// compare coordinate-descent subproblem solutions against the QP oracle
/// through strong duality.
pub fn weighted_primal_value(
    points: &Array2<f64>,
    y: &[f64],
    weights: &[f64],
    theta: &[f64],
    bias: f64,
) -> f64 {
    let mut value = 0.5 * theta.iter().map(|t| t * t).sum::<f64>();
    for (i, row) in points.rows().into_iter().enumerate() {
        let f: f64 = row.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>() + bias;
        value += weights[i] * (1.0 - y[i] * f).max(0.0);
    }
    value
}
