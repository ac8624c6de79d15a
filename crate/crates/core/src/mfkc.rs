//! Soft-margin learning of feature weights per kernel, and selection of
//! the best feature-kernel pairs.
//!
//! For every kernel q the learner places a weight vector beta^q on the
//! probability simplex over the F features and alternates two exact steps:
//! an SVM solve on the combined gram sum_m beta_m G_{m,q}, and the
//! closed-form margin-norm update beta_m <- ||w_m|| / sum_j ||w_j|| with
//! ||w_m||^2 = beta_m^2 alpha^T (Y G_{m,q} Y) alpha (summed over the
//! one-vs-rest machines). Both steps minimize the same variational
//! objective, so the recorded objective trace is non-increasing. The pair
//! selected for kernel q is the feature with the largest converged weight.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTag;
use crate::kernels::{GramMatrix, KernelSpec};
use crate::svm::{self, MulticlassSvmModel};

/// All grams of the training set: `grams[m][q]` is feature m under
/// kernel q, normalized, over the same N samples.
#[derive(Debug, Clone)]
pub struct FeatureKernelGrid {
    pub grams: Vec<Vec<GramMatrix>>,
    pub feature_tags: Vec<FeatureTag>,
    pub kernel_specs: Vec<KernelSpec>,
    pub labels: Vec<usize>,
}

impl FeatureKernelGrid {
    pub fn new(
        grams: Vec<Vec<GramMatrix>>,
        feature_tags: Vec<FeatureTag>,
        kernel_specs: Vec<KernelSpec>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if grams.is_empty() || grams[0].is_empty() {
            return Err(Error::Input("grid needs at least one feature and one kernel".into()));
        }
        let f = grams.len();
        let p = grams[0].len();
        if feature_tags.len() != f {
            return Err(Error::Input(format!(
                "{} feature tags for {} gram rows",
                feature_tags.len(),
                f
            )));
        }
        if kernel_specs.len() != p {
            return Err(Error::Input(format!(
                "{} kernel specs for {} gram columns",
                kernel_specs.len(),
                p
            )));
        }
        let n = labels.len();
        for (m, row) in grams.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Input(format!(
                    "feature {m} has {} kernels, expected {p}",
                    row.len()
                )));
            }
            for (q, g) in row.iter().enumerate() {
                if g.nrows() != n || g.ncols() != n {
                    return Err(Error::Input(format!(
                        "gram ({m},{q}) is {}x{}, expected {n}x{n}",
                        g.nrows(),
                        g.ncols()
                    )));
                }
            }
        }
        Ok(FeatureKernelGrid {
            grams,
            feature_tags,
            kernel_specs,
            labels,
        })
    }

    pub fn num_features(&self) -> usize {
        self.grams.len()
    }

    pub fn num_kernels(&self) -> usize {
        self.grams[0].len()
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    /// Combined gram sum_m beta_m G_{m,q}.
    pub fn combine(&self, q: usize, beta: &Array1<f64>) -> GramMatrix {
        let n = self.num_samples();
        let mut values = Array2::<f64>::zeros((n, n));
        for (m, &w) in beta.iter().enumerate() {
            if w != 0.0 {
                values.scaled_add(w, &self.grams[m][q].values);
            }
        }
        GramMatrix {
            values,
            spec: self.kernel_specs[q].clone(),
            normalized: true,
        }
    }
}

/// Learned state: simplex weights per kernel, the per-kernel ensembles,
/// and the selected feature-kernel pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfkcModel {
    /// P x F, row q = beta^q.
    pub beta: Array2<f64>,
    pub per_kernel_svm: Vec<MulticlassSvmModel>,
    /// (feature index, kernel index) per kernel, kernel index = position.
    pub selected_pairs: Vec<(usize, usize)>,
    /// Objective value after every sweep, per kernel.
    pub objective_trace: Vec<Vec<f64>>,
}

/// Solver knobs for the per-kernel alternation.
#[derive(Debug, Clone)]
pub struct MfkcParams {
    pub c: f64,
    /// L1 movement of beta below which a kernel's alternation stops.
    pub tol: f64,
    pub max_sweeps: usize,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
}

impl MfkcParams {
    pub fn new(c: f64) -> Self {
        MfkcParams {
            c,
            tol: 1e-6,
            max_sweeps: 50,
            svm_tol: 1e-9,
            svm_max_iter: 10_000_000,
        }
    }
}

/// Per-kernel result of the alternation.
pub struct KernelBetaResult {
    pub beta: Array1<f64>,
    pub svm: MulticlassSvmModel,
    pub trace: Vec<f64>,
}

/// Squared margin norms per feature: ||w_m||^2 summed over the ensemble.
fn margin_norms_sq(
    grid: &FeatureKernelGrid,
    q: usize,
    beta: &Array1<f64>,
    svm: &MulticlassSvmModel,
) -> Vec<f64> {
    let f = grid.num_features();
    let mut norms = vec![0.0f64; f];
    for machine in &svm.machines {
        let su = &machine.support_indices;
        for (m, norm) in norms.iter_mut().enumerate() {
            let gm = &grid.grams[m][q].values;
            let mut quad = 0.0;
            for &i in su {
                let ai = machine.alpha[i] * machine.labels[i];
                for &j in su {
                    quad += ai * machine.alpha[j] * machine.labels[j] * gm[[i, j]];
                }
            }
            *norm += beta[m] * beta[m] * quad.max(0.0);
        }
    }
    norms
}

/// The soft-margin feature-combination objective for kernel q at the given
/// state: 1/2 sum_m beta_m alpha^T (Y G Y) alpha plus C times the hinge
/// losses of every sample under every one-vs-rest machine.
pub fn eq1_objective(
    grid: &FeatureKernelGrid,
    q: usize,
    beta: &Array1<f64>,
    svm: &MulticlassSvmModel,
    c: f64,
) -> Result<f64> {
    check_simplex(beta, 1e-6)?;
    let combined = grid.combine(q, beta);

    // regularizer: 1/2 ||w||^2 in the combined kernel, summed over machines
    let mut reg = 0.0;
    for machine in &svm.machines {
        let su = &machine.support_indices;
        for &i in su {
            let ai = machine.alpha[i] * machine.labels[i];
            for &j in su {
                reg += ai * machine.alpha[j] * machine.labels[j] * combined.values[[i, j]];
            }
        }
    }
    reg *= 0.5;

    let mut hinge = 0.0;
    let dm = svm.decision_matrix(&combined)?;
    for (k, machine) in svm.machines.iter().enumerate() {
        for i in 0..grid.num_samples() {
            let margin = machine.labels[i] * dm[[i, k]];
            hinge += (1.0 - margin).max(0.0);
        }
    }

    let obj = reg + c * hinge;
    if !obj.is_finite() {
        return Err(Error::Convergence("non-finite objective".into()));
    }
    Ok(obj)
}

fn check_simplex(beta: &Array1<f64>, tol: f64) -> Result<()> {
    if beta.iter().any(|&b| b < -tol) {
        return Err(Error::Parameter(format!("beta has negative entries: {beta}")));
    }
    let sum: f64 = beta.sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::Parameter(format!("beta sums to {sum}, not 1")));
    }
    Ok(())
}

/// Alternate SVM training and the margin-norm simplex update for one
/// kernel until beta stops moving.
pub fn learn_beta_for_kernel(
    grid: &FeatureKernelGrid,
    q: usize,
    params: &MfkcParams,
) -> Result<KernelBetaResult> {
    let f = grid.num_features();
    if q >= grid.num_kernels() {
        return Err(Error::Parameter(format!("kernel index {q} out of range")));
    }
    if params.c <= 0.0 {
        return Err(Error::Parameter("C must be positive".into()));
    }

    let mut beta = Array1::from_elem(f, 1.0 / f as f64);
    let mut trace: Vec<f64> = Vec::new();
    let mut state: Option<(Array1<f64>, MulticlassSvmModel)> = None;

    for _sweep in 0..params.max_sweeps.max(1) {
        let combined = grid.combine(q, &beta);
        let svm = svm::train_one_vs_rest(
            &combined,
            &grid.labels,
            params.c,
            params.svm_tol,
            params.svm_max_iter,
        )?;
        let obj = eq1_objective(grid, q, &beta, &svm, params.c)?;

        if let Some(&last) = trace.last() {
            if obj > last {
                // the retrain gained nothing beyond solver noise; keep the
                // previous (better) state so the trace stays monotone
                break;
            }
        }
        trace.push(obj);

        // simplex update from the margin norms
        let norms: Vec<f64> = margin_norms_sq(grid, q, &beta, &svm)
            .iter()
            .map(|&v| v.sqrt())
            .collect();
        let total: f64 = norms.iter().sum();
        let new_beta = if total > 1e-300 {
            let mut nb = Array1::from_vec(norms);
            nb.mapv_inplace(|v| v / total);
            // renormalize exactly against accumulated round-off
            let s = nb.sum();
            nb.mapv_inplace(|v| v / s);
            nb
        } else {
            beta.clone()
        };

        let movement: f64 = new_beta
            .iter()
            .zip(beta.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        state = Some((beta.clone(), svm));
        if movement < params.tol {
            break;
        }
        beta = new_beta;
    }

    let (beta, svm) =
        state.ok_or_else(|| Error::Convergence("no sweep completed".into()))?;
    check_simplex(&beta, 1e-9)?;
    Ok(KernelBetaResult { beta, svm, trace })
}

/// Run the per-kernel learner for every kernel and pick each kernel's
/// heaviest feature (ties resolved toward the lowest feature index).
pub fn select_pairs(grid: &FeatureKernelGrid, params: &MfkcParams) -> Result<MfkcModel> {
    let f = grid.num_features();
    let p = grid.num_kernels();
    let mut beta = Array2::<f64>::zeros((p, f));
    let mut svms = Vec::with_capacity(p);
    let mut pairs = Vec::with_capacity(p);
    let mut traces = Vec::with_capacity(p);
    for q in 0..p {
        let result = learn_beta_for_kernel(grid, q, params)?;
        let mut best = 0usize;
        for (m, &w) in result.beta.iter().enumerate() {
            if w > result.beta[best] {
                best = m;
            }
        }
        beta.row_mut(q).assign(&result.beta);
        pairs.push((best, q));
        svms.push(result.svm);
        traces.push(result.trace);
    }
    Ok(MfkcModel {
        beta,
        per_kernel_svm: svms,
        selected_pairs: pairs,
        objective_trace: traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gram_matrix, normalize_gram, self_diagonal, KernelKind};
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn normalized_linear_gram(points: &Array2<f64>) -> GramMatrix {
        let mut spec = KernelSpec::new(KernelKind::Linear);
        spec.c = 1.0; // keep self-evaluations positive
        let g = gram_matrix(points, points, &spec).unwrap();
        let diag = self_diagonal(points, &spec).unwrap();
        normalize_gram(&g, &diag, &diag).unwrap()
    }

    fn two_blob_points(rng: &mut ChaCha8Rng, n_per: usize, spread: f64) -> (Array2<f64>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for cls in 0..2 {
            let center = if cls == 0 { -2.0 } else { 2.0 };
            for _ in 0..n_per {
                rows.push(center + rng.gen_range(-spread..spread));
                rows.push(center + rng.gen_range(-spread..spread));
                labels.push(cls);
            }
        }
        (Array2::from_shape_vec((2 * n_per, 2), rows).unwrap(), labels)
    }

    #[test]
    fn single_feature_gives_unit_beta_in_one_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (pts, labels) = two_blob_points(&mut rng, 4, 0.5);
        let g = normalized_linear_gram(&pts);
        let grid = FeatureKernelGrid::new(
            vec![vec![g.clone()]],
            vec![FeatureTag::RawPixels],
            vec![g.spec.clone()],
            labels.clone(),
        )
        .unwrap();
        let params = MfkcParams::new(1.0);
        let result = learn_beta_for_kernel(&grid, 0, &params).unwrap();
        assert_eq!(result.beta.len(), 1);
        assert!((result.beta[0] - 1.0).abs() < 1e-12);

        // objective equals the plain SVM objective on the same gram
        let svm = svm::train_one_vs_rest(&g, &labels, 1.0, 1e-9, 1_000_000).unwrap();
        let expected = eq1_objective(&grid, 0, &result.beta, &svm, 1.0).unwrap();
        assert!((result.trace[0] - expected).abs() < 1e-8);
    }

    #[test]
    fn duplicated_feature_keeps_uniform_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (pts, labels) = two_blob_points(&mut rng, 4, 0.5);
        let g = normalized_linear_gram(&pts);
        let grid = FeatureKernelGrid::new(
            vec![vec![g.clone()], vec![g.clone()]],
            vec![FeatureTag::RawPixels, FeatureTag::Lbp],
            vec![g.spec.clone()],
            labels,
        )
        .unwrap();
        let result = learn_beta_for_kernel(&grid, 0, &MfkcParams::new(1.0)).unwrap();
        assert!((result.beta[0] - 0.5).abs() < 1e-9);
        assert!((result.beta[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn trace_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let (signal, labels) = two_blob_points(&mut rng, 5, 0.6);
        let noise = Array2::from_shape_fn((10, 2), |_| rng.gen_range(-3.0..3.0));
        let g_signal = normalized_linear_gram(&signal);
        let g_noise = normalized_linear_gram(&noise);
        let grid = FeatureKernelGrid::new(
            vec![vec![g_signal.clone()], vec![g_noise]],
            vec![FeatureTag::RawPixels, FeatureTag::Bow],
            vec![g_signal.spec.clone()],
            labels,
        )
        .unwrap();
        let result = learn_beta_for_kernel(&grid, 0, &MfkcParams::new(2.0)).unwrap();
        for w in result.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn signal_feature_dominates_noise_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let (signal, labels) = two_blob_points(&mut rng, 5, 0.4);
        let noise = Array2::from_shape_fn((10, 2), |_| rng.gen_range(-3.0..3.0));
        let g_signal = normalized_linear_gram(&signal);
        let g_noise = normalized_linear_gram(&noise);
        let grid = FeatureKernelGrid::new(
            vec![vec![g_signal.clone()], vec![g_noise]],
            vec![FeatureTag::RawPixels, FeatureTag::Bow],
            vec![g_signal.spec.clone()],
            labels,
        )
        .unwrap();
        let result = learn_beta_for_kernel(&grid, 0, &MfkcParams::new(2.0)).unwrap();
        assert!(
            result.beta[0] >= 0.9,
            "expected the informative feature to dominate, beta = {}",
            result.beta
        );
    }

    #[test]
    fn select_pairs_trivial_and_replicated_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let (pts, labels) = two_blob_points(&mut rng, 4, 0.5);
        let g = normalized_linear_gram(&pts);

        let grid = FeatureKernelGrid::new(
            vec![vec![g.clone()]],
            vec![FeatureTag::RawPixels],
            vec![g.spec.clone()],
            labels.clone(),
        )
        .unwrap();
        let model = select_pairs(&grid, &MfkcParams::new(1.0)).unwrap();
        assert_eq!(model.selected_pairs, vec![(0, 0)]);

        // kernel 2 is a copy of kernel 1: identical rows and identical picks
        let noise = Array2::from_shape_fn((8, 2), |_| rng.gen_range(-3.0..3.0));
        let g_noise = normalized_linear_gram(&noise);
        let grid = FeatureKernelGrid::new(
            vec![
                vec![g.clone(), g.clone()],
                vec![g_noise.clone(), g_noise.clone()],
            ],
            vec![FeatureTag::RawPixels, FeatureTag::Bow],
            vec![g.spec.clone(), g.spec.clone()],
            labels,
        )
        .unwrap();
        let model = select_pairs(&grid, &MfkcParams::new(1.0)).unwrap();
        assert_eq!(model.selected_pairs[0].0, model.selected_pairs[1].0);
        for m in 0..2 {
            assert!((model.beta[[0, m]] - model.beta[[1, m]]).abs() < 1e-12);
        }
        assert_eq!(model.selected_pairs[0].1, 0);
        assert_eq!(model.selected_pairs[1].1, 1);
    }

    #[test]
    fn objective_with_zero_alpha_is_cnk() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let (pts, labels) = two_blob_points(&mut rng, 3, 0.5);
        let g = normalized_linear_gram(&pts);
        let grid = FeatureKernelGrid::new(
            vec![vec![g.clone()]],
            vec![FeatureTag::RawPixels],
            vec![g.spec.clone()],
            labels.clone(),
        )
        .unwrap();
        // hand-built ensemble with zero duals and zero bias
        let machines: Vec<_> = [0usize, 1]
            .iter()
            .map(|&cid| crate::svm::BinarySvmModel {
                alpha: vec![0.0; 6],
                bias: 0.0,
                support_indices: vec![],
                labels: labels.iter().map(|&l| if l == cid { 1.0 } else { -1.0 }).collect(),
                c: 1.0,
            })
            .collect();
        let svm = MulticlassSvmModel {
            machines,
            class_ids: vec![0, 1],
        };
        let beta = Array1::from_vec(vec![1.0]);
        let c = 3.0;
        let obj = eq1_objective(&grid, 0, &beta, &svm, c).unwrap();
        // every hinge is max(0, 1 - 0) = 1: objective = C * N * K
        assert!((obj - c * 6.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn objective_is_invariant_under_feature_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let (signal, labels) = two_blob_points(&mut rng, 4, 0.5);
        let noise = Array2::from_shape_fn((8, 2), |_| rng.gen_range(-2.0..2.0));
        let g1 = normalized_linear_gram(&signal);
        let g2 = normalized_linear_gram(&noise);

        let grid_a = FeatureKernelGrid::new(
            vec![vec![g1.clone()], vec![g2.clone()]],
            vec![FeatureTag::RawPixels, FeatureTag::Bow],
            vec![g1.spec.clone()],
            labels.clone(),
        )
        .unwrap();
        let grid_b = FeatureKernelGrid::new(
            vec![vec![g2], vec![g1.clone()]],
            vec![FeatureTag::Bow, FeatureTag::RawPixels],
            vec![g1.spec.clone()],
            labels.clone(),
        )
        .unwrap();

        let beta_a = Array1::from_vec(vec![0.7, 0.3]);
        let beta_b = Array1::from_vec(vec![0.3, 0.7]);
        let combined = grid_a.combine(0, &beta_a);
        let svm = svm::train_one_vs_rest(&combined, &labels, 1.0, 1e-9, 1_000_000).unwrap();
        let oa = eq1_objective(&grid_a, 0, &beta_a, &svm, 1.0).unwrap();
        let ob = eq1_objective(&grid_b, 0, &beta_b, &svm, 1.0).unwrap();
        assert!((oa - ob).abs() < 1e-10);
    }

    #[test]
    fn simplex_violations_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let (pts, labels) = two_blob_points(&mut rng, 3, 0.5);
        let g = normalized_linear_gram(&pts);
        let grid = FeatureKernelGrid::new(
            vec![vec![g.clone()]],
            vec![FeatureTag::RawPixels],
            vec![g.spec.clone()],
            labels.clone(),
        )
        .unwrap();
        let combined = grid.combine(0, &Array1::from_vec(vec![1.0]));
        let svm = svm::train_one_vs_rest(&combined, &labels, 1.0, 1e-9, 1_000_000).unwrap();
        let bad = Array1::from_vec(vec![0.5]);
        assert!(eq1_objective(&grid, 0, &bad, &svm, 1.0).is_err());
    }
}
