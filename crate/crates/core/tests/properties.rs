//! Property tests for the contract invariants that hold on arbitrary
//! inputs rather than hand-picked instances.

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use facemkl::eval::{cmc, rank1, ScoreMatrix};
use facemkl::kernels::{kernel_eval, KernelKind, KernelSpec};
use facemkl::preprocess::{gamma_stretch, ImageMatrix};

fn kernel_specs() -> Vec<KernelSpec> {
    let mut poly = KernelSpec::new(KernelKind::Polynomial);
    poly.c = 0.5;
    vec![
        KernelSpec::new(KernelKind::Linear),
        poly,
        KernelSpec::new(KernelKind::Gaussian).with_sigma(1.2),
        KernelSpec::new(KernelKind::Rbf).with_sigma(0.9),
        KernelSpec::new(KernelKind::ChiSquare),
        KernelSpec::new(KernelKind::RbfChiSquare).with_sigma(1.1),
    ]
}

proptest! {
    #[test]
    fn kernels_are_symmetric_and_radial_kernels_bounded(
        xs in proptest::collection::vec(0.0f64..3.0, 4),
        ys in proptest::collection::vec(0.0f64..3.0, 4),
    ) {
        let x = Array1::from_vec(xs);
        let y = Array1::from_vec(ys);
        for spec in kernel_specs() {
            let a = kernel_eval(x.view(), y.view(), &spec).unwrap();
            let b = kernel_eval(y.view(), x.view(), &spec).unwrap();
            prop_assert_eq!(a, b);
            if matches!(spec.kind, KernelKind::Gaussian | KernelKind::Rbf) {
                prop_assert!(a > 0.0 && a <= 1.0);
            }
        }
    }

    #[test]
    fn cmc_is_monotone_and_anchored_at_rank1(
        rows in 1usize..8,
        cols in 2usize..6,
        values in proptest::collection::vec(0.0f64..1.0, 64),
        label_picks in proptest::collection::vec(0usize..6, 8),
    ) {
        let scores = Array2::from_shape_fn((rows, cols), |(i, j)| values[(i * cols + j) % values.len()]);
        let labels: Vec<usize> = (0..rows).map(|i| label_picks[i % label_picks.len()] % cols).collect();
        let sm = ScoreMatrix::new(scores, labels, (0..cols).collect()).unwrap();
        let curve = cmc(&sm);
        prop_assert!((curve[0] - rank1(&sm)).abs() < 1e-15);
        for w in curve.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert!((curve.last().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_round_trip_recovers_pixels(
        pixels in proptest::collection::vec(0.0f64..255.0, 12),
        gamma in 0.25f64..4.0,
    ) {
        let img = ImageMatrix::new(Array2::from_shape_vec((3, 4), pixels).unwrap()).unwrap();
        let there = gamma_stretch(&img, gamma).unwrap();
        let back = gamma_stretch(&there, 1.0 / gamma).unwrap();
        for (a, b) in back.pixels().iter().zip(img.pixels().iter()) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }
}
