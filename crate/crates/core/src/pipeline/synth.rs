//! Seeded synthetic gallery/probe generator for desk-scale verification.
//!
//! Source samples are Gaussian class clusters; target samples pass through
//! an affine shift A x + t plus extra noise, emulating the gallery/probe
//! quality gap. Each sample is emitted under three descriptor views that
//! reuse the ingestion-only tags: `vlad_sift` (clean), `fv_sift` (heavily
//! noised) and `bow` (class-uninformative noise), so the feature-kernel
//! learner has something real to choose between. Optionally every sample
//! is also rendered as a small blob image whose probe variant is passed
//! through an inverse contrast warp, giving the preprocessing stage real
//! work.

use std::path::Path;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::features::{export_features, FeatureSet, FeatureTag};
use crate::pipeline::manifest::{manifest_to_text, DatasetManifest, ManifestEntry};
use crate::preprocess::{io::save_image, ImageMatrix};

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub classes: usize,
    pub gallery_per_class: usize,
    pub probe_per_class: usize,
    pub dim: usize,
    /// Norm of the translation component of the domain shift.
    pub shift_translation: f64,
    /// Magnitude of the linear perturbation: A = I + m R / sqrt(dim).
    pub shift_linear: f64,
    /// Extra isotropic noise on target samples.
    pub noise_sigma: f64,
    /// Contrast warp applied to rendered probe images.
    pub contrast_gamma: f64,
    pub render_images: bool,
    /// Distance scale of the class means.
    pub class_spread: f64,
    /// Within-class standard deviation.
    pub within_sigma: f64,
    /// Noise level of the degraded fv_sift view.
    pub noisy_view_sigma: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            classes: 10,
            gallery_per_class: 20,
            probe_per_class: 10,
            dim: 8,
            shift_translation: 3.0,
            shift_linear: 0.1,
            noise_sigma: 0.2,
            contrast_gamma: 1.5,
            render_images: false,
            class_spread: 4.0,
            within_sigma: 0.6,
            noisy_view_sigma: 2.5,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Parameter("need at least 2 classes".into()));
        }
        if self.gallery_per_class == 0 || self.probe_per_class == 0 {
            return Err(Error::Parameter("per-class counts must be >= 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::Parameter("dim must be >= 1".into()));
        }
        if self.contrast_gamma <= 0.0 {
            return Err(Error::Parameter("contrast gamma must be positive".into()));
        }
        Ok(())
    }
}

/// The three emitted descriptor views.
pub const SYNTH_VIEWS: [FeatureTag; 3] = [FeatureTag::VladSift, FeatureTag::FvSift, FeatureTag::Bow];

#[derive(Debug, Clone)]
pub struct SynthDataset {
    /// One feature set per view, gallery side.
    pub gallery_views: Vec<(FeatureTag, FeatureSet)>,
    pub probe_views: Vec<(FeatureTag, FeatureSet)>,
    pub gallery_labels: Vec<usize>,
    pub probe_labels: Vec<usize>,
    pub gallery_images: Vec<ImageMatrix>,
    pub probe_images: Vec<ImageMatrix>,
}

fn sample_vec(rng: &mut ChaCha8Rng, normal: &Normal<f64>, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| normal.sample(rng)).collect()
}

/// Deterministic (per seed) synthetic gallery/probe pair with an affine
/// domain shift.
pub fn generate_synthetic(params: &SynthParams, seed: u64) -> Result<SynthDataset> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let d = params.dim;

    // class means
    let means: Vec<Vec<f64>> = (0..params.classes)
        .map(|_| {
            sample_vec(&mut rng, &unit, d)
                .into_iter()
                .map(|v| v * params.class_spread)
                .collect()
        })
        .collect();

    // affine shift: A = I + m R / sqrt(d), t = translation * u / ||u||
    let r = Array2::from_shape_fn((d, d), |_| unit.sample(&mut rng));
    let mut a = Array2::<f64>::eye(d);
    a.scaled_add(params.shift_linear / (d as f64).sqrt(), &r);
    let mut t = sample_vec(&mut rng, &unit, d);
    let t_norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
    if t_norm > 0.0 {
        for v in &mut t {
            *v *= params.shift_translation / t_norm;
        }
    }

    let n_gallery = params.classes * params.gallery_per_class;
    let n_probe = params.classes * params.probe_per_class;
    let mut gallery_base = Array2::<f64>::zeros((n_gallery, d));
    let mut gallery_labels = Vec::with_capacity(n_gallery);
    for k in 0..params.classes {
        for i in 0..params.gallery_per_class {
            let row = k * params.gallery_per_class + i;
            for c in 0..d {
                gallery_base[[row, c]] = means[k][c] + params.within_sigma * unit.sample(&mut rng);
            }
            gallery_labels.push(k);
        }
    }
    let mut probe_base = Array2::<f64>::zeros((n_probe, d));
    let mut probe_labels = Vec::with_capacity(n_probe);
    for k in 0..params.classes {
        for i in 0..params.probe_per_class {
            let row = k * params.probe_per_class + i;
            let x: Vec<f64> = (0..d)
                .map(|c| means[k][c] + params.within_sigma * unit.sample(&mut rng))
                .collect();
            for c in 0..d {
                let mut v = t[c];
                for cc in 0..d {
                    v += a[[c, cc]] * x[cc];
                }
                probe_base[[row, c]] = v + params.noise_sigma * unit.sample(&mut rng);
            }
            probe_labels.push(k);
        }
    }

    let make_views = |base: &Array2<f64>, labels: &[usize], rng: &mut ChaCha8Rng| -> Result<Vec<(FeatureTag, FeatureSet)>> {
        let n = base.nrows();
        let clean = base + &Array2::from_shape_fn((n, d), |_| 0.05 * unit.sample(rng));
        let noisy = base + &Array2::from_shape_fn((n, d), |_| params.noisy_view_sigma * unit.sample(rng));
        let noise_only =
            Array2::from_shape_fn((n, d), |_| params.class_spread * unit.sample(rng));
        Ok(vec![
            (
                FeatureTag::VladSift,
                FeatureSet::new(clean, labels.to_vec(), FeatureTag::VladSift)?,
            ),
            (
                FeatureTag::FvSift,
                FeatureSet::new(noisy, labels.to_vec(), FeatureTag::FvSift)?,
            ),
            (
                FeatureTag::Bow,
                FeatureSet::new(noise_only, labels.to_vec(), FeatureTag::Bow)?,
            ),
        ])
    };

    let gallery_views = make_views(&gallery_base, &gallery_labels, &mut rng)?;
    let probe_views = make_views(&probe_base, &probe_labels, &mut rng)?;

    let (gallery_images, probe_images) = if params.render_images {
        let gi = gallery_base
            .rows()
            .into_iter()
            .map(|row| render_blob_image(row.as_slice().unwrap(), 1.0))
            .collect::<Result<Vec<_>>>()?;
        let pi = probe_base
            .rows()
            .into_iter()
            .map(|row| render_blob_image(row.as_slice().unwrap(), params.contrast_gamma))
            .collect::<Result<Vec<_>>>()?;
        (gi, pi)
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(SynthDataset {
        gallery_views,
        probe_views,
        gallery_labels,
        probe_labels,
        gallery_images,
        probe_images,
    })
}

/// Render a feature vector as a 24x24 image of Gaussian bumps whose
/// amplitudes carry the vector's leading components. `warp_gamma` != 1
/// darkens the image with the inverse of the probe-enhancement power law.
fn render_blob_image(x: &[f64], warp_gamma: f64) -> Result<ImageMatrix> {
    const SIZE: usize = 24;
    const CENTERS: [(f64, f64); 9] = [
        (4.0, 4.0),
        (4.0, 12.0),
        (4.0, 20.0),
        (12.0, 4.0),
        (12.0, 12.0),
        (12.0, 20.0),
        (20.0, 4.0),
        (20.0, 12.0),
        (20.0, 20.0),
    ];
    let k = x.len().min(CENTERS.len());
    let mut px = Array2::<f64>::zeros((SIZE, SIZE));
    for i in 0..SIZE {
        for j in 0..SIZE {
            let mut v = 0.0;
            for (b, &(cy, cx)) in CENTERS.iter().enumerate().take(k) {
                let dy = i as f64 - cy;
                let dx = j as f64 - cx;
                v += x[b] * (-(dy * dy + dx * dx) / (2.0 * 9.0)).exp();
            }
            // squash into [0, 255]
            px[[i, j]] = 255.0 / (1.0 + (-v / 4.0).exp());
        }
    }
    if warp_gamma != 1.0 {
        // inverse of the enhancement power law out = 255 (in/255)^(1/g)
        px.mapv_inplace(|v| 255.0 * (v / 255.0).powf(warp_gamma));
    }
    ImageMatrix::new(px)
}

/// Write a generated dataset as a manifest plus per-view feature files
/// (and images when rendered). Returns the manifest path.
pub fn write_dataset(dataset: &SynthDataset, dir: &Path) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let with_images = !dataset.gallery_images.is_empty();

    let mut gallery_entries = Vec::new();
    for (i, &subject) in dataset.gallery_labels.iter().enumerate() {
        let path = if with_images {
            let p = format!("images/gallery_{i:05}.png");
            std::fs::create_dir_all(dir.join("images"))?;
            save_image(&dataset.gallery_images[i], &dir.join(&p))?;
            p
        } else {
            "-".to_string()
        };
        gallery_entries.push(ManifestEntry { subject, path });
    }
    let mut probe_entries = Vec::new();
    for (i, &subject) in dataset.probe_labels.iter().enumerate() {
        let path = if with_images {
            let p = format!("images/probe_{i:05}.png");
            save_image(&dataset.probe_images[i], &dir.join(&p))?;
            p
        } else {
            "-".to_string()
        };
        probe_entries.push(ManifestEntry { subject, path });
    }

    let manifest = DatasetManifest {
        gallery: gallery_entries,
        probes: probe_entries,
        pinned_targets: vec![],
        profile_name: Some("synthetic".to_string()),
        base_dir: dir.to_path_buf(),
    };
    let manifest_path = dir.join("manifest.txt");
    std::fs::write(&manifest_path, manifest_to_text(&manifest))?;

    for (tag, fs) in &dataset.gallery_views {
        export_features(fs, &dir.join(format!("gallery_{tag}.csv")))?;
    }
    for (tag, fs) in &dataset.probe_views {
        export_features(fs, &dir.join(format!("probe_{tag}.csv")))?;
    }
    Ok(manifest_path)
}
