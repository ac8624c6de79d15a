//! Stage orchestration: preprocess -> extract -> train-mfkc -> adapt ->
//! evaluate, with every stage reading its inputs from the previous stage's
//! checkpoint files. A run is fully determined by (config, manifest,
//! seed): rerunning any suffix of stages from checkpoints reproduces the
//! same report bytes.

pub mod config;
pub mod manifest;
pub mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::da::{self, DaParams, DaProblem, DaTransform};
use crate::embed::{fit_empirical_map, EmbedDim, EmpiricalKernelMap};
use crate::error::{Error, Result};
use crate::eval::{export_report, knn_score, load_report, EvalReport, PairEmbedding};
use crate::features::{
    export_features, gabor, lbp, load_precomputed, subspace, weber, FeatureSet, FeatureTag,
};
use crate::kernels::{clip_psd, gram_matrix, normalize_gram, self_diagonal, GramMatrix, KernelSpec};
use crate::mfkc::{select_pairs, FeatureKernelGrid, MfkcModel, MfkcParams};
use crate::preprocess::{
    gamma_stretch, gaussian_degrade, io, resize_bicubic, ImageMatrix, PreprocessParams,
};

pub use config::PipelineConfig;
pub use manifest::{load_manifest, DatasetManifest};

pub const RUN_SCHEMA: &str = "facemkl-run/1";
const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Preprocess,
    Extract,
    TrainMfkc,
    Adapt,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Preprocess,
        Stage::Extract,
        Stage::TrainMfkc,
        Stage::Adapt,
        Stage::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Extract => "extract",
            Stage::TrainMfkc => "train-mfkc",
            Stage::Adapt => "adapt",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Stage> {
        Stage::ALL
            .iter()
            .copied()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// File layout of a run directory.
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: &Path) -> Self {
        RunPaths {
            root: root.to_path_buf(),
        }
    }

    pub fn preprocessed_image(&self, set: &str, index: usize) -> PathBuf {
        self.root.join("preprocess").join(format!("{set}_{index:05}.png"))
    }

    pub fn features_csv(&self, set: &str, tag: FeatureTag) -> PathBuf {
        self.root.join("features").join(format!("{set}_{tag}.csv"))
    }

    pub fn mfkc_model(&self) -> PathBuf {
        self.root.join("mfkc").join("model.json")
    }

    pub fn targets(&self) -> PathBuf {
        self.root.join("adapt").join("targets.json")
    }

    pub fn pair(&self, index: usize) -> PathBuf {
        self.root.join("adapt").join(format!("pair_{index}.json"))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn run_record(&self) -> PathBuf {
        self.root.join("run.json")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub seed: u64,
    pub profile: Option<String>,
    pub completed_stages: Vec<String>,
    pub da_target_overlap: Option<bool>,
}

impl RunRecord {
    fn load_or_new(paths: &RunPaths, config: &PipelineConfig) -> RunRecord {
        std::fs::read_to_string(paths.run_record())
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_else(|| RunRecord {
                schema: RUN_SCHEMA.to_string(),
                seed: config.seed,
                profile: config.profile.clone(),
                completed_stages: Vec::new(),
                da_target_overlap: None,
            })
    }

    fn mark(&mut self, stage: Stage) {
        let name = stage.as_str().to_string();
        if !self.completed_stages.contains(&name) {
            self.completed_stages.push(name);
        }
    }

    fn save(&self, paths: &RunPaths) -> Result<()> {
        std::fs::create_dir_all(&paths.root)?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(paths.run_record(), text)?;
        Ok(())
    }
}

/// Checkpoint written by the train-mfkc stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfkcCheckpoint {
    pub schema: String,
    pub feature_tags: Vec<FeatureTag>,
    pub model: MfkcModel,
    /// Fully resolved (feature tag, kernel spec) per selected pair.
    pub pair_specs: Vec<(FeatureTag, KernelSpec)>,
}

/// Checkpoint written by the adapt stage, one per selected pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCheckpoint {
    pub schema: String,
    pub feature_tag: FeatureTag,
    pub kernel_spec: KernelSpec,
    /// Post-clip kernel self-evaluations of the gallery anchors, used to
    /// normalize cross grams consistently.
    pub gallery_diag: Vec<f64>,
    pub map: EmpiricalKernelMap,
    pub da: Option<DaTransform>,
}

/// Square training gram: raw kernel, projected onto the PSD cone, then
/// cosine-normalized with the post-clip diagonal (congruence keeps PSD and
/// gives an exact unit diagonal). Returns the post-clip diagonal for
/// cross-gram normalization.
pub fn build_training_gram(x: &Array2<f64>, spec: &KernelSpec) -> Result<(GramMatrix, Vec<f64>)> {
    let raw = gram_matrix(x, x, spec)?;
    let clipped = clip_psd(&raw, PSD_TOL)?;
    let diag: Vec<f64> = (0..clipped.nrows()).map(|i| clipped.values[[i, i]]).collect();
    let normalized = normalize_gram(&clipped, &diag, &diag)?;
    Ok((normalized, diag))
}

/// Cross gram of test rows against the training anchors, normalized with
/// the anchors' stored post-clip diagonal.
pub fn build_cross_gram(
    test: &Array2<f64>,
    train: &Array2<f64>,
    spec: &KernelSpec,
    train_diag: &[f64],
) -> Result<GramMatrix> {
    let raw = gram_matrix(test, train, spec)?;
    let test_diag = self_diagonal(test, spec)?;
    normalize_gram(&raw, &test_diag, train_diag)
}

/// Deterministic DA-target selection: pinned manifest entries when
/// present, otherwise `target_subjects` subjects (0 = all) with
/// `target_samples_per_class` probe rows each, drawn from a dedicated
/// stream of the run seed. Returned indices are ascending.
pub fn select_da_targets(config: &PipelineConfig, man: &DatasetManifest) -> Vec<usize> {
    if !man.pinned_targets.is_empty() {
        let mut pinned = man.pinned_targets.clone();
        pinned.sort_unstable();
        return pinned;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0xda);

    let mut subjects: Vec<usize> = man.probes.iter().map(|e| e.subject).collect();
    subjects.sort_unstable();
    subjects.dedup();
    if config.da.target_subjects > 0 && config.da.target_subjects < subjects.len() {
        subjects.shuffle(&mut rng);
        subjects.truncate(config.da.target_subjects);
        subjects.sort_unstable();
    }

    let mut selected = Vec::new();
    for &subject in &subjects {
        let mut pool: Vec<usize> = man
            .probes
            .iter()
            .enumerate()
            .filter(|(_, e)| e.subject == subject)
            .map(|(i, _)| i)
            .collect();
        pool.shuffle(&mut rng);
        pool.truncate(config.da.target_samples_per_class.min(pool.len()));
        selected.extend(pool);
    }
    selected.sort_unstable();
    selected
}

fn load_feature_checkpoint(
    paths: &RunPaths,
    set: &str,
    tag: FeatureTag,
) -> Result<FeatureSet> {
    load_precomputed(&paths.features_csv(set, tag), tag)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string(value).map_err(|e| Error::Serialization(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("missing checkpoint {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

fn stage_preprocess(config: &PipelineConfig, man: &DatasetManifest, paths: &RunPaths) -> Result<()> {
    if config.native_tags().is_empty() {
        // all features arrive precomputed; nothing to do
        return Ok(());
    }
    let params = PreprocessParams {
        sigma: config.preprocess.sigma,
        gamma: config.preprocess.gamma,
        target_size: (config.preprocess.target_height, config.preprocess.target_width),
    };
    params.validate()?;
    std::fs::create_dir_all(paths.root.join("preprocess"))?;

    for (i, entry) in man.gallery.iter().enumerate() {
        if !entry.has_image() {
            return Err(Error::Validation(format!(
                "gallery entry {i} has no image but native features are enabled"
            )));
        }
        let img = io::load_image(&man.resolve(&entry.path))?;
        let degraded = gaussian_degrade(&img, params.sigma)?;
        let resized = resize_bicubic(&degraded, params.target_size)?;
        io::save_image(&resized, &paths.preprocessed_image("gallery", i))?;
    }
    for (i, entry) in man.probes.iter().enumerate() {
        if !entry.has_image() {
            return Err(Error::Validation(format!(
                "probe entry {i} has no image but native features are enabled"
            )));
        }
        let img = io::load_image(&man.resolve(&entry.path))?;
        let clamped = ImageMatrix::new(img.pixels().mapv(|v| v.clamp(0.0, 255.0)))?;
        let enhanced = gamma_stretch(&clamped, params.gamma)?;
        let resized = resize_bicubic(&enhanced, params.target_size)?;
        io::save_image(&resized, &paths.preprocessed_image("probe", i))?;
    }
    Ok(())
}

fn load_preprocessed(paths: &RunPaths, set: &str, count: usize) -> Result<Vec<ImageMatrix>> {
    (0..count)
        .map(|i| io::load_image(&paths.preprocessed_image(set, i)))
        .collect()
}

fn raw_pixel_set(images: &[ImageMatrix], labels: &[usize]) -> Result<FeatureSet> {
    let dim = images[0].height() * images[0].width();
    let mut rows = Array2::<f64>::zeros((images.len(), dim));
    for (i, img) in images.iter().enumerate() {
        let v = img.to_vector();
        if v.len() != dim {
            return Err(Error::Input("preprocessed images disagree on size".into()));
        }
        for (j, x) in v.into_iter().enumerate() {
            rows[[i, j]] = x;
        }
    }
    FeatureSet::new(rows, labels.to_vec(), FeatureTag::RawPixels)
}

fn rows_from_vectors(vectors: Vec<Vec<f64>>, labels: &[usize], tag: FeatureTag) -> Result<FeatureSet> {
    let dim = vectors[0].len();
    let mut rows = Array2::<f64>::zeros((vectors.len(), dim));
    for (i, v) in vectors.into_iter().enumerate() {
        if v.len() != dim {
            return Err(Error::Input("descriptor lengths disagree across samples".into()));
        }
        for (j, x) in v.into_iter().enumerate() {
            rows[[i, j]] = x;
        }
    }
    FeatureSet::new(rows, labels.to_vec(), tag)
}

fn stage_extract(config: &PipelineConfig, man: &DatasetManifest, paths: &RunPaths) -> Result<()> {
    std::fs::create_dir_all(paths.root.join("features"))?;
    let gallery_labels = man.gallery_labels();
    let probe_labels = man.probe_labels();

    let native = config.native_tags();
    let (gallery_images, probe_images) = if native.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (
            load_preprocessed(paths, "gallery", man.gallery.len())?,
            load_preprocessed(paths, "probe", man.probes.len())?,
        )
    };

    let gallery_raw = if native.is_empty() {
        None
    } else {
        Some(raw_pixel_set(&gallery_images, &gallery_labels)?)
    };
    let probe_raw = if native.is_empty() {
        None
    } else {
        Some(raw_pixel_set(&probe_images, &probe_labels)?)
    };

    for &tag in &config.features.enabled {
        let (gallery_fs, probe_fs) = match tag {
            FeatureTag::Eigenfaces => {
                let graw = gallery_raw.as_ref().unwrap();
                let praw = probe_raw.as_ref().unwrap();
                let bound = usize::min(graw.len().saturating_sub(1), graw.dim());
                let dim = config.features.eigenfaces_dim.clamp(1, bound.max(1));
                let projector = subspace::fit_eigenfaces(graw, dim)?;
                (
                    projector.project_set(graw, tag)?,
                    projector.project_set(praw, tag)?,
                )
            }
            FeatureTag::Fisherfaces => {
                let graw = gallery_raw.as_ref().unwrap();
                let praw = probe_raw.as_ref().unwrap();
                let classes = graw.class_ids().len();
                if classes < 2 {
                    return Err(Error::Validation("fisherfaces needs at least 2 subjects".into()));
                }
                let requested = config.features.fisherfaces_dim;
                let dim = if requested == 0 { classes - 1 } else { requested.min(classes - 1) };
                let projector = subspace::fit_fisherfaces(graw, dim)?;
                (
                    projector.project_set(graw, tag)?,
                    projector.project_set(praw, tag)?,
                )
            }
            FeatureTag::Weberfaces => {
                let g: Vec<Vec<f64>> = gallery_images.iter().map(weber::weberface).collect::<Result<_>>()?;
                let p: Vec<Vec<f64>> = probe_images.iter().map(weber::weberface).collect::<Result<_>>()?;
                (
                    rows_from_vectors(g, &gallery_labels, tag)?,
                    rows_from_vectors(p, &probe_labels, tag)?,
                )
            }
            FeatureTag::Lbp => {
                let grid = config.features.lbp_grid;
                let g: Vec<Vec<f64>> = gallery_images
                    .iter()
                    .map(|img| lbp::lbp_histogram(img, grid))
                    .collect::<Result<_>>()?;
                let p: Vec<Vec<f64>> = probe_images
                    .iter()
                    .map(|img| lbp::lbp_histogram(img, grid))
                    .collect::<Result<_>>()?;
                (
                    rows_from_vectors(g, &gallery_labels, tag)?,
                    rows_from_vectors(p, &probe_labels, tag)?,
                )
            }
            FeatureTag::Gabor => {
                let params = gabor::GaborBankParams::new(
                    config.features.gabor_scales,
                    config.features.gabor_orientations,
                    config.features.gabor_downsample,
                );
                let g: Vec<Vec<f64>> = gallery_images
                    .iter()
                    .map(|img| gabor::gabor_features(img, &params))
                    .collect::<Result<_>>()?;
                let p: Vec<Vec<f64>> = probe_images
                    .iter()
                    .map(|img| gabor::gabor_features(img, &params))
                    .collect::<Result<_>>()?;
                (
                    rows_from_vectors(g, &gallery_labels, tag)?,
                    rows_from_vectors(p, &probe_labels, tag)?,
                )
            }
            FeatureTag::Bow | FeatureTag::FvSift | FeatureTag::VladSift => {
                let entry = config
                    .features
                    .precomputed
                    .get(tag.as_str())
                    .expect("validated in config");
                let g = load_precomputed(&man.resolve(&entry.gallery), tag)?;
                let p = load_precomputed(&man.resolve(&entry.probe), tag)?;
                validate_against_manifest(&g, &gallery_labels, tag, "gallery")?;
                validate_against_manifest(&p, &probe_labels, tag, "probe")?;
                (g, p)
            }
            FeatureTag::RawPixels => unreachable!("rejected by config validation"),
        };
        export_features(&gallery_fs, &paths.features_csv("gallery", tag))?;
        export_features(&probe_fs, &paths.features_csv("probe", tag))?;
    }
    Ok(())
}

fn validate_against_manifest(
    fs: &FeatureSet,
    manifest_labels: &[usize],
    tag: FeatureTag,
    set: &str,
) -> Result<()> {
    if fs.len() != manifest_labels.len() {
        return Err(Error::Validation(format!(
            "{set} {tag} file has {} rows, manifest lists {} samples",
            fs.len(),
            manifest_labels.len()
        )));
    }
    if fs.labels != manifest_labels {
        return Err(Error::Validation(format!(
            "{set} {tag} labels do not match the manifest order"
        )));
    }
    Ok(())
}

fn stage_train_mfkc(config: &PipelineConfig, _man: &DatasetManifest, paths: &RunPaths) -> Result<()> {
    let tags = config.features.enabled.clone();
    let mut feature_sets = Vec::with_capacity(tags.len());
    for &tag in &tags {
        feature_sets.push(load_feature_checkpoint(paths, "gallery", tag)?);
    }
    let labels = feature_sets[0].labels.clone();
    for fs in &feature_sets {
        if fs.labels != labels {
            return Err(Error::Validation("gallery feature files disagree on labels".into()));
        }
    }

    let mut grams: Vec<Vec<GramMatrix>> = Vec::with_capacity(tags.len());
    for fs in &feature_sets {
        let mut row = Vec::with_capacity(config.kernels.len());
        for kcfg in &config.kernels {
            let spec = kcfg.resolve(&fs.vectors);
            let (g, _) = build_training_gram(&fs.vectors, &spec)?;
            row.push(g);
        }
        grams.push(row);
    }
    let template_specs: Vec<KernelSpec> = config
        .kernels
        .iter()
        .map(|k| k.resolve(&feature_sets[0].vectors))
        .collect();
    let grid = FeatureKernelGrid::new(grams, tags.clone(), template_specs, labels)?;

    let params = MfkcParams {
        c: config.train.c,
        tol: config.train.beta_tol,
        max_sweeps: config.train.max_sweeps,
        ..MfkcParams::new(config.train.c)
    };
    let model = select_pairs(&grid, &params)?;

    let pair_specs: Vec<(FeatureTag, KernelSpec)> = model
        .selected_pairs
        .iter()
        .map(|&(m, q)| (grid.feature_tags[m], grid.grams[m][q].spec.clone()))
        .collect();
    let checkpoint = MfkcCheckpoint {
        schema: "facemkl-mfkc/1".to_string(),
        feature_tags: tags,
        model,
        pair_specs,
    };
    write_json(&paths.mfkc_model(), &checkpoint)
}

fn stage_adapt(config: &PipelineConfig, man: &DatasetManifest, paths: &RunPaths) -> Result<()> {
    let checkpoint: MfkcCheckpoint = read_json(&paths.mfkc_model())?;
    let targets = select_da_targets(config, man);
    write_json(&paths.targets(), &targets)?;

    for (i, (tag, spec)) in checkpoint.pair_specs.iter().enumerate() {
        let gallery = load_feature_checkpoint(paths, "gallery", *tag)?;
        let (g_norm, diag) = build_training_gram(&gallery.vectors, spec)?;
        let dim = if config.embed.dim == 0 {
            EmbedDim::Auto
        } else {
            EmbedDim::Fixed(config.embed.dim)
        };
        let map = fit_empirical_map(&g_norm, dim, config.embed.eig_tol)?;

        let da_result = if config.da.enabled {
            let probe = load_feature_checkpoint(paths, "probe", *tag)?;
            let mut target_rows = Array2::<f64>::zeros((targets.len(), probe.dim()));
            let mut target_labels = Vec::with_capacity(targets.len());
            for (r, &idx) in targets.iter().enumerate() {
                target_rows.row_mut(r).assign(&probe.vectors.row(idx));
                target_labels.push(probe.labels[idx]);
            }
            let z_targets = if targets.is_empty() {
                Array2::<f64>::zeros((0, map.dim))
            } else {
                let cross = build_cross_gram(&target_rows, &gallery.vectors, spec, &diag)?;
                map.embed_points(&cross)?
            };
            let problem = DaProblem {
                source_x: map.train_coords(),
                source_y: gallery.labels.clone(),
                target_x: z_targets,
                target_y: target_labels,
                c_source: config.da.c_source,
                c_target: config.da.c_target,
            };
            let params = DaParams {
                sweeps: config.da.sweeps,
                tol: config.da.tol,
                inner_iterations: config.da.inner_iterations,
                ..DaParams::default()
            };
            Some(da::train_transform(&problem, &params)?)
        } else {
            None
        };

        let pair = PairCheckpoint {
            schema: "facemkl-pair/1".to_string(),
            feature_tag: *tag,
            kernel_spec: spec.clone(),
            gallery_diag: diag,
            map,
            da: da_result,
        };
        write_json(&paths.pair(i), &pair)?;
    }
    Ok(())
}

fn stage_evaluate(config: &PipelineConfig, _man: &DatasetManifest, paths: &RunPaths) -> Result<EvalReport> {
    let checkpoint: MfkcCheckpoint = read_json(&paths.mfkc_model())?;
    let targets: Vec<usize> = read_json(&paths.targets())?;

    let mut pairs = Vec::new();
    let mut probe_labels: Option<Vec<usize>> = None;
    for i in 0..checkpoint.pair_specs.len() {
        let pair: PairCheckpoint = read_json(&paths.pair(i))?;
        let gallery = load_feature_checkpoint(paths, "gallery", pair.feature_tag)?;
        let probe = load_feature_checkpoint(paths, "probe", pair.feature_tag)?;
        if let Some(labels) = &probe_labels {
            if labels != &probe.labels {
                return Err(Error::Validation("probe feature files disagree on labels".into()));
            }
        } else {
            probe_labels = Some(probe.labels.clone());
        }

        let z_gallery = pair.map.train_coords();
        let gallery_embedded = match &pair.da {
            Some(transform) => da::transform_rows(&transform.w, &z_gallery)?,
            None => z_gallery,
        };
        let cross = build_cross_gram(
            &probe.vectors,
            &gallery.vectors,
            &pair.kernel_spec,
            &pair.gallery_diag,
        )?;
        let z_probe = pair.map.embed_points(&cross)?;
        pairs.push(PairEmbedding {
            gallery: gallery_embedded,
            gallery_labels: gallery.labels.clone(),
            probe: z_probe,
        });
    }

    let probe_labels = probe_labels.ok_or_else(|| Error::Input("no pairs to evaluate".into()))?;
    let scores = knn_score(&pairs, &probe_labels, config.eval.fusion)?;
    let overlap = config.da.enabled && !targets.is_empty();
    let report = EvalReport::from_scores(&scores, overlap)?;
    export_report(&report, &paths.report_dir())?;
    Ok(report)
}

/// Run the given stages in order (they must be contiguous and ordered).
pub fn run_stages(
    config: &PipelineConfig,
    man: &DatasetManifest,
    out_dir: &Path,
    stages: &[Stage],
) -> Result<Option<EvalReport>> {
    config.validate()?;
    let paths = RunPaths::new(out_dir);
    std::fs::create_dir_all(&paths.root)?;
    let mut record = RunRecord::load_or_new(&paths, config);
    let mut report = None;

    for &stage in stages {
        let result: Result<()> = match stage {
            Stage::Preprocess => stage_preprocess(config, man, &paths),
            Stage::Extract => stage_extract(config, man, &paths),
            Stage::TrainMfkc => stage_train_mfkc(config, man, &paths),
            Stage::Adapt => stage_adapt(config, man, &paths),
            Stage::Evaluate => match stage_evaluate(config, man, &paths) {
                Ok(r) => {
                    record.da_target_overlap = Some(r.da_target_overlap);
                    report = Some(r);
                    Ok(())
                }
                Err(e) => Err(e),
            },
        };
        // partial checkpoints stay on disk either way
        result.map_err(|e| e.in_stage(stage.as_str()))?;
        record.mark(stage);
        record.save(&paths)?;
    }
    Ok(report)
}

/// Execute the pipeline from `from` (default: the beginning) to the end,
/// returning the final report.
pub fn run_pipeline(
    config: &PipelineConfig,
    man: &DatasetManifest,
    out_dir: &Path,
    from: Option<Stage>,
) -> Result<EvalReport> {
    let start = from.unwrap_or(Stage::Preprocess);
    let idx = Stage::ALL.iter().position(|&s| s == start).unwrap();
    let report = run_stages(config, man, out_dir, &Stage::ALL[idx..])?;
    report.ok_or_else(|| Error::Validation("pipeline finished without a report".into()))
}

/// Convenience: read back the report of a finished run.
pub fn load_run_report(out_dir: &Path) -> Result<EvalReport> {
    load_report(&RunPaths::new(out_dir).report_dir())
}

/// Map of feature tag -> precomputed path pair used when generating
/// synthetic configs.
pub fn synth_precomputed_map(views: &[FeatureTag]) -> BTreeMap<String, config::PrecomputedPaths> {
    views
        .iter()
        .map(|tag| {
            (
                tag.as_str().to_string(),
                config::PrecomputedPaths {
                    gallery: format!("gallery_{tag}.csv"),
                    probe: format!("probe_{tag}.csv"),
                },
            )
        })
        .collect()
}
