//! Pipeline configuration: TOML with one table per stage. Dataset
//! profiles (fr_surv, scface, chokepoint) ship embedded and carry the
//! published degradation/enhancement parameters and target-sampling
//! policies for those datasets.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Fusion;
use crate::features::FeatureTag;
use crate::kernels::{median_heuristic_sigma, KernelKind, KernelSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub seed: u64,
    #[serde(default)]
    pub profile: Option<String>,
    pub preprocess: PreprocessConfig,
    pub features: FeaturesConfig,
    pub kernels: Vec<KernelConfig>,
    pub train: TrainConfig,
    #[serde(default)]
    pub embed: EmbedConfig,
    pub da: DaConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

fn default_schema() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    pub sigma: f64,
    pub gamma: f64,
    pub target_height: usize,
    pub target_width: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesConfig {
    /// Subset of the descriptor bank to run.
    pub enabled: Vec<FeatureTag>,
    #[serde(default = "default_pca_dim")]
    pub eigenfaces_dim: usize,
    /// 0 means C-1.
    #[serde(default)]
    pub fisherfaces_dim: usize,
    #[serde(default = "default_lbp_grid")]
    pub lbp_grid: (usize, usize),
    #[serde(default = "default_gabor_scales")]
    pub gabor_scales: usize,
    #[serde(default = "default_gabor_orientations")]
    pub gabor_orientations: usize,
    #[serde(default = "default_gabor_downsample")]
    pub gabor_downsample: usize,
    /// Files for the ingestion-only descriptors, per tag; paths resolve
    /// against the manifest directory.
    #[serde(default)]
    pub precomputed: BTreeMap<String, PrecomputedPaths>,
}

fn default_pca_dim() -> usize {
    40
}
fn default_lbp_grid() -> (usize, usize) {
    (4, 4)
}
fn default_gabor_scales() -> usize {
    5
}
fn default_gabor_orientations() -> usize {
    8
}
fn default_gabor_downsample() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecomputedPaths {
    pub gallery: String,
    pub probe: String,
}

/// One kernel entry; omitted parameters fall back to c=0, alpha=1,
/// degree=2 and the median-distance bandwidth.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub rbf_squared_norm: bool,
}

fn default_alpha() -> f64 {
    1.0
}
fn default_degree() -> u32 {
    2
}

impl KernelConfig {
    /// Resolve to a concrete spec for one feature representation; the
    /// bandwidth default is that feature's median pairwise distance.
    pub fn resolve(&self, feature_rows: &ndarray::Array2<f64>) -> KernelSpec {
        let sigma = self
            .sigma
            .unwrap_or_else(|| median_heuristic_sigma(feature_rows));
        KernelSpec {
            kind: self.kind,
            c: self.c,
            alpha: self.alpha,
            degree: self.degree,
            sigma,
            rbf_squared_norm: self.rbf_squared_norm,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub c: f64,
    #[serde(default = "default_beta_tol")]
    pub beta_tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_beta_tol() -> f64 {
    1e-6
}
fn default_max_sweeps() -> usize {
    30
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    /// 0 keeps the numerical rank.
    #[serde(default)]
    pub dim: usize,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 0,
            eig_tol: default_eig_tol(),
        }
    }
}

fn default_eig_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaConfig {
    /// false = naive mode (no adaptation).
    pub enabled: bool,
    #[serde(default = "default_c_source")]
    pub c_source: f64,
    #[serde(default = "default_c_target")]
    pub c_target: f64,
    #[serde(default = "default_da_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_da_tol")]
    pub tol: f64,
    #[serde(default = "default_inner_iterations")]
    pub inner_iterations: usize,
    /// Labeled probe samples per subject drawn as target data.
    #[serde(default = "default_target_samples")]
    pub target_samples_per_class: usize,
    /// Number of subjects to draw targets from; 0 = all subjects.
    #[serde(default)]
    pub target_subjects: usize,
}

fn default_c_source() -> f64 {
    1.0
}
fn default_c_target() -> f64 {
    10.0
}
fn default_da_sweeps() -> usize {
    8
}
fn default_da_tol() -> f64 {
    1e-6
}
fn default_inner_iterations() -> usize {
    500
}
fn default_target_samples() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_fusion")]
    pub fusion: Fusion,
    /// Neighbors per class; 1 reproduces nearest-sample identification.
    #[serde(default = "default_k")]
    pub k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fusion: default_fusion(),
            k: default_k(),
        }
    }
}

fn default_fusion() -> Fusion {
    Fusion::SumNormalized
}
fn default_k() -> usize {
    1
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        PipelineConfig::from_toml(&text)
    }

    /// Embedded dataset profile by name: fr_surv, scface or chokepoint.
    pub fn profile(name: &str) -> Result<PipelineConfig> {
        let text = match name {
            "fr_surv" => include_str!("../../profiles/fr_surv.toml"),
            "scface" => include_str!("../../profiles/scface.toml"),
            "chokepoint" => include_str!("../../profiles/chokepoint.toml"),
            other => {
                return Err(Error::Config(format!(
                    "unknown profile `{other}` (expected fr_surv, scface or chokepoint)"
                )))
            }
        };
        PipelineConfig::from_toml(text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::Config(format!("unsupported config schema {}", self.schema)));
        }
        if self.features.enabled.is_empty() {
            return Err(Error::Config("at least one feature must be enabled".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::Config("at least one kernel must be configured".into()));
        }
        for tag in &self.features.enabled {
            if *tag == FeatureTag::RawPixels {
                return Err(Error::Config("raw_pixels is internal and cannot be enabled".into()));
            }
            if tag.is_ingestion_only() && !self.features.precomputed.contains_key(tag.as_str()) {
                return Err(Error::Config(format!(
                    "feature `{tag}` is ingestion-only and needs [features.precomputed.{tag}] paths"
                )));
            }
        }
        if self.preprocess.sigma <= 0.0 || self.preprocess.gamma <= 0.0 {
            return Err(Error::Config("preprocess sigma and gamma must be positive".into()));
        }
        if self.preprocess.target_height == 0 || self.preprocess.target_width == 0 {
            return Err(Error::Config("preprocess target size must be positive".into()));
        }
        if self.train.c <= 0.0 {
            return Err(Error::Config("train.c must be positive".into()));
        }
        for k in &self.kernels {
            if let Some(s) = k.sigma {
                if s <= 0.0 {
                    return Err(Error::Config("kernel sigma must be positive when given".into()));
                }
            }
            if k.degree < 1 {
                return Err(Error::Config("kernel degree must be >= 1".into()));
            }
        }
        if self.da.c_source < 0.0 || self.da.c_target < 0.0 {
            return Err(Error::Config("da hinge weights must be nonnegative".into()));
        }
        if self.eval.k != 1 {
            return Err(Error::Config("only k = 1 identification is implemented".into()));
        }
        Ok(())
    }

    /// Feature tags computed from images (everything enabled that is not
    /// ingestion-only).
    pub fn native_tags(&self) -> Vec<FeatureTag> {
        self.features
            .enabled
            .iter()
            .copied()
            .filter(|t| !t.is_ingestion_only())
            .collect()
    }
}
