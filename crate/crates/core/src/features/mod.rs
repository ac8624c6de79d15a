//! The holistic feature bank: five natively computed face descriptors
//! (eigenfaces, fisherfaces, weberfaces, LBP, Gabor) plus an ingestion path
//! for descriptors computed by external tools (BOW, FV-SIFT, VLAD-SIFT).

pub mod gabor;
pub mod lbp;
pub mod subspace;
pub mod weber;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight descriptor families plus the raw-pixel representation the
/// subspace extractors are trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTag {
    Eigenfaces,
    Fisherfaces,
    Weberfaces,
    Lbp,
    Gabor,
    Bow,
    FvSift,
    VladSift,
    RawPixels,
}

impl FeatureTag {
    pub const ALL: [FeatureTag; 9] = [
        FeatureTag::Eigenfaces,
        FeatureTag::Fisherfaces,
        FeatureTag::Weberfaces,
        FeatureTag::Lbp,
        FeatureTag::Gabor,
        FeatureTag::Bow,
        FeatureTag::FvSift,
        FeatureTag::VladSift,
        FeatureTag::RawPixels,
    ];

    /// True for descriptors that only enter through precomputed files.
    pub fn is_ingestion_only(self) -> bool {
        matches!(self, FeatureTag::Bow | FeatureTag::FvSift | FeatureTag::VladSift)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureTag::Eigenfaces => "eigenfaces",
            FeatureTag::Fisherfaces => "fisherfaces",
            FeatureTag::Weberfaces => "weberfaces",
            FeatureTag::Lbp => "lbp",
            FeatureTag::Gabor => "gabor",
            FeatureTag::Bow => "bow",
            FeatureTag::FvSift => "fv_sift",
            FeatureTag::VladSift => "vlad_sift",
            FeatureTag::RawPixels => "raw_pixels",
        }
    }
}

impl fmt::Display for FeatureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown feature tag `{s}`")))
    }
}

/// N x d matrix of row feature vectors with per-row class labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSet {
    pub vectors: Array2<f64>,
    pub labels: Vec<usize>,
    pub tag: FeatureTag,
}

impl FeatureSet {
    pub fn new(vectors: Array2<f64>, labels: Vec<usize>, tag: FeatureTag) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(Error::Input("feature set must be at least 1x1".into()));
        }
        if labels.len() != vectors.nrows() {
            return Err(Error::Input(format!(
                "label count {} does not match row count {}",
                labels.len(),
                vectors.nrows()
            )));
        }
        for (i, row) in vectors.rows().into_iter().enumerate() {
            if let Some((j, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::Input(format!(
                    "non-finite feature value {v} at row {i}, column {j}"
                )));
            }
        }
        Ok(FeatureSet { vectors, labels, tag })
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Distinct class ids in ascending order.
    pub fn class_ids(&self) -> Vec<usize> {
        let mut ids = self.labels.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Load a precomputed descriptor file.
///
/// Format: header line `# feature_tag=<tag> dim=<d>` followed by one CSV
/// row per sample, `d` feature values then an integer class label.
pub fn load_precomputed(path: &Path, expected_tag: FeatureTag) -> Result<FeatureSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input(format!("{}: empty file", path.display())))?;
    let (tag, dim) = parse_header(header, path)?;
    if tag != expected_tag {
        return Err(Error::Input(format!(
            "{}: header tag `{tag}` does not match requested `{expected_tag}`",
            path.display()
        )));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Input(format!(
                "{}: row {} has {} fields, expected {} values + label",
                path.display(),
                lineno + 1,
                fields.len(),
                dim
            )));
        }
        for (col, field) in fields[..dim].iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Input(format!(
                    "{}: row {}, column {}: cannot parse `{field}`",
                    path.display(),
                    lineno + 1,
                    col + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Input(format!(
                    "{}: non-finite value at row {}, column {}",
                    path.display(),
                    lineno + 1,
                    col + 1
                )));
            }
            rows.push(v);
        }
        let label: usize = fields[dim].trim().parse().map_err(|_| {
            Error::Input(format!(
                "{}: row {}: bad label `{}`",
                path.display(),
                lineno + 1,
                fields[dim]
            ))
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Input(format!("{}: no data rows", path.display())));
    }
    let vectors = Array2::from_shape_vec((labels.len(), dim), rows)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    FeatureSet::new(vectors, labels, tag)
}

/// Write a feature set in the precomputed-descriptor format. Values use
/// the shortest round-trip decimal form, so load-after-export is exact.
pub fn export_features(fs: &FeatureSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# feature_tag={} dim={}\n", fs.tag, fs.dim()));
    for (row, &label) in fs.vectors.rows().into_iter().zip(fs.labels.iter()) {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&vals.join(","));
        out.push(',');
        out.push_str(&label.to_string());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn parse_header(header: &str, path: &Path) -> Result<(FeatureTag, usize)> {
    let header = header.trim();
    let body = header.strip_prefix('#').map(str::trim).ok_or_else(|| {
        Error::Input(format!(
            "{}: first line must be `# feature_tag=<tag> dim=<d>`",
            path.display()
        ))
    })?;
    let mut tag = None;
    let mut dim = None;
    for part in body.split_whitespace() {
        if let Some(t) = part.strip_prefix("feature_tag=") {
            tag = Some(FeatureTag::from_str(t)?);
        } else if let Some(d) = part.strip_prefix("dim=") {
            dim = Some(d.parse::<usize>().map_err(|_| {
                Error::Input(format!("{}: bad dim `{d}` in header", path.display()))
            })?);
        }
    }
    match (tag, dim) {
        (Some(t), Some(d)) if d >= 1 => Ok((t, d)),
        _ => Err(Error::Input(format!(
            "{}: header must carry feature_tag and dim >= 1",
            path.display()
        ))),
    }
}
