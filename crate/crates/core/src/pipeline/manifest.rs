//! Dataset manifests: a line-based listing of gallery and probe samples
//! with subject ids, plus optional pinned domain-adaptation targets.
//!
//! ```text
//! # comment
//! profile fr_surv
//! gallery <subject-id> <path>
//! probe   <subject-id> <path>
//! target  <subject-id> <path>     # must match a probe line
//! ```
//!
//! Paths resolve against the manifest's directory. A path of `-` means
//! the sample has no image and exists only as rows in precomputed
//! feature files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject: usize,
    /// Path relative to the manifest directory, or `-`.
    pub path: String,
}

impl ManifestEntry {
    pub fn has_image(&self) -> bool {
        self.path != "-"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub gallery: Vec<ManifestEntry>,
    pub probes: Vec<ManifestEntry>,
    /// Indices into `probes` pinned as DA targets (may be empty; the
    /// config policy then draws them).
    pub pinned_targets: Vec<usize>,
    pub profile_name: Option<String>,
    /// Directory the manifest was loaded from; image and feature paths
    /// resolve against it.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, entry_path: &str) -> PathBuf {
        self.base_dir.join(entry_path)
    }

    pub fn gallery_labels(&self) -> Vec<usize> {
        self.gallery.iter().map(|e| e.subject).collect()
    }

    pub fn probe_labels(&self) -> Vec<usize> {
        self.probes.iter().map(|e| e.subject).collect()
    }
}

/// Parse and validate a manifest file.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read manifest {}: {e}", path.display())))?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    parse_manifest(&text, base_dir)
}

pub fn parse_manifest(text: &str, base_dir: PathBuf) -> Result<DatasetManifest> {
    let mut gallery = Vec::new();
    let mut probes = Vec::new();
    let mut targets: Vec<(usize, ManifestEntry)> = Vec::new(); // (line, entry)
    let mut profile_name = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let kind = parts.next().unwrap();
        if kind == "profile" {
            profile_name = Some(
                parts
                    .next()
                    .ok_or_else(|| Error::Validation(format!("line {lineno}: profile needs a name")))?
                    .to_string(),
            );
            continue;
        }
        let subject: usize = parts
            .next()
            .ok_or_else(|| Error::Validation(format!("line {lineno}: missing subject id")))?
            .parse()
            .map_err(|_| Error::Validation(format!("line {lineno}: bad subject id")))?;
        let entry_path = parts
            .next()
            .ok_or_else(|| Error::Validation(format!("line {lineno}: missing path")))?
            .to_string();
        if parts.next().is_some() {
            return Err(Error::Validation(format!("line {lineno}: trailing fields")));
        }
        let entry = ManifestEntry {
            subject,
            path: entry_path,
        };
        match kind {
            "gallery" => gallery.push(entry),
            "probe" => probes.push(entry),
            "target" => targets.push((lineno, entry)),
            other => {
                return Err(Error::Validation(format!(
                    "line {lineno}: unknown entry kind `{other}`"
                )))
            }
        }
    }

    if gallery.is_empty() {
        return Err(Error::Validation("manifest has an empty gallery".into()));
    }
    if probes.is_empty() {
        return Err(Error::Validation("manifest has no probe entries".into()));
    }

    let gallery_subjects: BTreeSet<usize> = gallery.iter().map(|e| e.subject).collect();
    for (idx, entry) in probes.iter().enumerate() {
        if !gallery_subjects.contains(&entry.subject) {
            // locate the original line for the message
            let lineno = find_entry_line(text, "probe", entry).unwrap_or(idx + 1);
            return Err(Error::Validation(format!(
                "line {lineno}: probe subject {} does not appear in the gallery",
                entry.subject
            )));
        }
    }

    let mut pinned = Vec::new();
    for (lineno, t) in targets {
        let found = probes
            .iter()
            .position(|p| p.subject == t.subject && p.path == t.path)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "line {lineno}: target ({} {}) does not match any probe entry",
                    t.subject, t.path
                ))
            })?;
        if !pinned.contains(&found) {
            pinned.push(found);
        }
    }

    Ok(DatasetManifest {
        gallery,
        probes,
        pinned_targets: pinned,
        profile_name,
        base_dir,
    })
}

fn find_entry_line(text: &str, kind: &str, entry: &ManifestEntry) -> Option<usize> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let mut parts = line.split_whitespace();
        if parts.next() == Some(kind)
            && parts.next() == Some(entry.subject.to_string().as_str())
            && parts.next() == Some(entry.path.as_str())
        {
            return Some(idx + 1);
        }
    }
    None
}

/// Serialize a manifest back to its text form.
pub fn manifest_to_text(m: &DatasetManifest) -> String {
    let mut out = String::new();
    if let Some(p) = &m.profile_name {
        out.push_str(&format!("profile {p}\n"));
    }
    for e in &m.gallery {
        out.push_str(&format!("gallery {} {}\n", e.subject, e.path));
    }
    for e in &m.probes {
        out.push_str(&format!("probe {} {}\n", e.subject, e.path));
    }
    for &i in &m.pinned_targets {
        let e = &m.probes[i];
        out.push_str(&format!("target {} {}\n", e.subject, e.path));
    }
    out
}
