//! Nearest-neighbor identification over transformed gallery embeddings,
//! and the biometric metrics: rank-1 rate, CMC curve, and verification ROC
//! with its AUC. Scores are distances: lower is better, ties break toward
//! the lowest class index.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-pair embeddings entering score-level fusion.
#[derive(Debug, Clone)]
pub struct PairEmbedding {
    pub gallery: Array2<f64>,
    pub gallery_labels: Vec<usize>,
    pub probe: Array2<f64>,
}

/// How per-pair distance matrices combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Sum of per-pair min-max-normalized distances (default).
    SumNormalized,
    /// Elementwise minimum of raw distances.
    Min,
    /// Majority vote over per-pair nearest classes.
    Vote,
}

/// Probe-by-class distance matrix (lower = better match).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub scores: Array2<f64>,
    pub probe_labels: Vec<usize>,
    pub class_ids: Vec<usize>,
}

impl ScoreMatrix {
    pub fn new(scores: Array2<f64>, probe_labels: Vec<usize>, class_ids: Vec<usize>) -> Result<Self> {
        if scores.nrows() != probe_labels.len() {
            return Err(Error::Input("probe labels do not match score rows".into()));
        }
        if scores.ncols() != class_ids.len() {
            return Err(Error::Input("class ids do not match score columns".into()));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("scores must be finite".into()));
        }
        let mut seen = class_ids.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != class_ids.len() {
            return Err(Error::Input("class ids must be distinct".into()));
        }
        for &l in &probe_labels {
            if !class_ids.contains(&l) {
                return Err(Error::Input(format!(
                    "probe label {l} is not among the gallery classes"
                )));
            }
        }
        Ok(ScoreMatrix {
            scores,
            probe_labels,
            class_ids,
        })
    }
}

fn min_distance_matrix(pair: &PairEmbedding, class_ids: &[usize]) -> Result<Array2<f64>> {
    if pair.gallery.nrows() != pair.gallery_labels.len() {
        return Err(Error::Input("gallery labels do not match rows".into()));
    }
    if pair.gallery.ncols() != pair.probe.ncols() {
        return Err(Error::Input(format!(
            "gallery dimension {} != probe dimension {}",
            pair.gallery.ncols(),
            pair.probe.ncols()
        )));
    }
    let mut out = Array2::<f64>::zeros((pair.probe.nrows(), class_ids.len()));
    for (pi, probe) in pair.probe.rows().into_iter().enumerate() {
        for (ci, &cid) in class_ids.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (gi, gal) in pair.gallery.rows().into_iter().enumerate() {
                if pair.gallery_labels[gi] != cid {
                    continue;
                }
                let d: f64 = probe
                    .iter()
                    .zip(gal.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                best = best.min(d.sqrt());
            }
            if !best.is_finite() {
                return Err(Error::Input(format!("gallery class {cid} is empty")));
            }
            out[[pi, ci]] = best;
        }
    }
    Ok(out)
}

fn min_max_normalize(m: &Array2<f64>) -> Array2<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in m.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi > lo {
        m.mapv(|v| (v - lo) / (hi - lo))
    } else {
        Array2::zeros(m.raw_dim())
    }
}

/// Nearest-gallery-sample distances per class, one matrix per selected
/// pair, fused into a single score matrix.
pub fn knn_score(
    pairs: &[PairEmbedding],
    probe_labels: &[usize],
    fusion: Fusion,
) -> Result<ScoreMatrix> {
    if pairs.is_empty() {
        return Err(Error::Input("need at least one pair embedding".into()));
    }
    let mut class_ids = pairs[0].gallery_labels.clone();
    class_ids.sort_unstable();
    class_ids.dedup();
    for pair in pairs.iter().skip(1) {
        let mut ids = pair.gallery_labels.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids != class_ids {
            return Err(Error::Input("pair embeddings disagree on gallery classes".into()));
        }
        if pair.probe.nrows() != pairs[0].probe.nrows() {
            return Err(Error::Input("pair embeddings disagree on probe count".into()));
        }
    }

    let per_pair: Vec<Array2<f64>> = pairs
        .iter()
        .map(|p| min_distance_matrix(p, &class_ids))
        .collect::<Result<_>>()?;

    let fused = match fusion {
        Fusion::SumNormalized => {
            let mut acc = Array2::<f64>::zeros(per_pair[0].raw_dim());
            for m in &per_pair {
                acc += &min_max_normalize(m);
            }
            acc
        }
        Fusion::Min => {
            let mut acc = per_pair[0].clone();
            for m in per_pair.iter().skip(1) {
                acc.zip_mut_with(m, |a, &b| *a = a.min(b));
            }
            acc
        }
        Fusion::Vote => {
            // each pair votes for its nearest class; fused score = P - votes
            let (np, nc) = per_pair[0].dim();
            let mut votes = Array2::<f64>::zeros((np, nc));
            for m in &per_pair {
                for i in 0..np {
                    let mut best = 0usize;
                    for c in 1..nc {
                        if m[[i, c]] < m[[i, best]] {
                            best = c;
                        }
                    }
                    votes[[i, best]] += 1.0;
                }
            }
            votes.mapv(|v| pairs.len() as f64 - v)
        }
    };

    ScoreMatrix::new(fused, probe_labels.to_vec(), class_ids)
}

/// Rank position (1-based) of each probe's true class under ascending
/// (score, class-index) order.
fn true_class_ranks(sm: &ScoreMatrix) -> Vec<usize> {
    sm.scores
        .rows()
        .into_iter()
        .zip(sm.probe_labels.iter())
        .map(|(row, &label)| {
            let true_idx = sm
                .class_ids
                .iter()
                .position(|&c| c == label)
                .expect("validated in constructor");
            let ts = row[true_idx];
            let mut rank = 1usize;
            for (c, &s) in row.iter().enumerate() {
                if s < ts || (s == ts && c < true_idx) {
                    rank += 1;
                }
            }
            rank
        })
        .collect()
}

/// Fraction of probes whose best-scoring class is the true one.
pub fn rank1(sm: &ScoreMatrix) -> f64 {
    let ranks = true_class_ranks(sm);
    ranks.iter().filter(|&&r| r == 1).count() as f64 / ranks.len() as f64
}

/// Cumulative match characteristic: cmc[r] = fraction of probes whose true
/// class ranks within the best r+1 classes.
pub fn cmc(sm: &ScoreMatrix) -> Vec<f64> {
    let ranks = true_class_ranks(sm);
    let n = ranks.len() as f64;
    let k = sm.class_ids.len();
    let mut out = vec![0.0f64; k];
    for &r in &ranks {
        out[r - 1] += 1.0;
    }
    let mut acc = 0.0;
    for v in &mut out {
        acc += *v;
        *v = acc / n;
    }
    out
}

/// Threshold sweep over genuine (true-class) and impostor (other-class)
/// scores; acceptance means score <= threshold. Returns (far, tar) points
/// from (0,0) to (1,1) and the trapezoid AUC.
pub fn roc(genuine: &[f64], impostor: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::Input("roc needs non-empty genuine and impostor score lists".into()));
    }
    let mut thresholds: Vec<f64> = genuine.iter().chain(impostor.iter()).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let mut points = vec![(0.0f64, 0.0f64)];
    for &t in &thresholds {
        let tar = genuine.iter().filter(|&&g| g <= t).count() as f64 / genuine.len() as f64;
        let far = impostor.iter().filter(|&&i| i <= t).count() as f64 / impostor.len() as f64;
        points.push((far, tar));
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        let (f0, t0) = w[0];
        let (f1, t1) = w[1];
        auc += (f1 - f0) * 0.5 * (t0 + t1);
    }
    Ok((points, auc))
}

/// Genuine/impostor score lists for verification mode: the fused distance
/// to the true class vs the distances to every other class.
pub fn verification_scores(sm: &ScoreMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for (row, &label) in sm.scores.rows().into_iter().zip(sm.probe_labels.iter()) {
        for (c, &s) in row.iter().enumerate() {
            if sm.class_ids[c] == label {
                genuine.push(s);
            } else {
                impostor.push(s);
            }
        }
    }
    (genuine, impostor)
}

/// Identification + verification summary of one evaluation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rank1: f64,
    pub cmc: Vec<f64>,
    pub roc_points: Vec<(f64, f64)>,
    pub auc: f64,
    /// Whether any domain-adaptation target probes were also scored in the
    /// evaluation probe set.
    pub da_target_overlap: bool,
}

impl EvalReport {
    pub fn from_scores(sm: &ScoreMatrix, da_target_overlap: bool) -> Result<EvalReport> {
        let r1 = rank1(sm);
        let cmc_curve = cmc(sm);
        let (genuine, impostor) = verification_scores(sm);
        let (roc_points, auc) = roc(&genuine, &impostor)?;
        let report = EvalReport {
            rank1: r1,
            cmc: cmc_curve,
            roc_points,
            auc,
            da_target_overlap,
        };
        report.validate()?;
        Ok(report)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rank1) {
            return Err(Error::Validation("rank1 out of [0,1]".into()));
        }
        if self.cmc.is_empty() || self.roc_points.is_empty() {
            return Err(Error::Validation("report curves must be non-empty".into()));
        }
        for w in self.cmc.windows(2) {
            if w[1] < w[0] - 1e-12 {
                return Err(Error::Validation("cmc must be non-decreasing".into()));
            }
        }
        if (self.cmc.last().unwrap() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("cmc must end at 1.0".into()));
        }
        for w in self.roc_points.windows(2) {
            if w[1].0 < w[0].0 - 1e-12 || w[1].1 < w[0].1 - 1e-12 {
                return Err(Error::Validation("roc sweep must be monotone".into()));
            }
        }
        if !(0.0..=1.0 + 1e-12).contains(&self.auc) {
            return Err(Error::Validation("auc out of [0,1]".into()));
        }
        Ok(())
    }
}

/// Write `summary.csv`, `cmc.csv` and `roc.csv` under `dir`. Byte output
/// is deterministic given the report.
pub fn export_report(report: &EvalReport, dir: &Path) -> Result<()> {
    report.validate()?;
    std::fs::create_dir_all(dir)?;

    let mut summary = String::from("metric,value\n");
    summary.push_str(&format!("rank1,{}\n", report.rank1));
    summary.push_str(&format!("auc,{}\n", report.auc));
    summary.push_str(&format!("da_target_overlap,{}\n", report.da_target_overlap));
    std::fs::write(dir.join("summary.csv"), summary)?;

    let mut cmc_csv = String::from("rank,identification_rate\n");
    for (i, v) in report.cmc.iter().enumerate() {
        cmc_csv.push_str(&format!("{},{}\n", i + 1, v));
    }
    std::fs::write(dir.join("cmc.csv"), cmc_csv)?;

    let mut roc_csv = String::from("far,tar\n");
    for (far, tar) in &report.roc_points {
        roc_csv.push_str(&format!("{far},{tar}\n"));
    }
    std::fs::write(dir.join("roc.csv"), roc_csv)?;
    Ok(())
}

/// Parse a report back from [`export_report`] output.
pub fn load_report(dir: &Path) -> Result<EvalReport> {
    let summary = std::fs::read_to_string(dir.join("summary.csv"))?;
    let mut rank1_v = None;
    let mut auc_v = None;
    let mut overlap = false;
    for line in summary.lines().skip(1) {
        let (key, value) = line
            .split_once(',')
            .ok_or_else(|| Error::Input(format!("bad summary line `{line}`")))?;
        match key {
            "rank1" => rank1_v = Some(parse_f64(value)?),
            "auc" => auc_v = Some(parse_f64(value)?),
            "da_target_overlap" => overlap = value == "true",
            _ => {}
        }
    }
    let cmc_text = std::fs::read_to_string(dir.join("cmc.csv"))?;
    let mut cmc_curve = Vec::new();
    for line in cmc_text.lines().skip(1) {
        let (_, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Input(format!("bad cmc line `{line}`")))?;
        cmc_curve.push(parse_f64(v)?);
    }
    let roc_text = std::fs::read_to_string(dir.join("roc.csv"))?;
    let mut roc_points = Vec::new();
    for line in roc_text.lines().skip(1) {
        let (f, t) = line
            .split_once(',')
            .ok_or_else(|| Error::Input(format!("bad roc line `{line}`")))?;
        roc_points.push((parse_f64(f)?, parse_f64(t)?));
    }
    let report = EvalReport {
        rank1: rank1_v.ok_or_else(|| Error::Input("summary missing rank1".into()))?,
        cmc: cmc_curve,
        roc_points,
        auc: auc_v.ok_or_else(|| Error::Input("summary missing auc".into()))?,
        da_target_overlap: overlap,
    };
    report.validate()?;
    Ok(report)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Input(format!("cannot parse `{s}` as a number")))
}
