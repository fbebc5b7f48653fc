//! Verification protocol: genuine/impostor scores, FAR/FRR sweep and EER.
//!
//! Scores are distances; a comparison is accepted when `distance <= t`.
//! `FAR(t)` is the fraction of impostor scores `<= t` and `FRR(t)` the
//! fraction of genuine scores `> t`, so FAR is non-decreasing and FRR
//! non-increasing in `t`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::archive::LabeledDescriptor;
use crate::error::{Error, Result};
use crate::matching::{check_compatible, Metric};

pub const DEFAULT_IMPOSTOR_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub distance: f64,
    /// Indices of the compared samples in the input set, `a < b`.
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub genuine: Vec<Score>,
    pub impostor: Vec<Score>,
}

impl ScoreSet {
    /// Builds a score set straight from distances (pair indices left zero).
    pub fn from_distances(genuine: &[f64], impostor: &[f64]) -> Self {
        let wrap = |d: &[f64]| {
            d.iter()
                .map(|&distance| Score {
                    distance,
                    a: 0,
                    b: 0,
                })
                .collect()
        };
        Self {
            genuine: wrap(genuine),
            impostor: wrap(impostor),
        }
    }

    pub fn genuine_distances(&self) -> Vec<f64> {
        self.genuine.iter().map(|s| s.distance).collect()
    }

    pub fn impostor_distances(&self) -> Vec<f64> {
        self.impostor.iter().map(|s| s.distance).collect()
    }
}

/// Cap on impostor comparisons; above it a seeded uniform subsample is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpostorSampling {
    pub cap: usize,
    pub seed: u64,
}

impl Default for ImpostorSampling {
    fn default() -> Self {
        Self {
            cap: DEFAULT_IMPOSTOR_CAP,
            seed: 0,
        }
    }
}

/// All-pairs verification scores. Genuine pairs are every unordered pair
/// within a class, impostor pairs every unordered pair across classes.
pub fn make_scores(
    samples: &[LabeledDescriptor],
    metric: Metric,
    sampling: ImpostorSampling,
) -> Result<ScoreSet> {
    let mut classes: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        *classes.entry(s.class_id.as_str()).or_default() += 1;
    }
    if classes.len() < 2 {
        return Err(Error::InsufficientClasses(format!(
            "need at least 2 classes, found {}",
            classes.len()
        )));
    }
    if classes.values().all(|&n| n < 2) {
        return Err(Error::InsufficientClasses(
            "no class has two samples, so there are no genuine pairs".into(),
        ));
    }
    for s in &samples[1..] {
        check_compatible(&samples[0].descriptor, &s.descriptor)?;
    }

    let mut genuine_pairs = Vec::new();
    let mut impostor_pairs = Vec::new();
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            if samples[a].class_id == samples[b].class_id {
                genuine_pairs.push((a, b));
            } else {
                impostor_pairs.push((a, b));
            }
        }
    }
    if impostor_pairs.len() > sampling.cap {
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        let mut picked = index::sample(&mut rng, impostor_pairs.len(), sampling.cap).into_vec();
        picked.sort_unstable();
        impostor_pairs = picked.into_iter().map(|i| impostor_pairs[i]).collect();
    }

    let score = |&(a, b): &(usize, usize)| Score {
        distance: metric.between(&samples[a].descriptor.values, &samples[b].descriptor.values),
        a,
        b,
    };
    Ok(ScoreSet {
        genuine: genuine_pairs.par_iter().map(score).collect(),
        impostor: impostor_pairs.par_iter().map(score).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Equal error rate in percent.
    pub eer: f64,
    pub threshold_at_eer: f64,
    /// One point per distinct score, ascending threshold.
    pub roc_points: Vec<RocPoint>,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

impl EvalReport {
    /// `EER=<x>% threshold=<t> genuine=<n> impostor=<m>`
    pub fn summary(&self) -> String {
        format!(
            "EER={:.4}% threshold={:.9e} genuine={} impostor={}",
            self.eer, self.threshold_at_eer, self.n_genuine, self.n_impostor
        )
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Sweeps every distinct score as a threshold and reports the EER.
///
/// The EER is read at the sign change of `FAR - FRR`: exactly where the two
/// are equal, otherwise by linear interpolation between the two bracketing
/// thresholds. If no sign change exists, the point minimizing `|FAR - FRR|`
/// gives `(FAR + FRR) / 2`.
pub fn compute_eer(scores: &ScoreSet) -> Result<EvalReport> {
    let (n_gen, n_imp) = (scores.genuine.len(), scores.impostor.len());
    if n_gen == 0 || n_imp == 0 {
        return Err(Error::EmptyScores {
            genuine: n_gen,
            impostor: n_imp,
        });
    }
    let genuine = sorted(scores.genuine_distances());
    let impostor = sorted(scores.impostor_distances());
    if genuine.iter().chain(&impostor).any(|d| d.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }

    // Merge-walk both sorted lists over the distinct thresholds.
    let mut roc = Vec::with_capacity(n_gen + n_imp);
    let (mut gi, mut ii) = (0, 0);
    while gi < n_gen || ii < n_imp {
        let t = match (genuine.get(gi), impostor.get(ii)) {
            (Some(&g), Some(&i)) => g.min(i),
            (Some(&g), None) => g,
            (None, Some(&i)) => i,
            (None, None) => unreachable!(),
        };
        while gi < n_gen && genuine[gi] <= t {
            gi += 1;
        }
        while ii < n_imp && impostor[ii] <= t {
            ii += 1;
        }
        roc.push(RocPoint {
            threshold: t,
            far: ii as f64 / n_imp as f64,
            frr: (n_gen - gi) as f64 / n_gen as f64,
        });
    }

    let (eer, threshold) = equal_error_point(&roc);
    Ok(EvalReport {
        eer: 100.0 * eer,
        threshold_at_eer: threshold,
        roc_points: roc,
        n_genuine: n_gen,
        n_impostor: n_imp,
    })
}

fn equal_error_point(roc: &[RocPoint]) -> (f64, f64) {
    let gap = |p: &RocPoint| p.far - p.frr;
    if let Some(i) = roc.iter().position(|p| gap(p) >= 0.0) {
        let hi = &roc[i];
        if gap(hi) == 0.0 {
            return (hi.far, hi.threshold);
        }
        if i > 0 {
            let lo = &roc[i - 1];
            let alpha = -gap(lo) / (gap(hi) - gap(lo));
            let eer = lo.far + alpha * (hi.far - lo.far);
            let threshold = lo.threshold + alpha * (hi.threshold - lo.threshold);
            return (eer, threshold);
        }
    }
    let best = roc
        .iter()
        .min_by(|a, b| gap(a).abs().total_cmp(&gap(b).abs()))
        .expect("sweep has at least one point");
    ((best.far + best.frr) / 2.0, best.threshold)
}

/// Writes `threshold,far,frr` rows (9 significant digits) under a header.
pub fn det_csv(report: &EvalReport) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in &report.roc_points {
        let _ = writeln!(out, "{:.8e},{:.8e},{:.8e}", p.threshold, p.far, p.frr);
    }
    out
}

pub fn export_det(report: &EvalReport, path: &Path) -> Result<()> {
    fs::write(path, det_csv(report))?;
    Ok(())
}

/// Parses a DET CSV back into points.
pub fn parse_det(text: &str) -> Result<Vec<RocPoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "threshold,far,frr")) => {}
        _ => {
            return Err(Error::malformed(
                1,
                "header",
                "expected `threshold,far,frr`",
            ))
        }
    }
    lines
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::malformed(i + 1, "row", "expected 3 fields"));
            }
            let num = |j: usize, name: &str| {
                fields[j].parse::<f64>().map_err(|_| {
                    Error::malformed(i + 1, name, format!("bad number `{}`", fields[j]))
                })
            };
            Ok(RocPoint {
                threshold: num(0, "threshold")?,
                far: num(1, "far")?,
                frr: num(2, "frr")?,
            })
        })
        .collect()
}
