//! Candidate-level evaluation: AUC, learning curves, ALC and batch class balance.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::f64_17;

pub const CURVE_HEADER: &str =
    "step,queries_cum,labeled_count,test_auc,selected_positive_fraction,misclassified_pre_fit";

/// One learning-curve point, emitted after every step (step 0 is the
/// untouched starting model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub step: usize,
    pub queries_cum: usize,
    pub labeled_count: usize,
    pub test_auc: f64,
    /// Fraction of this step's batch annotated with the positive class; absent at step 0.
    pub selected_positive_fraction: Option<f64>,
    pub misclassified_count_pre_fit: usize,
}

/// Mann-Whitney AUC: `(wins + ties / 2) / (positives * negatives)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Precondition(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both positive and negative labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Walk groups of tied scores: every positive in a group beats all
    // negatives seen so far and ties with the negatives inside the group.
    let mut wins = 0.0;
    let mut ties = 0.0;
    let mut negatives_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group_pos = order[i..j].iter().filter(|&&k| labels[k]).count();
        let group_neg = (j - i) - group_pos;
        wins += (group_pos * negatives_below) as f64;
        ties += (group_pos * group_neg) as f64;
        negatives_below += group_neg;
        i = j;
    }
    Ok((wins + 0.5 * ties) / (positives as f64 * negatives as f64))
}

/// Macro-averaged one-vs-rest AUC over classes that have both positives and negatives.
pub fn auc_one_vs_rest(probabilities: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut counted = 0;
    for k in 0..num_classes {
        let truth: Vec<bool> = labels.iter().map(|&l| l == k).collect();
        if truth.iter().all(|&t| t) || truth.iter().all(|&t| !t) {
            continue;
        }
        let scores: Vec<f64> = probabilities.iter().map(|p| p[k]).collect();
        total += auc(&scores, &truth)?;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::UndefinedMetric(
            "every evaluation label is the same class".into(),
        ));
    }
    Ok(total / counted as f64)
}

/// Area under the learning curve with the x-axis as the fraction of the
/// pool queried. The curve is integrated with trapezoids and held flat from
/// its last point out to `x = 1`.
pub fn alc(curve: &[(usize, f64)], total_pool: usize) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "ALC needs at least 2 points, got {}",
            curve.len()
        )));
    }
    if total_pool == 0 {
        return Err(Error::UndefinedMetric("ALC needs a non-empty pool".into()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::UndefinedMetric(
            "learning curve queries must strictly increase".into(),
        ));
    }
    if curve[curve.len() - 1].0 > total_pool {
        return Err(Error::UndefinedMetric("learning curve runs past the pool size".into()));
    }
    let n = total_pool as f64;
    let x = |q: usize| q as f64 / n;
    let mut area = 0.0;
    for w in curve.windows(2) {
        area += (x(w[1].0) - x(w[0].0)) * (w[0].1 + w[1].1) / 2.0;
    }
    let (last_q, last_auc) = curve[curve.len() - 1];
    if x(last_q) < 1.0 {
        area += (1.0 - x(last_q)) * last_auc;
    }
    // A curve that starts after 0 is normalized over the span it covers.
    Ok(area / (1.0 - x(curve[0].0)))
}

/// Fraction of the given annotated labels equal to `positive`.
pub fn balance_ratio(labels: &[usize], positive: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::UndefinedMetric("balance ratio of an empty selection".into()));
    }
    Ok(labels.iter().filter(|&&l| l == positive).count() as f64 / labels.len() as f64)
}

/// Positive fraction over every candidate selected across the whole curve.
pub fn cumulative_positive_fraction(records: &[ExperimentRecord]) -> Option<f64> {
    let mut positives = 0.0;
    let mut selected = 0usize;
    let mut prev = 0;
    for r in records {
        let batch = r.queries_cum - prev;
        prev = r.queries_cum;
        if let Some(frac) = r.selected_positive_fraction {
            positives += frac * batch as f64;
            selected += batch;
        }
    }
    (selected > 0).then(|| positives / selected as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub records: Vec<ExperimentRecord>,
    pub alc: f64,
}

impl LearningCurve {
    pub fn new(records: Vec<ExperimentRecord>, total_pool: usize) -> Result<Self> {
        let points: Vec<(usize, f64)> = records.iter().map(|r| (r.queries_cum, r.test_auc)).collect();
        let alc = if points.len() == 1 {
            // Only the baseline: the flat extension covers the whole axis.
            points[0].1
        } else {
            alc(&points, total_pool)?
        };
        Ok(LearningCurve { records, alc })
    }

    pub fn final_auc(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.test_auc)
    }

    pub fn total_queries(&self) -> usize {
        self.records.last().map_or(0, |r| r.queries_cum)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for r in &self.records {
            let frac = r.selected_positive_fraction.map(f64_17).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step,
                r.queries_cum,
                r.labeled_count,
                f64_17(r.test_auc),
                frac,
                r.misclassified_count_pre_fit
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Per-run summary written next to each curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub strategy: String,
    pub seed: u64,
    pub alc: f64,
    pub final_auc: f64,
    pub total_queries: usize,
}

impl RunSummary {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
