//! Per-candidate selection criteria computed from patch predictions.
//!
//! All functions here are pure. Logarithms are natural; probabilities are
//! clamped to `[epsilon, 1]` before any log and are not renormalized.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::CandidateId;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// `m x |Y|` row-stochastic matrix: row `j` holds the class probabilities of patch `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PredictionMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidPrediction("no rows".into()));
        }
        if cols < 2 {
            return Err(Error::InvalidPrediction(format!("{cols} classes, need at least 2")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidPrediction(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for (j, row) in data.chunks_exact(cols).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidPrediction(format!("row {j} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidPrediction(format!("row {j} sums to {sum}")));
            }
        }
        Ok(PredictionMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::InvalidPrediction("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    /// Every row is `1 / cols`.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        PredictionMatrix {
            rows,
            cols,
            data: vec![1.0 / cols as f64; rows * cols],
        }
    }

    pub fn num_patches(&self) -> usize {
        self.rows
    }

    pub fn num_classes(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.cols + k]
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let data = indices.iter().flat_map(|&j| self.row(j).iter().copied()).collect();
        PredictionMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Column means: the candidate-level class probabilities obtained by
    /// averaging the patch predictions.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.rows() {
            for (s, p) in sums.iter_mut().zip(row) {
                *s += p;
            }
        }
        let m = self.rows as f64;
        sums.iter_mut().for_each(|s| *s /= m);
        sums
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-12
}

impl CriteriaConfig {
    pub const DEFAULT_ALPHA: f64 = 0.25;
    pub const DEFAULT_EPSILON: f64 = 1e-12;

    pub fn entropy(alpha: f64) -> Self {
        CriteriaConfig {
            lambda1: 1.0,
            lambda2: 0.0,
            alpha,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn diversity(alpha: f64) -> Self {
        CriteriaConfig {
            lambda1: 0.0,
            lambda2: 1.0,
            alpha,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda1 >= 0.0
            && self.lambda2 >= 0.0
            && self.lambda1 + self.lambda2 > 0.0
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.epsilon > 0.0
            && self.epsilon < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid criteria config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub candidate_id: CandidateId,
    pub dominant: usize,
    pub entropy: f64,
    pub diversity: f64,
    pub score: f64,
    pub subset_size: usize,
    /// Number of `(j, l, k)` pair terms evaluated for the diversity.
    pub pair_evaluations: usize,
}

/// Class with the largest column sum; ties go to the smaller index.
pub fn dominant_class(p: &PredictionMatrix) -> usize {
    argmax(&p.column_means())
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// `ceil(alpha * m)`, at least 1 and at most `m`.
pub fn subset_size(m: usize, alpha: f64) -> usize {
    // Guard against products like 0.3333..*3 landing just above an integer.
    let raw = (alpha * m as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(m)
}

/// Patch indices ranked by confidence on the dominant class, truncated to
/// the top `ceil(alpha * m)`. Equal confidences keep the lower index first.
pub fn majority_rows(p: &PredictionMatrix, alpha: f64) -> Vec<usize> {
    let dominant = dominant_class(p);
    let mut order: Vec<usize> = (0..p.num_patches()).collect();
    order.sort_by(|&a, &b| p.get(b, dominant).total_cmp(&p.get(a, dominant)).then(a.cmp(&b)));
    order.truncate(subset_size(p.num_patches(), alpha));
    order
}

/// The majority rows as a matrix, ordered by descending dominant-class probability.
pub fn majority_subset(p: &PredictionMatrix, alpha: f64) -> PredictionMatrix {
    p.select_rows(&majority_rows(p, alpha))
}

fn clamp(p: f64, epsilon: f64) -> f64 {
    p.clamp(epsilon, 1.0)
}

/// Mean per-patch Shannon entropy, in nats.
pub fn entropy(p: &PredictionMatrix, epsilon: f64) -> f64 {
    let total: f64 = p
        .data
        .iter()
        .map(|&x| {
            let x = clamp(x, epsilon);
            x * x.ln()
        })
        .sum();
    -total / p.num_patches() as f64
}

/// Sum over classes and patch pairs `j < l` of `(p_j - p_l) ln(p_j / p_l)`.
pub fn diversity(p: &PredictionMatrix, epsilon: f64) -> f64 {
    diversity_counted(p, epsilon).0
}

/// [`diversity`] together with the number of pair terms it evaluated.
pub fn diversity_counted(p: &PredictionMatrix, epsilon: f64) -> (f64, usize) {
    let m = p.num_patches();
    let mut total = 0.0;
    let mut evaluations = 0;
    for k in 0..p.num_classes() {
        for j in 0..m {
            let a = clamp(p.get(j, k), epsilon);
            for l in j + 1..m {
                let b = clamp(p.get(l, k), epsilon);
                total += (a - b) * (a / b).ln();
                evaluations += 1;
            }
        }
    }
    (total, evaluations)
}

/// Scores a candidate on its majority subset: `lambda1 * entropy + lambda2 * diversity`.
pub fn score_candidate(id: &CandidateId, p: &PredictionMatrix, cfg: &CriteriaConfig) -> CandidateScore {
    let dominant = dominant_class(p);
    let subset = majority_subset(p, cfg.alpha);
    let entropy = entropy(&subset, cfg.epsilon);
    let (diversity, pair_evaluations) = diversity_counted(&subset, cfg.epsilon);
    CandidateScore {
        candidate_id: id.clone(),
        dominant,
        entropy,
        diversity,
        score: cfg.lambda1 * entropy + cfg.lambda2 * diversity,
        subset_size: subset.num_patches(),
        pair_evaluations,
    }
}

/// Qualitative shape of a binary candidate's patch predictions on its dominant class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// Concentrated around 0.5.
    A,
    /// Spread out, no dominant cluster.
    B,
    /// Clustered at both ends.
    C,
    /// Concentrated near 0.
    D,
    /// Concentrated near 1.
    E,
    /// Mostly high, with a tail.
    F,
    /// Mostly low, with a tail.
    G,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Diagnostic bucketing of a binary candidate's predictions. Not used for selection.
pub fn classify_pattern(p: &PredictionMatrix) -> Result<Pattern> {
    if p.num_classes() != 2 {
        return Err(Error::UnsupportedDiagnostic(p.num_classes()));
    }
    let dominant = dominant_class(p);
    let m = p.num_patches() as f64;
    let frac =
        |pred: &dyn Fn(f64) -> bool| (0..p.num_patches()).filter(|&j| pred(p.get(j, dominant))).count() as f64 / m;
    let mid = frac(&|q| (0.4..=0.6).contains(&q));
    let hi = frac(&|q| q > 0.9);
    let lo = frac(&|q| q < 0.1);
    let pattern = if hi >= 0.3 && lo >= 0.3 {
        Pattern::C
    } else if hi >= 0.8 {
        Pattern::E
    } else if lo >= 0.8 {
        Pattern::D
    } else if hi >= 0.5 {
        Pattern::F
    } else if lo >= 0.5 {
        Pattern::G
    } else if mid >= 0.6 {
        Pattern::A
    } else {
        Pattern::B
    };
    Ok(pattern)
}
