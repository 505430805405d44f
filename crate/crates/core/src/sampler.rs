//! Turns ranked candidate scores into a query batch.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::CandidateScore;
use crate::error::{Error, Result};
use crate::pool::CandidateId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// The `b` highest scores.
    TopB,
    /// Draw `b` from the top `omega * b` with score-derived probabilities.
    Randomized,
    /// Draw `b` uniformly, ignoring scores.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub batch_size: usize,
    pub omega: usize,
    pub mode: SelectionMode,
}

impl SamplerConfig {
    pub const DEFAULT_OMEGA: usize = 5;

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.omega == 0 {
            return Err(Error::Config("omega must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sampling probabilities over the first `window` of descending scores.
///
/// Scores are rescaled so the top maps to 1 and the window's last entry to 0,
/// then normalized to sum to 1. A flat window yields the uniform distribution.
pub fn sampling_probabilities(sorted_scores: &[f64], window: usize) -> Result<Vec<f64>> {
    if window > sorted_scores.len() || window == 0 {
        return Err(Error::Window {
            window,
            len: sorted_scores.len(),
        });
    }
    let top = sorted_scores[0];
    let bottom = sorted_scores[window - 1];
    let range = top - bottom;
    if window == 1 || range <= 0.0 {
        return Ok(vec![1.0 / window as f64; window]);
    }
    // Dividing by the range and then by the total cancels; skip it to keep exact ratios exact.
    let shifted: Vec<f64> = sorted_scores[..window].iter().map(|a| a - bottom).collect();
    let total: f64 = shifted.iter().sum();
    Ok(shifted.into_iter().map(|v| v / total).collect())
}

/// Candidates ordered by descending score, ties by ascending id.
pub fn rank(scores: &[CandidateScore]) -> Vec<&CandidateScore> {
    let mut ranked: Vec<&CandidateScore> = scores.iter().collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
    ranked
}

/// Chooses the query batch from scores covering the whole unlabeled pool.
pub fn select_batch<R: Rng + ?Sized>(
    scores: &[CandidateScore],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<CandidateId>> {
    let take = cfg.batch_size.min(scores.len());
    if take == 0 {
        return Ok(Vec::new());
    }
    match cfg.mode {
        SelectionMode::UniformRandom => {
            let mut ids: Vec<CandidateId> = scores.iter().map(|s| s.candidate_id.clone()).collect();
            ids.sort();
            Ok(select_uniform(&ids, cfg.batch_size, rng))
        }
        SelectionMode::TopB => Ok(rank(scores)
            .into_iter()
            .take(take)
            .map(|s| s.candidate_id.clone())
            .collect()),
        SelectionMode::Randomized => {
            let ranked = rank(scores);
            let window = (cfg.omega * cfg.batch_size).min(ranked.len());
            if window < 2 {
                return Ok(vec![ranked[0].candidate_id.clone()]);
            }
            let sorted: Vec<f64> = ranked.iter().map(|s| s.score).collect();
            let probs = sampling_probabilities(&sorted, window)?;
            let picks = draw_without_replacement(&probs, take, rng);
            Ok(picks.into_iter().map(|i| ranked[i].candidate_id.clone()).collect())
        }
    }
}

/// Draws `n` ids uniformly without replacement.
pub fn select_uniform<R: Rng + ?Sized>(ids: &[CandidateId], n: usize, rng: &mut R) -> Vec<CandidateId> {
    ids.choose_multiple(rng, n.min(ids.len())).cloned().collect()
}

/// Draws `n` distinct indices, renormalizing the remaining weights after each
/// draw. When all remaining weight is zero, the draw is uniform over what is left.
pub fn draw_without_replacement<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut picks = Vec::with_capacity(n.min(weights.len()));
    while picks.len() < n && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let slot = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (slot, &i) in remaining.iter().enumerate() {
                acc += weights[i];
                if weights[i] > 0.0 && target < acc {
                    chosen = Some(slot);
                    break;
                }
            }
            // Rounding can leave target == acc at the end; fall back to the last positive weight.
            chosen.unwrap_or_else(|| remaining.iter().rposition(|&i| weights[i] > 0.0).unwrap())
        } else {
            rng.random_range(0..remaining.len())
        };
        picks.push(remaining.remove(slot));
    }
    picks
}
