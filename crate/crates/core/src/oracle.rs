//! Simulated annotator. The only code path that reads ground-truth labels.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::{Candidate, CandidateId};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Probability that a query answers a uniformly chosen wrong class.
    #[serde(default)]
    pub label_noise_rate: f64,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if (0.0..1.0).contains(&self.label_noise_rate) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "label_noise_rate {} not in [0, 1)",
                self.label_noise_rate
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Oracle {
    cfg: OracleConfig,
    num_classes: usize,
    rng: ChaCha8Rng,
    annotated: BTreeSet<CandidateId>,
    access_log: Vec<CandidateId>,
}

impl Oracle {
    pub fn new(cfg: OracleConfig, num_classes: usize, rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        if num_classes < 2 {
            return Err(Error::Config("oracle needs at least 2 classes".into()));
        }
        Ok(Oracle {
            cfg,
            num_classes,
            rng,
            annotated: BTreeSet::new(),
            access_log: Vec::new(),
        })
    }

    /// Annotates each candidate once. Fails without side effects if any of
    /// them was annotated before.
    pub fn query(&mut self, candidates: &[&Candidate]) -> Result<Vec<usize>> {
        let mut batch = BTreeSet::new();
        for c in candidates {
            if self.annotated.contains(c.id()) || !batch.insert(c.id()) {
                return Err(Error::DoubleAnnotation(c.id().clone()));
            }
            if c.true_label() >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    label: c.true_label(),
                    num_classes: self.num_classes,
                });
            }
        }
        let mut labels = Vec::with_capacity(candidates.len());
        for c in candidates {
            self.access_log.push(c.id().clone());
            self.annotated.insert(c.id().clone());
            let truth = c.true_label();
            let label = if self.cfg.label_noise_rate > 0.0 && self.rng.random::<f64>() < self.cfg.label_noise_rate {
                let other = self.rng.random_range(0..self.num_classes - 1);
                if other >= truth {
                    other + 1
                } else {
                    other
                }
            } else {
                truth
            };
            labels.push(label);
        }
        Ok(labels)
    }

    /// Number of annotations handed out so far.
    pub fn query_count(&self) -> usize {
        self.annotated.len()
    }

    /// Every candidate whose ground truth was read, in query order.
    pub fn access_log(&self) -> &[CandidateId] {
        &self.access_log
    }
}

/// Ground truth of held-out evaluation candidates, for scoring only.
pub fn evaluation_labels(test: &[Candidate]) -> Vec<usize> {
    test.iter().map(Candidate::true_label).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn cand(id: &str, label: usize) -> Candidate {
        Candidate::new(id, vec![vec![0.0]], label).unwrap()
    }

    fn oracle(rate: f64) -> Oracle {
        Oracle::new(
            OracleConfig { label_noise_rate: rate },
            2,
            ChaCha8Rng::seed_from_u64(42),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_answers_truth() {
        let cs = [cand("a", 1), cand("b", 0), cand("c", 1)];
        let mut o = oracle(0.0);
        assert_eq!(o.query(&cs.iter().collect::<Vec<_>>()).unwrap(), [1, 0, 1]);
        assert_eq!(o.query_count(), 3);
    }

    #[test]
    fn second_query_is_double_annotation() {
        let a = cand("a", 1);
        let b = cand("b", 0);
        let mut o = oracle(0.0);
        o.query(&[&a]).unwrap();
        assert!(matches!(o.query(&[&b, &a]), Err(Error::DoubleAnnotation(_))));
        assert_eq!(o.query_count(), 1);
        assert_eq!(o.access_log().len(), 1);
    }

    #[test]
    fn half_noise_flips_half() {
        let cs: Vec<Candidate> = (0..10_000).map(|i| cand(&format!("c{i:05}"), 0)).collect();
        let mut o = oracle(0.5);
        let labels = o.query(&cs.iter().collect::<Vec<_>>()).unwrap();
        let flipped = labels.iter().filter(|&&l| l == 1).count() as f64 / cs.len() as f64;
        assert!((flipped - 0.5).abs() < 0.02, "{flipped}");
    }

    #[test]
    fn noise_never_returns_truth_class_when_flipping_three_way() {
        let cs: Vec<Candidate> = (0..300).map(|i| cand(&format!("c{i:03}"), 1)).collect();
        let mut o = Oracle::new(OracleConfig { label_noise_rate: 0.99 }, 3, ChaCha8Rng::seed_from_u64(1)).unwrap();
        let labels = o.query(&cs.iter().collect::<Vec<_>>()).unwrap();
        assert!(labels.iter().all(|&l| l < 3));
        assert!(labels.contains(&0) && labels.contains(&2));
    }

    #[test]
    fn invalid_rate() {
        assert!(Oracle::new(OracleConfig { label_noise_rate: 1.0 }, 2, ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
