//! Learner interface plus a softmax reference model and a table-driven mock.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::PredictionMatrix;
use crate::error::{Error, Result};
use crate::pool::Candidate;

mod mock;
mod softmax;

pub use mock::{LearnerEvent, TableLearner};
pub use softmax::{loss_and_gradient, Checkpoint, Origin, SoftmaxModel};

/// One training patch with the label inherited from its candidate.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a [f64],
    pub label: usize,
}

/// Which parameters a fit started from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStart {
    /// Continued from the model being fitted (fine-tuning).
    Previous,
    /// Reset to the pre-trained starting point.
    Pretrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub momentum: f64,
    /// Per-epoch multiplicative learning-rate decay.
    pub lr_decay_gamma: f64,
    pub minibatch_size: usize,
    /// Learning-rate multiplier applied when fine-tuning a previous model.
    #[serde(default = "default_finetune_factor")]
    pub finetune_lr_factor: f64,
}

fn default_finetune_factor() -> f64 {
    0.1
}

/// Defaults are tuned for the loop: one gentle pass per step keeps warm
/// fits on small batches from overwriting what earlier steps learned.
impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.2,
            epochs: 1,
            momentum: 0.5,
            lr_decay_gamma: 0.95,
            minibatch_size: 32,
            finetune_lr_factor: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.epochs >= 1
            && (0.0..1.0).contains(&self.momentum)
            && self.lr_decay_gamma > 0.0
            && self.lr_decay_gamma <= 1.0
            && self.minibatch_size >= 1
            && self.finetune_lr_factor > 0.0
            && self.finetune_lr_factor <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training config {self:?}")))
        }
    }
}

pub trait Learner: Clone + Send + Sync {
    fn num_classes(&self) -> usize;

    /// Per-patch class probabilities for a candidate.
    fn predict(&self, candidate: &Candidate) -> Result<PredictionMatrix>;

    /// Trains on `data` and returns the new model. `warm` continues from this
    /// model's parameters at the reduced fine-tuning rate; otherwise training
    /// restarts from the pre-trained parameters at the full rate.
    fn fit<R: Rng + ?Sized>(&self, data: &[Example<'_>], cfg: &TrainConfig, warm: bool, rng: &mut R) -> Result<Self>;
}

/// Candidate-level class probabilities: the mean of the patch predictions.
pub fn candidate_probability(p: &PredictionMatrix) -> Vec<f64> {
    p.column_means()
}

/// Candidate-level argmax, ties toward the smaller class index.
pub fn candidate_class(p: &PredictionMatrix) -> usize {
    crate::criteria::argmax(&candidate_probability(p))
}

/// Every patch of each candidate, labeled with the given candidate label.
pub fn examples<'a, I>(labeled: I) -> Vec<Example<'a>>
where
    I: IntoIterator<Item = (&'a Candidate, usize)>,
{
    labeled
        .into_iter()
        .flat_map(|(c, label)| {
            c.patches().iter().map(move |p| Example {
                features: &p.features,
                label,
            })
        })
        .collect()
}
