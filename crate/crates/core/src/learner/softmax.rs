use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Example, FitStart, Learner, TrainConfig};
use crate::criteria::PredictionMatrix;
use crate::error::{Error, Result};
use crate::pool::Candidate;

const INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "pretrained_M0")]
    PretrainedM0,
    #[serde(rename = "finetuned")]
    Finetuned,
}

/// Multinomial logistic regression over patch features.
///
/// Weights are a row-major `num_classes x (dim + 1)` matrix whose last column
/// is the bias. The pre-trained weights travel with every descendant so a
/// cold fit can restart from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    dim: usize,
    num_classes: usize,
    weights: Vec<f64>,
    pretrained: Arc<Vec<f64>>,
    trained_steps: usize,
    origin: Origin,
    last_start: Option<FitStart>,
}

impl SoftmaxModel {
    /// Small uniform random weights in `[-0.01, 0.01]`.
    pub fn random<R: Rng + ?Sized>(dim: usize, num_classes: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 || num_classes < 2 {
            return Err(Error::Config(format!(
                "model needs dim >= 1 and >= 2 classes, got {dim}, {num_classes}"
            )));
        }
        let weights: Vec<f64> = (0..num_classes * (dim + 1))
            .map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE))
            .collect();
        Ok(Self::pretrained_from(dim, num_classes, weights))
    }

    /// Builds the starting model `M0`: random initialization, optionally
    /// trained on auxiliary labeled data at the full learning rate.
    pub fn pretrain<R: Rng + ?Sized>(
        dim: usize,
        num_classes: usize,
        data: Option<&[Example<'_>]>,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut model = Self::random(dim, num_classes, rng)?;
        if let Some(data) = data {
            cfg.validate()?;
            model.check_examples(data)?;
            if !data.is_empty() {
                sgd(&mut model.weights, dim, num_classes, data, cfg, cfg.learning_rate, rng);
                model.pretrained = Arc::new(model.weights.clone());
            }
        }
        Ok(model)
    }

    /// A model whose weights are exactly the given ones, treated as `M0`.
    pub fn from_weights(dim: usize, num_classes: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != num_classes * (dim + 1) {
            return Err(Error::Shape {
                expected: num_classes * (dim + 1),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Data("non-finite weight".into()));
        }
        Ok(Self::pretrained_from(dim, num_classes, weights))
    }

    fn pretrained_from(dim: usize, num_classes: usize, weights: Vec<f64>) -> Self {
        SoftmaxModel {
            dim,
            num_classes,
            pretrained: Arc::new(weights.clone()),
            weights,
            trained_steps: 0,
            origin: Origin::PretrainedM0,
            last_start: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pretrained_weights(&self) -> &[f64] {
        &self.pretrained
    }

    pub fn trained_steps(&self) -> usize {
        self.trained_steps
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn last_start(&self) -> Option<FitStart> {
        self.last_start
    }

    /// Class probabilities for one feature vector.
    pub fn predict_patch(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: features.len(),
            });
        }
        let mut out = vec![0.0; self.num_classes];
        softmax_into(&self.weights, self.dim, features, &mut out);
        Ok(out)
    }

    /// Mean cross-entropy of the current weights on `data`.
    pub fn loss(&self, data: &[Example<'_>]) -> Result<f64> {
        self.check_examples(data)?;
        Ok(loss_and_gradient(&self.weights, self.dim, self.num_classes, data).0)
    }

    fn check_examples(&self, data: &[Example<'_>]) -> Result<()> {
        for ex in data {
            if ex.features.len() != self.dim {
                return Err(Error::Shape {
                    expected: self.dim,
                    got: ex.features.len(),
                });
            }
            if ex.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data("non-finite feature in training data".into()));
            }
            if ex.label >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    label: ex.label,
                    num_classes: self.num_classes,
                });
            }
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            d: self.dim,
            num_classes: self.num_classes,
            weights: self.weights.clone(),
            trained_steps: self.trained_steps,
            origin: self.origin,
            pretrained_weights: Some(self.pretrained.as_ref().clone()),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        let mut model = Self::from_weights(ckpt.d, ckpt.num_classes, ckpt.weights)?;
        if let Some(pre) = ckpt.pretrained_weights {
            if pre.len() != model.weights.len() {
                return Err(Error::Shape {
                    expected: model.weights.len(),
                    got: pre.len(),
                });
            }
            model.pretrained = Arc::new(pre);
        }
        model.trained_steps = ckpt.trained_steps;
        model.origin = ckpt.origin;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&self.to_checkpoint())?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        Self::from_checkpoint(ckpt)
    }
}

/// JSON checkpoint of a [`SoftmaxModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub d: usize,
    pub num_classes: usize,
    /// Row-major `num_classes x (d + 1)`, bias last.
    pub weights: Vec<f64>,
    pub trained_steps: usize,
    pub origin: Origin,
    /// Starting weights needed to resume cold fits; absent means `weights`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrained_weights: Option<Vec<f64>>,
}

impl Learner for SoftmaxModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict(&self, candidate: &Candidate) -> Result<PredictionMatrix> {
        if candidate.dim() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: candidate.dim(),
            });
        }
        let k = self.num_classes;
        let mut data = vec![0.0; candidate.num_patches() * k];
        for (patch, out) in candidate.patches().iter().zip(data.chunks_exact_mut(k)) {
            softmax_into(&self.weights, self.dim, &patch.features, out);
        }
        PredictionMatrix::new(candidate.num_patches(), k, data)
    }

    fn fit<R: Rng + ?Sized>(&self, data: &[Example<'_>], cfg: &TrainConfig, warm: bool, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::Precondition("fit needs at least one example".into()));
        }
        self.check_examples(data)?;
        let (mut weights, lr, start) = if warm {
            (
                self.weights.clone(),
                cfg.learning_rate * cfg.finetune_lr_factor,
                FitStart::Previous,
            )
        } else {
            (
                self.pretrained.as_ref().clone(),
                cfg.learning_rate,
                FitStart::Pretrained,
            )
        };
        sgd(&mut weights, self.dim, self.num_classes, data, cfg, lr, rng);
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Data("training diverged to non-finite weights".into()));
        }
        Ok(SoftmaxModel {
            weights,
            // A cold fit starts a fresh lineage from M0.
            trained_steps: if warm { self.trained_steps + 1 } else { 1 },
            origin: Origin::Finetuned,
            last_start: Some(start),
            ..self.clone()
        })
    }
}

fn softmax_into(weights: &[f64], dim: usize, features: &[f64], out: &mut [f64]) {
    let stride = dim + 1;
    for (k, o) in out.iter_mut().enumerate() {
        let row = &weights[k * stride..(k + 1) * stride];
        *o = row[dim] + row[..dim].iter().zip(features).map(|(w, x)| w * x).sum::<f64>();
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Mean cross-entropy over `data` and its gradient with respect to `weights`.
pub fn loss_and_gradient(weights: &[f64], dim: usize, num_classes: usize, data: &[Example<'_>]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; weights.len()];
    let loss = accumulate_gradient(weights, dim, num_classes, data.iter(), &mut grad);
    let n = data.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

/// Adds the summed gradient of `data` into `grad` and returns the summed loss.
fn accumulate_gradient<'a, 'b: 'a>(
    weights: &[f64],
    dim: usize,
    num_classes: usize,
    data: impl Iterator<Item = &'a Example<'b>>,
    grad: &mut [f64],
) -> f64 {
    let stride = dim + 1;
    let mut probs = vec![0.0; num_classes];
    let mut loss = 0.0;
    for ex in data {
        softmax_into(weights, dim, ex.features, &mut probs);
        loss -= probs[ex.label].max(f64::MIN_POSITIVE).ln();
        for (k, &p) in probs.iter().enumerate() {
            let delta = p - if k == ex.label { 1.0 } else { 0.0 };
            let row = &mut grad[k * stride..(k + 1) * stride];
            for (g, x) in row[..dim].iter_mut().zip(ex.features) {
                *g += delta * x;
            }
            row[dim] += delta;
        }
    }
    loss
}

/// Minibatch SGD with classical momentum and per-epoch learning-rate decay.
fn sgd<R: Rng + ?Sized>(
    weights: &mut [f64],
    dim: usize,
    num_classes: usize,
    data: &[Example<'_>],
    cfg: &TrainConfig,
    learning_rate: f64,
    rng: &mut R,
) {
    let mut velocity = vec![0.0; weights.len()];
    let mut grad = vec![0.0; weights.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut lr = learning_rate;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            accumulate_gradient(weights, dim, num_classes, batch.iter().map(|&i| &data[i]), &mut grad);
            let scale = lr / batch.len() as f64;
            for ((w, v), g) in weights.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - scale * g;
                *w += *v;
            }
        }
        lr *= cfg.lr_decay_gamma;
    }
}
