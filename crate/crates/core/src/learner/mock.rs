use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rand::Rng;

use super::{Example, Learner, TrainConfig};
use crate::criteria::PredictionMatrix;
use crate::error::Result;
use crate::pool::{Candidate, CandidateId};

/// Call recorded by a [`TableLearner`].
#[derive(Debug, Clone, PartialEq)]
pub enum LearnerEvent {
    Predict {
        id: CandidateId,
        generation: usize,
    },
    Fit {
        generation: usize,
        examples: usize,
        warm: bool,
    },
}

/// Deterministic learner returning preset prediction matrices.
///
/// Candidates missing from the table get a uniform matrix. `fit` never
/// changes predictions; it only bumps the generation. Every call is appended
/// to a log shared by all clones.
#[derive(Debug, Clone)]
pub struct TableLearner {
    num_classes: usize,
    table: Arc<BTreeMap<CandidateId, PredictionMatrix>>,
    generation: usize,
    log: Arc<Mutex<Vec<LearnerEvent>>>,
}

impl TableLearner {
    pub fn new(num_classes: usize, table: BTreeMap<CandidateId, PredictionMatrix>) -> Self {
        TableLearner {
            num_classes,
            table: Arc::new(table),
            generation: 0,
            log: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn events(&self) -> Vec<LearnerEvent> {
        self.log.lock().unwrap().clone()
    }

    fn record(&self, event: LearnerEvent) {
        self.log.lock().unwrap().push(event);
    }
}

impl Learner for TableLearner {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict(&self, candidate: &Candidate) -> Result<PredictionMatrix> {
        self.record(LearnerEvent::Predict {
            id: candidate.id().clone(),
            generation: self.generation,
        });
        Ok(self
            .table
            .get(candidate.id())
            .cloned()
            .unwrap_or_else(|| PredictionMatrix::uniform(candidate.num_patches(), self.num_classes)))
    }

    fn fit<R: Rng + ?Sized>(&self, data: &[Example<'_>], _cfg: &TrainConfig, warm: bool, _rng: &mut R) -> Result<Self> {
        self.record(LearnerEvent::Fit {
            generation: self.generation,
            examples: data.len(),
            warm,
        });
        Ok(TableLearner {
            generation: self.generation + 1,
            ..self.clone()
        })
    }
}
