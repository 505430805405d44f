//! Candidates, patches and the labeled / unlabeled partition.
//!
//! A [`Candidate`] is what an annotator labels; its patches inherit that
//! label. Ground truth is stored on the candidate but only the [`oracle`]
//! module can read it, so the selection path cannot leak labels.
//!
//! [`oracle`]: crate::oracle

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque candidate identifier. Ordering is lexicographic and is used for
/// every deterministic tie-break in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(String);

impl CandidateId {
    pub fn new(id: impl Into<String>) -> Self {
        CandidateId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CandidateId {
    fn from(s: &str) -> Self {
        CandidateId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub index: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    id: CandidateId,
    patches: Vec<Patch>,
    true_label: usize,
}

impl Candidate {
    /// Builds a candidate from its patch feature vectors; patch indices are
    /// assigned contiguously from 0 in the given order.
    pub fn new(id: impl Into<CandidateId>, features: Vec<Vec<f64>>, true_label: usize) -> Result<Self> {
        let id = id.into();
        let Some(first) = features.first() else {
            return Err(Error::Data(format!("candidate `{id}` has no patches")));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Data(format!("candidate `{id}` has zero-dimensional patches")));
        }
        for (j, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::Data(format!(
                    "candidate `{id}` patch {j} has {} features, expected {dim}",
                    f.len()
                )));
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!(
                    "candidate `{id}` patch {j} has a non-finite feature"
                )));
            }
        }
        let patches = features
            .into_iter()
            .enumerate()
            .map(|(index, features)| Patch { index, features })
            .collect();
        Ok(Candidate {
            id,
            patches,
            true_label,
        })
    }

    pub fn id(&self) -> &CandidateId {
        &self.id
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn dim(&self) -> usize {
        self.patches[0].features.len()
    }

    pub(crate) fn true_label(&self) -> usize {
        self.true_label
    }
}

impl From<String> for CandidateId {
    fn from(s: String) -> Self {
        CandidateId(s)
    }
}

/// The U / L partition over a fixed candidate set, plus the annotations
/// collected so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    unlabeled: BTreeSet<CandidateId>,
    labeled: BTreeMap<CandidateId, usize>,
    num_classes: usize,
    step: usize,
}

impl PoolState {
    /// All candidates start unlabeled at step 0.
    pub fn new<I>(ids: I, num_classes: usize) -> Self
    where
        I: IntoIterator<Item = CandidateId>,
    {
        PoolState {
            unlabeled: ids.into_iter().collect(),
            labeled: BTreeMap::new(),
            num_classes,
            step: 0,
        }
    }

    pub fn unlabeled(&self) -> &BTreeSet<CandidateId> {
        &self.unlabeled
    }

    /// Labeled candidates with their annotated labels.
    pub fn labeled(&self) -> &BTreeMap<CandidateId, usize> {
        &self.labeled
    }

    pub fn annotated_label(&self, id: &CandidateId) -> Option<usize> {
        self.labeled.get(id).copied()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn len(&self) -> usize {
        self.unlabeled.len() + self.labeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Moves annotated candidates from U into L and advances the step.
    ///
    /// Validation happens before any mutation, so on error the state is unchanged.
    pub fn move_to_labeled(&mut self, annotations: &[(CandidateId, usize)]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (id, label) in annotations {
            if !self.unlabeled.contains(id) || !seen.insert(id) {
                return Err(Error::PartitionViolation(id.clone()));
            }
            if *label >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    label: *label,
                    num_classes: self.num_classes,
                });
            }
        }
        for (id, label) in annotations {
            self.unlabeled.remove(id);
            self.labeled.insert(id.clone(), *label);
        }
        self.step += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abc() -> PoolState {
        PoolState::new(["a", "b", "c"].map(CandidateId::from), 2)
    }

    #[test]
    fn move_single() {
        let mut pool = abc();
        pool.move_to_labeled(&[("a".into(), 1)]).unwrap();
        let u: Vec<_> = pool.unlabeled().iter().map(|i| i.as_str()).collect();
        assert_eq!(u, ["b", "c"]);
        assert_eq!(pool.annotated_label(&"a".into()), Some(1));
        assert_eq!(pool.step(), 1);
    }

    #[test]
    fn move_empty_only_advances_step() {
        let mut pool = abc();
        let before = pool.clone();
        pool.move_to_labeled(&[]).unwrap();
        assert_eq!(pool.unlabeled(), before.unlabeled());
        assert_eq!(pool.labeled(), before.labeled());
        assert_eq!(pool.step(), 1);
    }

    #[test]
    fn move_already_labeled_is_partition_violation() {
        let mut pool = abc();
        pool.move_to_labeled(&[("a".into(), 0)]).unwrap();
        let before = pool.clone();
        let err = pool.move_to_labeled(&[("a".into(), 0), ("b".into(), 1)]).unwrap_err();
        assert!(matches!(err, Error::PartitionViolation(ref id) if id.as_str() == "a"));
        assert_eq!(pool, before);
    }

    #[test]
    fn label_out_of_range() {
        let mut pool = abc();
        let err = pool.move_to_labeled(&[("b".into(), 2)]).unwrap_err();
        assert!(matches!(
            err,
            Error::LabelOutOfRange {
                label: 2,
                num_classes: 2
            }
        ));
    }

    #[test]
    fn duplicate_id_in_one_move_rejected() {
        let mut pool = abc();
        assert!(pool.move_to_labeled(&[("b".into(), 0), ("b".into(), 0)]).is_err());
    }

    #[test]
    fn candidate_validation() {
        assert!(Candidate::new("x", vec![], 0).is_err());
        assert!(Candidate::new("x", vec![vec![1.0], vec![1.0, 2.0]], 0).is_err());
        assert!(Candidate::new("x", vec![vec![f64::NAN]], 0).is_err());
        let c = Candidate::new("x", vec![vec![1.0, 2.0], vec![3.0, 4.0]], 1).unwrap();
        assert_eq!(c.patches()[1].index, 1);
        assert_eq!(c.dim(), 2);
    }

    proptest! {
        #[test]
        fn partition_invariants_hold(
            n in 1usize..30,
            moves in prop::collection::vec(prop::collection::vec((0usize..30, 0usize..3), 0..5), 0..10),
        ) {
            let ids: Vec<CandidateId> = (0..n).map(|i| CandidateId::new(format!("c{i:02}"))).collect();
            let all: BTreeSet<_> = ids.iter().cloned().collect();
            let run = |pool: &mut PoolState| {
                let mut results = Vec::new();
                for batch in &moves {
                    let ann: Vec<_> = batch
                        .iter()
                        .map(|&(i, l)| (CandidateId::new(format!("c{:02}", i % n)), l))
                        .collect();
                    let before = pool.labeled().len();
                    results.push(pool.move_to_labeled(&ann).is_ok());
                    assert!(pool.labeled().len() >= before);
                    assert!(pool.unlabeled().iter().all(|id| !pool.labeled().contains_key(id)));
                    let union: BTreeSet<_> =
                        pool.unlabeled().iter().chain(pool.labeled().keys()).cloned().collect();
                    assert_eq!(&union, &all);
                }
                results
            };
            let mut a = PoolState::new(ids.clone(), 3);
            let mut b = PoolState::new(ids.clone(), 3);
            let ra = run(&mut a);
            let rb = run(&mut b);
            prop_assert_eq!(ra, rb);
            prop_assert_eq!(a, b);
        }
    }
}
