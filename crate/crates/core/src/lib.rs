//! Active, continuous fine-tuning for annotation-cost reduction.
//!
//! Candidates are annotation units made of several patches (augmented views
//! that inherit the candidate's label). Each step, the current model predicts
//! every patch of every unlabeled candidate; candidates are ranked by the
//! entropy and/or diversity of those predictions, optionally restricted to the
//! majority patches of the dominant class, and a batch is drawn either
//! greedily or by randomized sampling over an extended window. The learner is
//! then fine-tuned on the new labels, optionally joined by the labeled
//! candidates it currently gets wrong.
//!
//! Modules map onto the moving parts:
//!
//! - [`pool`]: candidates, patches, and the labeled/unlabeled partition
//! - [`criteria`]: dominant class, majority subset, entropy, diversity, scores
//! - [`sampler`]: top-b, randomized-window and uniform batch selection
//! - [`learner`]: the learner interface, a softmax reference model and a mock
//! - [`oracle`]: the simulated annotator, sole reader of ground truth
//! - [`experiment`]: the selection / fine-tuning loop and strategy presets
//! - [`datagen`]: synthetic benchmark generator and the CSV dataset format
//! - [`metrics`]: AUC, learning curves, ALC and batch class balance
//! - [`harness`]: JSON-configured `generate` / `run` / `compare` commands

pub mod criteria;
pub mod datagen;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod oracle;
pub mod pool;
pub mod sampler;

mod fmt;

pub use error::{Error, Result};
