//! The active selection / fine-tuning loop and the named learning strategies.
//!
//! Each step scores every unlabeled candidate with the current model, picks
//! a batch, asks the oracle for labels, collects the labeled candidates the
//! current (pre-fit) model misclassifies, fits the model on the training set
//! prescribed by the strategy, and finally moves the batch into the labeled
//! set.
//!
//! | strategy | training set | model start     | selection |
//! |----------|--------------|-----------------|-----------|
//! | AFT'     | Q            | previous model  | active    |
//! | AFT*     | H ∪ Q        | previous model  | active    |
//! | AFT''    | L ∪ Q        | previous model  | active    |
//! | AFT      | L ∪ Q        | pre-trained M0  | active    |
//! | RFT      | L ∪ Q        | pre-trained M0  | random    |

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{classify_pattern, score_candidate, CandidateScore, CriteriaConfig, Pattern};
use crate::error::{Error, Result};
use crate::learner::{candidate_class, candidate_probability, examples, Learner, SoftmaxModel, TrainConfig};
use crate::metrics::{auc, auc_one_vs_rest, balance_ratio, ExperimentRecord, LearningCurve};
use crate::oracle::{evaluation_labels, Oracle, OracleConfig};
use crate::pool::{Candidate, CandidateId, PoolState};
use crate::sampler::{select_batch, select_uniform, SamplerConfig, SelectionMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "AFT'")]
    AftPrime,
    #[serde(rename = "AFT*")]
    AftStar,
    #[serde(rename = "AFT''")]
    AftDoublePrime,
    #[serde(rename = "AFT")]
    Aft,
    #[serde(rename = "RFT")]
    Rft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingSetPolicy {
    QOnly,
    HUnionQ,
    LUnionQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStart {
    ContinuePrevious,
    RestartFromM0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionClass {
    Active,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::AftPrime,
        Method::AftStar,
        Method::AftDoublePrime,
        Method::Aft,
        Method::Rft,
    ];

    pub fn table_row(self) -> (TrainingSetPolicy, ModelStart, SelectionClass) {
        use ModelStart::*;
        use TrainingSetPolicy::*;
        match self {
            Method::AftPrime => (QOnly, ContinuePrevious, SelectionClass::Active),
            Method::AftStar => (HUnionQ, ContinuePrevious, SelectionClass::Active),
            Method::AftDoublePrime => (LUnionQ, ContinuePrevious, SelectionClass::Active),
            Method::Aft => (LUnionQ, RestartFromM0, SelectionClass::Active),
            Method::Rft => (LUnionQ, RestartFromM0, SelectionClass::Random),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::AftPrime => "AFT'",
            Method::AftStar => "AFT*",
            Method::AftDoublePrime => "AFT''",
            Method::Aft => "AFT",
            Method::Rft => "RFT",
        }
    }

    /// File-name friendly form.
    pub fn slug(self) -> &'static str {
        match self {
            Method::AftPrime => "aft_prime",
            Method::AftStar => "aft_star",
            Method::AftDoublePrime => "aft_doubleprime",
            Method::Aft => "aft",
            Method::Rft => "rft",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s {
            "AFT'" | "AFT′" | "AFT_prime" => Method::AftPrime,
            "AFT*" | "AFT_star" => Method::AftStar,
            "AFT''" | "AFT″" | "AFT_doubleprime" => Method::AftDoublePrime,
            "AFT" => Method::Aft,
            "RFT" => Method::Rft,
            other => return Err(Error::Config(format!("unknown strategy `{other}`"))),
        };
        Ok(m)
    }
}

/// The eight named active criteria: entropy or diversity, with or without
/// majority selection (`^α`) and randomized window sampling (`_ω`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Criterion {
    pub diversity: bool,
    pub majority: bool,
    pub randomized: bool,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = {
        const fn c(diversity: bool, majority: bool, randomized: bool) -> Criterion {
            Criterion {
                diversity,
                majority,
                randomized,
            }
        }
        [
            c(true, false, false),
            c(true, true, false),
            c(true, false, true),
            c(true, true, true),
            c(false, false, false),
            c(false, true, false),
            c(false, false, true),
            c(false, true, true),
        ]
    };

    pub fn criteria_config(self) -> CriteriaConfig {
        let alpha = if self.majority {
            CriteriaConfig::DEFAULT_ALPHA
        } else {
            1.0
        };
        if self.diversity {
            CriteriaConfig::diversity(alpha)
        } else {
            CriteriaConfig::entropy(alpha)
        }
    }

    pub fn selection_mode(self) -> SelectionMode {
        if self.randomized {
            SelectionMode::Randomized
        } else {
            SelectionMode::TopB
        }
    }

    pub fn name(self) -> String {
        let base = if self.diversity { "diversity" } else { "entropy" };
        let alpha = if self.majority { "^α" } else { "" };
        let omega = if self.randomized { "_ω" } else { "" };
        format!("{base}{alpha}{omega}")
    }

    pub fn slug(self) -> String {
        let base = if self.diversity { "diversity" } else { "entropy" };
        let alpha = if self.majority { "_alpha" } else { "" };
        let omega = if self.randomized { "_omega" } else { "" };
        format!("{base}{alpha}{omega}")
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// Accepts `entropy^α_ω`, `entropy^alpha_omega` and the slug `entropy_alpha_omega`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Config(format!("unknown criterion `{s}`"));
        let normalized = s.replace("alpha", "α").replace("omega", "ω").replace("_α", "^α");
        let (diversity, rest) = if let Some(rest) = normalized.strip_prefix("diversity") {
            (true, rest)
        } else if let Some(rest) = normalized.strip_prefix("entropy") {
            (false, rest)
        } else {
            return Err(unknown());
        };
        let (majority, rest) = match rest.strip_prefix("^α") {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let randomized = match rest {
            "" => false,
            "_ω" => true,
            _ => return Err(unknown()),
        };
        Ok(Criterion {
            diversity,
            majority,
            randomized,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Active(CriteriaConfig),
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub name: Method,
    pub selection: Selection,
    pub sampler: SamplerConfig,
    pub training_set_policy: TrainingSetPolicy,
    pub model_start: ModelStart,
}

impl StrategyConfig {
    /// A named strategy wired exactly as its table row. Active methods need a
    /// criterion; RFT ignores it.
    pub fn preset(method: Method, criterion: Option<Criterion>, batch_size: usize) -> Result<Self> {
        let (training_set_policy, model_start, class) = method.table_row();
        let (selection, mode) = match class {
            SelectionClass::Random => (Selection::UniformRandom, SelectionMode::UniformRandom),
            SelectionClass::Active => {
                let c = criterion.ok_or_else(|| Error::Config(format!("{method} needs a selection criterion")))?;
                (Selection::Active(c.criteria_config()), c.selection_mode())
            }
        };
        let cfg = StrategyConfig {
            name: method,
            selection,
            sampler: SamplerConfig {
                batch_size,
                omega: SamplerConfig::DEFAULT_OMEGA,
                mode,
            },
            training_set_policy,
            model_start,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn selection_class(&self) -> SelectionClass {
        match self.selection {
            Selection::Active(_) => SelectionClass::Active,
            Selection::UniformRandom => SelectionClass::Random,
        }
    }

    /// Swaps the selection step for uniform random sampling, keeping everything else.
    pub fn with_uniform_selection(mut self) -> Self {
        self.selection = Selection::UniformRandom;
        self.sampler.mode = SelectionMode::UniformRandom;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        match (&self.selection, self.sampler.mode) {
            (Selection::Active(c), SelectionMode::TopB | SelectionMode::Randomized) => c.validate(),
            (Selection::UniformRandom, SelectionMode::UniformRandom) => Ok(()),
            _ => Err(Error::Config("selection and sampler mode disagree".into())),
        }
    }
}

/// When the loop stops, besides running out of unlabeled candidates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    /// Maximum number of annotations.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Stop once test AUC reaches this value.
    #[serde(default)]
    pub target_auc: Option<f64>,
}

impl StopRule {
    pub fn budget(budget: usize) -> Self {
        StopRule {
            budget: Some(budget),
            target_auc: None,
        }
    }
}

/// Everything about a run except the data and the starting model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSetup {
    pub strategy: StrategyConfig,
    pub train: TrainConfig,
    pub stop: StopRule,
    pub oracle: OracleConfig,
    /// Class treated as positive for binary AUC and batch balance.
    pub positive_class: usize,
    pub seed: u64,
}

/// Independent random streams derived from one seed.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const SELECTION: u64 = 1;
    pub const TRAINING: u64 = 2;
    pub const ORACLE: u64 = 3;
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Starting model for the reference learner: small random weights drawn from the init stream.
pub fn softmax_m0(dim: usize, num_classes: usize, seed: u64) -> Result<SoftmaxModel> {
    SoftmaxModel::random(dim, num_classes, &mut stream(seed, streams::INIT))
}

/// Per-candidate audit entry for a selected candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedCandidate {
    pub candidate_id: CandidateId,
    pub label: usize,
    pub dominant: Option<usize>,
    pub entropy: Option<f64>,
    pub diversity: Option<f64>,
    pub score: Option<f64>,
    pub pattern: Option<Pattern>,
}

/// Audit line for one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepAudit {
    pub step: usize,
    pub batch: Vec<SelectedCandidate>,
    pub training_set_size: usize,
    pub misclassified_pre_fit: usize,
    pub misclassified_post_fit: usize,
    pub fitted: bool,
}

/// What a single step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub record: ExperimentRecord,
    pub batch: Vec<CandidateId>,
    pub misclassified: BTreeSet<CandidateId>,
    pub training_set: BTreeSet<CandidateId>,
    pub audit: StepAudit,
}

/// Counters for work done by the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub candidates_scored: usize,
    pub fits: usize,
}

/// Labeled candidates whose candidate-level prediction disagrees with their annotation.
pub fn misclassified_set<L: Learner>(model: &L, labeled: &[(&Candidate, usize)]) -> Result<BTreeSet<CandidateId>> {
    let flags = labeled
        .par_iter()
        .map(|(c, label)| Ok((candidate_class(&model.predict(c)?) != *label).then(|| c.id().clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(flags.into_iter().flatten().collect())
}

pub fn build_training_set(
    policy: TrainingSetPolicy,
    queried: &BTreeSet<CandidateId>,
    misclassified: &BTreeSet<CandidateId>,
    labeled: &BTreeSet<CandidateId>,
) -> Result<BTreeSet<CandidateId>> {
    if !queried.is_disjoint(labeled) {
        return Err(Error::Invariant("new queries overlap the labeled set".into()));
    }
    if !misclassified.is_subset(labeled) {
        return Err(Error::Invariant(
            "misclassified set is not within the labeled set".into(),
        ));
    }
    let set = match policy {
        TrainingSetPolicy::QOnly => queried.clone(),
        TrainingSetPolicy::HUnionQ => queried.union(misclassified).cloned().collect(),
        TrainingSetPolicy::LUnionQ => queried.union(labeled).cloned().collect(),
    };
    Ok(set)
}

/// A running experiment over one train/test split.
pub struct Experiment<'a, L: Learner> {
    setup: ExperimentSetup,
    train: &'a [Candidate],
    index: HashMap<CandidateId, usize>,
    test: &'a [Candidate],
    test_labels: Vec<usize>,
    pool: PoolState,
    model: L,
    oracle: Oracle,
    records: Vec<ExperimentRecord>,
    selection_rng: ChaCha8Rng,
    training_rng: ChaCha8Rng,
    counters: Counters,
}

impl<'a, L: Learner> Experiment<'a, L> {
    /// Validates the setup and evaluates the starting model as step 0.
    pub fn new(setup: ExperimentSetup, train: &'a [Candidate], test: &'a [Candidate], m0: L) -> Result<Self> {
        setup.strategy.validate()?;
        setup.train.validate()?;
        let num_classes = m0.num_classes();
        if setup.positive_class >= num_classes {
            return Err(Error::Config(format!(
                "positive_class {} out of range for {num_classes} classes",
                setup.positive_class
            )));
        }
        if let Some(t) = setup.stop.target_auc {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("target_auc {t} not in [0, 1]")));
            }
        }
        let mut index = HashMap::with_capacity(train.len());
        for (i, c) in train.iter().enumerate() {
            if index.insert(c.id().clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate candidate id `{}`", c.id())));
            }
        }
        let test_labels = evaluation_labels(test);
        let oracle = Oracle::new(setup.oracle, num_classes, stream(setup.seed, streams::ORACLE))?;
        let pool = PoolState::new(index.keys().cloned(), num_classes);
        let mut exp = Experiment {
            selection_rng: stream(setup.seed, streams::SELECTION),
            training_rng: stream(setup.seed, streams::TRAINING),
            setup,
            train,
            index,
            test,
            test_labels,
            pool,
            model: m0,
            oracle,
            records: Vec::new(),
            counters: Counters::default(),
        };
        let baseline = ExperimentRecord {
            step: 0,
            queries_cum: 0,
            labeled_count: 0,
            test_auc: exp.evaluate()?,
            selected_positive_fraction: None,
            misclassified_count_pre_fit: 0,
        };
        exp.records.push(baseline);
        Ok(exp)
    }

    pub fn pool(&self) -> &PoolState {
        &self.pool
    }

    pub fn model(&self) -> &L {
        &self.model
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    pub fn records(&self) -> &[ExperimentRecord] {
        &self.records
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn setup(&self) -> &ExperimentSetup {
        &self.setup
    }

    fn candidate(&self, id: &CandidateId) -> &'a Candidate {
        &self.train[self.index[id]]
    }

    /// Candidate-level test AUC of the current model.
    pub fn evaluate(&self) -> Result<f64> {
        let probs = self
            .test
            .par_iter()
            .map(|c| Ok(candidate_probability(&self.model.predict(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let k = self.model.num_classes();
        if k == 2 {
            let positive = self.setup.positive_class;
            let scores: Vec<f64> = probs.iter().map(|p| p[positive]).collect();
            let truth: Vec<bool> = self.test_labels.iter().map(|&l| l == positive).collect();
            auc(&scores, &truth)
        } else {
            auc_one_vs_rest(&probs, &self.test_labels, k)
        }
    }

    fn labeled_pairs(&self) -> Vec<(&'a Candidate, usize)> {
        self.pool
            .labeled()
            .iter()
            .map(|(id, &label)| (self.candidate(id), label))
            .collect()
    }

    /// Runs one step with at most `limit` queries. Returns `None` when the
    /// unlabeled pool is empty or the limit is zero.
    pub fn step(&mut self, limit: Option<usize>) -> Result<Option<StepReport>> {
        let batch_size = limit.map_or(self.setup.strategy.sampler.batch_size, |l| {
            l.min(self.setup.strategy.sampler.batch_size)
        });
        if self.pool.unlabeled().is_empty() || batch_size == 0 {
            return Ok(None);
        }
        let unlabeled: Vec<CandidateId> = self.pool.unlabeled().iter().cloned().collect();
        let sampler = SamplerConfig {
            batch_size,
            ..self.setup.strategy.sampler
        };

        // Selection: only features and model outputs are visible here.
        let mut scored: BTreeMap<CandidateId, (CandidateScore, Option<Pattern>)> = BTreeMap::new();
        let batch = match self.setup.strategy.selection {
            Selection::UniformRandom => select_uniform(&unlabeled, batch_size, &mut self.selection_rng),
            Selection::Active(criteria) => {
                let model = &self.model;
                let scores = unlabeled
                    .par_iter()
                    .map(|id| {
                        let p = model.predict(self.candidate(id))?;
                        Ok((score_candidate(id, &p, &criteria), classify_pattern(&p).ok()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.counters.candidates_scored += scores.len();
                let plain: Vec<CandidateScore> = scores.iter().map(|(s, _)| s.clone()).collect();
                let batch = select_batch(&plain, &sampler, &mut self.selection_rng)?;
                for (s, pattern) in scores {
                    scored.insert(s.candidate_id.clone(), (s, pattern));
                }
                batch
            }
        };

        let selected: Vec<&Candidate> = batch.iter().map(|id| self.candidate(id)).collect();
        let labels = self.oracle.query(&selected)?;
        let queried: BTreeSet<CandidateId> = batch.iter().cloned().collect();

        // Hard examples are judged by the model before it is updated.
        let labeled_before = self.labeled_pairs();
        let misclassified = misclassified_set(&self.model, &labeled_before)?;
        let labeled_ids: BTreeSet<CandidateId> = self.pool.labeled().keys().cloned().collect();
        let training_set = build_training_set(
            self.setup.strategy.training_set_policy,
            &queried,
            &misclassified,
            &labeled_ids,
        )?;

        let new_labels: HashMap<&CandidateId, usize> = batch.iter().zip(labels.iter().copied()).collect();
        let fitted = !training_set.is_empty();
        if fitted {
            let pairs = training_set.iter().map(|id| {
                let label = new_labels
                    .get(id)
                    .copied()
                    .or_else(|| self.pool.annotated_label(id))
                    .expect("training candidates are annotated");
                (self.candidate(id), label)
            });
            let data = examples(pairs);
            let warm = self.setup.strategy.model_start == ModelStart::ContinuePrevious;
            self.model = self.model.fit(&data, &self.setup.train, warm, &mut self.training_rng)?;
            self.counters.fits += 1;
        }

        let annotations: Vec<(CandidateId, usize)> = batch.iter().cloned().zip(labels.iter().copied()).collect();
        self.pool.move_to_labeled(&annotations)?;

        let misclassified_post_fit = misclassified_set(&self.model, &self.labeled_pairs())?.len();
        let record = ExperimentRecord {
            step: self.pool.step(),
            queries_cum: self.oracle.query_count(),
            labeled_count: self.pool.labeled().len(),
            test_auc: self.evaluate()?,
            selected_positive_fraction: Some(balance_ratio(&labels, self.setup.positive_class)?),
            misclassified_count_pre_fit: misclassified.len(),
        };
        self.records.push(record.clone());

        let audit = StepAudit {
            step: record.step,
            batch: batch
                .iter()
                .zip(&labels)
                .map(|(id, &label)| {
                    let entry = scored.get(id);
                    SelectedCandidate {
                        candidate_id: id.clone(),
                        label,
                        dominant: entry.map(|(s, _)| s.dominant),
                        entropy: entry.map(|(s, _)| s.entropy),
                        diversity: entry.map(|(s, _)| s.diversity),
                        score: entry.map(|(s, _)| s.score),
                        pattern: entry.and_then(|(_, p)| *p),
                    }
                })
                .collect(),
            training_set_size: training_set.len(),
            misclassified_pre_fit: misclassified.len(),
            misclassified_post_fit,
            fitted,
        };
        Ok(Some(StepReport {
            record,
            batch,
            misclassified,
            training_set,
            audit,
        }))
    }

    /// Steps until the stop rule fires or the pool is exhausted.
    pub fn run(&mut self) -> Result<Vec<StepAudit>> {
        let mut audits = Vec::new();
        loop {
            let stop = self.setup.stop;
            if let (Some(target), Some(last)) = (stop.target_auc, self.records.last()) {
                if last.test_auc >= target {
                    break;
                }
            }
            let limit = stop.budget.map(|b| b.saturating_sub(self.oracle.query_count()));
            match self.step(limit)? {
                Some(report) => audits.push(report.audit),
                None => break,
            }
        }
        Ok(audits)
    }
}

/// Result of a complete run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome<L> {
    pub curve: LearningCurve,
    pub audit: Vec<StepAudit>,
    pub labeled: BTreeMap<CandidateId, usize>,
    pub model: L,
    pub counters: Counters,
}

/// Runs a whole experiment from the given starting model.
pub fn run_experiment<L: Learner>(
    setup: ExperimentSetup,
    train: &[Candidate],
    test: &[Candidate],
    m0: L,
) -> Result<ExperimentOutcome<L>> {
    let total = train.len();
    let mut exp = Experiment::new(setup, train, test, m0)?;
    let audit = exp.run()?;
    Ok(ExperimentOutcome {
        curve: LearningCurve::new(exp.records.clone(), total.max(1))?,
        audit,
        labeled: exp.pool.labeled().clone(),
        counters: exp.counters,
        model: exp.model,
    })
}
