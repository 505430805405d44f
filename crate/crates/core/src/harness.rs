//! JSON-configured experiment commands behind the `aft` binary.
//!
//! Every config carries `"schema_version": 1` and rejects unknown keys.
//! Outputs are plain files so curves can be plotted with external tools:
//!
//! - `generate`: `train.csv`, `test.csv`, `meta.json`
//! - `run`: per seed `curve-seed<N>.csv`, `summary-seed<N>.json`, `audit-seed<N>.jsonl`
//! - `compare`: `compare.csv`, `compare.json`, plus each cell's run files under `runs/`

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::{self, DatagenConfig, LoadedDataset};
use crate::error::{Error, Result};
use crate::experiment::{
    run_experiment, softmax_m0, Criterion, ExperimentOutcome, ExperimentSetup, Method, Selection, StepAudit, StopRule,
    StrategyConfig,
};
use crate::fmt::f64_17;
use crate::learner::{SoftmaxModel, TrainConfig};
use crate::metrics::{mean_sd, LearningCurve, RunSummary};
use crate::oracle::OracleConfig;
use crate::pool::Candidate;

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable consulted for the output directory when neither the
/// command line nor the config names one.
pub const OUTPUT_DIR_ENV: &str = "AFT_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generate per seed; the run seed replaces the generator seed.
    Generate(DatagenConfig),
    /// Directory holding `train.csv` and `test.csv`, shared by all seeds.
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub schema_version: u32,
    pub datagen: DatagenConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A named strategy with optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub method: String,
    #[serde(default)]
    pub criterion: Option<String>,
    pub batch_size: usize,
    #[serde(default)]
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub omega: Option<usize>,
}

impl StrategySpec {
    pub fn new(method: Method, criterion: Option<Criterion>, batch_size: usize) -> Self {
        StrategySpec {
            method: method.name().to_owned(),
            criterion: criterion.map(|c| c.name()),
            batch_size,
            lambda1: None,
            lambda2: None,
            alpha: None,
            omega: None,
        }
    }

    fn parsed(&self) -> Result<(Method, Option<Criterion>)> {
        let method: Method = self.method.parse()?;
        let criterion = match (&self.criterion, method) {
            (_, Method::Rft) => None,
            (Some(c), _) => Some(c.parse()?),
            (None, _) => return Err(Error::Config(format!("{method} needs a `criterion`"))),
        };
        Ok((method, criterion))
    }

    pub fn resolve(&self) -> Result<StrategyConfig> {
        let (method, criterion) = self.parsed()?;
        let mut cfg = StrategyConfig::preset(method, criterion, self.batch_size)?;
        let criteria_override = self.lambda1.is_some() || self.lambda2.is_some() || self.alpha.is_some();
        match &mut cfg.selection {
            Selection::Active(c) => {
                c.lambda1 = self.lambda1.unwrap_or(c.lambda1);
                c.lambda2 = self.lambda2.unwrap_or(c.lambda2);
                c.alpha = self.alpha.unwrap_or(c.alpha);
            }
            Selection::UniformRandom if criteria_override => {
                return Err(Error::Config("RFT takes no lambda/alpha overrides".into()));
            }
            Selection::UniformRandom => {}
        }
        if let Some(omega) = self.omega {
            cfg.sampler.omega = omega;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Display name such as `AFT*-entropy^α_ω` or `RFT`.
    pub fn display_name(&self) -> Result<String> {
        Ok(match self.parsed()? {
            (m, Some(c)) => format!("{m}-{c}"),
            (m, None) => m.to_string(),
        })
    }

    pub fn slug(&self) -> Result<String> {
        Ok(match self.parsed()? {
            (m, Some(c)) => format!("{}-{}", m.slug(), c.slug()),
            (m, None) => m.slug().to_owned(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub dataset: DatasetSource,
    pub strategy: StrategySpec,
    #[serde(default)]
    pub learner: TrainConfig,
    #[serde(default)]
    pub stop: StopRule,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub positive_class: usize,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub schema_version: u32,
    pub dataset: DatasetSource,
    /// Table rows, e.g. `["AFT'", "AFT''", "AFT", "AFT*", "RFT"]`.
    pub methods: Vec<String>,
    /// Table columns for the active methods.
    pub criteria: Vec<String>,
    pub batch_size: usize,
    #[serde(default)]
    pub omega: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub learner: TrainConfig,
    #[serde(default)]
    pub stop: StopRule,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub positive_class: usize,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn check_schema(version: u32) -> Result<()> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )))
    }
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        Err(Error::Config("`seeds` must not be empty".into()))
    } else {
        Ok(())
    }
}

/// Reads a JSON config; any read or parse failure is a configuration error.
/// A relative dataset path is taken relative to the config file.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn rebase(source: &mut DatasetSource, config_path: &Path) {
    if let DatasetSource::Path(p) = source {
        if p.is_relative() {
            if let Some(parent) = config_path.parent() {
                *p = parent.join(&*p);
            }
        }
    }
}

impl GenerateConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let cfg: Self = read_config(path)?;
        check_schema(cfg.schema_version)?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_config(path)?;
        rebase(&mut cfg.dataset, path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        check_seeds(&self.seeds)?;
        self.strategy.resolve()?;
        self.learner.validate()?;
        self.oracle.validate()
    }
}

impl CompareConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_config(path)?;
        rebase(&mut cfg.dataset, path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        check_seeds(&self.seeds)?;
        if self.methods.is_empty() {
            return Err(Error::Config("`methods` must not be empty".into()));
        }
        for spec in self.cells()? {
            spec.resolve()?;
        }
        self.learner.validate()?;
        self.oracle.validate()
    }

    /// One strategy per table cell, rows in config order.
    pub fn cells(&self) -> Result<Vec<StrategySpec>> {
        let mut cells = Vec::new();
        for m in &self.methods {
            let method: Method = m.parse()?;
            if method == Method::Rft {
                cells.push(StrategySpec {
                    omega: self.omega,
                    ..StrategySpec::new(method, None, self.batch_size)
                });
                continue;
            }
            if self.criteria.is_empty() {
                return Err(Error::Config(format!("{method} needs at least one criterion")));
            }
            for c in &self.criteria {
                let criterion: Criterion = c.parse()?;
                cells.push(StrategySpec {
                    alpha: self.alpha.filter(|_| criterion.majority),
                    omega: self.omega,
                    ..StrategySpec::new(method, Some(criterion), self.batch_size)
                });
            }
        }
        Ok(cells)
    }

    /// The single-strategy config equivalent to one cell.
    pub fn run_config(&self, strategy: StrategySpec) -> RunConfig {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            dataset: self.dataset.clone(),
            strategy,
            learner: self.learner,
            stop: self.stop,
            seeds: self.seeds.clone(),
            output_dir: None,
            positive_class: self.positive_class,
            oracle: self.oracle,
        }
    }
}

/// Command-line overrides shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

/// Output directory precedence: command line, config, environment.
pub fn output_dir(overrides: &Overrides, config: Option<&PathBuf>) -> Result<PathBuf> {
    overrides
        .output
        .clone()
        .or_else(|| config.cloned())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            Error::Config(format!(
                "no output directory: pass --output, set output_dir, or set {OUTPUT_DIR_ENV}"
            ))
        })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Generates a dataset and writes it under `dir`.
pub fn generate(cfg: &GenerateConfig, dir: &Path) -> Result<datagen::GeneratedDataset> {
    check_schema(cfg.schema_version)?;
    let data = datagen::generate(&cfg.datagen)?;
    datagen::write_dataset(dir, &data)?;
    Ok(data)
}

pub fn cmd_generate(config: &Path, overrides: &Overrides) -> Result<PathBuf> {
    let mut cfg = GenerateConfig::from_file(config)?;
    if let Some(seed) = overrides.seed {
        cfg.datagen.seed = seed;
    }
    let dir = output_dir(overrides, cfg.output_dir.as_ref())?;
    generate(&cfg, &dir)?;
    Ok(dir)
}

/// Train/test split plus class count for one seed.
#[derive(Debug, Clone)]
pub struct SeedData {
    pub train: Vec<Candidate>,
    pub test: Vec<Candidate>,
    pub num_classes: usize,
}

pub fn dataset_for_seed(source: &DatasetSource, seed: u64) -> Result<SeedData> {
    match source {
        DatasetSource::Generate(cfg) => {
            let data = datagen::generate(&DatagenConfig { seed, ..cfg.clone() })?;
            Ok(SeedData {
                train: data.train,
                test: data.test,
                num_classes: data.config.num_classes,
            })
        }
        DatasetSource::Path(dir) => {
            let LoadedDataset {
                train,
                test,
                num_classes,
            } = datagen::load_dataset(dir)?;
            Ok(SeedData {
                train,
                test,
                num_classes,
            })
        }
    }
}

/// Artifacts of one (strategy, seed) run.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub summary: RunSummary,
    pub curve: LearningCurve,
    pub audit: Vec<StepAudit>,
    pub outcome: ExperimentOutcome<SoftmaxModel>,
}

/// Runs one strategy on one seed with the reference learner.
pub fn run_seed(cfg: &RunConfig, data: &SeedData, seed: u64) -> Result<SeedRun> {
    let strategy = cfg.strategy.resolve()?;
    let dim = data
        .train
        .first()
        .map(Candidate::dim)
        .ok_or_else(|| Error::Data("training split is empty".into()))?;
    let m0 = softmax_m0(dim, data.num_classes, seed)?;
    let setup = ExperimentSetup {
        strategy,
        train: cfg.learner,
        stop: cfg.stop,
        oracle: cfg.oracle,
        positive_class: cfg.positive_class,
        seed,
    };
    let outcome = run_experiment(setup, &data.train, &data.test, m0)?;
    let summary = RunSummary {
        strategy: cfg.strategy.display_name()?,
        seed,
        alc: outcome.curve.alc,
        final_auc: outcome.curve.final_auc(),
        total_queries: outcome.curve.total_queries(),
    };
    Ok(SeedRun {
        summary,
        curve: outcome.curve.clone(),
        audit: outcome.audit.clone(),
        outcome,
    })
}

pub fn audit_jsonl(audit: &[StepAudit]) -> Result<String> {
    let mut out = String::new();
    for step in audit {
        out.push_str(&serde_json::to_string(step)?);
        out.push('\n');
    }
    Ok(out)
}

fn write_seed_run(dir: &Path, run: &SeedRun) -> Result<()> {
    let seed = run.summary.seed;
    run.curve.write_csv(dir.join(format!("curve-seed{seed}.csv")))?;
    run.summary.write_json(dir.join(format!("summary-seed{seed}.json")))?;
    write_file(&dir.join(format!("audit-seed{seed}.jsonl")), &audit_jsonl(&run.audit)?)
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs every seed of `cfg` and writes its files into `dir`.
pub fn run(cfg: &RunConfig, dir: &Path, jobs: Option<usize>) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    create_dir(dir)?;
    let pool = thread_pool(jobs)?;
    let runs = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let data = dataset_for_seed(&cfg.dataset, seed)?;
                run_seed(cfg, &data, seed)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    for r in &runs {
        write_seed_run(dir, r)?;
    }
    Ok(runs.into_iter().map(|r| r.summary).collect())
}

pub fn cmd_run(config: &Path, overrides: &Overrides) -> Result<Vec<RunSummary>> {
    let mut cfg = RunConfig::from_file(config)?;
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    let dir = output_dir(overrides, cfg.output_dir.as_ref())?;
    run(&cfg, &dir, overrides.jobs)
}

/// One cell of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareCell {
    pub method: String,
    pub criterion: Option<String>,
    pub strategy: String,
    pub alcs: Vec<f64>,
    pub mean_alc: f64,
    pub sd_alc: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    pub seeds: Vec<u64>,
    pub criteria: Vec<String>,
    pub cells: Vec<CompareCell>,
}

impl CompareTable {
    pub fn row_count(&self) -> usize {
        let mut methods: Vec<&str> = self.cells.iter().map(|c| c.method.as_str()).collect();
        methods.dedup();
        methods.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,criterion,mean_alc,sd_alc,seeds,best\n");
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.method,
                c.criterion.as_deref().unwrap_or("random"),
                f64_17(c.mean_alc),
                f64_17(c.sd_alc),
                c.alcs.len(),
                c.best
            )
            .unwrap();
        }
        out
    }
}

/// Runs the method x criterion grid and writes the table plus all per-cell runs.
pub fn compare(cfg: &CompareConfig, dir: &Path, jobs: Option<usize>) -> Result<CompareTable> {
    cfg.validate()?;
    create_dir(dir)?;
    let cells = cfg.cells()?;
    let pool = thread_pool(jobs)?;

    let datasets: BTreeMap<u64, Arc<SeedData>> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| Ok((seed, Arc::new(dataset_for_seed(&cfg.dataset, seed)?))))
            .collect::<Result<BTreeMap<_, _>>>()
    })?;
    let jobs_list: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let run_configs: Vec<RunConfig> = cells.iter().map(|s| cfg.run_config(s.clone())).collect();
    let runs = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(i, seed)| run_seed(&run_configs[i], &datasets[&seed], seed))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut table_cells = Vec::with_capacity(cells.len());
    for (i, spec) in cells.iter().enumerate() {
        let cell_dir = dir.join("runs").join(spec.slug()?);
        create_dir(&cell_dir)?;
        let mut alcs = Vec::new();
        for ((cell, _), run) in jobs_list.iter().zip(&runs) {
            if *cell == i {
                write_seed_run(&cell_dir, run)?;
                alcs.push(run.summary.alc);
            }
        }
        let (mean_alc, sd_alc) = mean_sd(&alcs);
        let (method, criterion) = spec.parsed()?;
        table_cells.push(CompareCell {
            method: method.to_string(),
            criterion: criterion.map(|c| c.name()),
            strategy: spec.display_name()?,
            alcs,
            mean_alc,
            sd_alc,
            best: false,
        });
    }
    if let Some(best) = table_cells
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean_alc.total_cmp(&b.1.mean_alc).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
    {
        table_cells[best].best = true;
    }
    let table = CompareTable {
        seeds: cfg.seeds.clone(),
        criteria: cfg.criteria.clone(),
        cells: table_cells,
    };
    write_file(&dir.join("compare.csv"), &table.to_csv())?;
    let mut json = serde_json::to_string_pretty(&table)?;
    json.push('\n');
    write_file(&dir.join("compare.json"), &json)?;
    Ok(table)
}

pub fn cmd_compare(config: &Path, overrides: &Overrides) -> Result<CompareTable> {
    let mut cfg = CompareConfig::from_file(config)?;
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    let dir = output_dir(overrides, cfg.output_dir.as_ref())?;
    compare(&cfg, &dir, overrides.jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(method: &str, criterion: Option<&str>) -> StrategySpec {
        StrategySpec {
            method: method.into(),
            criterion: criterion.map(Into::into),
            batch_size: 20,
            lambda1: None,
            lambda2: None,
            alpha: None,
            omega: None,
        }
    }

    #[test]
    fn strategy_name_resolution() {
        let s = spec("AFT*", Some("entropy^α_ω")).resolve().unwrap();
        let Selection::Active(c) = s.selection else { panic!() };
        assert_eq!((c.lambda1, c.lambda2, c.alpha), (1.0, 0.0, 0.25));
        assert_eq!(s.sampler.omega, 5);
        assert_eq!(s.sampler.mode, crate::sampler::SelectionMode::Randomized);
        assert_eq!(
            spec("AFT*", Some("entropy^α_ω")).display_name().unwrap(),
            "AFT*-entropy^α_ω"
        );
        assert_eq!(
            spec("AFT*", Some("entropy^α_ω")).slug().unwrap(),
            "aft_star-entropy_alpha_omega"
        );
        assert!(matches!(spec("AFT*", Some("margin")).resolve(), Err(Error::Config(_))));
        assert!(matches!(spec("BFT", None).resolve(), Err(Error::Config(_))));
        assert!(spec("AFT", None).resolve().is_err());
        assert_eq!(spec("RFT", None).display_name().unwrap(), "RFT");
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut s = spec("AFT''", Some("diversity"));
        s.lambda1 = Some(0.5);
        s.alpha = Some(0.5);
        s.omega = Some(2);
        let cfg = s.resolve().unwrap();
        let Selection::Active(c) = cfg.selection else { panic!() };
        assert_eq!((c.lambda1, c.lambda2, c.alpha), (0.5, 1.0, 0.5));
        assert_eq!(cfg.sampler.omega, 2);
        s.alpha = Some(0.0);
        assert!(s.resolve().is_err());
        let mut r = spec("RFT", None);
        r.alpha = Some(0.5);
        assert!(r.resolve().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"schema_version":1,"datagen":{"num_classes":2},"bogus":1}"#;
        assert!(serde_json::from_str::<GenerateConfig>(json).is_err());
    }

    #[test]
    fn output_dir_precedence() {
        let from_cfg = PathBuf::from("cfg");
        let cli = Overrides {
            output: Some("cli".into()),
            ..Default::default()
        };
        assert_eq!(output_dir(&cli, Some(&from_cfg)).unwrap(), PathBuf::from("cli"));
        assert_eq!(output_dir(&Overrides::default(), Some(&from_cfg)).unwrap(), from_cfg);
    }
}
