//! Synthetic candidate/patch datasets and the on-disk CSV format.
//!
//! Class `k` is centered at `separation * e_k`. Each candidate draws its own
//! center around its class center and each patch is drawn around the
//! candidate center. Ambiguous candidates have some of their patches
//! translated into another class's region while keeping their label, which
//! mimics augmentation producing patches that look like a different class.
//!
//! CSV layout: header `candidate_id,label,f0,...,f{d-1}`, one row per patch.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::f64_17;
use crate::pool::{Candidate, CandidateId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenConfig {
    pub num_classes: usize,
    pub class_weights: Vec<f64>,
    pub train_candidates: usize,
    pub test_candidates: usize,
    pub patches_per_candidate: usize,
    pub feature_dim: usize,
    pub class_center_separation: f64,
    pub candidate_center_spread: f64,
    pub patch_spread: f64,
    /// Fraction of candidates (apportioned per class) that get cross-class patches.
    pub ambiguous_fraction: f64,
    /// Fraction of an ambiguous candidate's patches drawn from another class's region.
    pub ambiguous_patch_fraction: f64,
    pub seed: u64,
}

impl DatagenConfig {
    /// The imbalanced two-class benchmark used throughout the test suite.
    pub fn standard(seed: u64) -> Self {
        DatagenConfig {
            num_classes: 2,
            class_weights: vec![0.2, 0.8],
            train_candidates: 600,
            test_candidates: 200,
            patches_per_candidate: 12,
            feature_dim: 10,
            class_center_separation: 3.0,
            candidate_center_spread: 0.7,
            patch_spread: 0.5,
            ambiguous_fraction: 0.25,
            ambiguous_patch_fraction: 0.25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_classes < 2 {
            return fail(format!("num_classes {} < 2", self.num_classes));
        }
        if self.feature_dim < self.num_classes {
            return fail(format!(
                "feature_dim {} cannot hold {} basis-aligned class centers",
                self.feature_dim, self.num_classes
            ));
        }
        if self.class_weights.len() != self.num_classes
            || self.class_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || (self.class_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return fail(format!(
                "class_weights {:?} must be {} non-negative values summing to 1",
                self.class_weights, self.num_classes
            ));
        }
        if self.train_candidates == 0 || self.patches_per_candidate == 0 {
            return fail("train_candidates and patches_per_candidate must be positive".into());
        }
        let positive = [
            self.class_center_separation,
            self.candidate_center_spread,
            self.patch_spread,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return fail("separation and spreads must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.ambiguous_fraction) || !(0.0..1.0).contains(&self.ambiguous_patch_fraction) {
            return fail("ambiguous_fraction must be in [0, 1] and ambiguous_patch_fraction in [0, 1)".into());
        }
        Ok(())
    }

    fn cross_patches(&self) -> usize {
        (self.ambiguous_patch_fraction * self.patches_per_candidate as f64 + 1e-9).floor() as usize
    }
}

/// Generator-side record of which patches were drawn from another class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityFlag {
    pub other_class: usize,
    pub patches: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub config: DatagenConfig,
    pub train: Vec<Candidate>,
    pub test: Vec<Candidate>,
    /// Ambiguous candidates of both splits. For assertions only.
    pub ambiguous: BTreeMap<CandidateId, AmbiguityFlag>,
}

/// Splits `total` into integer parts proportional to `weights` using the
/// largest-remainder rule; equal remainders favor the lower index.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

pub fn generate(cfg: &DatagenConfig) -> Result<GeneratedDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ambiguous = BTreeMap::new();
    let train = generate_split(cfg, "train", cfg.train_candidates, &mut rng, &mut ambiguous)?;
    let test = generate_split(cfg, "test", cfg.test_candidates, &mut rng, &mut ambiguous)?;
    Ok(GeneratedDataset {
        config: cfg.clone(),
        train,
        test,
        ambiguous,
    })
}

fn generate_split(
    cfg: &DatagenConfig,
    prefix: &str,
    n: usize,
    rng: &mut ChaCha8Rng,
    ambiguous: &mut BTreeMap<CandidateId, AmbiguityFlag>,
) -> Result<Vec<Candidate>> {
    let k = cfg.num_classes;
    let class_counts = apportion(n, &cfg.class_weights);
    let mut labels: Vec<usize> = class_counts
        .iter()
        .enumerate()
        .flat_map(|(c, &cnt)| std::iter::repeat_n(c, cnt))
        .collect();
    labels.shuffle(rng);

    let ambiguous_total = (cfg.ambiguous_fraction * n as f64 + 1e-9).floor() as usize;
    let class_weights: Vec<f64> = class_counts.iter().map(|&c| c as f64).collect();
    let ambiguous_counts = if n > 0 {
        apportion(ambiguous_total, &class_weights)
    } else {
        vec![0; k]
    };
    let mut is_ambiguous = vec![false; n];
    for (class, &count) in ambiguous_counts.iter().enumerate() {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(rng);
        for &i in members.iter().take(count) {
            is_ambiguous[i] = true;
        }
    }

    let center_noise = Normal::new(0.0, cfg.candidate_center_spread).expect("validated spread");
    let patch_noise = Normal::new(0.0, cfg.patch_spread).expect("validated spread");
    let sep = cfg.class_center_separation;
    let m = cfg.patches_per_candidate;
    let d = cfg.feature_dim;
    let width = n.saturating_sub(1).to_string().len();

    let mut out = Vec::with_capacity(n);
    for (i, &label) in labels.iter().enumerate() {
        let id = CandidateId::new(format!("{prefix}-{i:0width$}"));
        let mut center: Vec<f64> = (0..d).map(|_| center_noise.sample(rng)).collect();
        center[label] += sep;

        let mut cross: Vec<usize> = Vec::new();
        let mut shifted = center.clone();
        if is_ambiguous[i] {
            let other = {
                let o = rng.random_range(0..k - 1);
                if o >= label {
                    o + 1
                } else {
                    o
                }
            };
            cross = index::sample(rng, m, cfg.cross_patches()).into_vec();
            cross.sort_unstable();
            shifted[label] -= sep;
            shifted[other] += sep;
            ambiguous.insert(
                id.clone(),
                AmbiguityFlag {
                    other_class: other,
                    patches: cross.clone(),
                },
            );
        }
        let patches: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let base = if cross.binary_search(&j).is_ok() {
                    &shifted
                } else {
                    &center
                };
                base.iter().map(|c| c + patch_noise.sample(rng)).collect()
            })
            .collect();
        out.push(Candidate::new(id, patches, label)?);
    }
    Ok(out)
}

/// Serializes candidates as CSV with 17-significant-digit features.
pub fn to_csv(candidates: &[Candidate]) -> Result<String> {
    let d = candidates.first().map_or(0, Candidate::dim);
    if candidates.iter().any(|c| c.dim() != d) {
        return Err(Error::Data("candidates disagree on feature dimension".into()));
    }
    let mut out = String::from("candidate_id,label");
    for f in 0..d {
        write!(out, ",f{f}").unwrap();
    }
    out.push('\n');
    for c in candidates {
        if c.id().as_str().contains([',', '"', '\n', '\r']) {
            return Err(Error::Data(format!("candidate id `{}` is not CSV-safe", c.id())));
        }
        for p in c.patches() {
            write!(out, "{},{}", c.id(), c.true_label()).unwrap();
            for x in &p.features {
                write!(out, ",{}", f64_17(*x)).unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn write_csv(path: impl AsRef<Path>, candidates: &[Candidate]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv(candidates)?).map_err(|e| Error::io(path, e))
}

/// Reads a dataset CSV. Rows are grouped by candidate id (candidates in
/// order of first appearance, patches in file order).
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<Candidate>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if header.len() < 3 || &header[0] != "candidate_id" || &header[1] != "label" {
        return Err(Error::format(
            path,
            "header must start with `candidate_id,label` followed by feature columns",
        ));
    }
    let d = header.len() - 2;
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(Error::format(
                path,
                format!("feature column {i} is named `{name}`, expected `f{i}`"),
            ));
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (usize, Vec<Vec<f64>>)> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        if record.len() != d + 2 {
            return Err(Error::format(
                path,
                format!("line {line}: {} fields, expected {}", record.len(), d + 2),
            ));
        }
        let id = record[0].to_owned();
        let label: usize = record[1].trim().parse().map_err(|_| {
            Error::format(
                path,
                format!("line {line}: label `{}` is not a class index", &record[1]),
            )
        })?;
        let features =
            record
                .iter()
                .skip(2)
                .map(|v| {
                    v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                        Error::format(path, format!("line {line}: feature `{v}` is not a finite number"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
        match groups.get_mut(&id) {
            Some((existing, patches)) => {
                if *existing != label {
                    return Err(Error::format(
                        path,
                        format!("line {line}: candidate `{id}` has labels {existing} and {label}"),
                    ));
                }
                patches.push(features);
            }
            None => {
                order.push(id.clone());
                groups.insert(id, (label, vec![features]));
            }
        }
    }
    order
        .into_iter()
        .map(|id| {
            let (label, patches) = groups.remove(&id).expect("grouped above");
            Candidate::new(id, patches, label)
        })
        .collect()
}

/// Sidecar metadata written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub config: DatagenConfig,
    pub ambiguous: BTreeMap<CandidateId, AmbiguityFlag>,
}

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const META_FILE: &str = "meta.json";

/// Writes `train.csv`, `test.csv` and `meta.json` into `dir`.
pub fn write_dataset(dir: impl AsRef<Path>, data: &GeneratedDataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(dir.join(TRAIN_FILE), &data.train)?;
    write_csv(dir.join(TEST_FILE), &data.test)?;
    let meta = DatasetMeta {
        config: data.config.clone(),
        ambiguous: data.ambiguous.clone(),
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    let path = dir.join(META_FILE);
    fs::write(&path, json).map_err(|e| Error::io(path, e))
}

/// A train/test pair loaded from disk.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub train: Vec<Candidate>,
    pub test: Vec<Candidate>,
    pub num_classes: usize,
}

/// Loads `train.csv` and `test.csv` from `dir`. The class count comes from
/// `meta.json` when present, otherwise from the largest label seen.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<LoadedDataset> {
    let dir = dir.as_ref();
    let train = load_csv(dir.join(TRAIN_FILE))?;
    let test = load_csv(dir.join(TEST_FILE))?;
    let meta_path = dir.join(META_FILE);
    let seen = train
        .iter()
        .chain(&test)
        .map(Candidate::true_label)
        .max()
        .map_or(0, |l| l + 1);
    let num_classes = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;
        if seen > meta.config.num_classes {
            return Err(Error::format(
                &meta_path,
                format!(
                    "labels reach class {} but num_classes is {}",
                    seen - 1,
                    meta.config.num_classes
                ),
            ));
        }
        meta.config.num_classes
    } else {
        seen.max(2)
    };
    Ok(LoadedDataset {
        train,
        test,
        num_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rho: f64) -> DatagenConfig {
        DatagenConfig {
            train_candidates: 100,
            test_candidates: 40,
            ambiguous_fraction: rho,
            ..DatagenConfig::standard(3)
        }
    }

    #[test]
    fn shape_contract() {
        let data = generate(&small(0.25)).unwrap();
        assert_eq!(data.train.len(), 100);
        assert_eq!(data.test.len(), 40);
        for c in data.train.iter().chain(&data.test) {
            assert_eq!(c.num_patches(), 12);
            assert!(c.patches().iter().all(|p| p.features.len() == 10));
        }
        let train_ids: std::collections::BTreeSet<_> = data.train.iter().map(|c| c.id().clone()).collect();
        assert!(data.test.iter().all(|c| !train_ids.contains(c.id())));
    }

    #[test]
    fn no_ambiguity_when_rho_zero() {
        assert!(generate(&small(0.0)).unwrap().ambiguous.is_empty());
    }

    #[test]
    fn ambiguity_counts() {
        let data = generate(&small(0.25)).unwrap();
        let train_flags: Vec<_> = data
            .ambiguous
            .iter()
            .filter(|(id, _)| id.as_str().starts_with("train-"))
            .collect();
        assert_eq!(train_flags.len(), 25);
        for (id, flag) in train_flags {
            assert_eq!(flag.patches.len(), 3);
            let c = data.train.iter().find(|c| c.id() == id).unwrap();
            assert_ne!(flag.other_class, c.true_label());
        }
    }

    #[test]
    fn class_counts_follow_largest_remainder() {
        let data = generate(&small(0.25)).unwrap();
        let zeros = data.train.iter().filter(|c| c.true_label() == 0).count();
        assert_eq!(zeros, 20);
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), [4, 3, 3]);
        assert_eq!(apportion(7, &[0.2, 0.8]), [1, 6]);
        assert_eq!(apportion(0, &[0.5, 0.5]), [0, 0]);
    }

    #[test]
    fn basis_placement_needs_enough_dims() {
        let cfg = DatagenConfig {
            num_classes: 3,
            class_weights: vec![1.0 / 3.0; 3],
            feature_dim: 1,
            ..DatagenConfig::standard(1)
        };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate(&small(0.25)).unwrap();
        let b = generate(&small(0.25)).unwrap();
        assert_eq!(to_csv(&a.train).unwrap(), to_csv(&b.train).unwrap());
        assert_eq!(to_csv(&a.test).unwrap(), to_csv(&b.test).unwrap());
        let c = generate(&DatagenConfig { seed: 4, ..small(0.25) }).unwrap();
        assert_ne!(to_csv(&a.train).unwrap(), to_csv(&c.train).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let data = generate(&small(0.25)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &data).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.num_classes, 2);
        for (a, b) in data.train.iter().zip(&loaded.train) {
            assert_eq!(a.id(), b.id());
            assert_eq!(a.true_label(), b.true_label());
            for (pa, pb) in a.patches().iter().zip(b.patches()) {
                for (x, y) in pa.features.iter().zip(&pb.features) {
                    assert!((x - y).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn inconsistent_labels_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "candidate_id,label,f0\na,0,1.0\na,1,2.0\n").unwrap();
        assert!(matches!(load_csv(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn non_numeric_feature_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "candidate_id,label,f0\na,0,abc\n").unwrap();
        assert!(matches!(load_csv(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn header_only_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "candidate_id,label,f0,f1\n").unwrap();
        assert!(load_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn non_contiguous_rows_grouped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.csv");
        fs::write(&path, "candidate_id,label,f0\nb,1,1\na,0,2\nb,1,3\n").unwrap();
        let cs = load_csv(&path).unwrap();
        assert_eq!(cs[0].id().as_str(), "b");
        assert_eq!(cs[0].patches()[1].features, [3.0]);
        assert_eq!(cs[1].num_patches(), 1);
    }
}
