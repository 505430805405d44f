//! Standard synthetic benchmark: AFT* with three criteria against random selection.
//!
//! Prints mean ALC, final AUC, the positive fraction among selected candidates,
//! and how many queries the averaged AFT* curve needs to hold RFT's final AUC.
//!
//! ```text
//! cargo run --release --example benchmark
//! ```

use aft::datagen::DatagenConfig;
use aft::experiment::{Criterion, Method, StopRule};
use aft::harness::{dataset_for_seed, run_seed, DatasetSource, RunConfig, StrategySpec, SCHEMA_VERSION};
use aft::learner::TrainConfig;
use aft::metrics::{cumulative_positive_fraction, mean_sd};
use rayon::prelude::*;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const BATCH: usize = 20;
const BUDGET: usize = 400;

fn config(method: Method, criterion: Option<&str>) -> RunConfig {
    let criterion = criterion.map(|c| c.parse::<Criterion>().unwrap());
    RunConfig {
        schema_version: SCHEMA_VERSION,
        dataset: DatasetSource::Generate(DatagenConfig::standard(0)),
        strategy: StrategySpec::new(method, criterion, BATCH),
        learner: TrainConfig::default(),
        stop: StopRule::budget(BUDGET),
        seeds: SEEDS.to_vec(),
        output_dir: None,
        positive_class: 0,
        oracle: Default::default(),
    }
}

/// Mean AUC at each query count, across seeds.
fn mean_curve(curves: &[Vec<(usize, f64)>]) -> Vec<(usize, f64)> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let q = curves[0][i].0;
            let aucs: Vec<f64> = curves.iter().map(|c| c[i].1).collect();
            (q, mean_sd(&aucs).0)
        })
        .collect()
}

fn main() -> aft::Result<()> {
    let strategies = [
        (Method::Rft, None),
        (Method::AftStar, Some("entropy^α_ω")),
        (Method::AftStar, Some("diversity^α_ω")),
        (Method::AftStar, Some("diversity")),
    ];
    let mut rft_final = None;
    for (method, criterion) in strategies {
        let cfg = config(method, criterion);
        let runs = SEEDS
            .par_iter()
            .map(|&seed| run_seed(&cfg, &dataset_for_seed(&cfg.dataset, seed)?, seed))
            .collect::<aft::Result<Vec<_>>>()?;
        let alcs: Vec<f64> = runs.iter().map(|r| r.summary.alc).collect();
        let finals: Vec<f64> = runs.iter().map(|r| r.summary.final_auc).collect();
        let positives: Vec<f64> = runs
            .iter()
            .filter_map(|r| cumulative_positive_fraction(&r.curve.records))
            .collect();
        let curves: Vec<Vec<(usize, f64)>> = runs
            .iter()
            .map(|r| r.curve.records.iter().map(|x| (x.queries_cum, x.test_auc)).collect())
            .collect();
        let (alc, alc_sd) = mean_sd(&alcs);
        let final_auc = mean_sd(&finals).0;
        println!(
            "{:<24} alc {alc:.4} ± {alc_sd:.4}  final auc {final_auc:.4}  positive fraction {:.3}",
            cfg.strategy.display_name()?,
            mean_sd(&positives).0
        );
        match rft_final {
            None => rft_final = Some(final_auc),
            Some(target) => {
                // First point from which the averaged curve stays within 0.005 of RFT's final AUC.
                let curve = mean_curve(&curves);
                let held = (0..curve.len()).find(|&i| curve[i..].iter().all(|&(_, auc)| auc >= target - 0.005));
                match held {
                    Some(i) => println!("{:<24} holds RFT final auc from {} of {BUDGET} queries", "", curve[i].0),
                    None => println!("{:<24} never holds RFT final auc", ""),
                }
            }
        }
    }
    Ok(())
}
