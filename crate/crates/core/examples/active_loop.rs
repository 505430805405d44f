//! Runs one strategy step by step and prints its learning curve.
//!
//! ```text
//! cargo run --release --example active_loop -- "AFT*" "entropy^α_ω"
//! cargo run --release --example active_loop -- RFT
//! ```

use aft::datagen::{self, DatagenConfig};
use aft::experiment::{softmax_m0, Criterion, Experiment, ExperimentSetup, Method, StopRule, StrategyConfig};
use aft::learner::TrainConfig;
use aft::metrics::alc;

fn main() -> aft::Result<()> {
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().as_deref().unwrap_or("AFT*").parse()?;
    let criterion = match method {
        Method::Rft => None,
        _ => Some(args.next().as_deref().unwrap_or("entropy^α_ω").parse::<Criterion>()?),
    };
    let seed = 1;
    let data = datagen::generate(&DatagenConfig::standard(seed))?;
    let setup = ExperimentSetup {
        strategy: StrategyConfig::preset(method, criterion, 20)?,
        train: TrainConfig::default(),
        stop: StopRule::budget(200),
        oracle: Default::default(),
        positive_class: 0,
        seed,
    };
    let m0 = softmax_m0(10, 2, seed)?;
    let mut exp = Experiment::new(setup, &data.train, &data.test, m0)?;

    println!("step queries  auc    positives  hard  train-set");
    let budget = 200;
    while let Some(report) = exp.step(Some(budget - exp.oracle().query_count()))? {
        let r = &report.record;
        println!(
            "{:>4} {:>7}  {:.4} {:>9.2} {:>5} {:>10}",
            r.step,
            r.queries_cum,
            r.test_auc,
            r.selected_positive_fraction.unwrap_or(0.0),
            r.misclassified_count_pre_fit,
            report.training_set.len()
        );
    }
    let curve: Vec<(usize, f64)> = exp.records().iter().map(|r| (r.queries_cum, r.test_auc)).collect();
    println!("alc {:.4}", alc(&curve, data.train.len())?);
    Ok(())
}
