//! Effect of annotator label noise on AFT* and random selection.
//!
//! ```text
//! cargo run --release --example noisy_oracle
//! ```

use aft::datagen::{self, DatagenConfig};
use aft::experiment::{run_experiment, softmax_m0, ExperimentSetup, Method, StopRule, StrategyConfig};
use aft::learner::TrainConfig;
use aft::oracle::OracleConfig;

fn main() -> aft::Result<()> {
    let data = datagen::generate(&DatagenConfig::standard(3))?;
    println!("noise  method  alc     final auc");
    for noise in [0.0, 0.1, 0.3] {
        for (method, criterion) in [(Method::AftStar, Some("entropy^α_ω".parse()?)), (Method::Rft, None)] {
            let setup = ExperimentSetup {
                strategy: StrategyConfig::preset(method, criterion, 20)?,
                train: TrainConfig::default(),
                stop: StopRule::budget(200),
                oracle: OracleConfig {
                    label_noise_rate: noise,
                },
                positive_class: 0,
                seed: 3,
            };
            let out = run_experiment(setup, &data.train, &data.test, softmax_m0(10, 2, 3)?)?;
            println!(
                "{noise:<6} {:<7} {:.4}  {:.4}",
                method.to_string(),
                out.curve.alc,
                out.curve.final_auc()
            );
        }
    }
    Ok(())
}
