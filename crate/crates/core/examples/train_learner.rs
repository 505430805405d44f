//! Trains the softmax learner, then compares a warm fine-tune with a cold restart.
//!
//! ```text
//! cargo run --example train_learner
//! ```

use aft::datagen::{self, DatagenConfig};
use aft::learner::{self, candidate_class, Learner, SoftmaxModel, TrainConfig};
use aft::oracle::evaluation_labels;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn accuracy(model: &SoftmaxModel, data: &[aft::pool::Candidate]) -> aft::Result<f64> {
    let labels = evaluation_labels(data);
    let mut hits = 0;
    for (c, &label) in data.iter().zip(&labels) {
        hits += usize::from(candidate_class(&model.predict(c)?) == label);
    }
    Ok(hits as f64 / data.len() as f64)
}

fn main() -> aft::Result<()> {
    let data = datagen::generate(&DatagenConfig::standard(2))?;
    let labels = evaluation_labels(&data.train);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = TrainConfig::default();

    let m0 = SoftmaxModel::random(10, 2, &mut rng)?;
    println!("M0: test accuracy {:.3}", accuracy(&m0, &data.test)?);

    let first = learner::examples(data.train[..40].iter().zip(labels[..40].iter().copied()));
    let model = m0.fit(&first, &cfg, false, &mut rng)?;
    println!("cold fit on 40 candidates: {:.3}", accuracy(&model, &data.test)?);

    let next = learner::examples(data.train[40..80].iter().zip(labels[40..80].iter().copied()));
    let warm = model.fit(&next, &cfg, true, &mut rng)?;
    let cold = model.fit(&next, &cfg, false, &mut rng)?;
    println!(
        "next 40: warm fine-tune {:.3} (steps {}), cold restart {:.3} (steps {})",
        accuracy(&warm, &data.test)?,
        warm.trained_steps(),
        accuracy(&cold, &data.test)?,
        cold.trained_steps()
    );

    let path = std::env::temp_dir().join("aft-model.json");
    warm.save(&path)?;
    let back = SoftmaxModel::load(&path)?;
    assert_eq!(back.weights(), warm.weights());
    println!("checkpoint round trip through {}", path.display());
    Ok(())
}
