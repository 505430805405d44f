//! Sampling probabilities over the top window and the resulting draw frequencies.
//!
//! ```text
//! cargo run --example randomized_sampling
//! ```

use aft::criteria::CandidateScore;
use aft::pool::CandidateId;
use aft::sampler::{rank, sampling_probabilities, select_batch, SamplerConfig, SelectionMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aft::Result<()> {
    let values = [10.0, 7.0, 4.0, 1.0, 0.5, 0.2];
    let scores: Vec<CandidateScore> = values
        .iter()
        .enumerate()
        .map(|(i, &a)| CandidateScore {
            candidate_id: CandidateId::new(format!("c{i}")),
            dominant: 0,
            entropy: a,
            diversity: 0.0,
            score: a,
            subset_size: 1,
            pair_evaluations: 0,
        })
        .collect();
    let ranked: Vec<f64> = rank(&scores).iter().map(|s| s.score).collect();

    for window in [1, 2, 4, 6] {
        let p = sampling_probabilities(&ranked, window)?;
        println!("window {window}: {p:.3?}");
    }

    let draws = 20_000;
    for (mode, omega) in [(SelectionMode::TopB, 1), (SelectionMode::Randomized, 2)] {
        let cfg = SamplerConfig {
            batch_size: 2,
            omega,
            mode,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = vec![0usize; values.len()];
        for _ in 0..draws {
            for id in select_batch(&scores, &cfg, &mut rng)? {
                counts[id.as_str()[1..].parse::<usize>().unwrap()] += 1;
            }
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        println!("{mode:?} b=2 omega={omega}: inclusion frequency {freq:.3?}");
    }
    Ok(())
}
