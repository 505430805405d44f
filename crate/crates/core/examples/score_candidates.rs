//! Scores a few hand-made candidates with each of the eight criteria.
//!
//! ```text
//! cargo run --example score_candidates
//! ```

use aft::criteria::{classify_pattern, score_candidate, PredictionMatrix};
use aft::experiment::Criterion;
use aft::pool::CandidateId;

fn binary(positives: &[f64]) -> PredictionMatrix {
    let rows: Vec<[f64; 2]> = positives.iter().map(|&p| [1.0 - p, p]).collect();
    PredictionMatrix::from_rows(&rows).unwrap()
}

fn main() -> aft::Result<()> {
    let candidates = [
        ("uncertain", binary(&[0.45, 0.5, 0.55, 0.48, 0.52, 0.5, 0.47, 0.53])),
        ("confident", binary(&[0.97, 0.98, 0.99, 0.96, 0.98, 0.97, 0.99, 0.95])),
        // Mostly confident with two patches that look like the other class.
        ("noisy", binary(&[0.97, 0.98, 0.99, 0.96, 0.98, 0.97, 0.03, 0.02])),
        ("split", binary(&[0.99, 0.98, 0.97, 0.96, 0.04, 0.03, 0.02, 0.01])),
    ];

    print!("{:<10} {:<8}", "candidate", "pattern");
    for c in Criterion::ALL.iter().filter(|c| !c.randomized) {
        print!(" {:>12}", c.name());
    }
    println!();
    for (name, p) in &candidates {
        print!("{name:<10} {:<8}", classify_pattern(p)?.to_string());
        for c in Criterion::ALL.iter().filter(|c| !c.randomized) {
            let s = score_candidate(&CandidateId::new(*name), p, &c.criteria_config());
            print!(" {:>12.4}", s.score);
        }
        println!();
    }
    println!("\nThe _ω variants share these scores and differ only in how the batch is drawn.");
    Ok(())
}
