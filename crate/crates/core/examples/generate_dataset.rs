//! Generates the standard synthetic benchmark, writes it as CSV and reads it back.
//!
//! ```text
//! cargo run --example generate_dataset -- [output-dir]
//! ```

use aft::datagen::{self, DatagenConfig};
use aft::oracle::evaluation_labels;

fn main() -> aft::Result<()> {
    let cfg = DatagenConfig::standard(1);
    let data = datagen::generate(&cfg)?;
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("aft-standard-1"));
    datagen::write_dataset(&dir, &data)?;

    let loaded = datagen::load_dataset(&dir)?;
    let labels = evaluation_labels(&loaded.train);
    let positives = labels.iter().filter(|&&l| l == 0).count();
    println!("wrote {}", dir.display());
    println!(
        "train {} candidates ({positives} of class 0), test {}, {} patches of dim {} each",
        loaded.train.len(),
        loaded.test.len(),
        cfg.patches_per_candidate,
        cfg.feature_dim
    );
    let (id, flag) = data
        .ambiguous
        .iter()
        .next()
        .expect("standard config has ambiguous candidates");
    println!(
        "{} ambiguous candidates; e.g. {id} has patches {:?} drawn near class {}",
        data.ambiguous.len(),
        flag.patches,
        flag.other_class
    );
    Ok(())
}
