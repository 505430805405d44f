//! A small method x criterion grid through the same code path as `aft compare`.
//!
//! ```text
//! cargo run --release --example compare_strategies -- [output-dir]
//! ```

use aft::datagen::DatagenConfig;
use aft::experiment::StopRule;
use aft::harness::{compare, CompareConfig, DatasetSource, SCHEMA_VERSION};
use aft::learner::TrainConfig;

fn main() -> aft::Result<()> {
    let cfg = CompareConfig {
        schema_version: SCHEMA_VERSION,
        dataset: DatasetSource::Generate(DatagenConfig::standard(0)),
        methods: ["AFT'", "AFT''", "AFT", "AFT*", "RFT"].map(String::from).to_vec(),
        criteria: ["entropy^α_ω", "diversity^α_ω", "diversity"].map(String::from).to_vec(),
        batch_size: 20,
        omega: None,
        alpha: None,
        learner: TrainConfig::default(),
        stop: StopRule::budget(200),
        seeds: vec![1, 2, 3],
        output_dir: None,
        positive_class: 0,
        oracle: Default::default(),
    };
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("aft-compare"));
    let table = compare(&cfg, &dir, None)?;

    print!("{:<6}", "");
    for c in &cfg.criteria {
        print!(" {c:>18}");
    }
    println!();
    let mut cells = table.cells.iter().peekable();
    while let Some(first) = cells.peek().cloned() {
        print!("{:<6}", first.method);
        while let Some(cell) = cells.next_if(|c| c.method == first.method) {
            let mark = if cell.best { "*" } else { " " };
            print!(" {:>10.4} ± {:.4}{mark}", cell.mean_alc, cell.sd_alc);
        }
        println!();
    }
    println!("tables and per-run curves in {}", dir.display());
    Ok(())
}
