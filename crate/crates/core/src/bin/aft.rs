use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aft::harness::{self, Overrides};

#[derive(Parser)]
#[command(
    name = "aft",
    version,
    about = "Active selection experiments on candidate/patch datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (train.csv, test.csv, meta.json).
    Generate(Common),
    /// Run one strategy over every configured seed.
    Run(Common),
    /// Run a method x criterion grid and tabulate mean ALC.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config, then $AFT_OUTPUT_DIR.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Replace the configured seed(s) with this one.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for seeds and strategies.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            output: self.output.clone(),
            seed: self.seed,
            jobs: self.jobs,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => harness::cmd_generate(&c.config, &c.overrides()).map(|dir| {
            println!("wrote dataset to {}", dir.display());
        }),
        Command::Run(c) => harness::cmd_run(&c.config, &c.overrides()).map(|summaries| {
            for s in summaries {
                println!(
                    "{} seed {}: alc {:.4} final auc {:.4} after {} queries",
                    s.strategy, s.seed, s.alc, s.final_auc, s.total_queries
                );
            }
        }),
        Command::Compare(c) => harness::cmd_compare(&c.config, &c.overrides()).map(|table| {
            for cell in &table.cells {
                let mark = if cell.best { " *" } else { "" };
                println!("{:<24} {:.4} ± {:.4}{mark}", cell.strategy, cell.mean_alc, cell.sd_alc);
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
