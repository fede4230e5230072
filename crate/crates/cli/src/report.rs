use crate::bench::{read_rows, summarize, summary_table};
use anyhow::Result;
use clap::Subcommand;
use metasr_core::meta::MetaCheckpoint;
use std::path::PathBuf;

#[derive(Subcommand)]
pub enum ReportCommand {
    /// Median summary recomputed from a raw bench CSV.
    Bench { csv: PathBuf },
    /// Per-generation log and best candidate of a meta checkpoint.
    Meta { checkpoint: PathBuf },
}

pub fn run(cmd: ReportCommand) -> Result<()> {
    match cmd {
        ReportCommand::Bench { csv } => {
            print!("{}", summary_table(&summarize(&read_rows(&csv)?)));
        }
        ReportCommand::Meta { checkpoint } => {
            let state = MetaCheckpoint::load(&checkpoint)?;
            println!(
                "# {:>3} {:>10} {:>10} {:>9} {:>9} {:>5} {:>5} {:>5}",
                "gen", "best", "best_ever", "mean_len", "mean_tok", "off", "rej", "fall"
            );
            for r in &state.log {
                println!(
                    "  {:>3} {:>10.4} {:>10.4} {:>9.2} {:>9.2} {:>5} {:>5} {:>5}",
                    r.generation,
                    r.best_fitness,
                    r.best_ever_fitness,
                    r.mean_code_length,
                    r.mean_approx_tokens,
                    r.offspring,
                    r.rejected,
                    r.fallbacks
                );
            }
            let best = &state.best_ever;
            println!(
                "# best candidate {}: fitness {:.4}, {} lines, scores {:?}",
                best.id, best.fitness, best.code_length, best.score_vector
            );
        }
    }
    Ok(())
}
