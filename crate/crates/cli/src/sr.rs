use crate::usage;
use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use metasr_core::dataio::{load_csv, make_split, DatasetSplit, SyntheticProblem};
use metasr_core::engine::{run_sr, write_history, SRConfig};
use metasr_core::host::HostCommand;
use metasr_core::selection::{resolve_operator, SelectionOperator};
use std::fs;
use std::path::PathBuf;

#[derive(Subcommand)]
pub enum SrCommand {
    /// One seeded run; prints R² and tree size and writes the history.
    Run(SrArgs),
}

#[derive(Args, Clone, Debug)]
pub struct DataArgs {
    /// CSV path or `synthetic:<product|sine|sparse_linear|rational>`.
    #[arg(long)]
    pub data: String,
    /// Target column of a CSV.
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Rows generated for synthetic data.
    #[arg(long, default_value_t = 500)]
    pub rows: usize,
    /// Seed for synthetic generation and the train/validation split.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

#[derive(Args, Clone, Debug)]
pub struct SrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub operator: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub pop: Option<usize>,
    /// JSON file with SR settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "runs/sr")]
    pub out: PathBuf,
}

pub fn load_split(data: &str, target: &str, rows: usize, seed: u64) -> Result<DatasetSplit> {
    let raw = match data.strip_prefix("synthetic:") {
        Some(name) => {
            let problem = SyntheticProblem::from_name(name).map_err(usage)?;
            problem.generate(rows, problem.default_noise(), seed)
        }
        None => load_csv(data, target).map_err(usage)?,
    };
    Ok(make_split(&raw, seed)?)
}

pub fn operator(name: &str) -> Result<Box<dyn SelectionOperator>> {
    resolve_operator(name, &HostCommand::default()).map_err(usage)
}

pub fn sr_config(path: Option<&PathBuf>, seed: u64, generations: Option<usize>, pop: Option<usize>) -> Result<SRConfig> {
    let mut config: SRConfig = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SRConfig::default(),
    };
    config.seed = seed;
    if let Some(g) = generations {
        config.generations = g;
    }
    if let Some(p) = pop {
        config.population_size = p;
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

pub fn run(cmd: SrCommand) -> Result<()> {
    let SrCommand::Run(args) = cmd;
    let op = operator(&args.operator)?;
    let config = sr_config(args.config.as_ref(), args.seed, args.generations, args.pop)?;
    let d = &args.data;
    let split = load_split(&d.data, &d.target, d.rows, d.data_seed)?;
    let result = run_sr(&split, op.as_ref(), &config)?;
    fs::create_dir_all(&args.out)?;
    let history = args.out.join("history.jsonl");
    write_history(&history, &result.history)?;
    println!("dataset        {}", split.name);
    println!("operator       {}", op.name());
    println!("seed           {}", config.seed);
    println!("train R2       {:.6}", result.best.train_r2());
    println!("validation R2  {:.6}", result.validation_r2);
    println!("tree size      {}", result.final_tree_size());
    println!(
        "model          {:.6} * {} + {:.6}",
        result.best.alpha, result.best.genome, result.best.beta
    );
    println!("history        {}", history.display());
    Ok(())
}
