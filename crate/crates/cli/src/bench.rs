use crate::sr::{load_split, operator, sr_config};
use crate::usage;
use anyhow::{Context, Result};
use clap::Args;
use metasr_core::engine::run_sr;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated operator names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub operators: Vec<String>,
    /// Comma-separated datasets (CSV paths or `synthetic:<name>`).
    #[arg(long, value_delimiter = ',', required = true)]
    pub data: Vec<String>,
    #[arg(long, default_value = "y")]
    pub target: String,
    #[arg(long, default_value_t = 500)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Number of seeds per cell.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "runs/bench")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub operator: String,
    pub dataset: String,
    pub seed: u64,
    pub validation_r2: f64,
    pub train_r2: f64,
    pub tree_size: usize,
    pub wall_seconds: f64,
    pub evaluations: usize,
    pub final_diversity: f64,
}

#[derive(Clone, Debug, Serialize)]
struct TraceRow<'a> {
    operator: &'a str,
    dataset: &'a str,
    seed: u64,
    generation: usize,
    diversity: f64,
    best_val_r2: f64,
    mean_tree_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub operator: String,
    pub dataset: String,
    pub runs: usize,
    pub median_validation_r2: f64,
    pub median_tree_size: f64,
    pub median_wall_seconds: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.operator, &r.dataset)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((operator, dataset), rs)| {
            let col = |f: fn(&BenchRow) -> f64| median(&mut rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                operator: operator.into(),
                dataset: dataset.into(),
                runs: rs.len(),
                median_validation_r2: col(|r| r.validation_r2),
                median_tree_size: col(|r| r.tree_size as f64),
                median_wall_seconds: col(|r| r.wall_seconds),
            }
        })
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<BenchRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Whitespace-separated with a `#` header, readable by gnuplot.
pub fn summary_table(summary: &[SummaryRow]) -> String {
    let mut out = format!(
        "# {:<14} {:<16} {:>5} {:>12} {:>10} {:>10}\n",
        "operator", "dataset", "runs", "median_r2", "median_size", "median_s"
    );
    for s in summary {
        out.push_str(&format!(
            "  {:<14} {:<16} {:>5} {:>12.6} {:>10.1} {:>10.3}\n",
            s.operator, s.dataset, s.runs, s.median_validation_r2, s.median_tree_size, s.median_wall_seconds
        ));
    }
    out
}

pub fn run(args: BenchArgs) -> Result<()> {
    if args.operators.is_empty() || args.data.is_empty() || args.seeds == 0 {
        return Err(usage("empty grid: need at least one operator, dataset, and seed"));
    }
    let operators = args
        .operators
        .iter()
        .map(|name| operator(name))
        .collect::<Result<Vec<_>>>()?;
    let splits = args
        .data
        .iter()
        .map(|d| load_split(d, &args.target, args.rows, args.data_seed))
        .collect::<Result<Vec<_>>>()?;
    let configs = (0..args.seeds)
        .map(|s| sr_config(args.config.as_ref(), args.seed_base + s, args.generations, args.pop))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (o, op) in operators.iter().enumerate() {
        for (d, _) in splits.iter().enumerate() {
            for (s, _) in configs.iter().enumerate() {
                cells.push((o, d, s, op.name()));
            }
        }
    }
    let results = cells
        .par_iter()
        .map(|&(o, d, s, ref name)| {
            let start = Instant::now();
            let result = run_sr(&splits[d], operators[o].as_ref(), &configs[s])?;
            let row = BenchRow {
                operator: name.clone(),
                dataset: splits[d].name.clone(),
                seed: configs[s].seed,
                validation_r2: result.validation_r2,
                train_r2: result.best.train_r2(),
                tree_size: result.final_tree_size(),
                wall_seconds: start.elapsed().as_secs_f64(),
                evaluations: result.evaluations,
                final_diversity: result.history.last().map_or(0.0, |h| h.diversity),
            };
            Ok((row, result.history))
        })
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(&args.out)?;
    let rows: Vec<BenchRow> = results.iter().map(|(r, _)| r.clone()).collect();
    write_atomic(&args.out.join("bench.csv"), &csv_bytes(&rows)?)?;
    let traces = results.iter().flat_map(|(r, history)| {
        history.iter().map(move |h| TraceRow {
            operator: &r.operator,
            dataset: &r.dataset,
            seed: r.seed,
            generation: h.generation,
            diversity: h.diversity,
            best_val_r2: h.best_val_r2,
            mean_tree_size: h.mean_tree_size,
        })
    });
    write_atomic(&args.out.join("generations.csv"), &csv_bytes(traces)?)?;
    let summary = summarize(&rows);
    write_atomic(&args.out.join("summary.csv"), &csv_bytes(&summary)?)?;
    let table = summary_table(&summary);
    write_atomic(&args.out.join("summary.dat"), table.as_bytes())?;
    print!("{table}");
    println!("{} runs written to {}", rows.len(), args.out.display());
    Ok(())
}
