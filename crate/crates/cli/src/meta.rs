use crate::usage;
use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use metasr_core::dataio::DatasetManifest;
use metasr_core::host::HostCommand;
use metasr_core::llm::{GatewayMode, HttpTransport, LlmError, LlmGateway, MockGenerator, PromptAssets, Transport};
use metasr_core::meta::{write_meta_log, MetaCheckpoint, MetaConfig, MetaError, MetaRunner, OperatorFactory, SrEvaluator};
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

#[derive(Subcommand)]
pub enum MetaCommand {
    /// Evolve selection operators; prints the best one found.
    Run(MetaArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Backend {
    /// OpenAI-compatible endpoint configured by environment variables.
    Http,
    /// Offline generator that answers with builtin listings.
    Mock,
}

#[derive(Args, Debug)]
pub struct MetaArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "replay", value_parser = parse_mode)]
    pub mode: GatewayMode,
    /// Transcript read in replay mode and appended to in record mode.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "http")]
    pub backend: Backend,
    #[arg(long, default_value_t = 0)]
    pub mock_seed: u64,
    /// Share of mock replies that contain no code.
    #[arg(long, default_value_t = 0.0)]
    pub mock_prose_rate: f64,
    /// JSON file with meta settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pool: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory whose prompt files replace the embedded ones.
    #[arg(long)]
    pub prompt_dir: Option<PathBuf>,
    /// Operator host command line for generated scripts.
    #[arg(long)]
    pub host: Option<String>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop once this many generations are complete.
    #[arg(long)]
    pub stop_after: Option<usize>,
    #[arg(long, default_value = "runs/meta")]
    pub out: PathBuf,
}

fn parse_mode(s: &str) -> Result<GatewayMode, String> {
    s.parse()
}

fn meta_config(args: &MetaArgs) -> Result<MetaConfig> {
    let mut config: MetaConfig = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => MetaConfig::default(),
    };
    if let Some(n) = args.pool {
        config.pool_size = n;
    }
    if let Some(t) = args.generations {
        config.generations = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn transport(args: &MetaArgs) -> Box<dyn Transport> {
    match args.backend {
        Backend::Http => Box::new(HttpTransport::from_env()),
        Backend::Mock => Box::new(MockGenerator::new(args.mock_seed).with_prose_rate(args.mock_prose_rate)),
    }
}

fn gateway(args: &MetaArgs) -> Result<LlmGateway> {
    let transcript = || {
        args.transcript
            .clone()
            .ok_or_else(|| usage(format!("--transcript is required in {:?} mode", args.mode)))
    };
    Ok(match args.mode {
        GatewayMode::Live => LlmGateway::live(transport(args)),
        GatewayMode::Record => LlmGateway::record(transport(args), transcript()?),
        GatewayMode::Replay => LlmGateway::replay(transcript()?).map_err(usage)?,
    })
}

fn classify(e: MetaError) -> anyhow::Error {
    match e {
        MetaError::Llm(e @ (LlmError::ReplayMiss { .. } | LlmError::Transcript { .. })) => usage(e),
        other => other.into(),
    }
}

pub fn run(cmd: MetaCommand) -> Result<()> {
    let MetaCommand::Run(args) = cmd;
    let resume = match &args.resume {
        Some(p) => Some(MetaCheckpoint::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let config = match &resume {
        Some(state) => state.config.clone(),
        None => meta_config(&args)?,
    };
    let (manifest, base) = DatasetManifest::from_file(&args.manifest).map_err(usage)?;
    let splits = manifest.load_splits(&base).map_err(usage)?;
    let evaluator = SrEvaluator {
        splits,
        inner: config.inner.clone(),
    };
    let mut gateway = gateway(&args)?;
    let assets = match &args.prompt_dir {
        Some(dir) => PromptAssets::with_overrides(dir)?,
        None => PromptAssets::default(),
    };
    fs::create_dir_all(&args.out)?;
    let factory = OperatorFactory {
        host: args
            .host
            .as_deref()
            .and_then(HostCommand::parse)
            .unwrap_or_default(),
        script_dir: args.out.join("scripts"),
        timeout: Duration::from_secs_f64(config.gate.timeout_secs),
    };
    let checkpoint = args.out.join("checkpoint.json");
    let outcome = MetaRunner::new(config, &mut gateway, &evaluator, factory)
        .with_assets(assets)
        .with_checkpoint(&checkpoint)
        .run(resume, args.stop_after);
    let state = match outcome {
        Ok(state) => state,
        Err(e) => {
            if checkpoint.exists() {
                eprintln!("last completed state saved; continue with --resume {}", checkpoint.display());
            }
            return Err(classify(e));
        }
    };
    write_meta_log(&args.out.join("meta_log.jsonl"), &state.log)?;
    let best = &state.best_ever;
    fs::write(args.out.join("best.py"), &best.source)?;
    println!("# best candidate {} ({:?})", best.id, best.provenance);
    println!("# fitness {:.6}", best.fitness);
    let scores: Vec<String> = best.score_vector.iter().map(|s| format!("{s:.6}")).collect();
    println!("# scores [{}]", scores.join(", "));
    println!("# lines {}", best.code_length);
    println!("# generations {}/{}", state.generation, state.config.generations);
    print!("{}", best.source);
    Ok(())
}
