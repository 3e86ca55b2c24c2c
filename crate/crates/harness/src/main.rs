use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use synapse::embed::{CachedProvider, EmbeddingCache, HttpEmbedder};
use synapse::eval::SearchStrategy;
use synapse::{EmbeddingProvider, HashEmbedder, ModelConfigs, PropagationVariant};
use synapse_bench::annotations::Annotations;
use synapse_bench::optimize::{apply_params, optimize, OptimizeOptions};
use synapse_bench::trace::trace_task;
use synapse_bench::{gen_synthetic, load_dataset, parse_models, run_benchmark, save_dataset, write_reports};
use synapse_bench::{BenchReport, Dataset, Model, RunOptions, SynthConfig};

#[derive(Parser)]
#[command(name = "synapse", version, about = "Conversational memory retrieval benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedderKind {
    /// Deterministic hashed bag of words; no network.
    Offline,
    /// Remote embedding endpoint from EMBED_API_URL / EMBED_API_KEY.
    Http,
}

#[derive(clap::Args)]
struct EmbedArgs {
    #[arg(long, value_enum, default_value = "offline")]
    embedder: EmbedderKind,
    /// Embedding dimension.
    #[arg(long, default_value_t = 256)]
    dim: usize,
    /// Model name sent to the remote endpoint.
    #[arg(long, default_value = "text-embedding-3-small")]
    embed_model: String,
    /// On-disk cache for remote embeddings.
    #[arg(long, default_value = "embeddings.jsonl")]
    cache: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate models on one or more datasets and write reports.
    Run {
        /// Dataset file; repeat for several. Without one, a synthetic set is generated.
        #[arg(long)]
        dataset: Vec<PathBuf>,
        /// Comma-separated model slugs, or "all".
        #[arg(long, default_value = "all")]
        models: String,
        /// JSON file of per-model hyperparameter overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the propagation variant from the config.
        #[arg(long)]
        variant: Option<PropagationVariant>,
        /// Report directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed for the generated dataset.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Task count for the generated dataset.
        #[arg(long, default_value_t = 20)]
        tasks: usize,
        /// Record per-retrieval CPU time (reports then differ between runs).
        #[arg(long)]
        clock: bool,
        /// Run on one thread.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Write a synthetic dataset.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        tasks: usize,
        /// Dataset file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune one model's hyperparameters.
    Optimize {
        #[arg(long)]
        dataset: PathBuf,
        /// Model slug; rag and memorybank have nothing to tune.
        #[arg(long)]
        model: Model,
        /// Number of trials.
        #[arg(long, default_value_t = 100)]
        budget: usize,
        /// "random" or "coordinate".
        #[arg(long, default_value = "random")]
        strategy: SearchStrategy,
        /// Directory for trials.jsonl and best_config.json.
        #[arg(long, default_value = "optimize")]
        out: PathBuf,
        /// Seed for random search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file of per-model hyperparameter overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Krippendorff's alpha over an annotation file.
    Alpha {
        /// JSON with either a "matrix" or "items_per_task" plus "selections".
        #[arg(long)]
        annotations: PathBuf,
    },
    /// Dump one propagation round as JSON.
    Trace {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        task_id: String,
        /// Index into the task's pairs.
        #[arg(long, default_value_t = 0)]
        pair: usize,
        /// JSON file of per-model hyperparameter overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        variant: Option<PropagationVariant>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        embed: EmbedArgs,
    },
}

/// Exit status 2 marks bad input (config, schema, arguments); 1 marks a
/// failure while running.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn bad_input(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, err: err.into() }
}

fn failed(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, err: err.into() }
}

type CliResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            dataset,
            models,
            config,
            variant,
            out,
            seed,
            tasks,
            clock,
            sequential,
            embed,
        } => cmd_run(&dataset, &models, config.as_deref(), variant, &out, seed, tasks, clock, !sequential, &embed),
        Command::Gen { seed, tasks, out } => cmd_gen(seed, tasks, &out),
        Command::Optimize {
            dataset,
            model,
            budget,
            strategy,
            out,
            seed,
            config,
            sequential,
            embed,
        } => {
            let opts = OptimizeOptions {
                budget,
                strategy,
                seed,
                parallel: !sequential,
            };
            cmd_optimize(&dataset, model, config.as_deref(), &opts, &out, &embed)
        }
        Command::Alpha { annotations } => cmd_alpha(&annotations),
        Command::Trace {
            dataset,
            task_id,
            pair,
            config,
            variant,
            out,
            embed,
        } => cmd_trace(&dataset, &task_id, pair, config.as_deref(), variant, out.as_deref(), &embed),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn load_configs(path: Option<&Path>, variant: Option<PropagationVariant>) -> Result<ModelConfigs, Failure> {
    let mut configs = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| bad_input(anyhow::anyhow!("{}: {e}", p.display())))?;
            ModelConfigs::from_json(&text).map_err(|e| bad_input(anyhow::anyhow!("{}: {e}", p.display())))?
        }
        None => ModelConfigs::default(),
    };
    if let Some(v) = variant {
        configs.synaptic.variant = v;
    }
    Ok(configs)
}

fn load(path: &Path) -> Result<Dataset, Failure> {
    load_dataset(path).map_err(bad_input)
}

fn embedder(args: &EmbedArgs) -> Result<Box<dyn EmbeddingProvider>, Failure> {
    if args.dim == 0 {
        return Err(bad_input(anyhow::anyhow!("--dim must be positive")));
    }
    Ok(match args.embedder {
        EmbedderKind::Offline => Box::new(HashEmbedder::new(args.dim)),
        EmbedderKind::Http => {
            let remote = HttpEmbedder::from_env(args.embed_model.clone(), args.dim).map_err(bad_input)?;
            let cache = EmbeddingCache::open(&args.cache).map_err(failed)?;
            Box::new(CachedProvider::new(remote, cache))
        }
    })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    paths: &[PathBuf],
    models: &str,
    config: Option<&Path>,
    variant: Option<PropagationVariant>,
    out: &Path,
    seed: u64,
    tasks: usize,
    clock: bool,
    parallel: bool,
    embed: &EmbedArgs,
) -> CliResult {
    let models = parse_models(models).map_err(|e| bad_input(anyhow::anyhow!(e)))?;
    let configs = load_configs(config, variant)?;
    let provider = embedder(embed)?;

    let mut sets = Vec::new();
    if paths.is_empty() {
        let cfg = SynthConfig {
            dim: embed.dim,
            ..SynthConfig::default()
        };
        sets.push(("synthetic".to_string(), gen_synthetic(seed, tasks, &cfg).map_err(bad_input)?));
    }
    for p in paths {
        sets.push((dataset_name(p), load(p)?));
    }

    let opts = RunOptions { parallel, clock };
    let mut report = BenchReport::default();
    for (name, ds) in &sets {
        log::info!("{name}: {} tasks", ds.tasks.len());
        report.extend(run_benchmark(name, ds, &models, &configs, provider.as_ref(), &opts));
    }

    let snapshot = json!({
        "datasets": sets.iter().map(|(n, d)| json!({"name": n, "tasks": d.tasks.len()})).collect::<Vec<_>>(),
        "generated": paths.is_empty().then_some(json!({"seed": seed, "tasks": tasks})),
        "models": models.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "embedder": {"model": provider.model_id(), "dim": provider.dim()},
        "configs": configs,
    });
    write_reports(&report, &snapshot, out).map_err(failed)?;

    let failures = report.failures();
    for o in report.outcomes.iter().filter(|o| !o.ok) {
        eprintln!(
            "failed: {} {} pair {} {}: {}",
            o.dataset,
            o.task,
            o.pair,
            o.model,
            o.error.as_deref().unwrap_or("")
        );
    }
    println!("{} retrievals, {failures} failed; reports in {}", report.outcomes.len(), out.display());
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_gen(seed: u64, tasks: usize, out: &Path) -> CliResult {
    let ds = gen_synthetic(seed, tasks, &SynthConfig::default()).map_err(bad_input)?;
    save_dataset(&ds, out)
        .with_context(|| format!("cannot write {}", out.display()))
        .map_err(failed)?;
    println!("wrote {} tasks to {}", ds.tasks.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(
    path: &Path,
    model: Model,
    config: Option<&Path>,
    opts: &OptimizeOptions,
    out: &Path,
    embed: &EmbedArgs,
) -> CliResult {
    let ds = load(path)?;
    let configs = load_configs(config, None)?;
    let provider = embedder(embed)?;
    if opts.budget == 0 {
        return Err(bad_input(anyhow::anyhow!("--budget must be positive")));
    }
    let result = optimize(&ds, model, &configs, provider.as_ref(), opts).map_err(failed)?;

    fs::create_dir_all(out).map_err(failed)?;
    fs::write(out.join("trials.jsonl"), result.to_jsonl()).map_err(failed)?;
    let Some(best) = &result.best else {
        eprintln!("every trial failed; see {}", out.join("trials.jsonl").display());
        return Ok(ExitCode::from(1));
    };
    let tuned = apply_params(model, &configs, &best.params);
    let mut text = serde_json::to_string_pretty(&tuned).map_err(failed)?;
    text.push('\n');
    fs::write(out.join("best_config.json"), text).map_err(failed)?;
    println!(
        "{model}: best objective {} (ERC {}) at trial {}",
        best.objective.unwrap_or(f64::NAN),
        best.erc.unwrap_or(f64::NAN),
        best.trial
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_alpha(path: &Path) -> CliResult {
    let text = fs::read_to_string(path).map_err(|e| bad_input(anyhow::anyhow!("{}: {e}", path.display())))?;
    let ann: Annotations =
        serde_json::from_str(&text).map_err(|e| bad_input(anyhow::anyhow!("{}: {e}", path.display())))?;
    let alpha = ann.alpha().map_err(bad_input)?;
    if alpha.degenerate {
        println!("alpha {} (degenerate: a single category)", alpha.value);
    } else {
        println!("alpha {:.4}", alpha.value);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_trace(
    path: &Path,
    task_id: &str,
    pair: usize,
    config: Option<&Path>,
    variant: Option<PropagationVariant>,
    out: Option<&Path>,
    embed: &EmbedArgs,
) -> CliResult {
    let ds = load(path)?;
    let configs = load_configs(config, variant)?;
    let task = ds
        .task(task_id)
        .ok_or_else(|| bad_input(anyhow::anyhow!("no task `{task_id}` in {}", path.display())))?;
    if pair >= task.pairs.len() {
        return Err(bad_input(anyhow::anyhow!("task `{task_id}` has {} pairs", task.pairs.len())));
    }
    let provider = embedder(embed)?;
    let value = trace_task(task, pair, &configs.synaptic, provider.as_ref()).map_err(failed)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(failed)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(failed)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}
