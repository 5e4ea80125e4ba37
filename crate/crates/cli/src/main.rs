use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use funqg_cli::cache::{build_cache, read_cache, write_cache, CacheManifest};
use funqg_cli::config::RunConfig;
use funqg_cli::dataset::{infer_target_columns, load_dataset, DatasetSpec, TaskKind};
use funqg_cli::protocol::{run_protocol, DEFAULT_RATIOS};
use funqg_cli::search::{hyper_search, SearchSpace};
use funqg_cli::splitio::{make_split, read_split_manifest, write_split_manifest};
use funqg_cli::train::{evaluate, train};
use funqg_core::coarsen::abstraction_ratio_counts;
use funqg_core::smiles::{parse_smiles_with, DisconnectedPolicy, ParseOptions};
use funqg_core::ParamStore;
use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "funqg",
    about = "Functional-group quotient-graph coarsening and message-passing model pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DatasetArgs {
    /// Input CSV (MoleculeNet layout: one SMILES column + target columns).
    #[arg(long)]
    input: PathBuf,
    /// SMILES column name.
    #[arg(long, default_value = "smiles")]
    smiles_col: String,
    /// Comma-separated target columns; inferred (numeric columns) if omitted.
    #[arg(long)]
    targets: Option<String>,
    /// Task type for all target columns.
    #[arg(long, value_enum, default_value = "classification")]
    task: TaskArg,
    /// Keep the largest fragment of dot-separated inputs instead of
    /// rejecting them.
    #[arg(long)]
    keep_largest_fragment: bool,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum TaskArg {
    Classification,
    Regression,
}

impl From<TaskArg> for TaskKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Classification => TaskKind::Classification,
            TaskArg::Regression => TaskKind::Regression,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph cache from a CSV (coarsened by default).
    Coarsen {
        #[command(flatten)]
        data: DatasetArgs,
        /// Output cache path (line-delimited JSON).
        #[arg(long)]
        output: PathBuf,
        /// Cache raw molecular graphs instead of quotient graphs.
        #[arg(long)]
        no_coarsen: bool,
    },
    /// Abstraction ratio and size histograms of a cache.
    Stats {
        #[arg(long)]
        cache: PathBuf,
    },
    /// Write a seeded scaffold-split manifest for a cache.
    Split {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Three comma-separated ratios summing to 1.
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train on a cache + split and write a checkpoint and log.
    Train {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Run config JSON; defaults apply for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "run_out")]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint on the test partition of a split.
    Eval {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Report output path (JSON); stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Three-seed protocol: split, train, evaluate, aggregate mean(std).
    Protocol {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated split seeds.
        #[arg(long, default_value = "1,2,3")]
        seeds: String,
        #[arg(long, default_value = "protocol_out")]
        out_dir: PathBuf,
    },
    /// Seeded random hyperparameter search.
    Search {
        #[command(flatten)]
        data: DatasetArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the winning config (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print detected functional groups of a SMILES string.
    Fg {
        #[arg(long)]
        smiles: String,
    },
    /// Run the finite-difference gradient suite.
    Gradcheck,
}

fn main() -> Result<()> {
    // die quietly when piped into `head` and friends
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    if let Some(n) = funqg_cli::configured_workers() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Coarsen {
            data,
            output,
            no_coarsen,
        } => cmd_coarsen(data, output, !no_coarsen),
        Command::Stats { cache } => cmd_stats(cache),
        Command::Split {
            cache,
            seed,
            ratios,
            output,
        } => cmd_split(cache, seed, &ratios, output),
        Command::Train {
            cache,
            split,
            config,
            out_dir,
        } => cmd_train(cache, split, config, out_dir),
        Command::Eval {
            cache,
            split,
            checkpoint,
            out,
        } => cmd_eval(cache, split, checkpoint, out),
        Command::Protocol {
            data,
            config,
            seeds,
            out_dir,
        } => cmd_protocol(data, config, &seeds, out_dir),
        Command::Search {
            data,
            config,
            budget,
            seed,
            out,
        } => cmd_search(data, config, budget, seed, out),
        Command::Fg { smiles } => cmd_fg(&smiles),
        Command::Gradcheck => cmd_gradcheck(),
    }
}

fn parse_opts(data: &DatasetArgs) -> ParseOptions {
    ParseOptions {
        disconnected: if data.keep_largest_fragment {
            DisconnectedPolicy::KeepLargest
        } else {
            DisconnectedPolicy::Reject
        },
    }
}

fn resolve_spec(data: &DatasetArgs) -> Result<DatasetSpec> {
    let target_columns = match &data.targets {
        Some(t) => t.split(',').map(|s| s.trim().to_string()).collect(),
        None => {
            let inferred = infer_target_columns(&data.input, &data.smiles_col)?;
            eprintln!("inferred target columns: {}", inferred.join(","));
            inferred
        }
    };
    Ok(DatasetSpec {
        csv_path: data.input.clone(),
        smiles_column: data.smiles_col.clone(),
        target_columns,
        task: data.task.into(),
    })
}

fn load_records(
    data: &DatasetArgs,
) -> Result<(DatasetSpec, Vec<funqg_cli::dataset::DataRecord>)> {
    let spec = resolve_spec(data)?;
    let loaded = load_dataset(&spec, parse_opts(data))?;
    if !loaded.dropped.is_empty() {
        eprintln!(
            "dropped {} of {} rows with unparseable SMILES",
            loaded.dropped.len(),
            loaded.dropped.len() + loaded.records.len()
        );
        for (row, reason) in loaded.dropped.iter().take(5) {
            eprintln!("  row {row}: {reason}");
        }
    }
    if loaded.bad_cells > 0 {
        eprintln!("masked {} non-numeric target cells", loaded.bad_cells);
    }
    let salts = loaded
        .records
        .iter()
        .filter(|r| r.dropped_fragments > 0)
        .count();
    if salts > 0 {
        eprintln!("reduced {salts} multi-fragment inputs to their largest fragment");
    }
    Ok((spec, loaded.records))
}

fn build_cache_from(
    data: &DatasetArgs,
    coarsen: bool,
) -> Result<(CacheManifest, Vec<funqg_cli::cache::CacheRecord>)> {
    let (spec, records) = load_records(data)?;
    let (cache_records, report) = build_cache(&records, coarsen, parse_opts(data));
    if !report.skipped.is_empty() {
        eprintln!("skipped {} molecules during graph building", report.skipped.len());
    }
    let manifest = CacheManifest::new(coarsen, spec.task, spec.target_columns.clone());
    Ok((manifest, cache_records))
}

fn cmd_coarsen(data: DatasetArgs, output: PathBuf, coarsen: bool) -> Result<()> {
    let (manifest, records) = build_cache_from(&data, coarsen)?;
    write_cache(&output, &manifest, &records)?;
    println!(
        "wrote {} records (coarsen={}) to {}",
        records.len(),
        coarsen,
        output.display()
    );
    Ok(())
}

fn cmd_stats(cache: PathBuf) -> Result<()> {
    let (manifest, records) = read_cache(&cache)?;
    let opts = ParseOptions {
        disconnected: DisconnectedPolicy::KeepLargest,
    };
    let mut pairs = Vec::with_capacity(records.len());
    for r in &records {
        let molecular = parse_smiles_with(&r.smiles, opts)
            .map(|p| p.molecule.num_atoms())
            .unwrap_or(r.num_nodes());
        pairs.push((molecular, r.num_nodes()));
    }
    let ratio = abstraction_ratio_counts(&pairs)?;
    println!("records:            {}", records.len());
    println!("coarsened cache:    {}", manifest.coarsen);
    println!("abstraction ratio:  {ratio:.4}");
    println!("total mol nodes:    {}", pairs.iter().map(|p| p.0).sum::<usize>());
    println!("total graph nodes:  {}", pairs.iter().map(|p| p.1).sum::<usize>());
    print_histogram("molecular graph sizes", pairs.iter().map(|p| p.0));
    print_histogram("cached graph sizes", pairs.iter().map(|p| p.1));
    Ok(())
}

fn print_histogram(title: &str, values: impl Iterator<Item = usize>) {
    const EDGES: [usize; 7] = [1, 5, 10, 20, 40, 80, 160];
    let mut buckets = vec![0usize; EDGES.len()];
    for v in values {
        let slot = EDGES.iter().rposition(|&e| v >= e).unwrap_or(0);
        buckets[slot] += 1;
    }
    println!("{title}:");
    for (i, count) in buckets.iter().enumerate() {
        let lo = EDGES[i];
        let hi = EDGES.get(i + 1).map(|&h| h - 1);
        let label = match hi {
            Some(h) => format!("{lo:>4}-{h}"),
            None => format!("{lo:>4}+"),
        };
        println!("  {label:<9} {count}");
    }
}

fn parse_ratios(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("ratios must be three numbers")?;
    if parts.len() != 3 {
        bail!("ratios must have exactly three components");
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn cmd_split(cache: PathBuf, seed: u64, ratios: &str, output: PathBuf) -> Result<()> {
    let (_, records) = read_cache(&cache)?;
    let ratios = parse_ratios(ratios)?;
    let split = make_split(&records, seed, ratios)?;
    write_split_manifest(&output, &records, &split)?;
    println!(
        "split seed {seed}: train {} / valid {} / test {} -> {}",
        split.train.len(),
        split.valid.len(),
        split.test.len(),
        output.display()
    );
    Ok(())
}

fn load_config(path: Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::load(&p)?),
        None => Ok(RunConfig::default()),
    }
}

fn checkpoint_meta(manifest: &CacheManifest, cfg: &RunConfig, seed: u64) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert("n_i".into(), manifest.n_i.to_string());
    meta.insert("e_i".into(), manifest.e_i.to_string());
    meta.insert("coarsen".into(), manifest.coarsen.to_string());
    meta.insert(
        "task".into(),
        serde_json::to_string(&manifest.task).unwrap(),
    );
    meta.insert("tasks".into(), manifest.num_tasks().to_string());
    meta.insert(
        "run_config".into(),
        serde_json::to_string(cfg).expect("config serializes"),
    );
    meta.insert("config_digest".into(), cfg.digest());
    meta.insert("split_seed".into(), seed.to_string());
    meta
}

fn cmd_train(
    cache: PathBuf,
    split_path: PathBuf,
    config: Option<PathBuf>,
    out_dir: PathBuf,
) -> Result<()> {
    let (manifest, records) = read_cache(&cache)?;
    let split = read_split_manifest(&split_path, &records)?;
    let cfg = load_config(config)?;
    let out = train(&manifest, &records, &split, &cfg)?;
    std::fs::create_dir_all(&out_dir)?;

    let ck_path = out_dir.join("checkpoint.json");
    let file = std::fs::File::create(&ck_path)?;
    out.store
        .save(std::io::BufWriter::new(file), checkpoint_meta(&manifest, &cfg, split.seed))?;

    let log_path = out_dir.join("train_log.jsonl");
    let mut log = String::new();
    for entry in &out.log {
        log.push_str(&serde_json::to_string(entry)?);
        log.push('\n');
    }
    std::fs::write(&log_path, log)?;

    println!(
        "trained {} epochs (best epoch {}, validation {:.4}); checkpoint at {}",
        out.epochs_run,
        out.best_epoch,
        out.best_val,
        ck_path.display()
    );
    Ok(())
}

fn cmd_eval(
    cache: PathBuf,
    split_path: PathBuf,
    checkpoint: PathBuf,
    out: Option<PathBuf>,
) -> Result<()> {
    let (manifest, records) = read_cache(&cache)?;
    let split = read_split_manifest(&split_path, &records)?;
    let file = std::fs::File::open(&checkpoint)?;
    let (store, ck) = ParamStore::load(BufReader::new(file))?;

    for (key, expected) in [
        ("n_i", manifest.n_i.to_string()),
        ("e_i", manifest.e_i.to_string()),
        ("coarsen", manifest.coarsen.to_string()),
    ] {
        if let Some(found) = ck.meta.get(key) {
            if *found != expected {
                bail!("checkpoint {key}={found} does not match cache {key}={expected}");
            }
        }
    }
    let cfg: RunConfig = match ck.meta.get("run_config") {
        Some(json) => serde_json::from_str(json)?,
        None => RunConfig::default(),
    };
    let report = evaluate(&manifest, &records, &split, &store, &cfg)?;
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => {
            std::fs::write(&p, format!("{text}\n"))?;
            println!("{} = {:.4} -> {}", report.metric_name, report.value, p.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|s| s.trim().parse::<u64>().context("seeds must be integers"))
        .collect()
}

fn cmd_protocol(
    data: DatasetArgs,
    config: Option<PathBuf>,
    seeds: &str,
    out_dir: PathBuf,
) -> Result<()> {
    let cfg = load_config(config)?;
    let seeds = parse_seeds(seeds)?;
    let (manifest, records) = build_cache_from(&data, cfg.coarsen)?;
    let report = run_protocol(&manifest, &records, &cfg, &seeds, DEFAULT_RATIOS)?;
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("protocol_report.json");
    std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    println!(
        "{} over seeds {:?}: {}",
        report.metric_name, seeds, report.formatted
    );
    if let Some(b) = report.baseline_mean {
        println!("constant-predictor baseline rmse: {b:.3}");
    }
    println!("report: {}", path.display());
    Ok(())
}

fn cmd_search(
    data: DatasetArgs,
    config: Option<PathBuf>,
    budget: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let base = load_config(config)?;
    let (manifest, records) = build_cache_from(&data, base.coarsen)?;
    let result = hyper_search(&manifest, &records, &base, &SearchSpace::default(), budget, seed)?;
    println!(
        "best trial {} of {budget}: validation {:.4}",
        result.best_trial, result.best_val
    );
    println!("{}", serde_json::to_string_pretty(&result.best)?);
    if let Some(p) = out {
        std::fs::write(&p, format!("{}\n", serde_json::to_string_pretty(&result.best)?))?;
        println!("winning config: {}", p.display());
    }
    Ok(())
}

fn cmd_fg(smiles: &str) -> Result<()> {
    let opts = ParseOptions {
        disconnected: DisconnectedPolicy::KeepLargest,
    };
    let parsed = parse_smiles_with(smiles, opts)?;
    let molecule = parsed.molecule;
    let marked = funqg_core::fg::mark_atoms(&molecule);
    let groups = funqg_core::fg::extract_fgs(&molecule, &marked);
    println!("atoms: {}", molecule.num_atoms());
    println!(
        "marked: {:?}",
        marked.iter().copied().collect::<Vec<usize>>()
    );
    println!("functional groups: {}", groups.len());
    for (i, g) in groups.iter().enumerate() {
        let symbols: Vec<String> = g
            .atom_indices
            .iter()
            .map(|&a| format!("{}{}", molecule.atoms[a].symbol, a))
            .collect();
        println!("  FG {i}: [{}]", symbols.join(", "));
    }
    let q = funqg_core::coarsen::funqg::<f64>(&molecule)?;
    println!(
        "quotient graph: {} nodes, {} edges (from {} atoms, {} bonds)",
        q.num_nodes(),
        q.num_edges(),
        molecule.num_atoms(),
        molecule.num_bonds()
    );
    Ok(())
}

fn cmd_gradcheck() -> Result<()> {
    const TOLERANCE: f64 = 1e-4;
    let mut failed = false;
    println!("op-level gradient checks (central differences, step 1e-5):");
    for check in funqg_cli::gradcheck::op_suite(7) {
        let ok = check.max_rel_error < TOLERANCE;
        failed |= !ok;
        println!(
            "  {:<13} max_rel_err={:.3e}  {}",
            check.name,
            check.max_rel_error,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("end-to-end checks (20 random instances, both architectures):");
    let errors = funqg_cli::gradcheck::end_to_end(20, 11);
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let ok = worst < TOLERANCE;
    failed |= !ok;
    println!(
        "  worst over {} instances: {:.3e}  {}",
        errors.len(),
        worst,
        if ok { "PASS" } else { "FAIL" }
    );
    if failed {
        bail!("gradient checks failed");
    }
    Ok(())
}
