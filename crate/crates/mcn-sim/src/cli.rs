//! Command-line front end: `generate`, `run`, and `sweep`.
//!
//! Exit codes: 0 on success, 1 on runtime or validation failures (stderr
//! names the violated invariant), 2 on usage errors. The `MCNSIM_OUT`
//! environment variable overrides the output directory of `run` and
//! `sweep`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::allocators::{allocate, derive_affinity, Strategy};
use crate::bandit::{BanditScope, IndexForm, MabOptions};
use crate::bench::{generate, run_experiment, ExperimentPlan, WorkloadKind};
use crate::costs::RewardWeights;
use crate::engine::{compare, execute};
use crate::error::{Error, Result};
use crate::io;
use crate::platform::Platform;

#[derive(Parser)]
#[command(
    name = "mcn-sim",
    version,
    about = "Task allocation on a mesh of near-memory cores: workload generation, single runs, and experiment sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print progress details to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload file.
    Generate(GenerateArgs),
    /// Allocate and execute one workload with one strategy.
    Run(RunArgs),
    /// Run a sweep grid from a config file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Workload shape.
    #[arg(long, value_enum)]
    kind: WorkloadKind,
    /// Task count (data_parallel, fine_grained, layered_random).
    #[arg(long)]
    tasks: Option<usize>,
    /// Parallel queries (pipeline).
    #[arg(long)]
    queries: Option<usize>,
    /// Stages per query (pipeline, default 5).
    #[arg(long)]
    stages: Option<usize>,
    /// Layer count (layered_random, default 4).
    #[arg(long)]
    layers: Option<usize>,
    /// Byte scale of edge payloads.
    #[arg(long)]
    data_scale: Option<f64>,
    /// Lower bound of the base execution-time draw.
    #[arg(long)]
    exec_min: Option<f64>,
    /// Upper bound of the base execution-time draw.
    #[arg(long)]
    exec_max: Option<f64>,
    /// Per-core speed spread (>= 1).
    #[arg(long)]
    het: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Platform file the workload is sized against (default platform if
    /// absent).
    #[arg(long)]
    platform: Option<PathBuf>,
    /// Shortcut: size against a single-node platform with this many cores.
    #[arg(long, conflicts_with = "platform")]
    cores: Option<usize>,
    /// Output workload file.
    #[arg(long, default_value = "workload.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    workload: PathBuf,
    /// Platform file (default platform if absent).
    #[arg(long)]
    platform: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Weight of the finish-time cost.
    #[arg(long, default_value_t = 1.0)]
    h1: f64,
    /// Weight of the resource cost.
    #[arg(long, default_value_t = 0.5)]
    h2: f64,
    /// Weight of the power cost.
    #[arg(long, default_value_t = 0.5)]
    h3: f64,
    /// Exploration weight of the UCB index.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Seeded dithering rate of the bandit loop (0 disables).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Bandit iteration count.
    #[arg(long = "R", default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One bandit over all cores, or one per memory node.
    #[arg(long, value_enum, default_value_t = BanditScopeArg::Global)]
    bandit_scope: BanditScopeArg,
    /// Stop after this many iterations without ledger improvement.
    #[arg(long)]
    early_stop: Option<usize>,
    /// Use the raw cumulative reward sum in the UCB index (comparison only).
    #[arg(long, hide = true)]
    ucb_cumulative: bool,
    /// Derive the data-affinity map from the graph instead of the file.
    #[arg(long)]
    derive_affinity: bool,
    /// Also write per-core busy times.
    #[arg(long)]
    per_core: bool,
    /// Output directory (overridden by MCNSIM_OUT).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config file.
    #[arg(long)]
    config: PathBuf,
    /// Results root; the experiment writes to `<out>/<name>` (overridden by
    /// MCNSIM_OUT).
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads for the grid.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum BanditScopeArg {
    Global,
    #[value(name = "per-node")]
    PerNode,
}

impl From<BanditScopeArg> for BanditScope {
    fn from(v: BanditScopeArg) -> Self {
        match v {
            BanditScopeArg::Global => BanditScope::Global,
            BanditScopeArg::PerNode => BanditScope::PerNode,
        }
    }
}

/// Entry point returning the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(args, cli.verbose),
        Command::Run(args) => cmd_run(args, cli.verbose),
        Command::Sweep(args) => cmd_sweep(args, cli.verbose),
    }
}

fn out_dir(flag: &Path) -> PathBuf {
    match std::env::var_os("MCNSIM_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.to_path_buf(),
    }
}

fn load_platform(path: &Option<PathBuf>) -> Result<Platform> {
    match path {
        Some(p) => io::load_platform(p),
        None => Ok(Platform::default_mcn()),
    }
}

fn cmd_generate(args: &GenerateArgs, verbose: bool) -> Result<()> {
    let platform = match (&args.platform, args.cores) {
        (Some(path), _) => io::load_platform(path)?,
        (None, Some(cores)) => {
            if cores == 0 {
                return Err(Error::InvalidConfig("--cores must be positive".into()));
            }
            Platform::uniform((1, 1), cores, 480.0, 2.0, 0.5, 0.1, 10.0)
        }
        (None, None) => Platform::default_mcn(),
    };
    let request = io::WorkloadRequest {
        kind: Some(args.kind),
        tasks: args.tasks,
        queries: args.queries,
        stages: args.stages,
        layers: args.layers,
        data_volume_scale: args.data_scale,
        exec_time_range: match (args.exec_min, args.exec_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(1.0), hi.unwrap_or_else(|| lo.unwrap_or(1.0).max(1.0) * 2.0))),
        },
        heterogeneity_factor: args.het,
        seed: Some(args.seed),
    };
    let spec = request.build()?;
    let g = generate(&spec, &platform)?;
    let affinity = derive_affinity(&g, &platform)?;
    let file = io::WorkloadFile::from_graph(&g, &platform, Some(&affinity), Some(&spec));
    io::save_workload_file(&args.out, &file)?;
    if verbose {
        eprintln!(
            "generated {} tasks, {} edges for {} cores",
            g.num_tasks(),
            g.edges().len(),
            platform.num_cores()
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_run(args: &RunArgs, verbose: bool) -> Result<()> {
    let platform = load_platform(&args.platform)?;
    let (graph, file_affinity) = io::load_workload(&args.workload, &platform)?;
    let affinity = if args.derive_affinity {
        Some(derive_affinity(&graph, &platform)?)
    } else {
        file_affinity
    };
    let weights = RewardWeights::new(args.h1, args.h2, args.h3)?;
    let opts = MabOptions {
        sigma: args.sigma,
        iterations: args.iterations,
        seed: args.seed,
        scope: args.bandit_scope.into(),
        early_stop: args.early_stop,
        index_form: if args.ucb_cumulative {
            IndexForm::Cumulative
        } else {
            IndexForm::MeanBased
        },
        explore_prob: args.epsilon,
    };

    let (alloc, ledger) = allocate(
        args.strategy,
        &graph,
        &platform,
        &weights,
        &opts,
        args.seed,
        affinity.as_ref(),
    )?;
    let mut report = execute(&alloc, &graph, &platform)?;
    report.regret_trace = ledger;

    let dir = out_dir(&args.out);
    let report_path = dir.join("report.csv");
    io::write_file(&report_path, &io::report_csv(args.strategy.name(), args.seed, &report))?;
    let mut written = vec![report_path];
    if let Some(ledger) = &report.regret_trace {
        let path = dir.join("regret.csv");
        io::write_file(&path, &io::regret_csv(ledger))?;
        written.push(path);
    }
    if args.per_core {
        let path = dir.join("percore.csv");
        io::write_file(&path, &io::per_core_csv(&report))?;
        written.push(path);
    }

    if verbose {
        let scale = crate::engine::TimeScale {
            fs_per_unit: platform.fs_per_unit(),
        };
        eprintln!(
            "makespan {} units ({} fs at {} fs/unit)",
            report.makespan,
            scale.femtoseconds(report.makespan),
            platform.fs_per_unit()
        );
    }
    println!(
        "{}: makespan {:.4}, throughput {:.4}, avg packet latency {:.4}, energy {:.4}, avg power {:.4}",
        args.strategy.name(),
        report.makespan,
        report.throughput_proxy,
        report.avg_packet_latency,
        report.total_energy,
        report.total_avg_power,
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, verbose: bool) -> Result<()> {
    let sweep = io::SweepFile::load(&args.config)?;
    if sweep.strategies.is_empty() {
        return Err(Error::InvalidConfig("strategy list is empty".into()));
    }
    let platform = sweep.resolve_platform(&args.config)?;
    let workloads = sweep.workload_specs()?;
    let weights = RewardWeights::new(sweep.h1, sweep.h2, sweep.h3)?;
    let mab = MabOptions {
        sigma: sweep.sigma,
        iterations: sweep.iterations,
        seed: 0,
        scope: sweep.bandit_scope,
        early_stop: sweep.early_stop,
        index_form: IndexForm::MeanBased,
        explore_prob: sweep.epsilon,
    };
    let plan = ExperimentPlan {
        workloads: &workloads,
        strategies: &sweep.strategies,
        platform: &platform,
        weights,
        mab,
        seeds: &sweep.seeds,
        threads: args.parallel,
    };
    if verbose {
        eprintln!(
            "sweep '{}': {} workloads x {} strategies x {} seeds",
            sweep.name,
            workloads.len(),
            sweep.strategies.len(),
            sweep.seeds.len()
        );
    }
    let (result, error) = run_experiment(&plan);
    let dir = out_dir(&args.out).join(&sweep.name);
    let written = io::write_experiment(&dir, &result)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    if let Some(e) = error {
        // Completed rows are already on disk.
        return Err(e);
    }
    print_summary(&result)?;
    Ok(())
}

fn print_summary(result: &crate::bench::ExperimentResult) -> Result<()> {
    let mut by_workload: BTreeMap<&str, BTreeMap<String, &crate::bench::SummaryRow>> = BTreeMap::new();
    for row in &result.summary {
        by_workload
            .entry(&row.workload)
            .or_default()
            .insert(row.strategy.name().to_string(), row);
    }
    for (workload, rows) in by_workload {
        println!("\n{workload}:");
        // Reuse the comparison layout when a random baseline exists.
        if rows.contains_key("random") {
            let reports: BTreeMap<String, crate::engine::RunReport> = rows
                .iter()
                .map(|(name, s)| {
                    (
                        name.clone(),
                        crate::engine::RunReport {
                            makespan: s.mean_makespan,
                            per_core_busy: vec![],
                            throughput_proxy: s.mean_throughput_proxy,
                            avg_packet_latency: s.mean_avg_packet_latency,
                            total_energy: s.mean_total_energy,
                            total_avg_power: s.mean_total_avg_power,
                            messages: vec![],
                            regret_trace: None,
                        },
                    )
                })
                .collect();
            print!("{}", compare(&reports)?);
        } else {
            for (name, s) in rows {
                println!(
                    "{:<10} makespan {:.4} energy {:.4}",
                    name, s.mean_makespan, s.mean_total_energy
                );
            }
        }
    }
    Ok(())
}
