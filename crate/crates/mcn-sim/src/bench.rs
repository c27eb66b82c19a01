//! Synthetic workload generators shaped like the benchmark classes the
//! allocator is meant to serve, plus the experiment grid runner.
//!
//! - `data_parallel`: independent equal-sized blocks, no edges (coarse
//!   granularity, low sharing),
//! - `pipeline`: parallel query chains of five stages with stage-local
//!   transfer volumes,
//! - `fine_grained`: a dense random DAG with small tasks and heavy data
//!   exchange (granularity below one),
//! - `layered_random`: layered DAGs with random forward edges, the generic
//!   stress shape.
//!
//! Generation is deterministic per seed. Execution times are drawn uniform
//! per task and divided by a per-core speed factor drawn once per core;
//! `heterogeneity_factor = 1` yields identical rows across cores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocators::{allocate, derive_affinity, AffinityMap, Strategy};
use crate::appmodel::TaskGraph;
use crate::bandit::{MabOptions, RegretLedger};
use crate::costs::RewardWeights;
use crate::engine::execute;
use crate::error::{Error, Result};
use crate::platform::Platform;

const FINE_EDGE_PROB: f64 = 0.3;
const LAYER_EXTRA_EDGE_PROB: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    #[value(name = "data_parallel", alias = "data-parallel")]
    DataParallel,
    #[value(name = "pipeline")]
    Pipeline,
    #[value(name = "fine_grained", alias = "fine-grained")]
    FineGrained,
    #[value(name = "layered_random", alias = "layered-random")]
    LayeredRandom,
}

impl WorkloadKind {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadKind::DataParallel => "data_parallel",
            WorkloadKind::Pipeline => "pipeline",
            WorkloadKind::FineGrained => "fine_grained",
            WorkloadKind::LayeredRandom => "layered_random",
        }
    }
}

/// Parameters of one synthetic workload.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub num_tasks: usize,
    /// Pipeline: parallel queries. Other kinds ignore it.
    pub width: usize,
    /// Pipeline: stages per query. Layered: layer count.
    pub depth: usize,
    /// Byte scale of edge payloads; each edge draws uniform in
    /// [0.5 * scale, 1.5 * scale].
    pub data_volume_scale: f64,
    pub exec_time_range: (f64, f64),
    /// Per-core speed spread; speeds are drawn uniform in [1, factor].
    pub heterogeneity_factor: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn data_parallel(num_tasks: usize, seed: u64) -> Self {
        Self {
            kind: WorkloadKind::DataParallel,
            num_tasks,
            width: 0,
            depth: 0,
            data_volume_scale: 0.0,
            exec_time_range: (50.0, 100.0),
            heterogeneity_factor: 2.0,
            seed,
        }
    }

    pub fn pipeline(queries: usize, seed: u64) -> Self {
        Self {
            kind: WorkloadKind::Pipeline,
            num_tasks: queries * 5,
            width: queries,
            depth: 5,
            data_volume_scale: 4096.0,
            exec_time_range: (20.0, 60.0),
            heterogeneity_factor: 2.0,
            seed,
        }
    }

    pub fn fine_grained(num_tasks: usize, seed: u64) -> Self {
        Self {
            kind: WorkloadKind::FineGrained,
            num_tasks,
            width: 0,
            depth: 0,
            data_volume_scale: 65536.0,
            exec_time_range: (1.0, 4.0),
            heterogeneity_factor: 2.0,
            seed,
        }
    }

    pub fn layered_random(num_tasks: usize, layers: usize, seed: u64) -> Self {
        Self {
            kind: WorkloadKind::LayeredRandom,
            num_tasks,
            width: 0,
            depth: layers,
            data_volume_scale: 8192.0,
            exec_time_range: (10.0, 50.0),
            heterogeneity_factor: 4.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tasks == 0 {
            return Err(Error::InvalidSpec("num_tasks must be at least 1".into()));
        }
        let (lo, hi) = self.exec_time_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidSpec(
                "exec_time_range must satisfy 0 < min <= max".into(),
            ));
        }
        if !(self.heterogeneity_factor >= 1.0 && self.heterogeneity_factor.is_finite()) {
            return Err(Error::InvalidSpec("heterogeneity_factor must be >= 1".into()));
        }
        if !(self.data_volume_scale >= 0.0 && self.data_volume_scale.is_finite()) {
            return Err(Error::InvalidSpec("data_volume_scale must be non-negative".into()));
        }
        match self.kind {
            WorkloadKind::Pipeline => {
                if self.width == 0 || self.depth == 0 {
                    return Err(Error::InvalidSpec(
                        "pipeline needs width (queries) and depth (stages)".into(),
                    ));
                }
                if self.num_tasks != self.width * self.depth {
                    return Err(Error::InvalidSpec(format!(
                        "pipeline num_tasks {} != queries {} x stages {}",
                        self.num_tasks, self.width, self.depth
                    )));
                }
            }
            WorkloadKind::LayeredRandom => {
                if self.depth == 0 || self.depth > self.num_tasks {
                    return Err(Error::InvalidSpec(
                        "layered_random needs 1 <= layers <= num_tasks".into(),
                    ));
                }
            }
            WorkloadKind::DataParallel | WorkloadKind::FineGrained => {}
        }
        Ok(())
    }
}

fn draw_bytes(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    if scale > 0.0 {
        rng.random_range(0.5 * scale..=1.5 * scale)
    } else {
        0.0
    }
}

/// Generates the task graph for `spec` against the platform's core count.
pub fn generate(spec: &WorkloadSpec, p: &Platform) -> Result<TaskGraph> {
    spec.validate()?;
    let q = spec.num_tasks;
    let n = p.num_cores();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let speeds: Vec<f64> = (0..n)
        .map(|_| {
            if spec.heterogeneity_factor > 1.0 {
                rng.random_range(1.0..=spec.heterogeneity_factor)
            } else {
                1.0
            }
        })
        .collect();
    let (lo, hi) = spec.exec_time_range;
    let bases: Vec<f64> = (0..q).map(|_| rng.random_range(lo..=hi)).collect();

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    match spec.kind {
        WorkloadKind::DataParallel => {}
        WorkloadKind::Pipeline => {
            for query in 0..spec.width {
                let base = query * spec.depth;
                for stage in 0..spec.depth - 1 {
                    let bytes = draw_bytes(&mut rng, spec.data_volume_scale);
                    edges.push((base + stage, base + stage + 1, bytes));
                }
            }
        }
        WorkloadKind::FineGrained => {
            for i in 0..q {
                for j in (i + 1)..q {
                    if rng.random_range(0.0..1.0) < FINE_EDGE_PROB {
                        let bytes = draw_bytes(&mut rng, spec.data_volume_scale);
                        edges.push((i, j, bytes));
                    }
                }
            }
        }
        WorkloadKind::LayeredRandom => {
            // Layer sizes as even as possible; edges only point forward in
            // layer order, so the result is acyclic by construction.
            let layers = spec.depth;
            let mut bounds = Vec::with_capacity(layers + 1);
            for l in 0..=layers {
                bounds.push(l * q / layers);
            }
            for l in 1..layers {
                let prev = bounds[l - 1]..bounds[l];
                let cur = bounds[l]..bounds[l + 1];
                for t in cur {
                    let pick = rng.random_range(0..prev.len());
                    let main = prev.start + pick;
                    let bytes = draw_bytes(&mut rng, spec.data_volume_scale);
                    edges.push((main, t, bytes));
                    for s in prev.clone() {
                        if s != main && rng.random_range(0.0..1.0) < LAYER_EXTRA_EDGE_PROB {
                            let bytes = draw_bytes(&mut rng, spec.data_volume_scale);
                            edges.push((s, t, bytes));
                        }
                    }
                }
            }
        }
    }

    let exec_time: Vec<Vec<f64>> = bases
        .iter()
        .map(|b| speeds.iter().map(|s| b / s).collect())
        .collect();
    TaskGraph::new(q, edges, exec_time)
}

/// Computation-to-communication ratio of an instance, using platform means:
/// total mean execution time over total mean edge transfer time. Infinite
/// when the graph has no communication at all.
pub fn granularity(g: &TaskGraph, p: &Platform) -> f64 {
    let n = p.num_cores();
    let comp: f64 = g
        .tasks()
        .map(|t| (0..n).map(|k| g.exec_time(t, k)).sum::<f64>() / n as f64)
        .sum();
    if g.edges().is_empty() {
        return f64::INFINITY;
    }
    let mean_startup: f64 = (0..n).map(|k| p.startup(k)).sum::<f64>() / n as f64;
    let mut rate_sum = 0.0;
    let mut rate_count = 0usize;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                rate_sum += p.transfer_rate(a, b);
                rate_count += 1;
            }
        }
    }
    let mean_rate = if rate_count == 0 { 1.0 } else { rate_sum / rate_count as f64 };
    let comm: f64 = g
        .edges()
        .iter()
        .map(|e| mean_startup + e.bytes / mean_rate)
        .sum();
    if comm == 0.0 {
        f64::INFINITY
    } else {
        comp / comm
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub workload: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub makespan: f64,
    pub throughput_proxy: f64,
    pub avg_packet_latency: f64,
    pub total_energy: f64,
    pub total_avg_power: f64,
    pub best_regret: Option<f64>,
}

/// Per-(workload, strategy) means with random-normalized columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub workload: String,
    pub strategy: Strategy,
    pub runs: usize,
    pub mean_makespan: f64,
    pub mean_throughput_proxy: f64,
    pub mean_avg_packet_latency: f64,
    pub mean_total_energy: f64,
    pub mean_total_avg_power: f64,
    pub norm_makespan: Option<f64>,
    pub norm_throughput_proxy: Option<f64>,
    pub norm_avg_packet_latency: Option<f64>,
    pub norm_total_energy: Option<f64>,
    pub norm_total_avg_power: Option<f64>,
    pub power_reduced_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RegretTrace {
    pub workload: String,
    pub seed: u64,
    pub ledger: RegretLedger,
}

#[derive(Debug, Default)]
pub struct ExperimentResult {
    pub raw: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
    pub regret: Vec<RegretTrace>,
}

/// The full evaluation grid: every workload by every strategy by every seed.
#[derive(Debug, Clone)]
pub struct ExperimentPlan<'a> {
    pub workloads: &'a [(String, WorkloadSpec)],
    pub strategies: &'a [Strategy],
    pub platform: &'a Platform,
    pub weights: RewardWeights,
    /// Sigma, iteration count, scope and index form for mab cells; the cell
    /// seed replaces `seed`.
    pub mab: MabOptions,
    pub seeds: &'a [u64],
    /// Worker threads for the grid; `None` runs serially.
    pub threads: Option<usize>,
}

fn mix_seed(a: u64, b: u64) -> u64 {
    crate::allocators::splitmix64(a ^ crate::allocators::splitmix64(b ^ 0x6d63_6e5f_7369_6d00))
}

/// Runs the cross-product. All completed rows up to the first failing cell
/// are returned even on error, so callers can flush partial results.
pub fn run_experiment(plan: &ExperimentPlan) -> (ExperimentResult, Option<Error>) {
    if let Err(e) = validate_plan(plan) {
        return (ExperimentResult::default(), Some(e));
    }

    // Instances are per (workload, seed): every strategy sees the same graph
    // and affinity for a given seed.
    let mut instances: Vec<Vec<(TaskGraph, AffinityMap)>> = Vec::with_capacity(plan.workloads.len());
    for (_, spec) in plan.workloads {
        let mut per_seed = Vec::with_capacity(plan.seeds.len());
        for &seed in plan.seeds {
            let inst = WorkloadSpec {
                seed: mix_seed(spec.seed, seed),
                ..spec.clone()
            };
            let g = match generate(&inst, plan.platform) {
                Ok(g) => g,
                Err(e) => return (ExperimentResult::default(), Some(e)),
            };
            let aff = match derive_affinity(&g, plan.platform) {
                Ok(a) => a,
                Err(e) => return (ExperimentResult::default(), Some(e)),
            };
            per_seed.push((g, aff));
        }
        instances.push(per_seed);
    }

    let mut cells = Vec::new();
    for wi in 0..plan.workloads.len() {
        for &strategy in plan.strategies {
            for (si, &seed) in plan.seeds.iter().enumerate() {
                cells.push((wi, strategy, si, seed));
            }
        }
    }

    let run_cell = |&(wi, strategy, si, seed): &(usize, Strategy, usize, u64)| -> Result<(RawRow, Option<RegretTrace>)> {
        let (g, aff) = &instances[wi][si];
        let label = plan.workloads[wi].0.clone();
        let (alloc, ledger) = allocate(strategy, g, plan.platform, &plan.weights, &plan.mab, seed, Some(aff))?;
        let report = execute(&alloc, g, plan.platform)?;
        let row = RawRow {
            workload: label.clone(),
            strategy,
            seed,
            makespan: report.makespan,
            throughput_proxy: report.throughput_proxy,
            avg_packet_latency: report.avg_packet_latency,
            total_energy: report.total_energy,
            total_avg_power: report.total_avg_power,
            best_regret: ledger.as_ref().map(|l| l.best_regret),
        };
        let trace = ledger.map(|ledger| RegretTrace {
            workload: label,
            seed,
            ledger,
        });
        Ok((row, trace))
    };

    let outcomes: Vec<Result<(RawRow, Option<RegretTrace>)>> = match plan.threads {
        Some(threads) if threads > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("worker pool");
            pool.install(|| cells.par_iter().map(run_cell).collect())
        }
        _ => cells.iter().map(run_cell).collect(),
    };

    let mut result = ExperimentResult::default();
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok((row, trace)) => {
                result.raw.push(row);
                if let Some(t) = trace {
                    result.regret.push(t);
                }
            }
            Err(e) => {
                first_error = Some(e);
                break;
            }
        }
    }
    result.summary = summarize(&result.raw, plan);
    (result, first_error)
}

fn validate_plan(plan: &ExperimentPlan) -> Result<()> {
    if plan.workloads.is_empty() {
        return Err(Error::InvalidConfig("workload list is empty".into()));
    }
    if plan.strategies.is_empty() {
        return Err(Error::InvalidConfig("strategy list is empty".into()));
    }
    if plan.seeds.is_empty() {
        return Err(Error::InvalidConfig("seed list is empty".into()));
    }
    plan.weights.validate()?;
    if plan.strategies.contains(&Strategy::Mab) && plan.mab.iterations == 0 {
        return Err(Error::InvalidConfig("iteration count R must be at least 1".into()));
    }
    for (_, spec) in plan.workloads {
        spec.validate()?;
    }
    Ok(())
}

fn summarize(rows: &[RawRow], plan: &ExperimentPlan) -> Vec<SummaryRow> {
    let mut summary = Vec::new();
    for (label, _) in plan.workloads {
        let mean_of = |strategy: Strategy| -> Option<(usize, [f64; 5])> {
            let cells: Vec<&RawRow> = rows
                .iter()
                .filter(|r| &r.workload == label && r.strategy == strategy)
                .collect();
            if cells.is_empty() {
                return None;
            }
            let n = cells.len() as f64;
            Some((
                cells.len(),
                [
                    cells.iter().map(|r| r.makespan).sum::<f64>() / n,
                    cells.iter().map(|r| r.throughput_proxy).sum::<f64>() / n,
                    cells.iter().map(|r| r.avg_packet_latency).sum::<f64>() / n,
                    cells.iter().map(|r| r.total_energy).sum::<f64>() / n,
                    cells.iter().map(|r| r.total_avg_power).sum::<f64>() / n,
                ],
            ))
        };
        let baseline = mean_of(Strategy::Random);
        for &strategy in plan.strategies {
            let Some((runs, m)) = mean_of(strategy) else {
                continue;
            };
            let norm = |i: usize| {
                baseline.as_ref().map(|(_, b)| {
                    if b[i] == 0.0 {
                        if m[i] == 0.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        m[i] / b[i]
                    }
                })
            };
            let power_reduced = baseline.as_ref().map(|(_, b)| {
                if b[4] == 0.0 {
                    0.0
                } else {
                    (b[4] - m[4]) / b[4] * 100.0
                }
            });
            summary.push(SummaryRow {
                workload: label.clone(),
                strategy,
                runs,
                mean_makespan: m[0],
                mean_throughput_proxy: m[1],
                mean_avg_packet_latency: m[2],
                mean_total_energy: m[3],
                mean_total_avg_power: m[4],
                norm_makespan: norm(0),
                norm_throughput_proxy: norm(1),
                norm_avg_packet_latency: norm(2),
                norm_total_energy: norm(3),
                norm_total_avg_power: norm(4),
                power_reduced_pct: power_reduced,
            });
        }
    }
    summary
}
