//! File schemas and CSV emission.
//!
//! Every structured file is JSON with a versioned `schema` header; the
//! formats are documented in `docs/formats.md`. CSV is written with plain
//! shortest-roundtrip float formatting, so identical inputs and seeds
//! produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::allocators::{AffinityMap, Strategy};
use crate::appmodel::TaskGraph;
use crate::bandit::{BanditScope, RegretLedger};
use crate::bench::{ExperimentResult, WorkloadKind, WorkloadSpec};
use crate::engine::RunReport;
use crate::error::{Error, Result};
use crate::platform::{Platform, PowerParams};

pub const WORKLOAD_SCHEMA: &str = "mcn-sim/workload/v1";
pub const PLATFORM_SCHEMA: &str = "mcn-sim/platform/v1";
pub const SWEEP_SCHEMA: &str = "mcn-sim/sweep/v1";

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

fn check_schema(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::InvalidConfig(format!(
            "{}: schema '{found}' is not supported, expected '{expected}'",
            path.display()
        )));
    }
    Ok(())
}

/// A scalar broadcast to every entry, or the full vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVec::Vec(v) if v.len() == n => Ok(v.clone()),
            ScalarOrVec::Vec(v) => Err(Error::InvalidPlatform(format!(
                "{what} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

/// A uniform off-diagonal rate, or the full matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrMatrix {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl ScalarOrMatrix {
    fn expand(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            ScalarOrMatrix::Scalar(v) => Ok(vec![vec![*v; n]; n]),
            ScalarOrMatrix::Matrix(m) if m.len() == n && m.iter().all(|r| r.len() == n) => {
                Ok(m.clone())
            }
            ScalarOrMatrix::Matrix(_) => Err(Error::InvalidPlatform(format!(
                "delta matrix must be {n} x {n}"
            ))),
        }
    }
}

fn default_cpu_cores() -> usize {
    4
}

fn one() -> f64 {
    1.0
}

/// On-disk platform description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlatformFile {
    pub schema: String,
    pub mesh: (usize, usize),
    pub cores_per_node: usize,
    #[serde(default = "default_cpu_cores")]
    pub cpu_cores: usize,
    pub delta: ScalarOrMatrix,
    pub startup: ScalarOrVec,
    pub eta: ScalarOrVec,
    pub zeta_comm: f64,
    pub hop_latency: f64,
    pub power: PowerParams,
    #[serde(default = "one")]
    pub fs_per_unit: f64,
}

impl PlatformFile {
    pub fn to_platform(&self, path: &Path) -> Result<Platform> {
        check_schema(path, &self.schema, PLATFORM_SCHEMA)?;
        let n = self.mesh.0 * self.mesh.1 * self.cores_per_node;
        Platform::new(
            self.mesh,
            self.cores_per_node,
            self.cpu_cores,
            self.delta.expand(n)?,
            self.startup.expand(n, "startup")?,
            self.eta.expand(n, "eta")?,
            self.zeta_comm,
            self.hop_latency,
            self.power,
            self.fs_per_unit,
        )
    }
}

pub fn load_platform(path: &Path) -> Result<Platform> {
    read_json::<PlatformFile>(path)?.to_platform(path)
}

pub fn save_platform_file(path: &Path, file: &PlatformFile) -> Result<()> {
    write_json(path, file)
}

/// On-disk workload: the DAG, its execution-time matrix, and optionally the
/// data affinity and the generator spec that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkloadFile {
    pub schema: String,
    /// Task count Q.
    pub tasks: usize,
    /// `[src, dst, bytes]` triples.
    pub edges: Vec<(usize, usize, f64)>,
    /// Row-major Q x N execution times.
    pub exec_time: Vec<f64>,
    /// Node index (row-major over the mesh) per task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affinity: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<WorkloadSpec>,
}

impl WorkloadFile {
    pub fn from_graph(g: &TaskGraph, p: &Platform, affinity: Option<&AffinityMap>, spec: Option<&WorkloadSpec>) -> Self {
        let edges = g.edges().iter().map(|e| (e.src, e.dst, e.bytes)).collect();
        let mut exec_time = Vec::with_capacity(g.num_tasks() * g.num_cores());
        for t in g.tasks() {
            for k in 0..g.num_cores() {
                exec_time.push(g.exec_time(t, k));
            }
        }
        Self {
            schema: WORKLOAD_SCHEMA.to_string(),
            tasks: g.num_tasks(),
            edges,
            exec_time,
            affinity: affinity.map(|a| a.nodes().iter().map(|n| p.node_index(*n)).collect()),
            generator: spec.cloned(),
        }
    }

    pub fn to_graph(&self, p: &Platform, path: &Path) -> Result<(TaskGraph, Option<AffinityMap>)> {
        check_schema(path, &self.schema, WORKLOAD_SCHEMA)?;
        if self.tasks == 0 || !self.exec_time.len().is_multiple_of(self.tasks) {
            return Err(Error::InvalidGraph(format!(
                "exec_time length {} is not a multiple of the task count {}",
                self.exec_time.len(),
                self.tasks
            )));
        }
        let n = self.exec_time.len() / self.tasks;
        if n != p.num_cores() {
            return Err(Error::InvalidConfig(format!(
                "workload expects {} cores, platform has {}",
                n,
                p.num_cores()
            )));
        }
        let rows: Vec<Vec<f64>> = self.exec_time.chunks(n).map(|c| c.to_vec()).collect();
        let g = TaskGraph::new(self.tasks, self.edges.clone(), rows)?;
        let affinity = match &self.affinity {
            None => None,
            Some(idx) => {
                if idx.len() != self.tasks {
                    return Err(Error::MissingAffinity(format!(
                        "affinity covers {} of {} tasks",
                        idx.len(),
                        self.tasks
                    )));
                }
                let mut nodes = Vec::with_capacity(idx.len());
                for &i in idx {
                    if i >= p.num_nodes() {
                        return Err(Error::MissingAffinity(format!(
                            "affinity node index {i} is outside the {}-node mesh",
                            p.num_nodes()
                        )));
                    }
                    nodes.push(p.node_at(i));
                }
                Some(AffinityMap::new(nodes))
            }
        };
        Ok((g, affinity))
    }
}

pub fn load_workload(path: &Path, p: &Platform) -> Result<(TaskGraph, Option<AffinityMap>)> {
    read_json::<WorkloadFile>(path)?.to_graph(p, path)
}

pub fn save_workload_file(path: &Path, file: &WorkloadFile) -> Result<()> {
    write_json(path, file)
}

/// Workload description as it appears in sweep files and CLI flags; kind
/// defaults are filled in by `build`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WorkloadRequest {
    pub kind: Option<WorkloadKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_volume_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exec_time_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneity_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl WorkloadRequest {
    pub fn build(&self) -> Result<WorkloadSpec> {
        let kind = self
            .kind
            .ok_or_else(|| Error::InvalidSpec("workload kind is required".into()))?;
        let seed = self.seed.unwrap_or(0);
        let need_tasks = || {
            self.tasks
                .ok_or_else(|| Error::InvalidSpec(format!("{} needs a task count", kind.name())))
        };
        let mut spec = match kind {
            WorkloadKind::DataParallel => WorkloadSpec::data_parallel(need_tasks()?, seed),
            WorkloadKind::Pipeline => {
                let queries = self
                    .queries
                    .ok_or_else(|| Error::InvalidSpec("pipeline needs a query count".into()))?;
                let mut s = WorkloadSpec::pipeline(queries, seed);
                if let Some(stages) = self.stages {
                    s.depth = stages;
                    s.num_tasks = queries * stages;
                }
                if let Some(tasks) = self.tasks {
                    if tasks != s.num_tasks {
                        return Err(Error::InvalidSpec(format!(
                            "pipeline num_tasks {} != queries {} x stages {}",
                            tasks, s.width, s.depth
                        )));
                    }
                }
                s
            }
            WorkloadKind::FineGrained => WorkloadSpec::fine_grained(need_tasks()?, seed),
            WorkloadKind::LayeredRandom => {
                WorkloadSpec::layered_random(need_tasks()?, self.layers.unwrap_or(4), seed)
            }
        };
        if let Some(v) = self.data_volume_scale {
            spec.data_volume_scale = v;
        }
        if let Some(r) = self.exec_time_range {
            spec.exec_time_range = r;
        }
        if let Some(h) = self.heterogeneity_factor {
            spec.heterogeneity_factor = h;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepWorkloadEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub request: WorkloadRequest,
}

fn default_sigma() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_iterations() -> usize {
    200
}

/// On-disk sweep grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFile {
    pub schema: String,
    pub name: String,
    /// Optional platform file path, relative to the sweep file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<String>,
    pub workloads: Vec<SweepWorkloadEntry>,
    pub strategies: Vec<Strategy>,
    #[serde(default = "one")]
    pub h1: f64,
    #[serde(default = "crate::io::half")]
    pub h2: f64,
    #[serde(default = "crate::io::half")]
    pub h3: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub bandit_scope: BanditScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<usize>,
}

pub(crate) fn half() -> f64 {
    0.5
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file: SweepFile = read_json(path)?;
        check_schema(path, &file.schema, SWEEP_SCHEMA)?;
        Ok(file)
    }

    /// Builds labeled workload specs; labels default to `<kind><index>`.
    pub fn workload_specs(&self) -> Result<Vec<(String, WorkloadSpec)>> {
        let mut out = Vec::with_capacity(self.workloads.len());
        for (i, entry) in self.workloads.iter().enumerate() {
            let spec = entry.request.build()?;
            let label = entry
                .label
                .clone()
                .unwrap_or_else(|| format!("{}{}", spec.kind.name(), i));
            out.push((label, spec));
        }
        Ok(out)
    }

    pub fn resolve_platform(&self, sweep_path: &Path) -> Result<Platform> {
        match &self.platform {
            None => Ok(Platform::default_mcn()),
            Some(rel) => {
                let base = sweep_path.parent().unwrap_or_else(|| Path::new("."));
                load_platform(&base.join(rel))
            }
        }
    }
}

pub fn save_sweep_file(path: &Path, file: &SweepFile) -> Result<()> {
    write_json(path, file)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub const REPORT_CSV_HEADER: &str =
    "strategy,seed,makespan,throughput_proxy,avg_packet_latency,total_energy,total_avg_power,best_regret";

/// One run report as a CSV row; `best_regret` is empty for non-bandit runs.
pub fn report_csv_row(strategy: &str, seed: u64, r: &RunReport) -> String {
    let best = r
        .regret_trace
        .as_ref()
        .map(|l| fmt(l.best_regret))
        .unwrap_or_default();
    format!(
        "{strategy},{seed},{},{},{},{},{},{best}",
        fmt(r.makespan),
        fmt(r.throughput_proxy),
        fmt(r.avg_packet_latency),
        fmt(r.total_energy),
        fmt(r.total_avg_power),
    )
}

pub fn report_csv(strategy: &str, seed: u64, r: &RunReport) -> String {
    format!("{REPORT_CSV_HEADER}\n{}\n", report_csv_row(strategy, seed, r))
}

pub const REGRET_CSV_HEADER: &str = "iteration,regret,best_regret";

/// Per-iteration regret trace: `iteration, regret, best_regret`.
pub fn regret_csv(ledger: &RegretLedger) -> String {
    let mut out = String::from(REGRET_CSV_HEADER);
    out.push('\n');
    for (i, (delta, best)) in ledger
        .per_iteration_regret
        .iter()
        .zip(&ledger.best_regret_trace)
        .enumerate()
    {
        out.push_str(&format!("{},{},{}\n", i + 1, fmt(*delta), fmt(*best)));
    }
    out
}

pub const PER_CORE_CSV_HEADER: &str = "core_id,busy_time";

/// Per-core utilization rows for core-activity plots.
pub fn per_core_csv(r: &RunReport) -> String {
    let mut out = String::from(PER_CORE_CSV_HEADER);
    out.push('\n');
    for (k, busy) in r.per_core_busy.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", fmt(*busy)));
    }
    out
}

pub const RAW_CSV_HEADER: &str =
    "workload,strategy,seed,makespan,throughput_proxy,avg_packet_latency,total_energy,total_avg_power,best_regret";

pub const SUMMARY_CSV_HEADER: &str = "workload,strategy,runs,mean_makespan,mean_throughput_proxy,\
mean_avg_packet_latency,mean_total_energy,mean_total_avg_power,norm_makespan,norm_throughput_proxy,\
norm_avg_packet_latency,norm_total_energy,norm_total_avg_power,power_reduced_pct";

pub fn raw_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(RAW_CSV_HEADER);
    out.push('\n');
    for r in &result.raw {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.workload,
            r.strategy,
            r.seed,
            fmt(r.makespan),
            fmt(r.throughput_proxy),
            fmt(r.avg_packet_latency),
            fmt(r.total_energy),
            fmt(r.total_avg_power),
            r.best_regret.map(fmt).unwrap_or_default(),
        ));
    }
    out
}

pub fn summary_csv(result: &ExperimentResult) -> String {
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in &result.summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.workload,
            s.strategy,
            s.runs,
            fmt(s.mean_makespan),
            fmt(s.mean_throughput_proxy),
            fmt(s.mean_avg_packet_latency),
            fmt(s.mean_total_energy),
            fmt(s.mean_total_avg_power),
            opt(s.norm_makespan),
            opt(s.norm_throughput_proxy),
            opt(s.norm_avg_packet_latency),
            opt(s.norm_total_energy),
            opt(s.norm_total_avg_power),
            opt(s.power_reduced_pct),
        ));
    }
    out
}

/// Writes `raw.csv`, `summary.csv` and `regret/<workload>_s<seed>.csv`
/// under `dir`. Returns the paths written.
pub fn write_experiment(dir: &Path, result: &ExperimentResult) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let raw = dir.join("raw.csv");
    write_text(&raw, &raw_csv(result))?;
    written.push(raw);
    let summary = dir.join("summary.csv");
    write_text(&summary, &summary_csv(result))?;
    written.push(summary);
    for trace in &result.regret {
        let path = dir
            .join("regret")
            .join(format!("{}_s{}.csv", trace.workload, trace.seed));
        write_text(&path, &regret_csv(&trace.ledger))?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}
