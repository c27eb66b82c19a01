//! Application model: the task DAG and the scheduling-time equations.
//!
//! An application is a static DAG of tasks. Each task has a per-core
//! execution time (`theta`, a Q x N matrix) and each edge carries a data
//! volume in bytes. Scheduling is non-preemptive, one task at a time per
//! core; a core's readiness is a single scalar `avail` per core.
//!
//! Times are unit-free non-negative `f64`s. Conversion to femtoseconds for
//! reporting lives in [`crate::engine::TimeScale`], never here.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::platform::{CoreId, Platform};

pub type TaskId = usize;
pub type Time = f64;

/// A directed edge: `src` must finish before `dst` starts, and transfers
/// `bytes` of data to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: TaskId,
    pub dst: TaskId,
    pub bytes: f64,
}

/// The application DAG with its execution-time and data-volume matrices.
///
/// Validated at construction:
/// - the edge set is acyclic,
/// - data volume is positive only on edges (it is stored per edge),
/// - every task can run on at least one core (some positive execution time),
/// - entry and exit task sets are non-empty (implied by acyclicity and Q >= 1).
#[derive(Debug, Clone)]
pub struct TaskGraph {
    num_tasks: usize,
    num_cores: usize,
    edges: Vec<Edge>,
    /// Row-major Q x N execution times.
    exec_time: Vec<f64>,
    /// Sorted predecessor / successor lists per task.
    preds: Vec<Vec<TaskId>>,
    succs: Vec<Vec<TaskId>>,
    /// Bytes per (src, dst) pair, dense row-major Q x Q.
    data_volume: Vec<f64>,
}

impl TaskGraph {
    /// Builds and validates a graph. `exec_time` is one row per task with one
    /// column per core; `edges` are `(src, dst, bytes)` triples.
    pub fn new(
        num_tasks: usize,
        edges: Vec<(TaskId, TaskId, f64)>,
        exec_time: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if num_tasks == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one task".into()));
        }
        if exec_time.len() != num_tasks {
            return Err(Error::InvalidGraph(format!(
                "exec_time has {} rows for {} tasks",
                exec_time.len(),
                num_tasks
            )));
        }
        let num_cores = exec_time[0].len();
        if num_cores == 0 {
            return Err(Error::InvalidGraph("exec_time has zero columns".into()));
        }
        let mut flat = Vec::with_capacity(num_tasks * num_cores);
        for (i, row) in exec_time.iter().enumerate() {
            if row.len() != num_cores {
                return Err(Error::InvalidGraph(format!(
                    "exec_time row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    num_cores
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "exec_time row {i} contains a negative or non-finite entry"
                )));
            }
            if !row.iter().any(|v| *v > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "task {i} has no core with positive execution time"
                )));
            }
            flat.extend_from_slice(row);
        }

        let mut preds = vec![Vec::new(); num_tasks];
        let mut succs = vec![Vec::new(); num_tasks];
        let mut data_volume = vec![0.0; num_tasks * num_tasks];
        let mut parsed = Vec::with_capacity(edges.len());
        for &(src, dst, bytes) in &edges {
            if src >= num_tasks || dst >= num_tasks {
                return Err(Error::InvalidGraph(format!(
                    "edge ({src}, {dst}) references a task outside 0..{num_tasks}"
                )));
            }
            if src == dst {
                return Err(Error::InvalidGraph(format!("self edge on task {src}")));
            }
            if !bytes.is_finite() || bytes < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({src}, {dst}) has a negative or non-finite data volume"
                )));
            }
            if succs[src].contains(&dst) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({src}, {dst})")));
            }
            succs[src].push(dst);
            preds[dst].push(src);
            data_volume[src * num_tasks + dst] = bytes;
            parsed.push(Edge { src, dst, bytes });
        }
        for list in preds.iter_mut().chain(succs.iter_mut()) {
            list.sort_unstable();
        }

        let g = Self {
            num_tasks,
            num_cores,
            edges: parsed,
            exec_time: flat,
            preds,
            succs,
            data_volume,
        };
        // Acyclicity; a finite non-empty DAG always has entry and exit tasks.
        topological_order(&g)?;
        Ok(g)
    }

    pub fn num_tasks(&self) -> usize {
        self.num_tasks
    }

    pub fn num_cores(&self) -> usize {
        self.num_cores
    }

    pub fn tasks(&self) -> std::ops::Range<TaskId> {
        0..self.num_tasks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Execution time of `task` on `core` (an entry of the Q x N matrix).
    pub fn exec_time(&self, task: TaskId, core: CoreId) -> f64 {
        self.exec_time[task * self.num_cores + core]
    }

    /// Data volume in bytes carried by edge `(src, dst)`; zero off-edge.
    pub fn data_volume(&self, src: TaskId, dst: TaskId) -> f64 {
        self.data_volume[src * self.num_tasks + dst]
    }

    pub fn has_edge(&self, src: TaskId, dst: TaskId) -> bool {
        self.succs[src].binary_search(&dst).is_ok()
    }

    pub fn preds(&self, task: TaskId) -> &[TaskId] {
        &self.preds[task]
    }

    pub fn succs(&self, task: TaskId) -> &[TaskId] {
        &self.succs[task]
    }

    pub fn is_entry(&self, task: TaskId) -> bool {
        self.preds[task].is_empty()
    }

    pub fn is_exit(&self, task: TaskId) -> bool {
        self.succs[task].is_empty()
    }

    pub fn entry_tasks(&self) -> Vec<TaskId> {
        self.tasks().filter(|&t| self.is_entry(t)).collect()
    }

    pub fn exit_tasks(&self) -> Vec<TaskId> {
        self.tasks().filter(|&t| self.is_exit(t)).collect()
    }

    /// Cores on which `task` can execute (positive execution time).
    pub fn eligible_cores(&self, task: TaskId) -> impl Iterator<Item = CoreId> + '_ {
        (0..self.num_cores).filter(move |&k| self.exec_time(task, k) > 0.0)
    }
}

/// Start/finish bookkeeping for one scheduled task. Once a task is placed
/// its actual times equal the earliest times, so `ast == est` and
/// `aft == eft` always hold here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskTiming {
    pub task: TaskId,
    pub core: CoreId,
    pub est: Time,
    pub eft: Time,
    pub ast: Time,
    pub aft: Time,
}

/// Topological order with ties broken by ascending task id.
pub fn topological_order(g: &TaskGraph) -> Result<Vec<TaskId>> {
    let mut indegree: Vec<usize> = g.tasks().map(|t| g.preds(t).len()).collect();
    let mut ready: BinaryHeap<Reverse<TaskId>> = g
        .tasks()
        .filter(|&t| indegree[t] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(g.num_tasks());
    while let Some(Reverse(t)) = ready.pop() {
        order.push(t);
        for &s in g.succs(t) {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() != g.num_tasks() {
        return Err(Error::CycleDetected);
    }
    Ok(order)
}

/// Communication time of edge `(src_task, dst_task)` when the producer runs
/// on `src_core` and the consumer on `dst_core`: zero on the same core,
/// otherwise startup plus bytes over the pairwise transfer rate.
pub fn comm_time(
    src_task: TaskId,
    dst_task: TaskId,
    src_core: CoreId,
    dst_core: CoreId,
    g: &TaskGraph,
    p: &Platform,
) -> Result<Time> {
    if !g.has_edge(src_task, dst_task) {
        return Err(Error::MissingEdge {
            src: src_task,
            dst: dst_task,
        });
    }
    if src_core == dst_core {
        return Ok(0.0);
    }
    Ok(p.startup(src_core) + g.data_volume(src_task, dst_task) / p.transfer_rate(src_core, dst_core))
}

/// Earliest finish time given an earliest start time.
pub fn eft(g: &TaskGraph, task: TaskId, core: CoreId, est_value: Time) -> Time {
    g.exec_time(task, core) + est_value
}

/// Incremental schedule state: one scalar ready time per core plus the
/// timings recorded so far. Placement is non-preemptive and in-order; there
/// is no insertion-based backfilling.
#[derive(Debug, Clone)]
pub struct ScheduleState {
    avail: Vec<Time>,
    timings: Vec<Option<TaskTiming>>,
}

impl ScheduleState {
    pub fn new(g: &TaskGraph, p: &Platform) -> Self {
        Self {
            avail: vec![0.0; p.num_cores()],
            timings: vec![None; g.num_tasks()],
        }
    }

    pub fn avail(&self, core: CoreId) -> Time {
        self.avail[core]
    }

    pub fn timing(&self, task: TaskId) -> Option<&TaskTiming> {
        self.timings[task].as_ref()
    }

    /// Largest recorded predecessor finish time, ignoring communication.
    /// Zero for entry tasks. Used by allocators to test core idleness, since
    /// the full ready time depends on the candidate core.
    pub fn pred_finish_floor(&self, task: TaskId, g: &TaskGraph) -> Result<Time> {
        let mut floor = 0.0f64;
        for &pred in g.preds(task) {
            let t = self.timings[pred]
                .as_ref()
                .ok_or(Error::UnscheduledPredecessor { task, pred })?;
            floor = floor.max(t.aft);
        }
        Ok(floor)
    }

    /// Time at which all data required by `task` is available on `core`:
    /// the maximum over predecessors of their finish time plus the edge
    /// communication time. Zero for entry tasks.
    pub fn data_ready(&self, task: TaskId, core: CoreId, g: &TaskGraph, p: &Platform) -> Result<Time> {
        let mut ready = 0.0f64;
        for &pred in g.preds(task) {
            let t = self.timings[pred]
                .as_ref()
                .ok_or(Error::UnscheduledPredecessor { task, pred })?;
            ready = ready.max(t.aft + comm_time(pred, task, t.core, core, g, p)?);
        }
        Ok(ready)
    }

    /// Earliest start time of `task` on `core`: zero for a fresh entry task,
    /// otherwise the later of the core's ready time and the data-ready time.
    pub fn est(&self, task: TaskId, core: CoreId, g: &TaskGraph, p: &Platform) -> Result<Time> {
        Ok(self.avail[core].max(self.data_ready(task, core, g, p)?))
    }

    /// Schedules `task` on `core`, fixing its actual times to the earliest
    /// times and advancing the core's availability.
    pub fn place(&mut self, task: TaskId, core: CoreId, g: &TaskGraph, p: &Platform) -> Result<TaskTiming> {
        let theta = g.exec_time(task, core);
        if theta <= 0.0 {
            return Err(Error::InvalidAllocation(format!(
                "task {task} placed on core {core} where its execution time is zero"
            )));
        }
        if self.timings[task].is_some() {
            return Err(Error::InvalidAllocation(format!("task {task} scheduled twice")));
        }
        let est = self.est(task, core, g, p)?;
        let eft = eft(g, task, core, est);
        let timing = TaskTiming {
            task,
            core,
            est,
            eft,
            ast: est,
            aft: eft,
        };
        self.timings[task] = Some(timing);
        self.avail[core] = eft;
        Ok(timing)
    }

    pub fn is_complete(&self) -> bool {
        self.timings.iter().all(|t| t.is_some())
    }

    /// Completion time of the last exit task.
    pub fn makespan(&self, g: &TaskGraph) -> Time {
        g.exit_tasks()
            .iter()
            .filter_map(|&t| self.timings[t].map(|tt| tt.aft))
            .fold(0.0, f64::max)
    }

    /// All timings, indexed by task. Panics if the schedule is incomplete.
    pub fn into_timings(self) -> Vec<TaskTiming> {
        self.timings
            .into_iter()
            .map(|t| t.expect("schedule incomplete"))
            .collect()
    }
}
