//! Task allocation on a memory-centric network of near-memory cores.
//!
//! A memory-centric network is a mesh of 3D-stacked memory nodes, each
//! carrying a group of simple processing cores. Applications arrive as task
//! DAGs with per-core execution times and per-edge data volumes; the
//! problem is mapping each task to a core so that execution time, resource
//! cost, and power stay low.
//!
//! The crate provides:
//!
//! - [`appmodel`]: the DAG, schedule timing (start/finish equations), and
//!   communication times,
//! - [`platform`]: the mesh, per-core rates, XY packet routing, and the
//!   power parameters,
//! - [`costs`]: the composite cost of a placement and its negated reward,
//! - [`bandit`]: UCB arm selection and the iterative regret-optimizing
//!   allocation loop,
//! - [`allocators`]: `random`, `grouped`, `greedy`, and `mab` behind one
//!   output shape,
//! - [`engine`]: replay of an allocation into makespan, utilization, packet
//!   latency, and energy, plus cross-strategy comparison,
//! - [`bench`]: synthetic workload generators and the sweep runner,
//! - [`io`]: versioned file formats and CSV emission,
//! - [`cli`]: the `mcn-sim` command-line front end.
//!
//! Everything is deterministic given explicit seeds. Start with the
//! `examples/` directory; each example exercises one capability end to end.

pub mod allocators;
pub mod appmodel;
pub mod bandit;
pub mod bench;
pub mod cli;
pub mod costs;
pub mod engine;
pub mod error;
pub mod io;
pub mod platform;

pub use allocators::{
    allocate, allocate_greedy, allocate_grouped, allocate_mab, allocate_random, derive_affinity,
    AffinityMap, Allocation, Strategy,
};
pub use appmodel::{comm_time, eft, topological_order, ScheduleState, TaskGraph, TaskId, TaskTiming, Time};
pub use bandit::{
    regret, run_regret_optimization, BanditScope, BanditState, IndexForm, MabOptions, RegretLedger,
};
pub use bench::{generate, granularity, run_experiment, ExperimentPlan, WorkloadKind, WorkloadSpec};
pub use costs::{power_draw, resource_cost, reward, CostBreakdown, RewardWeights};
pub use engine::{compare, execute, ComparisonTable, MessageEvent, RunReport, TimeScale};
pub use error::{Error, Result};
pub use platform::{CoreId, Link, LinkDelays, NodeCoord, Platform, PowerParams};
