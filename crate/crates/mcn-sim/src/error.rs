//! Crate-wide error type.
//!
//! Display messages lead with the violated invariant's name so that CLI
//! failures (exit code 1) are self-explanatory on stderr.

use std::path::PathBuf;

use crate::appmodel::TaskId;
use crate::platform::CoreId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("CycleDetected: the edge set contains a cycle, no topological order exists")]
    CycleDetected,

    #[error("MissingEdge: no edge from task {src} to task {dst}")]
    MissingEdge { src: TaskId, dst: TaskId },

    #[error("UnscheduledPredecessor: predecessor {pred} of task {task} has no recorded finish time")]
    UnscheduledPredecessor { task: TaskId, pred: TaskId },

    #[error("CoreOutOfRange: core {core} does not exist on a platform with {num_cores} cores")]
    CoreOutOfRange { core: CoreId, num_cores: usize },

    #[error("ArmOutOfRange: arm {arm} does not exist in a bandit with {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },

    #[error("MissingAffinity: {0}")]
    MissingAffinity(String),

    #[error("MissingBaseline: comparison requires a report for the 'random' strategy")]
    MissingBaseline,

    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),

    #[error("InvalidGraph: {0}")]
    InvalidGraph(String),

    #[error("InvalidPlatform: {0}")]
    InvalidPlatform(String),

    #[error("InvalidWeights: reward weights must be non-negative with h1 + h2 + h3 > 0")]
    InvalidWeights,

    #[error("NoEligibleCore: task {task} has no core with positive execution time in {scope}")]
    NoEligibleCore { task: TaskId, scope: String },

    #[error("InvalidAllocation: {0}")]
    InvalidAllocation(String),

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
