//! The memory-centric mesh platform.
//!
//! A platform is a `rows x cols` mesh of memory nodes, each hosting
//! `cores_per_node` near-memory cores. Cores are numbered row-major by node,
//! then by slot within the node. Heterogeneity enters through the per-core
//! columns of the execution-time matrix and the per-core cost rates; the
//! platform itself stores no per-core speed.
//!
//! Packet traversal between nodes is dimension-ordered XY routing with a
//! fixed per-hop latency. Intra-node communication never touches the mesh
//! and has zero packet latency.

use std::collections::BTreeMap;

use crate::appmodel::Time;
use crate::error::{Error, Result};

pub type CoreId = usize;

/// Position of a memory node in the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeCoord {
    pub row: usize,
    pub col: usize,
}

/// One directed mesh link between adjacent nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: NodeCoord,
    pub to: NodeCoord,
}

/// Per-link queue delays, as observed or injected for the latency metric.
pub type LinkDelays = BTreeMap<Link, Time>;

/// Per-core electrical parameters of the power model. One set applies to
/// every core; the static term uses a fixed chip temperature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerParams {
    /// Switching factor, in (0, 1].
    pub omega: f64,
    /// Effective switching capacitance (farads).
    pub c_eff: f64,
    /// Supply voltage (volts).
    pub v_s: f64,
    /// Operating frequency (Hz).
    pub freq: f64,
    /// Architecture coefficient of the static term.
    pub alpha: f64,
    /// Architecture coefficient of the static term.
    pub beta: f64,
    /// Chip temperature (kelvin), constant for a run.
    pub temp_k: f64,
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidPlatform("power.omega must be in (0, 1]".into()));
        }
        for (name, v) in [
            ("c_eff", self.c_eff),
            ("v_s", self.v_s),
            ("freq", self.freq),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("temp_k", self.temp_k),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidPlatform(format!(
                    "power.{name} must be strictly positive"
                )));
            }
        }
        Ok(())
    }

    /// Dynamic power: omega * C_eff * V_s^2 * f.
    pub fn dynamic_power(&self) -> f64 {
        self.omega * self.c_eff * self.v_s * self.v_s * self.freq
    }

    /// Static (leakage) power: alpha * T * beta.
    pub fn static_power(&self) -> f64 {
        self.alpha * self.temp_k * self.beta
    }
}

impl Default for PowerParams {
    /// 2 GHz in-order core at 330 K: 1.0 W dynamic, 0.099 W static.
    fn default() -> Self {
        Self {
            omega: 0.5,
            c_eff: 1e-9,
            v_s: 1.0,
            freq: 2e9,
            alpha: 0.01,
            beta: 0.03,
            temp_k: 330.0,
        }
    }
}

/// The mesh of memory nodes and its cost-rate parameters.
#[derive(Debug, Clone)]
pub struct Platform {
    mesh: (usize, usize),
    cores_per_node: usize,
    /// Host CPU core count; informational only.
    cpu_cores: usize,
    /// N x N transfer rates in bytes per time unit, row-major.
    transfer_rate: Vec<f64>,
    /// Communication startup time per source core.
    startup: Vec<f64>,
    /// Computation cost rate per core (eta).
    comp_cost_rate: Vec<f64>,
    /// Communication cost rate (zeta).
    comm_cost_rate: f64,
    hop_latency: Time,
    power: PowerParams,
    /// Reporting scale: femtoseconds per abstract time unit.
    fs_per_unit: f64,
}

impl Platform {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: (usize, usize),
        cores_per_node: usize,
        cpu_cores: usize,
        transfer_rate: Vec<Vec<f64>>,
        startup: Vec<f64>,
        comp_cost_rate: Vec<f64>,
        comm_cost_rate: f64,
        hop_latency: Time,
        power: PowerParams,
        fs_per_unit: f64,
    ) -> Result<Self> {
        let n = mesh.0 * mesh.1 * cores_per_node;
        if n == 0 {
            return Err(Error::InvalidPlatform(
                "mesh dimensions and cores_per_node must be positive".into(),
            ));
        }
        if transfer_rate.len() != n || transfer_rate.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidPlatform(format!(
                "transfer rate matrix must be {n} x {n}"
            )));
        }
        for (i, row) in transfer_rate.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidPlatform(format!(
                        "transfer rate ({i}, {j}) must be strictly positive"
                    )));
                }
                if v != transfer_rate[j][i] {
                    return Err(Error::InvalidPlatform(format!(
                        "transfer rate matrix must be symmetric, differs at ({i}, {j})"
                    )));
                }
            }
        }
        if startup.len() != n {
            return Err(Error::InvalidPlatform(format!("startup vector must have {n} entries")));
        }
        if startup.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidPlatform("startup times must be non-negative".into()));
        }
        if comp_cost_rate.len() != n {
            return Err(Error::InvalidPlatform(format!("eta vector must have {n} entries")));
        }
        if comp_cost_rate.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidPlatform("eta rates must be strictly positive".into()));
        }
        if comm_cost_rate < 0.0 || !comm_cost_rate.is_finite() {
            return Err(Error::InvalidPlatform("zeta_comm must be non-negative".into()));
        }
        // Strictly positive so a mesh hop is never free: inter-node packet
        // latency is zero exactly when no hop is taken.
        if !(hop_latency > 0.0 && hop_latency.is_finite()) {
            return Err(Error::InvalidPlatform("hop_latency must be strictly positive".into()));
        }
        if !(fs_per_unit > 0.0 && fs_per_unit.is_finite()) {
            return Err(Error::InvalidPlatform("fs_per_unit must be strictly positive".into()));
        }
        power.validate()?;
        Ok(Self {
            mesh,
            cores_per_node,
            cpu_cores,
            transfer_rate: transfer_rate.into_iter().flatten().collect(),
            startup,
            comp_cost_rate,
            comm_cost_rate,
            hop_latency,
            power,
            fs_per_unit,
        })
    }

    /// Uniform platform: one transfer rate for every core pair, one startup
    /// time and one eta for every core. Convenient for tests and examples.
    pub fn uniform(
        mesh: (usize, usize),
        cores_per_node: usize,
        rate: f64,
        startup: f64,
        eta: f64,
        zeta_comm: f64,
        hop_latency: Time,
    ) -> Self {
        let n = mesh.0 * mesh.1 * cores_per_node;
        Self::new(
            mesh,
            cores_per_node,
            4,
            vec![vec![rate; n]; n],
            vec![startup; n],
            vec![eta; n],
            zeta_comm,
            hop_latency,
            PowerParams::default(),
            1.0,
        )
        .expect("uniform platform parameters are valid")
    }

    /// Default memory-centric mesh: 4x4 nodes of 16 cores each (256 cores),
    /// aggregate link rate 480 bytes/unit, startup 2, hop latency 10.
    pub fn default_mcn() -> Self {
        Self::uniform((4, 4), 16, 480.0, 2.0, 0.5, 0.1, 10.0)
    }

    pub fn mesh(&self) -> (usize, usize) {
        self.mesh
    }

    pub fn cores_per_node(&self) -> usize {
        self.cores_per_node
    }

    pub fn cpu_cores(&self) -> usize {
        self.cpu_cores
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.0 * self.mesh.1
    }

    pub fn num_cores(&self) -> usize {
        self.num_nodes() * self.cores_per_node
    }

    pub fn transfer_rate(&self, src: CoreId, dst: CoreId) -> f64 {
        self.transfer_rate[src * self.num_cores() + dst]
    }

    pub fn startup(&self, core: CoreId) -> f64 {
        self.startup[core]
    }

    pub fn comp_cost_rate(&self, core: CoreId) -> f64 {
        self.comp_cost_rate[core]
    }

    pub fn comm_cost_rate(&self) -> f64 {
        self.comm_cost_rate
    }

    pub fn hop_latency(&self) -> Time {
        self.hop_latency
    }

    pub fn power(&self) -> &PowerParams {
        &self.power
    }

    pub fn fs_per_unit(&self) -> f64 {
        self.fs_per_unit
    }

    /// Mesh node hosting `core`: nodes are numbered row-major, cores fill
    /// nodes in blocks of `cores_per_node`.
    pub fn node_of(&self, core: CoreId) -> Result<NodeCoord> {
        if core >= self.num_cores() {
            return Err(Error::CoreOutOfRange {
                core,
                num_cores: self.num_cores(),
            });
        }
        let node = core / self.cores_per_node;
        Ok(NodeCoord {
            row: node / self.mesh.1,
            col: node % self.mesh.1,
        })
    }

    /// Node index (row-major) for a coordinate.
    pub fn node_index(&self, node: NodeCoord) -> usize {
        node.row * self.mesh.1 + node.col
    }

    pub fn node_at(&self, index: usize) -> NodeCoord {
        NodeCoord {
            row: index / self.mesh.1,
            col: index % self.mesh.1,
        }
    }

    /// Cores hosted by `node`, in ascending id order.
    pub fn cores_of(&self, node: NodeCoord) -> std::ops::Range<CoreId> {
        let base = self.node_index(node) * self.cores_per_node;
        base..base + self.cores_per_node
    }

    /// Directed links of the XY route from `src` to `dst`: first along the
    /// column (X) dimension, then along rows (Y). Empty for the same node.
    pub fn route(&self, src: NodeCoord, dst: NodeCoord) -> Vec<Link> {
        let mut links = Vec::new();
        let mut at = src;
        while at.col != dst.col {
            let next = NodeCoord {
                row: at.row,
                col: if dst.col > at.col { at.col + 1 } else { at.col - 1 },
            };
            links.push(Link { from: at, to: next });
            at = next;
        }
        while at.row != dst.row {
            let next = NodeCoord {
                row: if dst.row > at.row { at.row + 1 } else { at.row - 1 },
                col: at.col,
            };
            links.push(Link { from: at, to: next });
            at = next;
        }
        links
    }

    /// Mesh traversal latency from `src` to `dst` cores: zero within a node,
    /// otherwise hop latency per traversed link plus any queue delay charged
    /// to those links. Panics if a core id is out of range (precondition).
    pub fn packet_latency(&self, src: CoreId, dst: CoreId, congestion: &LinkDelays) -> Time {
        let a = self.node_of(src).expect("src core in range");
        let b = self.node_of(dst).expect("dst core in range");
        if a == b {
            return 0.0;
        }
        self.route(a, b)
            .iter()
            .map(|l| self.hop_latency + congestion.get(l).copied().unwrap_or(0.0))
            .sum()
    }
}
