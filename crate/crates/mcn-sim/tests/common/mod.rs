//! Shared oracles and instance generators for the integration tests.
//!
//! The oracles deliberately re-derive results along different code paths
//! than the implementation: the makespan oracle is a memoized backward
//! recursion over the schedule graph (the engine schedules forward), and
//! the assignment-cost oracle assembles the composite cost from the public
//! primitives, which also backs the exhaustive brute-force enumerator.

#![allow(dead_code)]

use std::collections::HashMap;

use mcn_sim::appmodel::{comm_time, topological_order, ScheduleState, TaskGraph};
use mcn_sim::costs::{power_draw, resource_cost, RewardWeights};
use mcn_sim::platform::{Platform, PowerParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Finish times by memoized recursion over DAG edges plus per-core
/// sequence edges; returns the makespan over exit tasks.
pub fn recursive_makespan(g: &TaskGraph, p: &Platform, assignments: &[(usize, usize)]) -> f64 {
    let mut core_of = vec![usize::MAX; g.num_tasks()];
    let mut prev_on_core = vec![None; g.num_tasks()];
    let mut last: HashMap<usize, usize> = HashMap::new();
    for &(t, k) in assignments {
        core_of[t] = k;
        prev_on_core[t] = last.get(&k).copied();
        last.insert(k, t);
    }

    fn finish(
        t: usize,
        g: &TaskGraph,
        p: &Platform,
        core_of: &[usize],
        prev_on_core: &[Option<usize>],
        memo: &mut Vec<Option<f64>>,
    ) -> f64 {
        if let Some(v) = memo[t] {
            return v;
        }
        let k = core_of[t];
        let mut ready = 0.0f64;
        for &pr in g.preds(t) {
            let f = finish(pr, g, p, core_of, prev_on_core, memo);
            ready = ready.max(f + comm_time(pr, t, core_of[pr], k, g, p).unwrap());
        }
        if let Some(prev) = prev_on_core[t] {
            ready = ready.max(finish(prev, g, p, core_of, prev_on_core, memo));
        }
        let v = ready + g.exec_time(t, k);
        memo[t] = Some(v);
        v
    }

    let mut memo = vec![None; g.num_tasks()];
    g.exit_tasks()
        .iter()
        .map(|&t| finish(t, g, p, &core_of, &prev_on_core, &mut memo))
        .fold(0.0, f64::max)
}

/// Total composite cost of a full assignment, replayed in `topo` order and
/// assembled from the public cost primitives.
pub fn assignment_cost(
    g: &TaskGraph,
    p: &Platform,
    w: &RewardWeights,
    topo: &[usize],
    core_of: &[usize],
) -> f64 {
    let mut st = ScheduleState::new(g, p);
    let mut total = 0.0;
    for &t in topo {
        let k = core_of[t];
        let ready = st.data_ready(t, k, g, p).unwrap();
        let active = st.avail(k) > ready;
        let est = st.avail(k).max(ready);
        let eft = est + g.exec_time(t, k);
        let comms: Vec<f64> = g
            .preds(t)
            .iter()
            .map(|&pr| comm_time(pr, t, st.timing(pr).unwrap().core, k, g, p).unwrap())
            .collect();
        let psi_c = resource_cost(k, eft, &comms, p);
        let psi_p = power_draw(p.power(), active);
        total += w.h1 * eft + w.h2 * psi_c + w.h3 * psi_p;
        st.place(t, k, g, p).unwrap();
    }
    total
}

/// Exhaustive minimum composite cost over all `N^Q` assignments that place
/// every task on a core it can run on.
pub fn brute_force_best_cost(g: &TaskGraph, p: &Platform, w: &RewardWeights) -> (f64, Vec<usize>) {
    let topo = topological_order(g).unwrap();
    let q = g.num_tasks();
    let n = g.num_cores();
    let mut assignment = vec![0usize; q];
    let mut best = (f64::INFINITY, Vec::new());
    loop {
        if (0..q).all(|t| g.exec_time(t, assignment[t]) > 0.0) {
            let cost = assignment_cost(g, p, w, &topo, &assignment);
            if cost < best.0 {
                best = (cost, assignment.clone());
            }
        }
        let mut i = 0;
        loop {
            assignment[i] += 1;
            if assignment[i] < n {
                break;
            }
            assignment[i] = 0;
            i += 1;
            if i == q {
                return best;
            }
        }
    }
}

/// Random DAG over `q` tasks with forward edges of probability `edge_prob`
/// and execution times in `theta` range.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    q: usize,
    n: usize,
    edge_prob: f64,
    theta: (f64, f64),
    max_bytes: f64,
) -> TaskGraph {
    let mut edges = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            if rng.random_range(0.0..1.0) < edge_prob {
                edges.push((i, j, rng.random_range(0.0..=max_bytes)));
            }
        }
    }
    let exec: Vec<Vec<f64>> = (0..q)
        .map(|_| (0..n).map(|_| rng.random_range(theta.0..=theta.1)).collect())
        .collect();
    TaskGraph::new(q, edges, exec).unwrap()
}

/// Single-node platform with randomized per-core rates, for the exhaustive
/// cost instances.
pub fn random_small_platform(rng: &mut ChaCha8Rng, n: usize) -> Platform {
    let rate = rng.random_range(5.0..=50.0);
    let startup: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=3.0)).collect();
    let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=1.0)).collect();
    Platform::new(
        (1, 1),
        n,
        4,
        vec![vec![rate; n]; n],
        startup,
        eta,
        0.1,
        10.0,
        PowerParams::default(),
        1.0,
    )
    .unwrap()
}

/// Multi-node platform with randomized shape, for engine validity runs.
pub fn random_mesh_platform(rng: &mut ChaCha8Rng) -> Platform {
    let rows = rng.random_range(1..=3);
    let cols = rng.random_range(1..=3);
    let cpn = rng.random_range(1..=4);
    let n = rows * cols * cpn;
    let rate = rng.random_range(10.0..=200.0);
    let startup: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=4.0)).collect();
    let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=1.2)).collect();
    Platform::new(
        (rows, cols),
        cpn,
        4,
        vec![vec![rate; n]; n],
        startup,
        eta,
        rng.random_range(0.0..=0.3),
        rng.random_range(1.0..=15.0),
        PowerParams::default(),
        1.0,
    )
    .unwrap()
}

/// Random small instance for exhaustive-search comparisons: Q <= 6, N <= 3.
/// Execution times follow the artifact's heterogeneity model: a base time
/// per task divided by a speed factor per core.
pub fn random_small_instance(rng: &mut ChaCha8Rng) -> (TaskGraph, Platform) {
    let q = rng.random_range(3..=6);
    let n = rng.random_range(2..=3);
    let mut edges = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            if rng.random_range(0.0..1.0) < 0.4 {
                edges.push((i, j, rng.random_range(0.0..=200.0)));
            }
        }
    }
    let het = rng.random_range(1.0..=3.0);
    let speeds: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=het)).collect();
    let exec: Vec<Vec<f64>> = (0..q)
        .map(|_| {
            let base = rng.random_range(1.0..=10.0);
            speeds.iter().map(|s| base / s).collect()
        })
        .collect();
    let g = TaskGraph::new(q, edges, exec).unwrap();
    let p = random_small_platform(rng, n);
    (g, p)
}
