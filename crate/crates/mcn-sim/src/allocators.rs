//! The four allocation strategies behind one output shape.
//!
//! All strategies walk the tasks in topological order and record full
//! schedule timings; they differ only in how a core is chosen per task:
//!
//! - `random`: uniform over the cores idle at the task's ready time
//!   (availability-driven, no cost awareness),
//! - `grouped`: the task's data-affinity node only, lowest-id idle core
//!   first, earliest-available core when the whole node is busy,
//! - `greedy`: the core with the least data-ready-plus-execution time,
//!   deliberately blind to core queues (which is what overloads the
//!   best cores),
//! - `mab`: the regret-optimizing bandit loop from [`crate::bandit`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appmodel::{topological_order, ScheduleState, TaskGraph, TaskId, TaskTiming};
use crate::bandit::{run_regret_optimization, MabOptions, RegretLedger};
use crate::costs::RewardWeights;
use crate::error::{Error, Result};
use crate::platform::{CoreId, NodeCoord, Platform};

/// An ordered task-to-core assignment with its schedule timings.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub strategy_name: String,
    /// Placement order, one entry per task.
    pub assignments: Vec<(TaskId, CoreId)>,
    /// Timings indexed by task id.
    pub timings: Vec<TaskTiming>,
}

impl Allocation {
    pub fn core_of(&self, task: TaskId) -> CoreId {
        self.timings[task].core
    }
}

/// Memory node holding each task's dominant data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityMap {
    nodes: Vec<NodeCoord>,
}

impl AffinityMap {
    pub fn new(nodes: Vec<NodeCoord>) -> Self {
        Self { nodes }
    }

    pub fn node_of(&self, task: TaskId) -> Result<NodeCoord> {
        self.nodes.get(task).copied().ok_or_else(|| {
            Error::MissingAffinity(format!("task {task} has no affinity node"))
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeCoord] {
        &self.nodes
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Synthetic data placement: each entry task's output lands on the node its
/// id hashes to, and every other task's dominant data sits where its
/// lowest-id predecessor wrote it. Deterministic in the graph alone.
pub fn derive_affinity(g: &TaskGraph, p: &Platform) -> Result<AffinityMap> {
    let order = topological_order(g)?;
    let mut nodes = vec![NodeCoord { row: 0, col: 0 }; g.num_tasks()];
    for &t in &order {
        nodes[t] = if g.is_entry(t) {
            p.node_at((splitmix64(t as u64) % p.num_nodes() as u64) as usize)
        } else {
            nodes[g.preds(t)[0]]
        };
    }
    Ok(AffinityMap::new(nodes))
}

fn finish(st: ScheduleState, name: &str, seq: Vec<(TaskId, CoreId)>) -> Allocation {
    Allocation {
        strategy_name: name.into(),
        assignments: seq,
        timings: st.into_timings(),
    }
}

fn check_dims(g: &TaskGraph, p: &Platform) -> Result<()> {
    if g.num_cores() != p.num_cores() {
        return Err(Error::InvalidConfig(format!(
            "workload expects {} cores, platform has {}",
            g.num_cores(),
            p.num_cores()
        )));
    }
    Ok(())
}

/// Availability-driven random allocation: each task goes to a core drawn
/// uniformly among the eligible cores idle at its ready time, or among all
/// eligible cores when none is idle. Per-task draws come from independent
/// counter-based streams, so they do not depend on evaluation order.
pub fn allocate_random(g: &TaskGraph, p: &Platform, seed: u64) -> Result<Allocation> {
    check_dims(g, p)?;
    let mut st = ScheduleState::new(g, p);
    let mut seq = Vec::with_capacity(g.num_tasks());
    for &t in &topological_order(g)? {
        let eligible: Vec<CoreId> = g.eligible_cores(t).collect();
        debug_assert!(!eligible.is_empty(), "graph validation guarantees one");
        let floor = st.pred_finish_floor(t, g)?;
        let idle: Vec<CoreId> = eligible.iter().copied().filter(|&k| st.avail(k) <= floor).collect();
        let pool = if idle.is_empty() { &eligible } else { &idle };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64 + 1);
        let core = pool[rng.random_range(0..pool.len())];
        st.place(t, core, g, p)?;
        seq.push((t, core));
    }
    Ok(finish(st, "random", seq))
}

/// Data-affinity allocation: a task never leaves its affinity node. Within
/// the node it takes the lowest-id core idle at the task's ready time, or
/// the earliest-available core when all are busy; cross-node producers are
/// simply paid for through the communication term.
pub fn allocate_grouped(g: &TaskGraph, p: &Platform, affinity: &AffinityMap) -> Result<Allocation> {
    check_dims(g, p)?;
    if affinity.len() < g.num_tasks() {
        return Err(Error::MissingAffinity(format!(
            "affinity map covers {} of {} tasks",
            affinity.len(),
            g.num_tasks()
        )));
    }
    let mut st = ScheduleState::new(g, p);
    let mut seq = Vec::with_capacity(g.num_tasks());
    for &t in &topological_order(g)? {
        let node = affinity.node_of(t)?;
        let eligible: Vec<CoreId> = p.cores_of(node).filter(|&k| g.exec_time(t, k) > 0.0).collect();
        if eligible.is_empty() {
            return Err(Error::NoEligibleCore {
                task: t,
                scope: format!("affinity node ({}, {})", node.row, node.col),
            });
        }
        let floor = st.pred_finish_floor(t, g)?;
        let core = eligible
            .iter()
            .copied()
            .find(|&k| st.avail(k) <= floor)
            .unwrap_or_else(|| {
                // All busy: earliest available, ties to the lowest id.
                eligible
                    .iter()
                    .copied()
                    .min_by(|&a, &b| st.avail(a).partial_cmp(&st.avail(b)).unwrap().then(a.cmp(&b)))
                    .unwrap()
            });
        st.place(t, core, g, p)?;
        seq.push((t, core));
    }
    Ok(finish(st, "grouped", seq))
}

/// Execution-time greedy: picks the core minimizing data-ready time plus
/// execution time, ignoring how long the core's queue already is. Ties go
/// to the lowest core id. The recorded timings do honor core availability,
/// which is exactly what piles work onto the fastest cores.
pub fn allocate_greedy(g: &TaskGraph, p: &Platform) -> Result<Allocation> {
    check_dims(g, p)?;
    let mut st = ScheduleState::new(g, p);
    let mut seq = Vec::with_capacity(g.num_tasks());
    for &t in &topological_order(g)? {
        let mut best: Option<(CoreId, f64)> = None;
        for k in g.eligible_cores(t) {
            let score = st.data_ready(t, k, g, p)? + g.exec_time(t, k);
            match best {
                Some((_, s)) if score >= s => {}
                _ => best = Some((k, score)),
            }
        }
        let (core, _) = best.expect("graph validation guarantees an eligible core");
        st.place(t, core, g, p)?;
        seq.push((t, core));
    }
    Ok(finish(st, "greedy", seq))
}

/// Bandit allocation: the best sequence found by the regret-optimizing loop.
pub fn allocate_mab(
    g: &TaskGraph,
    p: &Platform,
    w: &RewardWeights,
    opts: &MabOptions,
    affinity: Option<&AffinityMap>,
) -> Result<Allocation> {
    run_regret_optimization(g, p, w, opts, affinity).map(|(a, _)| a)
}

/// Strategy selector used by the CLI and the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Grouped,
    Greedy,
    Mab,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Grouped => "grouped",
            Strategy::Greedy => "greedy",
            Strategy::Mab => "mab",
        }
    }

    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::Grouped,
        Strategy::Greedy,
        Strategy::Mab,
    ];
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs one strategy end to end, returning the allocation and, for the
/// bandit, its regret ledger.
pub fn allocate(
    strategy: Strategy,
    g: &TaskGraph,
    p: &Platform,
    w: &RewardWeights,
    opts: &MabOptions,
    seed: u64,
    affinity: Option<&AffinityMap>,
) -> Result<(Allocation, Option<RegretLedger>)> {
    match strategy {
        Strategy::Random => Ok((allocate_random(g, p, seed)?, None)),
        Strategy::Grouped => {
            let map = affinity.ok_or_else(|| {
                Error::MissingAffinity(
                    "strategy 'grouped' needs a task affinity map (workload file field \
                     'affinity' or --derive-affinity)"
                        .into(),
                )
            })?;
            Ok((allocate_grouped(g, p, map)?, None))
        }
        Strategy::Greedy => Ok((allocate_greedy(g, p)?, None)),
        Strategy::Mab => {
            let opts = MabOptions { seed, ..opts.clone() };
            let (a, ledger) = run_regret_optimization(g, p, w, &opts, affinity)?;
            Ok((a, Some(ledger)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appmodel::comm_time;

    fn independent_tasks(q: usize, theta_rows: Vec<Vec<f64>>) -> TaskGraph {
        TaskGraph::new(q, vec![], theta_rows).unwrap()
    }

    #[test]
    fn random_single_core_is_forced() {
        let g = independent_tasks(1, vec![vec![5.0]]);
        let p = Platform::uniform((1, 1), 1, 25.0, 1.0, 0.5, 0.1, 10.0);
        let a = allocate_random(&g, &p, 7).unwrap();
        assert_eq!(a.assignments, vec![(0, 0)]);
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        let g = independent_tasks(12, vec![vec![3.0; 8]; 12]);
        let p = Platform::uniform((1, 2), 4, 100.0, 1.0, 0.5, 0.1, 10.0);
        let a = allocate_random(&g, &p, 99).unwrap();
        let b = allocate_random(&g, &p, 99).unwrap();
        assert_eq!(a.assignments, b.assignments);
        let c = allocate_random(&g, &p, 100).unwrap();
        assert!(a.assignments != c.assignments, "different seed, different draw");
    }

    #[test]
    fn random_spreads_over_idle_cores_first() {
        // 4 independent tasks on 4 cores: each lands on a distinct idle core.
        let g = independent_tasks(4, vec![vec![2.0; 4]; 4]);
        let p = Platform::uniform((1, 1), 4, 100.0, 1.0, 0.5, 0.1, 10.0);
        let a = allocate_random(&g, &p, 3).unwrap();
        let mut cores: Vec<CoreId> = a.assignments.iter().map(|&(_, k)| k).collect();
        cores.sort_unstable();
        assert_eq!(cores, vec![0, 1, 2, 3]);
    }

    #[test]
    fn grouped_stays_on_affinity_node() {
        let g = independent_tasks(40, vec![vec![2.0; 64]; 40]);
        let p = Platform::uniform((2, 2), 16, 100.0, 1.0, 0.5, 0.1, 10.0);
        let map = AffinityMap::new(vec![NodeCoord { row: 0, col: 0 }; 40]);
        let a = allocate_grouped(&g, &p, &map).unwrap();
        assert!(a.assignments.iter().all(|&(_, k)| k < 16), "only cores 0-15 used");
    }

    #[test]
    fn grouped_single_task_takes_first_core_of_node() {
        let g = independent_tasks(1, vec![vec![2.0; 64]]);
        let p = Platform::uniform((2, 2), 16, 100.0, 1.0, 0.5, 0.1, 10.0);
        let map = AffinityMap::new(vec![NodeCoord { row: 1, col: 0 }]);
        let a = allocate_grouped(&g, &p, &map).unwrap();
        assert_eq!(a.assignments, vec![(0, 32)]);
    }

    #[test]
    fn grouped_uses_lowest_idle_ids() {
        let g = independent_tasks(2, vec![vec![2.0; 32]; 2]);
        let p = Platform::uniform((1, 2), 16, 100.0, 1.0, 0.5, 0.1, 10.0);
        let map = AffinityMap::new(vec![NodeCoord { row: 0, col: 0 }; 2]);
        let a = allocate_grouped(&g, &p, &map).unwrap();
        assert_eq!(a.assignments, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn grouped_requires_full_affinity() {
        let g = independent_tasks(2, vec![vec![2.0; 4]; 2]);
        let p = Platform::uniform((1, 1), 4, 100.0, 1.0, 0.5, 0.1, 10.0);
        let map = AffinityMap::new(vec![NodeCoord { row: 0, col: 0 }]);
        assert!(matches!(
            allocate_grouped(&g, &p, &map),
            Err(Error::MissingAffinity(_))
        ));
    }

    #[test]
    fn greedy_piles_onto_the_dominant_core() {
        // Core 1 twice as fast everywhere; independent tasks all land on it.
        let g = independent_tasks(6, vec![vec![4.0, 2.0]; 6]);
        let p = Platform::uniform((1, 1), 2, 100.0, 1.0, 0.5, 0.1, 10.0);
        let a = allocate_greedy(&g, &p).unwrap();
        assert!(a.assignments.iter().all(|&(_, k)| k == 1));
        // The schedule itself still serializes on that core.
        assert_eq!(a.timings[5].aft, 12.0);
    }

    #[test]
    fn greedy_single_task_takes_min_exec_core() {
        let g = independent_tasks(1, vec![vec![4.0, 3.0, 5.0]]);
        let p = Platform::uniform((1, 1), 3, 100.0, 1.0, 0.5, 0.1, 10.0);
        let a = allocate_greedy(&g, &p).unwrap();
        assert_eq!(a.assignments, vec![(0, 1)]);
    }

    #[test]
    fn greedy_colocates_when_comm_dominates() {
        // Chain 0 -> 1. Core 1 is faster for task 1, but the transfer from
        // core 0 costs more than the speed gap, so both placements are
        // enumerated and co-location wins.
        let g = TaskGraph::new(2, vec![(0, 1, 900.0)], vec![vec![2.0, 10.0], vec![10.0, 6.0]]).unwrap();
        let p = Platform::uniform((1, 1), 2, 100.0, 1.0, 0.5, 0.1, 10.0);
        // Task 0 -> core 0 (exec 2). Candidates for task 1:
        //   stay on core 0: ready 2,   eft-score 2 + 10 = 12
        //   move to core 1: ready 2 + (1 + 9) = 12, score 12 + 6 = 18
        let c = comm_time(0, 1, 0, 1, &g, &p).unwrap();
        assert_eq!(c, 10.0);
        let a = allocate_greedy(&g, &p).unwrap();
        assert_eq!(a.assignments, vec![(0, 0), (1, 0)]);
    }

    #[test]
    fn all_strategies_cover_all_tasks_with_valid_timing() {
        let g = TaskGraph::new(
            8,
            vec![(0, 2, 64.0), (1, 2, 64.0), (2, 3, 32.0), (4, 5, 16.0), (3, 6, 8.0), (5, 6, 8.0)],
            vec![vec![3.0, 5.0, 4.0, 6.0]; 8],
        )
        .unwrap();
        let p = Platform::uniform((1, 1), 4, 50.0, 1.0, 0.5, 0.1, 10.0);
        let map = derive_affinity(&g, &p).unwrap();
        let w = RewardWeights::default();
        let opts = MabOptions {
            iterations: 30,
            ..Default::default()
        };
        for strategy in Strategy::ALL {
            let (a, ledger) = allocate(strategy, &g, &p, &w, &opts, 5, Some(&map)).unwrap();
            assert_eq!(a.strategy_name, strategy.name());
            assert_eq!(ledger.is_some(), strategy == Strategy::Mab);
            let mut seen: Vec<TaskId> = a.assignments.iter().map(|&(t, _)| t).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..8).collect::<Vec<_>>());
            for t in g.tasks() {
                let tt = &a.timings[t];
                assert_eq!(tt.aft, tt.ast + g.exec_time(t, tt.core));
                for &pr in g.preds(t) {
                    let pt = &a.timings[pr];
                    let c = comm_time(pr, t, pt.core, tt.core, &g, &p).unwrap();
                    assert!(tt.ast >= pt.aft + c - 1e-12);
                }
            }
        }
    }

    #[test]
    fn greedy_argmin_invariant_under_theta_rescaling() {
        let g = TaskGraph::new(
            5,
            vec![(0, 1, 10.0), (1, 2, 10.0), (0, 3, 10.0)],
            vec![
                vec![3.0, 5.0, 4.0],
                vec![2.0, 5.0, 6.0],
                vec![6.0, 1.0, 4.0],
                vec![2.0, 2.0, 2.0],
                vec![9.0, 3.0, 1.0],
            ],
        )
        .unwrap();
        let p = Platform::uniform((1, 1), 3, 50.0, 0.0, 0.5, 0.1, 10.0);
        let a = allocate_greedy(&g, &p).unwrap();
        // Scale every execution time (and nothing else) by the same factor:
        // with zero startup the ready times scale identically, so the argmin
        // per task is unchanged.
        let scaled_rows: Vec<Vec<f64>> = g
            .tasks()
            .map(|t| (0..3).map(|k| 4.0 * g.exec_time(t, k)).collect())
            .collect();
        let g2 = TaskGraph::new(5, vec![(0, 1, 40.0), (1, 2, 40.0), (0, 3, 40.0)], scaled_rows).unwrap();
        let b = allocate_greedy(&g2, &p).unwrap();
        let cores_a: Vec<CoreId> = a.assignments.iter().map(|&(_, k)| k).collect();
        let cores_b: Vec<CoreId> = b.assignments.iter().map(|&(_, k)| k).collect();
        assert_eq!(cores_a, cores_b);
    }

    #[test]
    fn mab_on_single_core_matches_the_forced_baselines() {
        let g = TaskGraph::new(2, vec![(0, 1, 10.0)], vec![vec![3.0]; 2]).unwrap();
        let p = Platform::uniform((1, 1), 1, 50.0, 1.0, 0.5, 0.1, 10.0);
        let opts = MabOptions {
            iterations: 5,
            ..Default::default()
        };
        let mab = allocate_mab(&g, &p, &RewardWeights::default(), &opts, None).unwrap();
        let random = allocate_random(&g, &p, 3).unwrap();
        let greedy = allocate_greedy(&g, &p).unwrap();
        assert_eq!(mab.assignments, random.assignments);
        assert_eq!(mab.assignments, greedy.assignments);
        assert_eq!(mab.timings, greedy.timings);
    }

    #[test]
    fn mab_spreads_where_greedy_queues() {
        // Six independent tasks; core 1 is twice as fast, so queue-blind
        // greedy stacks everything there. Brute force over all 2^6
        // assignments confirms that spreading is makespan-optimal.
        let g = independent_tasks(6, vec![vec![4.0, 2.0]; 6]);
        let p = Platform::uniform((1, 1), 2, 100.0, 1.0, 0.5, 0.1, 10.0);
        let mut best_makespan = f64::INFINITY;
        for mask in 0..(1u32 << 6) {
            let mut st = ScheduleState::new(&g, &p);
            for t in 0..6 {
                st.place(t, ((mask >> t) & 1) as usize, &g, &p).unwrap();
            }
            best_makespan = best_makespan.min(st.makespan(&g));
        }
        assert_eq!(best_makespan, 8.0, "two slow-core tasks, four fast-core tasks");

        let greedy = allocate_greedy(&g, &p).unwrap();
        let greedy_makespan = greedy.timings.iter().map(|t| t.aft).fold(0.0, f64::max);
        assert_eq!(greedy_makespan, 12.0);

        let opts = MabOptions {
            iterations: 300,
            explore_prob: 0.2,
            ..Default::default()
        };
        let mab = allocate_mab(&g, &p, &RewardWeights::default(), &opts, None).unwrap();
        let mab_makespan = mab.timings.iter().map(|t| t.aft).fold(0.0, f64::max);
        assert!(mab_makespan <= greedy_makespan);
        assert!(mab_makespan <= best_makespan * 1.05, "found {mab_makespan}");
    }

    #[test]
    fn derived_affinity_propagates_from_entries() {
        let g = TaskGraph::new(4, vec![(0, 1, 1.0), (0, 2, 1.0), (2, 3, 1.0)], vec![vec![1.0; 16]; 4]).unwrap();
        let p = Platform::uniform((2, 2), 4, 50.0, 1.0, 0.5, 0.1, 10.0);
        let map = derive_affinity(&g, &p).unwrap();
        let root = map.node_of(0).unwrap();
        for t in 1..4 {
            assert_eq!(map.node_of(t).unwrap(), root);
        }
    }
}
