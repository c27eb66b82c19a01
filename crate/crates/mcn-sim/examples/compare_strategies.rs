//! Run all four allocation strategies on one workload and print the
//! random-normalized comparison table (ratios below 1.0 are improvements).
//!
//! ```text
//! cargo run -p mcn-sim --example compare_strategies
//! ```

use std::collections::BTreeMap;

use mcn_sim::{
    allocate, compare, derive_affinity, execute, generate, MabOptions, Platform, RewardWeights,
    Strategy, WorkloadSpec,
};

fn main() {
    let p = Platform::uniform((2, 2), 16, 480.0, 2.0, 0.5, 0.1, 10.0);
    let mut spec = WorkloadSpec::layered_random(64, 3, 17);
    spec.heterogeneity_factor = 6.0;
    spec.data_volume_scale = 4096.0;
    let g = generate(&spec, &p).unwrap();
    let affinity = derive_affinity(&g, &p).unwrap();

    let w = RewardWeights::default();
    let opts = MabOptions {
        sigma: 2.0,
        iterations: 400,
        explore_prob: 0.2,
        ..Default::default()
    };

    let mut reports = BTreeMap::new();
    for strategy in Strategy::ALL {
        let (alloc, ledger) = allocate(strategy, &g, &p, &w, &opts, 1, Some(&affinity)).unwrap();
        let mut report = execute(&alloc, &g, &p).unwrap();
        report.regret_trace = ledger;
        println!(
            "{:<8} makespan {:>7.1}  avg latency {:>6.2}  energy {:>8.1}",
            strategy.name(),
            report.makespan,
            report.avg_packet_latency,
            report.total_energy
        );
        reports.insert(strategy.name().to_string(), report);
    }

    println!("\nnormalized to the random strategy:");
    print!("{}", compare(&reports).unwrap());
}
