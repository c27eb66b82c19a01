//! A small experiment grid end to end: two workload shapes, all four
//! strategies, a handful of seeds, CSV artifacts, and the summary table.
//!
//! ```text
//! cargo run -p mcn-sim --example sweep_experiment
//! ```

use mcn_sim::bench::ExperimentPlan;
use mcn_sim::io::write_experiment;
use mcn_sim::{run_experiment, MabOptions, Platform, RewardWeights, Strategy, WorkloadSpec};

fn main() {
    let p = Platform::uniform((2, 2), 8, 480.0, 2.0, 0.5, 0.1, 10.0);
    let workloads = vec![
        ("pipe".to_string(), WorkloadSpec::pipeline(4, 3)),
        ("layered".to_string(), WorkloadSpec::layered_random(24, 3, 3)),
    ];
    let seeds: Vec<u64> = (0..5).collect();
    let plan = ExperimentPlan {
        workloads: &workloads,
        strategies: &Strategy::ALL,
        platform: &p,
        weights: RewardWeights::default(),
        mab: MabOptions {
            iterations: 100,
            explore_prob: 0.2,
            ..Default::default()
        },
        seeds: &seeds,
        threads: Some(4),
    };

    let (result, error) = run_experiment(&plan);
    if let Some(e) = error {
        eprintln!("grid failed: {e}");
        std::process::exit(1);
    }
    println!("{} raw rows, {} regret traces", result.raw.len(), result.regret.len());
    println!(
        "{:<8} {:<8} {:>9} {:>9} {:>8}",
        "workload", "strategy", "makespan", "vs rand", "%power"
    );
    for s in &result.summary {
        println!(
            "{:<8} {:<8} {:>9.2} {:>9.3} {:>8.2}",
            s.workload,
            s.strategy.name(),
            s.mean_makespan,
            s.norm_makespan.unwrap_or(f64::NAN),
            s.power_reduced_pct.unwrap_or(f64::NAN)
        );
    }

    let out = std::env::temp_dir().join("mcn-sim-sweep-example");
    let written = write_experiment(&out, &result).unwrap();
    println!("\nwrote {} files under {}", written.len(), out.display());
}
