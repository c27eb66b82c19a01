//! The full regret-optimizing allocation loop on a small workload: per-
//! iteration pseudo-regret, the held best, and the sequence it settles on.
//!
//! ```text
//! cargo run -p mcn-sim --example regret_trace
//! ```

use mcn_sim::{
    derive_affinity, generate, run_regret_optimization, MabOptions, Platform, RewardWeights,
    WorkloadSpec,
};

fn main() {
    let p = Platform::uniform((1, 2), 4, 100.0, 1.0, 0.5, 0.1, 10.0);
    let spec = WorkloadSpec::layered_random(12, 3, 7);
    let g = generate(&spec, &p).unwrap();
    let _affinity = derive_affinity(&g, &p).unwrap(); // only per-node scope needs it

    let opts = MabOptions {
        sigma: 2.0,
        iterations: 60,
        seed: 1,
        ..Default::default()
    };
    let (alloc, ledger) =
        run_regret_optimization(&g, &p, &RewardWeights::default(), &opts, None).unwrap();

    println!("iteration  regret      best");
    for (i, (delta, best)) in ledger
        .per_iteration_regret
        .iter()
        .zip(&ledger.best_regret_trace)
        .enumerate()
    {
        if i < 10 || (i + 1) % 10 == 0 {
            println!("{:>9}  {delta:>9.3}  {best:>8.3}", i + 1);
        }
    }
    println!("\nfinal best regret: {:.3}", ledger.best_regret);
    println!("best sequence (task -> core): {:?}", alloc.assignments);
    println!(
        "its makespan: {}",
        alloc.timings.iter().map(|t| t.aft).fold(0.0, f64::max)
    );
}
