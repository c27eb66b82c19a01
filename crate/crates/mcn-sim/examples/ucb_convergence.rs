//! The arm-selection policy on a synthetic 16-armed bandit with Gaussian
//! costs: watch the pseudo-regret grow sublinearly and the best arm absorb
//! an ever larger share of the plays.
//!
//! ```text
//! cargo run -p mcn-sim --example ucb_convergence
//! ```

use mcn_sim::BanditState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    // Arm k costs 1.0 + 0.3k on average; arm 0 is best.
    let mean_cost: Vec<f64> = (0..16).map(|k| 1.0 + 0.3 * k as f64).collect();
    let noise = 0.5;
    let plays = 10_000;
    let seed = 42;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ucb = BanditState::new(mean_cost.len(), 2.0, seed);
    let mut uniform_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);

    let mut ucb_regret = 0.0;
    let mut uniform_regret = 0.0;
    let mut best_pulls = 0u64;
    println!("{:>6} {:>12} {:>14} {:>10}", "plays", "ucb regret", "uniform regret", "best-arm %");
    for n in 1..=plays {
        let arm = ucb.select_arm();
        let cost = Normal::new(mean_cost[arm], noise).unwrap().sample(&mut rng);
        ucb.record_reward(arm, -cost).unwrap();
        ucb_regret += mean_cost[arm] - mean_cost[0];
        if arm == 0 {
            best_pulls += 1;
        }

        let u: usize = uniform_rng.random_range(0..mean_cost.len());
        uniform_regret += mean_cost[u] - mean_cost[0];

        if [100, 500, 1000, 2500, 5000, 10_000].contains(&n) {
            println!(
                "{n:>6} {ucb_regret:>12.1} {uniform_regret:>14.1} {:>9.1}%",
                100.0 * best_pulls as f64 / n as f64
            );
        }
    }

    println!("\nper-arm statistics after {plays} plays:");
    for arm in 0..4 {
        println!(
            "  arm {arm}: {} pulls, mean reward {:.3}, index {:.3}",
            ucb.pulls(arm),
            ucb.mean_reward(arm),
            ucb.ucb_index(arm)
        );
    }
    println!("  ... (worse arms get only a handful of pulls)");
}
