//! The composite cost of a placement: finish time, resource cost, power,
//! and the negated reward the bandit maximizes.
//!
//! ```text
//! cargo run -p mcn-sim --example cost_model
//! ```

use mcn_sim::{power_draw, resource_cost, CostBreakdown, Platform, PowerParams, RewardWeights};

fn main() {
    let p = Platform::uniform((1, 1), 2, 25.0, 5.0, 0.5, 0.1, 10.0);
    let params = PowerParams::default();

    println!("power parameters: {params:?}");
    println!("  static draw (always):  {:.3} W", power_draw(&params, false));
    println!("  active draw (running): {:.3} W", power_draw(&params, true));

    // A task finishing at t = 20 with two predecessor transfers.
    let eft = 20.0;
    let comms = [3.0, 4.0];
    let psi_c = resource_cost(0, eft, &comms, &p);
    let psi_p = power_draw(&params, true);
    println!("finish time {eft}, resource cost {psi_c}, power cost {psi_p}");

    let w = RewardWeights::default();
    let breakdown = CostBreakdown::new(eft, psi_c, psi_p, &w);
    println!(
        "weights (h1, h2, h3) = ({}, {}, {})",
        w.h1, w.h2, w.h3
    );
    println!("composite cost: {:.4}", breakdown.total);
    println!("bandit reward:  {:.4}", breakdown.reward());

    // Scaling all weights together rescales the reward but never changes
    // which core wins an argmax.
    let scaled = RewardWeights::new(2.0 * w.h1, 2.0 * w.h2, 2.0 * w.h3).unwrap();
    let b2 = CostBreakdown::new(eft, psi_c, psi_p, &scaled);
    println!("doubled weights double the cost: {:.4}", b2.total);
}
