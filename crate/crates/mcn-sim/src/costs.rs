//! Cost and reward model.
//!
//! Placing a task on a core is scored by three components: the finish time,
//! the resource cost (computation-time rate plus communication rate), and
//! the instantaneous power draw of the core. The composite is a weighted sum
//! with weights `h1, h2, h3`; the reward handed to the bandit is its
//! negation, so maximizing reward minimizes cost. Energy accounting
//! (watts x busy time) lives in the engine's report, not here.

use crate::appmodel::Time;
use crate::error::{Error, Result};
use crate::platform::{CoreId, Platform, PowerParams};

/// Non-negative weights of the composite cost; at least one must be positive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RewardWeights {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl RewardWeights {
    pub fn new(h1: f64, h2: f64, h3: f64) -> Result<Self> {
        let w = Self { h1, h2, h3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.h1, self.h2, self.h3];
        if all.iter().any(|v| *v < 0.0 || !v.is_finite()) || all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidWeights);
        }
        Ok(())
    }
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            h1: 1.0,
            h2: 0.5,
            h3: 0.5,
        }
    }
}

/// The three cost components of one placement and their weighted total.
/// `total` is the positive composite cost; the bandit reward is `-total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub eft_cost: Time,
    pub resource_cost: f64,
    pub power_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(eft_cost: Time, resource_cost: f64, power_cost: f64, w: &RewardWeights) -> Self {
        Self {
            eft_cost,
            resource_cost,
            power_cost,
            total: w.h1 * eft_cost + w.h2 * resource_cost + w.h3 * power_cost,
        }
    }

    pub fn reward(&self) -> f64 {
        -self.total
    }
}

/// Computation-plus-communication resource cost of running a task on `core`:
/// finish time times the core's cost rate, plus the communication rate times
/// the summed predecessor communication times.
pub fn resource_cost(core: CoreId, eft_value: Time, pred_comms: &[Time], p: &Platform) -> f64 {
    eft_value * p.comp_cost_rate(core) + p.comm_cost_rate() * pred_comms.iter().sum::<f64>()
}

/// Instantaneous power draw in watts: the static term always, plus the
/// dynamic term when the core is active.
pub fn power_draw(params: &PowerParams, active: bool) -> f64 {
    params.static_power() + if active { params.dynamic_power() } else { 0.0 }
}

/// Negated composite cost of a placement; the bandit maximizes this.
pub fn reward(eft_value: Time, resource: f64, power: f64, w: &RewardWeights) -> f64 {
    CostBreakdown::new(eft_value, resource, power, w).reward()
}
