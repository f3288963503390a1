//! Solver-free reference equilibria.
//!
//! * [`two_slot_cournot`]: closed form for identical, cost-free, lossless
//!   investors on a two-slot day with equal slopes.
//! * [`brute_force_oracle`]: exhaustive grid search with iterated best
//!   responses for at most two lossless investors on one two-slot scenario.

use thiserror::Error;

use crate::model::GameInstance;

/// Symmetric equilibrium of N identical free investors cycling once per day
/// between a cheap and an expensive slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CournotClosedForm {
    pub per_investor_discharge: f64,
    pub per_investor_profit: f64,
    pub total_discharge: f64,
}

/// Each investor discharges `q` in the expensive slot and charges `q` in the
/// cheap one; its profit is `q (spread - 2 a Q)` with `Q = N q`, giving
/// `q = spread / (2a (N + 1))` at the symmetric first-order condition.
pub fn two_slot_cournot(price_spread: f64, slope: f64, investors: usize) -> CournotClosedForm {
    let n = investors as f64;
    let q = price_spread / (2.0 * slope * (n + 1.0));
    CournotClosedForm {
        per_investor_discharge: q,
        per_investor_profit: q * (price_spread - 2.0 * slope * n * q),
        total_discharge: n * q,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance outside the oracle's scope: {0}")]
    Unsupported(String),
    #[error("grid step must be positive")]
    BadStep,
    #[error("discrete best responses cycle through {0:?}")]
    NoFixedPoint(Vec<Vec<i64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    /// Net discharge per investor for slots 0 and 1.
    pub net_discharge: Vec<[f64; 2]>,
    pub profits: Vec<f64>,
    /// Best-response rounds until the fixed point.
    pub rounds: usize,
}

struct Params {
    baseline: [f64; 2],
    slope: [f64; 2],
    /// Per unit of cycled energy: throughput cost plus daily capital cost of
    /// one MWh and one MW.
    unit_cost: Vec<f64>,
}

impl Params {
    /// Profit of an investor discharging `own` in slot 1 (and charging it in
    /// slot 0) while rivals discharge `rivals` in total.
    fn profit(&self, i: usize, own: f64, rivals: f64) -> f64 {
        let total = own + rivals;
        let price0 = self.baseline[0] + self.slope[0] * total;
        let price1 = self.baseline[1] - self.slope[1] * total;
        -own * price0 + own * price1 - self.unit_cost[i] * own.abs()
    }
}

fn params(instance: &GameInstance) -> Result<Params, OracleError> {
    let unsupported = |m: &str| Err(OracleError::Unsupported(m.to_string()));
    if instance.investor_count() > 2 {
        return unsupported("more than two investors");
    }
    if instance.scenarios().len() != 1 || instance.slots() != 2 {
        return unsupported("needs exactly one scenario with two slots");
    }
    let mut unit_cost = Vec::new();
    for spec in instance.investors() {
        if spec.charge_efficiency != 1.0 || spec.discharge_efficiency != 1.0 {
            return unsupported("storage must be lossless");
        }
        if spec.min_duration > 1.0 || spec.max_duration < 1.0 {
            return unsupported("duration bounds must admit one hour");
        }
        unit_cost.push(
            spec.charge_cost
                + spec.discharge_cost
                + spec.cost_scale() * (spec.capacity_cost + spec.power_cost),
        );
    }
    let s = &instance.scenarios().scenarios()[0];
    Ok(Params {
        baseline: [s.baseline[0], s.baseline[1]],
        slope: [s.slope[0], s.slope[1]],
        unit_cost,
    })
}

/// Grid-searched equilibrium. With lossless storage and periodic energy, an
/// investor's dispatch is one number `z`: charge `z` in slot 0 and discharge
/// it in slot 1 (negative `z` runs the cycle backwards), sized at
/// `S = P = |z|`.
pub fn brute_force_oracle(
    instance: &GameInstance,
    grid_step: f64,
) -> Result<OracleSolution, OracleError> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(OracleError::BadStep);
    }
    let p = params(instance)?;
    let n = instance.investor_count();
    let reach = (p.baseline[1] - p.baseline[0]).abs() / (p.slope[0] + p.slope[1]);
    let k_max = (reach / grid_step).ceil() as i64 + 1;
    let value = |i: usize, k: i64, ks: &[i64]| {
        let rivals: i64 = ks
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, k)| k)
            .sum();
        p.profit(i, k as f64 * grid_step, rivals as f64 * grid_step)
    };

    let mut ks = vec![0i64; n];
    let mut seen: Vec<Vec<i64>> = vec![ks.clone()];
    for round in 1..=10_000 {
        let mut changed = false;
        for i in 0..n {
            let current = value(i, ks[i], &ks);
            let (mut best_k, mut best_v) = (ks[i], current);
            for k in -k_max..=k_max {
                let v = value(i, k, &ks);
                if v > best_v + 1e-12 * best_v.abs().max(1.0) {
                    best_k = k;
                    best_v = v;
                }
            }
            if best_k != ks[i] {
                ks[i] = best_k;
                changed = true;
            }
        }
        if !changed {
            let net_discharge = ks
                .iter()
                .map(|&k| {
                    let z = k as f64 * grid_step;
                    [-z, z]
                })
                .collect();
            let profits = (0..n).map(|i| value(i, ks[i], &ks)).collect();
            return Ok(OracleSolution {
                net_discharge,
                profits,
                rounds: round,
            });
        }
        if let Some(start) = seen.iter().position(|s| *s == ks) {
            return Err(OracleError::NoFixedPoint(seen[start..].to_vec()));
        }
        seen.push(ks.clone());
    }
    Err(OracleError::NoFixedPoint(seen))
}
