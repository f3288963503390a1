#![allow(dead_code)]

use std::path::PathBuf;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storage_game::market_data::{HourlyRecord, Scenario, ScenarioSet};
use storage_game::model::{DecisionVector, GameInstance, InvestorSpec, ScenarioDispatch};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn toy_scenarios() -> ScenarioSet {
    ScenarioSet::single(Scenario::uniform("toy", vec![20.0, 60.0], 0.1, 1.0)).unwrap()
}

pub fn toy_game(n: usize) -> GameInstance {
    GameInstance::homogeneous(&InvestorSpec::costless("c"), n, toy_scenarios()).unwrap()
}

/// Daily price profile with an evening peak and a midday dip.
pub fn random_scenarios<R: Rng>(rng: &mut R, count: usize, slots: usize) -> ScenarioSet {
    let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let mut scenarios = Vec::with_capacity(count);
    for (w, weight) in weights.iter().enumerate() {
        let level = rng.random_range(25.0..60.0);
        let peak = rng.random_range(10.0..50.0);
        let dip = rng.random_range(0.0..25.0);
        let baseline = (0..slots)
            .map(|t| {
                let h = 24.0 * t as f64 / slots as f64;
                let z_peak = (h - 19.0) / 2.0;
                let z_dip = (h - 13.0) / 3.0;
                level + peak * (-0.5 * z_peak * z_peak).exp() - dip * (-0.5 * z_dip * z_dip).exp()
                    + rng.random_range(-3.0..3.0)
            })
            .collect();
        let slope = if rng.random_bool(0.5) {
            vec![rng.random_range(0.002..0.02); slots]
        } else {
            (0..slots).map(|_| rng.random_range(0.002..0.02)).collect()
        };
        scenarios.push(Scenario {
            id: format!("s{w}"),
            baseline,
            slope,
            probability: weight / total,
        });
    }
    // Rounding can leave the probabilities a few ulps off one.
    let sum: f64 = scenarios.iter().map(|s| s.probability).sum();
    scenarios[0].probability += 1.0 - sum;
    ScenarioSet::new(scenarios).unwrap()
}

pub fn random_spec<R: Rng>(rng: &mut R, id: String) -> InvestorSpec {
    let min_duration = rng.random_range(0.5..2.0);
    InvestorSpec {
        id,
        capacity_cost: rng.random_range(30_000.0..120_000.0),
        power_cost: rng.random_range(50_000.0..250_000.0),
        charge_cost: rng.random_range(0.1..2.0),
        discharge_cost: rng.random_range(0.1..2.0),
        charge_efficiency: rng.random_range(0.85..1.0),
        discharge_efficiency: rng.random_range(0.85..1.0),
        min_duration,
        max_duration: min_duration + rng.random_range(0.5..7.0),
        lifespan_years: rng.random_range(10..=25),
        interest_rate: rng.random_range(0.0..0.08),
        daily_cost_scale: None,
    }
}

pub fn random_game<R: Rng>(
    rng: &mut R,
    investors: usize,
    scenarios: usize,
    slots: usize,
) -> GameInstance {
    let set = random_scenarios(rng, scenarios, slots);
    let specs = (0..investors)
        .map(|i| random_spec(rng, format!("inv{i}")))
        .collect();
    GameInstance::new(specs, set).unwrap()
}

/// Feasible dispatch built from random charge/discharge draws, rebalanced so
/// the energy level returns to its start and scaled to fit power and capacity.
pub fn random_dispatch<R: Rng>(
    rng: &mut R,
    spec: &InvestorSpec,
    capacity: f64,
    power: f64,
    slots: usize,
) -> ScenarioDispatch {
    let (eta_c, eta_d) = (spec.charge_efficiency, spec.discharge_efficiency);
    let mut charge: Vec<f64> = (0..slots).map(|_| rng.random::<f64>().powi(2)).collect();
    let mut discharge: Vec<f64> = (0..slots).map(|_| rng.random::<f64>().powi(2)).collect();
    let stored: f64 = charge.iter().map(|c| eta_c * c).sum();
    let released: f64 = discharge.iter().map(|d| d / eta_d).sum();
    if stored > released {
        charge.iter_mut().for_each(|c| *c *= released / stored);
    } else if released > 0.0 {
        discharge.iter_mut().for_each(|d| *d *= stored / released);
    }
    let mut level = vec![0.0; slots + 1];
    for t in 0..slots {
        level[t + 1] = level[t] + eta_c * charge[t] - discharge[t] / eta_d;
    }
    // Closing the cycle exactly removes the O(ulp) drift from the rescaling.
    level[slots] = 0.0;
    let lo = level.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = level.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let peak_flow = charge.iter().chain(&discharge).copied().fold(0.0, f64::max);
    let mut scale = 1.0_f64;
    if peak_flow > 0.0 {
        scale = scale.min(power / peak_flow);
    }
    if hi - lo > 0.0 {
        scale = scale.min(capacity / (hi - lo));
    }
    scale *= rng.random_range(0.0..=1.0);
    let offset = -scale * lo + rng.random::<f64>() * (capacity - scale * (hi - lo)).max(0.0);
    ScenarioDispatch {
        charge: charge.iter().map(|c| scale * c).collect(),
        discharge: discharge.iter().map(|d| scale * d).collect(),
        energy: level.iter().map(|e| offset + scale * e).collect(),
    }
}

pub fn random_decision<R: Rng>(
    rng: &mut R,
    spec: &InvestorSpec,
    scenarios: usize,
    slots: usize,
) -> DecisionVector {
    let power = rng.random_range(0.0..500.0);
    let capacity = power * rng.random_range(spec.min_duration..=spec.max_duration);
    DecisionVector {
        capacity,
        power,
        dispatch: (0..scenarios)
            .map(|_| random_dispatch(rng, spec, capacity, power, slots))
            .collect(),
    }
}

pub fn random_decisions<R: Rng>(rng: &mut R, game: &GameInstance) -> Vec<DecisionVector> {
    game.investors()
        .iter()
        .map(|spec| random_decision(rng, spec, game.scenarios().len(), game.slots()))
        .collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Representative day by exhaustive scan: complete days only, Euclidean
/// distance to the mean of complete days, earliest date on ties.
pub fn brute_force_pick(records: &[HourlyRecord]) -> (NaiveDate, f64) {
    let mut days: Vec<NaiveDate> = records.iter().map(|r| r.date).collect();
    days.sort();
    days.dedup();
    let complete: Vec<(NaiveDate, Vec<f64>)> = days
        .into_iter()
        .filter_map(|d| {
            let mut profile = vec![f64::NAN; 24];
            for r in records.iter().filter(|r| r.date == d) {
                profile[r.hour as usize] = r.price;
            }
            profile.iter().all(|p| !p.is_nan()).then_some((d, profile))
        })
        .collect();
    let mean: Vec<f64> = (0..24)
        .map(|h| complete.iter().map(|(_, p)| p[h]).sum::<f64>() / complete.len() as f64)
        .collect();
    complete
        .iter()
        .map(|(d, p)| {
            let dist = p
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            (*d, dist)
        })
        .fold(
            None,
            |best: Option<(NaiveDate, f64)>, (d, dist)| match best {
                Some((_, bd)) if bd <= dist => best,
                _ => Some((d, dist)),
            },
        )
        .unwrap()
}
