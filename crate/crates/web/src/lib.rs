//! Browser bindings: each export takes plain numbers and returns a JSON
//! string for the page script to plot.

use serde::Serialize;
use storage_game::equilibrium::{oracle::two_slot_cournot, solve_certified, EquilibriumReport};
use storage_game::market_data::{Scenario, ScenarioSet};
use storage_game::model::{GameInstance, InvestorSpec};
use storage_game::solver::SolveSettings;
use storage_game::sweep::{
    efficiency_game, efficiency_metrics, investor_count_point, EfficiencyMetrics,
    InvestorCountMetrics,
};
use storage_game::synthetic::bundled_scenarios;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct PriceCurve {
    scenario: String,
    baseline: Vec<f64>,
    with_storage: Vec<f64>,
}

#[derive(Serialize)]
struct CournotView {
    investors: usize,
    per_investor_profit: f64,
    closed_form_profit: f64,
    net_discharge: Vec<f64>,
    closed_form_net_discharge: f64,
    prices: PriceCurve,
}

#[derive(Serialize)]
struct SweepPoint {
    investors: usize,
    #[serde(flatten)]
    metrics: InvestorCountMetrics,
}

#[derive(Serialize)]
struct MixView {
    #[serde(flatten)]
    metrics: EfficiencyMetrics,
    prices: Vec<PriceCurve>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn curves(report: &EquilibriumReport) -> Vec<PriceCurve> {
    report
        .prices
        .iter()
        .map(|p| PriceCurve {
            scenario: p.scenario.clone(),
            baseline: p.baseline.clone(),
            with_storage: p.with_storage.clone(),
        })
        .collect()
}

/// All twelve months for `month == 0`, otherwise that month alone.
pub fn scenario_subset(month: u32) -> Result<ScenarioSet, String> {
    let all = bundled_scenarios();
    match month {
        0 => Ok(all),
        1..=12 => {
            let s = all.scenarios()[month as usize - 1].clone();
            ScenarioSet::single(Scenario {
                probability: 1.0,
                ..s
            })
            .map_err(|e| e.to_string())
        }
        _ => Err(format!("month {month} is not in 0..=12")),
    }
}

fn template(capacity_cost_per_kwh: f64, power_cost_per_kw: f64) -> InvestorSpec {
    InvestorSpec {
        capacity_cost: 1000.0 * capacity_cost_per_kwh,
        power_cost: 1000.0 * power_cost_per_kw,
        ..InvestorSpec::reference("inv")
    }
}

/// Two-slot market with free lossless storage, solved next to its closed form.
pub fn cournot_json(
    low_price: f64,
    high_price: f64,
    slope: f64,
    investors: usize,
) -> Result<String, String> {
    if high_price.is_nan()
        || high_price <= low_price
        || slope.is_nan()
        || slope <= 0.0
        || investors == 0
    {
        return Err("need high > low, slope > 0 and at least one investor".into());
    }
    let set = ScenarioSet::single(Scenario::uniform(
        "two-slot",
        vec![low_price, high_price],
        slope,
        1.0,
    ))
    .map_err(err)?;
    let game =
        GameInstance::homogeneous(&InvestorSpec::costless("c"), investors, set).map_err(err)?;
    let report = solve_certified(&game, &SolveSettings::default()).map_err(err)?;
    let closed = two_slot_cournot(high_price - low_price, slope, investors);
    let view = CournotView {
        investors,
        per_investor_profit: report.total_profit / investors as f64,
        closed_form_profit: closed.per_investor_profit,
        net_discharge: report
            .investors
            .iter()
            .map(|o| o.decision.dispatch[0].net_discharge(1))
            .collect(),
        closed_form_net_discharge: closed.per_investor_discharge,
        prices: curves(&report).remove(0),
    };
    serde_json::to_string(&view).map_err(err)
}

/// One certified homogeneous market per investor count in `1..=max_investors`.
pub fn investor_sweep_json(
    max_investors: usize,
    month: u32,
    capacity_cost_per_kwh: f64,
    power_cost_per_kw: f64,
) -> Result<String, String> {
    if max_investors == 0 {
        return Err("empty investor range".into());
    }
    let scenarios = scenario_subset(month)?;
    let spec = template(capacity_cost_per_kwh, power_cost_per_kw);
    spec.validate().map_err(err)?;
    let settings = SolveSettings::default();
    let mut points = Vec::with_capacity(max_investors);
    for n in 1..=max_investors {
        let row = investor_count_point(&spec, &scenarios, n, &settings);
        let metrics = row.outcome.map_err(|e| format!("I = {n}: {e}"))?;
        points.push(SweepPoint {
            investors: n,
            metrics,
        });
    }
    serde_json::to_string(&points).map_err(err)
}

/// One Type-1 and one Type-2 investor against `type3_count` Type-3 investors.
pub fn efficiency_mix_json(
    type3_count: usize,
    eta1: f64,
    eta2: f64,
    eta3: f64,
    month: u32,
) -> Result<String, String> {
    let scenarios = scenario_subset(month)?;
    let base = InvestorSpec::reference("inv");
    let types = [eta1, eta2, eta3].map(|eta| base.clone().with_efficiency(eta));
    for t in &types {
        t.validate().map_err(err)?;
    }
    let game = efficiency_game(&types, type3_count, &scenarios).map_err(err)?;
    let report = solve_certified(&game, &SolveSettings::default()).map_err(err)?;
    serde_json::to_string(&MixView {
        metrics: efficiency_metrics(&report),
        prices: curves(&report),
    })
    .map_err(err)
}

#[wasm_bindgen]
pub fn cournot(
    low_price: f64,
    high_price: f64,
    slope: f64,
    investors: usize,
) -> Result<String, JsError> {
    to_js(cournot_json(low_price, high_price, slope, investors))
}

#[wasm_bindgen]
pub fn investor_sweep(
    max_investors: usize,
    month: u32,
    capacity_cost_per_kwh: f64,
    power_cost_per_kw: f64,
) -> Result<String, JsError> {
    to_js(investor_sweep_json(
        max_investors,
        month,
        capacity_cost_per_kwh,
        power_cost_per_kw,
    ))
}

#[wasm_bindgen]
pub fn efficiency_mix(
    type3_count: usize,
    eta1: f64,
    eta2: f64,
    eta3: f64,
    month: u32,
) -> Result<String, JsError> {
    to_js(efficiency_mix_json(type3_count, eta1, eta2, eta3, month))
}
