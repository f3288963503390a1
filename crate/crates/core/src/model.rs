//! Game primitives: investor technologies, decisions, the linear price
//! function and per-investor daily profit.
//!
//! Slots are zero-based in code: slot `t` in `0..T` is the hour ending at
//! `t + 1`, and energy level `e[t]` for `t` in `0..=T` is the level after `t`
//! slots, so `e[0]` is the initial level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{MarketDataError, Scenario, ScenarioSet};

/// Days per year used to spread an annuity over days.
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("expected {expected} decision vectors, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("investor {id}: {reason}")]
    InvalidInvestor { id: String, reason: String },
    #[error("a game needs at least one investor")]
    NoInvestors,
    #[error("investor index {index} out of range for {count} investors")]
    InvestorIndex { index: usize, count: usize },
    #[error("decision of investor {investor} has the wrong shape: {reason}")]
    DecisionShape { investor: usize, reason: String },
    #[error(transparent)]
    Scenarios(#[from] MarketDataError),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("game JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Capital recovery factor over 365 days: converts an upfront cost into an
/// equivalent uniform daily payment.
pub fn daily_cost_scale(lifespan_years: u32, interest_rate: f64) -> f64 {
    assert!(lifespan_years >= 1, "lifespan must be at least one year");
    assert!(interest_rate >= 0.0, "interest rate must be non-negative");
    let years = f64::from(lifespan_years);
    let crf = if interest_rate == 0.0 {
        1.0 / years
    } else {
        let growth = (1.0 + interest_rate).powf(years);
        interest_rate * growth / (growth - 1.0)
    };
    crf / DAYS_PER_YEAR
}

/// Technology and cost parameters of one investor. Monetary amounts are per
/// MWh of capacity, per MW of power and per MWh of throughput.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestorSpec {
    pub id: String,
    pub capacity_cost: f64,
    pub power_cost: f64,
    pub charge_cost: f64,
    pub discharge_cost: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Lower bound on capacity / power, hours.
    pub min_duration: f64,
    /// Upper bound on capacity / power, hours.
    pub max_duration: f64,
    pub lifespan_years: u32,
    pub interest_rate: f64,
    /// Overrides the annuity-based daily scaling of capital cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub daily_cost_scale: Option<f64>,
}

impl InvestorSpec {
    /// 90 $/kWh and 180 $/kW capital cost over 20 years at 5%, 95% one-way
    /// efficiencies, 1-8 h duration and 0.5 $/MWh throughput cost.
    pub fn reference(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            capacity_cost: 90.0 * 1000.0,
            power_cost: 180.0 * 1000.0,
            charge_cost: 0.5,
            discharge_cost: 0.5,
            charge_efficiency: 0.95,
            discharge_efficiency: 0.95,
            min_duration: 1.0,
            max_duration: 8.0,
            lifespan_years: 20,
            interest_rate: 0.05,
            daily_cost_scale: None,
        }
    }

    /// Free, lossless storage with duration in [0.1, 10] h.
    pub fn costless(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            capacity_cost: 0.0,
            power_cost: 0.0,
            charge_cost: 0.0,
            discharge_cost: 0.0,
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            min_duration: 0.1,
            max_duration: 10.0,
            lifespan_years: 1,
            interest_rate: 0.0,
            daily_cost_scale: None,
        }
    }

    pub fn with_efficiency(mut self, round_trip_leg: f64) -> Self {
        self.charge_efficiency = round_trip_leg;
        self.discharge_efficiency = round_trip_leg;
        self
    }

    pub fn cost_scale(&self) -> f64 {
        self.daily_cost_scale
            .unwrap_or_else(|| daily_cost_scale(self.lifespan_years, self.interest_rate))
    }

    /// Daily capital cost of `capacity` MWh and `power` MW.
    pub fn investment_cost(&self, capacity: f64, power: f64) -> f64 {
        self.cost_scale() * (self.capacity_cost * capacity + self.power_cost * power)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: &str| {
            Err(ModelError::InvalidInvestor {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        let costs = [
            self.capacity_cost,
            self.power_cost,
            self.charge_cost,
            self.discharge_cost,
        ];
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return fail("costs must be finite and non-negative");
        }
        for eta in [self.charge_efficiency, self.discharge_efficiency] {
            if !(eta > 0.0 && eta <= 1.0) {
                return fail("efficiencies must lie in (0, 1]");
            }
        }
        if !(self.min_duration > 0.0 && self.min_duration <= self.max_duration)
            || !self.max_duration.is_finite()
        {
            return fail("durations must satisfy 0 < min <= max");
        }
        if self.lifespan_years < 1 {
            return fail("lifespan must be at least one year");
        }
        if !(self.interest_rate >= 0.0 && self.interest_rate.is_finite()) {
            return fail("interest rate must be non-negative");
        }
        if let Some(k) = self.daily_cost_scale {
            if !(k >= 0.0 && k.is_finite()) {
                return fail("daily cost scale must be non-negative");
            }
        }
        Ok(())
    }
}

/// One investor's operation in one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDispatch {
    /// Charge power per slot (MW), length T.
    pub charge: Vec<f64>,
    /// Discharge power per slot (MW), length T.
    pub discharge: Vec<f64>,
    /// Energy level (MWh), length T + 1.
    pub energy: Vec<f64>,
}

impl ScenarioDispatch {
    pub fn idle(slots: usize) -> Self {
        Self {
            charge: vec![0.0; slots],
            discharge: vec![0.0; slots],
            energy: vec![0.0; slots + 1],
        }
    }

    /// Discharge minus charge at `t`.
    pub fn net_discharge(&self, t: usize) -> f64 {
        self.discharge[t] - self.charge[t]
    }
}

/// Full decision of one investor: sizing plus a dispatch per scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    /// Energy capacity S (MWh).
    pub capacity: f64,
    /// Power rating P (MW).
    pub power: f64,
    pub dispatch: Vec<ScenarioDispatch>,
}

impl DecisionVector {
    pub fn idle(scenarios: usize, slots: usize) -> Self {
        Self {
            capacity: 0.0,
            power: 0.0,
            dispatch: vec![ScenarioDispatch::idle(slots); scenarios],
        }
    }

    fn check_shape(
        &self,
        investor: usize,
        scenarios: usize,
        slots: usize,
    ) -> Result<(), ModelError> {
        let bad = |reason: String| Err(ModelError::DecisionShape { investor, reason });
        if self.dispatch.len() != scenarios {
            return bad(format!(
                "{} scenarios, expected {scenarios}",
                self.dispatch.len()
            ));
        }
        for d in &self.dispatch {
            if d.charge.len() != slots || d.discharge.len() != slots || d.energy.len() != slots + 1
            {
                return bad(format!("dispatch is not sized for {slots} slots"));
            }
        }
        Ok(())
    }
}

/// A constraint broken by a decision, with the amount by which it is broken.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub constraint: &'static str,
    pub scenario: Option<usize>,
    pub slot: Option<usize>,
    pub amount: f64,
}

/// Checks a decision against the storage constraints directly, without going
/// through the assembled constraint matrices.
pub fn feasibility_violations(
    spec: &InvestorSpec,
    decision: &DecisionVector,
    tol: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |constraint, scenario, slot, amount: f64| {
        if amount > tol {
            out.push(Violation {
                constraint,
                scenario,
                slot,
                amount,
            });
        }
    };
    let (s, p) = (decision.capacity, decision.power);
    check("capacity >= 0", None, None, -s);
    check("power >= 0", None, None, -p);
    check("min duration", None, None, spec.min_duration * p - s);
    check("max duration", None, None, s - spec.max_duration * p);
    for (w, d) in decision.dispatch.iter().enumerate() {
        for t in 0..d.charge.len() {
            check("discharge >= 0", Some(w), Some(t), -d.discharge[t]);
            check("discharge <= power", Some(w), Some(t), d.discharge[t] - p);
            check("charge >= 0", Some(w), Some(t), -d.charge[t]);
            check("charge <= power", Some(w), Some(t), d.charge[t] - p);
            let expected = d.energy[t] + spec.charge_efficiency * d.charge[t]
                - d.discharge[t] / spec.discharge_efficiency;
            check(
                "energy balance",
                Some(w),
                Some(t),
                (d.energy[t + 1] - expected).abs(),
            );
        }
        for (t, e) in d.energy.iter().enumerate() {
            check("energy >= 0", Some(w), Some(t), -e);
            check("energy <= capacity", Some(w), Some(t), e - s);
        }
        if let (Some(first), Some(last)) = (d.energy.first(), d.energy.last()) {
            check("periodic energy", Some(w), None, (first - last).abs());
        }
    }
    out
}

pub fn is_feasible(spec: &InvestorSpec, decision: &DecisionVector, tol: f64) -> bool {
    feasibility_violations(spec, decision, tol).is_empty()
}

/// Price at `t` for aggregate net discharge `net_discharge` (MW).
pub fn market_price(scenario: &Scenario, t: usize, net_discharge: f64) -> f64 {
    scenario.baseline[t] - scenario.slope[t] * net_discharge
}

/// Where the scenario set of a game JSON file comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ScenarioSource {
    Inline(ScenarioSet),
    Path(PathBuf),
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    investors: Vec<InvestorSpec>,
    scenarios: ScenarioSource,
}

/// Investors competing in one market.
#[derive(Clone, Debug, PartialEq)]
pub struct GameInstance {
    investors: Vec<InvestorSpec>,
    scenarios: ScenarioSet,
}

impl GameInstance {
    pub fn new(investors: Vec<InvestorSpec>, scenarios: ScenarioSet) -> Result<Self, ModelError> {
        if investors.is_empty() {
            return Err(ModelError::NoInvestors);
        }
        investors.iter().try_for_each(InvestorSpec::validate)?;
        Ok(Self {
            investors,
            scenarios,
        })
    }

    /// `count` copies of `template`, with ids suffixed by their position.
    pub fn homogeneous(
        template: &InvestorSpec,
        count: usize,
        scenarios: ScenarioSet,
    ) -> Result<Self, ModelError> {
        let investors = (0..count)
            .map(|k| InvestorSpec {
                id: format!("{}-{}", template.id, k + 1),
                ..template.clone()
            })
            .collect();
        Self::new(investors, scenarios)
    }

    pub fn investors(&self) -> &[InvestorSpec] {
        &self.investors
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    /// Mutable scenarios, bypassing set validation; model builders re-check
    /// slope positivity before relying on it.
    pub fn scenarios_mut_unchecked(&mut self) -> &mut [Scenario] {
        self.scenarios.scenarios_mut_unchecked()
    }

    pub fn investor_count(&self) -> usize {
        self.investors.len()
    }

    pub fn slots(&self) -> usize {
        self.scenarios.slots()
    }

    pub fn idle_decisions(&self) -> Vec<DecisionVector> {
        vec![DecisionVector::idle(self.scenarios.len(), self.slots()); self.investors.len()]
    }

    pub fn check_decisions(&self, decisions: &[DecisionVector]) -> Result<(), ModelError> {
        if decisions.len() != self.investors.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.investors.len(),
                found: decisions.len(),
            });
        }
        for (i, d) in decisions.iter().enumerate() {
            d.check_shape(i, self.scenarios.len(), self.slots())?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GameFile {
            investors: self.investors.clone(),
            scenarios: ScenarioSource::Inline(self.scenarios.clone()),
        })
        .expect("game serializes")
    }

    /// Parses a game document; a `scenarios` string is resolved relative to
    /// `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ModelError> {
        let file: GameFile = serde_json::from_str(text)?;
        let scenarios = match file.scenarios {
            ScenarioSource::Inline(set) => set,
            ScenarioSource::Path(p) => ScenarioSet::load(base_dir.join(p))?,
        };
        Self::new(file.investors, scenarios)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Aggregate net discharge of all investors at (scenario, slot).
pub fn aggregate_net_discharge(decisions: &[DecisionVector], scenario: usize, t: usize) -> f64 {
    decisions
        .iter()
        .map(|d| d.dispatch[scenario].net_discharge(t))
        .sum()
}

/// Revenue and cost components of one investor's daily profit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub revenue: f64,
    pub investment_cost: f64,
    pub operation_cost: f64,
    pub profit: f64,
}

pub fn profit_breakdown(
    instance: &GameInstance,
    decisions: &[DecisionVector],
    i: usize,
) -> Result<ProfitBreakdown, ModelError> {
    instance.check_decisions(decisions)?;
    let spec = instance.investors.get(i).ok_or(ModelError::InvestorIndex {
        index: i,
        count: instance.investor_count(),
    })?;
    let own = &decisions[i];
    let (mut revenue, mut operation_cost) = (0.0, 0.0);
    for (w, scenario) in instance.scenarios.iter().enumerate() {
        let d = &own.dispatch[w];
        let (mut r, mut c) = (0.0, 0.0);
        for t in 0..scenario.slots() {
            let price = market_price(scenario, t, aggregate_net_discharge(decisions, w, t));
            r += d.net_discharge(t) * price;
            c += spec.charge_cost * d.charge[t] + spec.discharge_cost * d.discharge[t];
        }
        revenue += scenario.probability * r;
        operation_cost += scenario.probability * c;
    }
    let investment_cost = spec.investment_cost(own.capacity, own.power);
    Ok(ProfitBreakdown {
        revenue,
        investment_cost,
        operation_cost,
        profit: revenue - investment_cost - operation_cost,
    })
}

/// Expected daily profit of investor `i`.
pub fn investor_profit(
    instance: &GameInstance,
    decisions: &[DecisionVector],
    i: usize,
) -> Result<f64, ModelError> {
    profit_breakdown(instance, decisions, i).map(|b| b.profit)
}

/// Total profit plus the expected pairwise competition term
/// `sum_{i<j} a q_i q_j`, evaluated pair by pair.
pub fn pairwise_objective(
    instance: &GameInstance,
    decisions: &[DecisionVector],
) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for i in 0..instance.investor_count() {
        total += investor_profit(instance, decisions, i)?;
    }
    for (w, scenario) in instance.scenarios.iter().enumerate() {
        let mut cross = 0.0;
        for t in 0..scenario.slots() {
            for i in 0..decisions.len() {
                for j in i + 1..decisions.len() {
                    cross += scenario.slope[t]
                        * decisions[i].dispatch[w].net_discharge(t)
                        * decisions[j].dispatch[w].net_discharge(t);
                }
            }
        }
        total += scenario.probability * cross;
    }
    Ok(total)
}

/// The same objective in potential form: price-taker revenue less costs,
/// minus `(a/2)(sum q_i^2 + (sum q_i)^2)` per slot.
pub fn potential_objective(
    instance: &GameInstance,
    decisions: &[DecisionVector],
) -> Result<f64, ModelError> {
    instance.check_decisions(decisions)?;
    let mut total = 0.0;
    for (spec, d) in instance.investors.iter().zip(decisions) {
        total -= spec.investment_cost(d.capacity, d.power);
    }
    for (w, scenario) in instance.scenarios.iter().enumerate() {
        let mut value = 0.0;
        for t in 0..scenario.slots() {
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for (spec, d) in instance.investors.iter().zip(decisions) {
                let sd = &d.dispatch[w];
                let q = sd.net_discharge(t);
                value += q * scenario.baseline[t]
                    - spec.charge_cost * sd.charge[t]
                    - spec.discharge_cost * sd.discharge[t];
                sum += q;
                sum_sq += q * q;
            }
            value -= 0.5 * scenario.slope[t] * (sum_sq + sum * sum);
        }
        total += scenario.probability * value;
    }
    Ok(total)
}
