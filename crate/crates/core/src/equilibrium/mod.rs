//! Equilibrium computation and certification.
//!
//! [`solve_equilibrium`] maximizes the centralized potential objective;
//! [`verify_equilibrium`] then re-solves each investor's own best response
//! against the others' fixed decisions and reports how much profit a
//! unilateral deviation could still gain.

pub mod oracle;
mod report;

pub use report::{write_investor_csv, write_price_csv};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::spread;
use crate::model::{
    aggregate_net_discharge, investor_profit, market_price, profit_breakdown, DecisionVector,
    GameInstance, ModelError, ProfitBreakdown,
};
use crate::qp::{build_best_response, build_equilibrium_qp, QpError};
use crate::solver::{solve_qp, KktResiduals, SolveSettings, SolveStatus, SolverError};

/// Relative part of the certification tolerance.
pub const NASH_REL_TOL: f64 = 1e-4;
/// Simultaneous charge and discharge above this fraction of P is flagged.
pub const SIMULTANEOUS_TOL: f64 = 1e-6;
/// Investors whose power is at most this fraction of the largest power in the
/// game (floored at 1 MW) are snapped to the zero decision.
pub const IDLE_REL_TOL: f64 = 1e-6;
/// Largest allowed objective shift from regularization, relative to `1 + |objective|`.
pub const REGULARIZATION_REL_LIMIT: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver finished with status {status:?} (residuals {residuals:?})")]
    NotOptimal {
        status: SolveStatus,
        residuals: KktResiduals,
    },
    #[error(
        "regularization shifts the objective by {shift}, too much against objective {objective}"
    )]
    Regularization { shift: f64, objective: f64 },
    #[error("report does not match the game: {0}")]
    ReportMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestorOutcome {
    pub id: String,
    pub capacity: f64,
    pub power: f64,
    pub profit: f64,
    pub breakdown: ProfitBreakdown,
    /// Filled in by [`EquilibriumReport::attach`].
    pub best_response_gap: Option<f64>,
    pub decision: DecisionVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceProfile {
    pub scenario: String,
    pub probability: f64,
    pub baseline: Vec<f64>,
    pub with_storage: Vec<f64>,
    pub net_discharge: Vec<f64>,
}

impl PriceProfile {
    pub fn baseline_spread(&self) -> f64 {
        spread(&self.baseline)
    }

    pub fn spread_with_storage(&self) -> f64 {
        spread(&self.with_storage)
    }
}

/// Slot where an investor both charges and discharges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousFlow {
    pub investor: usize,
    pub scenario: usize,
    pub slot: usize,
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub investors: Vec<InvestorOutcome>,
    pub total_profit: f64,
    pub total_capacity: f64,
    pub total_power: f64,
    pub prices: Vec<PriceProfile>,
    /// Value of the centralized objective.
    pub objective: f64,
    pub residuals: KktResiduals,
    pub iterations: u32,
    pub simultaneous: Vec<SimultaneousFlow>,
    pub certification: Option<Certification>,
}

impl EquilibriumReport {
    pub fn decisions(&self) -> Vec<DecisionVector> {
        self.investors.iter().map(|o| o.decision.clone()).collect()
    }

    pub fn profits(&self) -> Vec<f64> {
        self.investors.iter().map(|o| o.profit).collect()
    }

    pub fn attach(&mut self, certification: Certification) {
        for (o, gap) in self.investors.iter_mut().zip(&certification.gaps) {
            o.best_response_gap = Some(*gap);
        }
        self.certification = Some(certification);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn price_profiles(instance: &GameInstance, decisions: &[DecisionVector]) -> Vec<PriceProfile> {
    instance
        .scenarios()
        .iter()
        .enumerate()
        .map(|(w, s)| {
            let net: Vec<f64> = (0..s.slots())
                .map(|t| aggregate_net_discharge(decisions, w, t))
                .collect();
            PriceProfile {
                scenario: s.id.clone(),
                probability: s.probability,
                baseline: s.baseline.clone(),
                with_storage: net
                    .iter()
                    .enumerate()
                    .map(|(t, &p)| market_price(s, t, p))
                    .collect(),
                net_discharge: net,
            }
        })
        .collect()
}

fn simultaneous_flows(decisions: &[DecisionVector]) -> Vec<SimultaneousFlow> {
    let mut out = Vec::new();
    for (i, d) in decisions.iter().enumerate() {
        for (w, sd) in d.dispatch.iter().enumerate() {
            for t in 0..sd.charge.len() {
                let overlap = sd.charge[t].min(sd.discharge[t]);
                if overlap > SIMULTANEOUS_TOL * d.power.max(0.0) {
                    out.push(SimultaneousFlow {
                        investor: i,
                        scenario: w,
                        slot: t,
                        overlap,
                    });
                }
            }
        }
    }
    out
}

/// Replaces interior-point residue on non-investing players with exact zeros.
fn snap_idle(decisions: &mut [DecisionVector]) {
    let scale = decisions.iter().fold(1.0_f64, |m, d| m.max(d.power.abs()));
    for d in decisions
        .iter_mut()
        .filter(|d| d.power <= IDLE_REL_TOL * scale)
    {
        d.capacity = 0.0;
        d.power = 0.0;
        for sd in &mut d.dispatch {
            sd.charge.iter_mut().for_each(|v| *v = 0.0);
            sd.discharge.iter_mut().for_each(|v| *v = 0.0);
            sd.energy.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Builds a report from given decisions without solving anything.
pub fn assemble_report(
    instance: &GameInstance,
    decisions: Vec<DecisionVector>,
    objective: f64,
    residuals: KktResiduals,
    iterations: u32,
) -> Result<EquilibriumReport, EquilibriumError> {
    let mut investors = Vec::with_capacity(decisions.len());
    for (i, spec) in instance.investors().iter().enumerate() {
        let breakdown = profit_breakdown(instance, &decisions, i)?;
        investors.push(InvestorOutcome {
            id: spec.id.clone(),
            capacity: decisions[i].capacity,
            power: decisions[i].power,
            profit: breakdown.profit,
            breakdown,
            best_response_gap: None,
            decision: decisions[i].clone(),
        });
    }
    Ok(EquilibriumReport {
        total_profit: investors.iter().map(|o| o.profit).sum(),
        total_capacity: investors.iter().map(|o| o.capacity).sum(),
        total_power: investors.iter().map(|o| o.power).sum(),
        prices: price_profiles(instance, &decisions),
        simultaneous: simultaneous_flows(&decisions),
        investors,
        objective,
        residuals,
        iterations,
        certification: None,
    })
}

/// Solves the centralized QP and unpacks the maximizer into a report.
pub fn solve_equilibrium(
    instance: &GameInstance,
    settings: &SolveSettings,
) -> Result<EquilibriumReport, EquilibriumError> {
    let (index, qp) = build_equilibrium_qp(instance)?;
    let result = solve_qp(&qp, settings)?;
    if result.status != SolveStatus::Optimal {
        return Err(EquilibriumError::NotOptimal {
            status: result.status,
            residuals: result.residuals,
        });
    }
    let shift = result.regularization * result.x.iter().map(|v| v * v).sum::<f64>();
    if shift > REGULARIZATION_REL_LIMIT * (1.0 + result.objective.abs()) {
        return Err(EquilibriumError::Regularization {
            shift,
            objective: result.objective,
        });
    }
    let mut decisions = index.unpack(&result.x);
    snap_idle(&mut decisions);
    assemble_report(
        instance,
        decisions,
        result.objective,
        result.residuals,
        result.iterations,
    )
}

/// Per-investor best-response gaps and their tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    /// Profit gained by deviating to the best response, per investor.
    pub gaps: Vec<f64>,
    /// `max(1e-4 (1 + |f_i|), 10 kkt_tol (1 + |c_i|_inf))` per investor.
    pub tolerances: Vec<f64>,
    pub best_response_profits: Vec<f64>,
    pub passed: bool,
}

impl Certification {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest gap relative to its tolerance; at most one when certified.
    pub fn worst_ratio(&self) -> f64 {
        self.gaps
            .iter()
            .zip(&self.tolerances)
            .map(|(g, t)| g / t)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Best-response verification of a decision profile. Each best response is
/// solved at a tenth of `settings.kkt_tol`.
pub fn verify_decisions(
    instance: &GameInstance,
    decisions: &[DecisionVector],
    settings: &SolveSettings,
) -> Result<Certification, EquilibriumError> {
    instance.check_decisions(decisions)?;
    let tight = settings.with_tol(0.1 * settings.kkt_tol);
    let n = instance.investor_count();
    let (mut gaps, mut tolerances, mut br_profits) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        let current = investor_profit(instance, decisions, i)?;
        let (index, qp) = build_best_response(instance, i, decisions)?;
        let result = solve_qp(&qp, &tight)?;
        if result.status != SolveStatus::Optimal {
            return Err(EquilibriumError::NotOptimal {
                status: result.status,
                residuals: result.residuals,
            });
        }
        let mut deviated = decisions.to_vec();
        deviated[i] = index.unpack(&result.x).remove(0);
        let best = investor_profit(instance, &deviated, i)?;
        let scale = 1.0 + qp.linear.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        gaps.push(best - current);
        tolerances
            .push((NASH_REL_TOL * (1.0 + current.abs())).max(10.0 * settings.kkt_tol * scale));
        br_profits.push(best);
    }
    let passed = gaps.iter().zip(&tolerances).all(|(g, t)| g <= t);
    Ok(Certification {
        gaps,
        tolerances,
        best_response_profits: br_profits,
        passed,
    })
}

pub fn verify_equilibrium(
    instance: &GameInstance,
    report: &EquilibriumReport,
    settings: &SolveSettings,
) -> Result<Certification, EquilibriumError> {
    if report.investors.len() != instance.investor_count() {
        return Err(EquilibriumError::ReportMismatch(format!(
            "{} investors in report, {} in game",
            report.investors.len(),
            instance.investor_count()
        )));
    }
    verify_decisions(instance, &report.decisions(), settings)
}

/// Solve, then verify and attach the certification.
pub fn solve_certified(
    instance: &GameInstance,
    settings: &SolveSettings,
) -> Result<EquilibriumReport, EquilibriumError> {
    let mut report = solve_equilibrium(instance, settings)?;
    let cert = verify_equilibrium(instance, &report, settings)?;
    report.attach(cert);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Scenario, ScenarioSet};
    use crate::model::InvestorSpec;

    fn toy(n: usize) -> GameInstance {
        let set =
            ScenarioSet::single(Scenario::uniform("toy", vec![20.0, 60.0], 0.1, 1.0)).unwrap();
        GameInstance::homogeneous(&InvestorSpec::costless("inv"), n, set).unwrap()
    }

    #[test]
    fn monopoly_toy() {
        let r = solve_certified(&toy(1), &SolveSettings::default()).unwrap();
        let d = &r.investors[0].decision.dispatch[0];
        assert!((d.net_discharge(0) + 100.0).abs() < 1e-3, "{d:?}");
        assert!((d.net_discharge(1) - 100.0).abs() < 1e-3);
        assert!((r.total_profit - 2000.0).abs() < 1e-3);
        assert!(r.certification.unwrap().passed);
    }

    #[test]
    fn duopoly_toy() {
        let r = solve_certified(&toy(2), &SolveSettings::default()).unwrap();
        for o in &r.investors {
            assert!((o.profit - 8000.0 / 9.0).abs() < 1e-3 * 8000.0 / 9.0);
        }
        let cert = r.certification.unwrap();
        assert!(cert.passed, "{cert:?}");
    }

    #[test]
    fn perturbed_dispatch_fails_certification() {
        let g = toy(2);
        let r = solve_equilibrium(&g, &SolveSettings::default()).unwrap();
        let mut d = r.decisions();
        for sd in &mut d[0].dispatch {
            sd.charge.iter_mut().for_each(|v| *v *= 0.5);
            sd.discharge.iter_mut().for_each(|v| *v *= 0.5);
            sd.energy.iter_mut().for_each(|v| *v *= 0.5);
        }
        let cert = verify_decisions(&g, &d, &SolveSettings::default()).unwrap();
        assert!(!cert.passed);
        assert!(cert.gaps[0] > cert.tolerances[0]);
    }

    #[test]
    fn unprofitable_investment_stays_idle() {
        let set = ScenarioSet::single(Scenario::uniform("s", vec![40.0, 45.0], 1e-9, 1.0)).unwrap();
        let g = GameInstance::new(vec![InvestorSpec::reference("r")], set).unwrap();
        let r = solve_certified(&g, &SolveSettings::default()).unwrap();
        let o = &r.investors[0];
        assert!(o.capacity.abs() < 1e-6 && o.power.abs() < 1e-6, "{o:?}");
        assert!(o.profit.abs() < 1e-6);
    }

    #[test]
    fn non_concave_game_is_a_model_error() {
        let mut g = toy(1);
        g.scenarios_mut_unchecked()[0].slope[0] = -0.1;
        assert!(matches!(
            solve_equilibrium(&g, &SolveSettings::default()),
            Err(EquilibriumError::Qp(QpError::NonConcave { .. }))
        ));
    }

    #[test]
    fn report_json_roundtrip() {
        let r = solve_certified(&toy(2), &SolveSettings::default()).unwrap();
        assert_eq!(EquilibriumReport::from_json(&r.to_json()).unwrap(), r);
    }
}
