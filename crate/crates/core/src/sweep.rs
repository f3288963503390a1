//! Experiment sweeps: investor count (homogeneous market) and efficiency mix
//! (one Type-1, one Type-2 and a growing number of Type-3 investors).
//!
//! Each sweep point is an independent certified solve. A failed point becomes
//! a row with an error status rather than aborting the sweep.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_certified, EquilibriumError, EquilibriumReport};
use crate::market_data::ScenarioSet;
use crate::model::{GameInstance, InvestorSpec};
use crate::solver::SolveSettings;

/// One-way efficiencies of the three technology types.
pub const EFFICIENCY_TYPES: [f64; 3] = [0.95, 0.94, 0.93];

/// Total daily profit below which shares are left undefined.
pub const SHARE_MIN_TOTAL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestorCountMetrics {
    pub per_investor_profit: f64,
    pub per_investor_capacity: f64,
    pub total_profit: f64,
    pub total_capacity: f64,
    pub max_gap: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestorCountRow {
    pub investors: usize,
    pub outcome: Result<InvestorCountMetrics, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMetrics {
    pub type1_profit: f64,
    pub type2_profit: f64,
    pub type3_total_profit: f64,
    /// Profit shares; undefined when nobody earns a positive total.
    pub type1_share: Option<f64>,
    pub type2_share: Option<f64>,
    pub type3_share: Option<f64>,
    pub type1_capacity: f64,
    pub type2_capacity: f64,
    pub type3_total_capacity: f64,
    pub max_gap: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub type3_count: usize,
    pub outcome: Result<EfficiencyMetrics, String>,
}

fn max_gap(report: &EquilibriumReport) -> (f64, bool) {
    let cert = report.certification.as_ref().expect("certified report");
    (cert.max_gap(), cert.passed)
}

/// Certified equilibrium with `count` copies of `template`.
pub fn investor_count_point(
    template: &InvestorSpec,
    scenarios: &ScenarioSet,
    count: usize,
    settings: &SolveSettings,
) -> InvestorCountRow {
    let solve = || -> Result<InvestorCountMetrics, EquilibriumError> {
        let game = GameInstance::homogeneous(template, count, scenarios.clone())?;
        let report = solve_certified(&game, settings)?;
        let (max_gap, certified) = max_gap(&report);
        let n = count as f64;
        Ok(InvestorCountMetrics {
            per_investor_profit: report.total_profit / n,
            per_investor_capacity: report.total_capacity / n,
            total_profit: report.total_profit,
            total_capacity: report.total_capacity,
            max_gap,
            certified,
        })
    };
    InvestorCountRow {
        investors: count,
        outcome: solve().map_err(|e| e.to_string()),
    }
}

/// Type-1, Type-2 and Type-3 variants of `base`, differing only in efficiency.
pub fn efficiency_types(base: &InvestorSpec) -> [InvestorSpec; 3] {
    EFFICIENCY_TYPES.map(|eta| base.clone().with_efficiency(eta))
}

/// Market of one Type-1, one Type-2 and `type3_count` Type-3 investors.
pub fn efficiency_game(
    types: &[InvestorSpec; 3],
    type3_count: usize,
    scenarios: &ScenarioSet,
) -> Result<GameInstance, EquilibriumError> {
    let mut investors = vec![
        InvestorSpec {
            id: "type1".into(),
            ..types[0].clone()
        },
        InvestorSpec {
            id: "type2".into(),
            ..types[1].clone()
        },
    ];
    investors.extend((0..type3_count).map(|k| InvestorSpec {
        id: format!("type3-{}", k + 1),
        ..types[2].clone()
    }));
    Ok(GameInstance::new(investors, scenarios.clone())?)
}

/// Profits, shares and capacities by type from a solved efficiency-mix game.
pub fn efficiency_metrics(report: &EquilibriumReport) -> EfficiencyMetrics {
    let profits = report.profits();
    let capacities: Vec<f64> = report.investors.iter().map(|o| o.capacity).collect();
    let type3_total_profit: f64 = profits[2..].iter().sum();
    let total = report.total_profit;
    let share = |f: f64| (total > SHARE_MIN_TOTAL).then(|| f / total);
    let (max_gap, certified) = max_gap(report);
    EfficiencyMetrics {
        type1_profit: profits[0],
        type2_profit: profits[1],
        type3_total_profit,
        type1_share: share(profits[0]),
        type2_share: share(profits[1]),
        type3_share: share(type3_total_profit),
        type1_capacity: capacities[0],
        type2_capacity: capacities[1],
        type3_total_capacity: capacities[2..].iter().sum(),
        max_gap,
        certified,
    }
}

pub fn efficiency_point(
    types: &[InvestorSpec; 3],
    scenarios: &ScenarioSet,
    type3_count: usize,
    settings: &SolveSettings,
) -> EfficiencyRow {
    let solve = || -> Result<EfficiencyMetrics, EquilibriumError> {
        let game = efficiency_game(types, type3_count, scenarios)?;
        Ok(efficiency_metrics(&solve_certified(&game, settings)?))
    };
    EfficiencyRow {
        type3_count,
        outcome: solve().map_err(|e| e.to_string()),
    }
}

pub fn sweep_investor_counts(
    template: &InvestorSpec,
    scenarios: &ScenarioSet,
    counts: impl IntoIterator<Item = usize>,
    settings: &SolveSettings,
) -> Vec<InvestorCountRow> {
    counts
        .into_iter()
        .map(|n| investor_count_point(template, scenarios, n, settings))
        .collect()
}

pub fn sweep_efficiency(
    types: &[InvestorSpec; 3],
    scenarios: &ScenarioSet,
    type3_counts: impl IntoIterator<Item = usize>,
    settings: &SolveSettings,
) -> Vec<EfficiencyRow> {
    type3_counts
        .into_iter()
        .map(|n| efficiency_point(types, scenarios, n, settings))
        .collect()
}

fn status_cell(outcome: &Result<impl Sized, String>) -> String {
    match outcome {
        Ok(_) => "ok".into(),
        Err(e) => format!("\"failed: {}\"", e.replace('"', "'")),
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub const INVESTOR_CSV_HEADER: &str = "investors,status,per_investor_profit,per_investor_capacity_mwh,total_profit,total_capacity_mwh,max_best_response_gap,certified";

pub fn write_investor_count_csv<W: Write>(rows: &[InvestorCountRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{INVESTOR_CSV_HEADER}")?;
    for r in rows {
        let status = status_cell(&r.outcome);
        match &r.outcome {
            Ok(m) => writeln!(
                w,
                "{},{status},{},{},{},{},{},{}",
                r.investors,
                m.per_investor_profit,
                m.per_investor_capacity,
                m.total_profit,
                m.total_capacity,
                m.max_gap,
                m.certified
            )?,
            Err(_) => writeln!(w, "{},{status},,,,,,false", r.investors)?,
        }
    }
    Ok(())
}

pub const EFFICIENCY_CSV_HEADER: &str = "type3_count,status,type1_profit,type2_profit,type3_total_profit,type1_share,type2_share,type3_share,type1_capacity_mwh,type2_capacity_mwh,type3_total_capacity_mwh,max_best_response_gap,certified";

pub fn write_efficiency_csv<W: Write>(rows: &[EfficiencyRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{EFFICIENCY_CSV_HEADER}")?;
    for r in rows {
        let status = status_cell(&r.outcome);
        match &r.outcome {
            Ok(m) => writeln!(
                w,
                "{},{status},{},{},{},{},{},{},{},{},{},{},{}",
                r.type3_count,
                m.type1_profit,
                m.type2_profit,
                m.type3_total_profit,
                opt_cell(m.type1_share),
                opt_cell(m.type2_share),
                opt_cell(m.type3_share),
                m.type1_capacity,
                m.type2_capacity,
                m.type3_total_capacity,
                m.max_gap,
                m.certified
            )?,
            Err(_) => writeln!(w, "{},{status},,,,,,,,,,,false", r.type3_count)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Scenario;

    fn toy() -> ScenarioSet {
        ScenarioSet::single(Scenario::uniform("toy", vec![20.0, 60.0], 0.1, 1.0)).unwrap()
    }

    #[test]
    fn toy_sweep_follows_closed_form() {
        let rows = sweep_investor_counts(
            &InvestorSpec::costless("c"),
            &toy(),
            1..=3,
            &SolveSettings::default(),
        );
        for r in &rows {
            let m = r.outcome.as_ref().unwrap();
            let n1 = (r.investors + 1) as f64;
            let want = 8000.0 / (n1 * n1);
            assert!((m.per_investor_profit - want).abs() < 1e-3 * want);
            assert!(m.certified);
        }
    }

    #[test]
    fn failed_point_is_a_row() {
        let row = investor_count_point(
            &InvestorSpec::costless("c"),
            &toy(),
            0,
            &SolveSettings::default(),
        );
        assert!(row.outcome.is_err());
        let mut out = Vec::new();
        write_investor_count_csv(&[row], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0,\"failed:"));
    }

    #[test]
    fn flat_market_has_no_shares() {
        let flat =
            ScenarioSet::single(Scenario::uniform("flat", vec![40.0, 40.0], 0.1, 1.0)).unwrap();
        let types = efficiency_types(&InvestorSpec::reference("r"));
        let m = efficiency_point(&types, &flat, 2, &SolveSettings::default())
            .outcome
            .unwrap();
        assert_eq!(m.type1_share, None);
        assert!(m.type1_profit.abs() < 1e-6);
    }

    #[test]
    fn shares_sum_to_one() {
        let types = efficiency_types(&InvestorSpec::costless("c"));
        let row = efficiency_point(&types, &toy(), 1, &SolveSettings::default());
        let m = row.outcome.unwrap();
        let sum = m.type1_share.unwrap() + m.type2_share.unwrap() + m.type3_share.unwrap();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
