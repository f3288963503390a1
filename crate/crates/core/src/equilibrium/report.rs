use std::io::{self, Write};

use super::EquilibriumReport;

/// One row per investor.
pub fn write_investor_csv<W: Write>(report: &EquilibriumReport, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "investor,id,capacity_mwh,power_mw,revenue,investment_cost,operation_cost,profit,best_response_gap"
    )?;
    for (i, o) in report.investors.iter().enumerate() {
        let gap = o
            .best_response_gap
            .map(|g| g.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{i},{},{},{},{},{},{},{},{gap}",
            o.id,
            o.capacity,
            o.power,
            o.breakdown.revenue,
            o.breakdown.investment_cost,
            o.breakdown.operation_cost,
            o.profit
        )?;
    }
    Ok(())
}

/// One row per scenario-hour.
pub fn write_price_csv<W: Write>(report: &EquilibriumReport, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "scenario,probability,slot,baseline_price,price_with_storage,net_discharge_mw"
    )?;
    for p in &report.prices {
        for t in 0..p.baseline.len() {
            writeln!(
                w,
                "{},{},{t},{},{},{}",
                p.scenario, p.probability, p.baseline[t], p.with_storage[t], p.net_discharge[t]
            )?;
        }
    }
    Ok(())
}
