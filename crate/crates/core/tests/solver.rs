mod common;

use common::*;
use storage_game::equilibrium::{solve_certified, solve_equilibrium};
use storage_game::model::{is_feasible, InvestorSpec};
use storage_game::qp::{build_equilibrium_qp, read_text, write_text};
use storage_game::solver::{solve_qp, write_iteration_log, SolveSettings, SolveStatus};

#[test]
fn monopoly_qp_objective() {
    let (_, qp) = build_equilibrium_qp(&toy_game(1)).unwrap();
    let r = solve_qp(&qp, &SolveSettings::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - 2000.0).abs() < 1e-3, "{}", r.objective);
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = rng(3);
    let game = random_game(&mut rng, 3, 2, 24);
    let (_, qp) = build_equilibrium_qp(&game).unwrap();
    let settings = SolveSettings::default();
    let a = solve_qp(&qp, &settings).unwrap();
    let b = solve_qp(&qp, &settings).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.x, b.x);
}

#[test]
fn price_and_cost_scaling_leaves_net_discharge_unchanged() {
    let mut rng = rng(5);
    let game = random_game(&mut rng, 2, 2, 24);
    let mut scaled = game.clone();
    for s in scaled.scenarios_mut_unchecked() {
        s.baseline.iter_mut().for_each(|p| *p *= 1000.0);
        s.slope.iter_mut().for_each(|a| *a *= 1000.0);
    }
    let specs: Vec<InvestorSpec> = scaled
        .investors()
        .iter()
        .map(|s| InvestorSpec {
            capacity_cost: 1000.0 * s.capacity_cost,
            power_cost: 1000.0 * s.power_cost,
            charge_cost: 1000.0 * s.charge_cost,
            discharge_cost: 1000.0 * s.discharge_cost,
            ..s.clone()
        })
        .collect();
    let scaled = storage_game::model::GameInstance::new(specs, scaled.scenarios().clone()).unwrap();
    let settings = SolveSettings::default();
    let base = solve_equilibrium(&game, &settings).unwrap();
    let big = solve_equilibrium(&scaled, &settings).unwrap();
    let q_scale = base
        .prices
        .iter()
        .flat_map(|p| p.net_discharge.iter())
        .fold(1.0_f64, |m, q| m.max(q.abs()));
    for (db, ds) in base.decisions().iter().zip(&big.decisions()) {
        for (wb, ws) in db.dispatch.iter().zip(&ds.dispatch) {
            for t in 0..wb.charge.len() {
                let (qb, qs) = (wb.net_discharge(t), ws.net_discharge(t));
                assert!((qb - qs).abs() <= 1e-6 * q_scale, "{qb} vs {qs}");
            }
        }
    }
    assert!(rel_diff(big.total_profit, 1000.0 * base.total_profit) <= 1e-6);
}

#[test]
fn solutions_pass_the_direct_feasibility_check() {
    let mut rng = rng(8);
    for _ in 0..3 {
        let game = random_game(&mut rng, 3, 2, 24);
        let report = solve_equilibrium(&game, &SolveSettings::default()).unwrap();
        for (spec, o) in game.investors().iter().zip(&report.investors) {
            assert!(is_feasible(spec, &o.decision, 1e-6));
        }
    }
}

#[test]
fn iteration_log_and_export_are_written() {
    let (_, qp) = build_equilibrium_qp(&toy_game(2)).unwrap();
    let settings = SolveSettings {
        record_iterations: true,
        ..SolveSettings::default()
    };
    let r = solve_qp(&qp, &settings).unwrap();
    assert!(!r.log.is_empty());
    let mut csv = Vec::new();
    write_iteration_log(&r.log, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), r.log.len() + 1);

    let mut dump = Vec::new();
    write_text(&qp, &mut dump).unwrap();
    let back = read_text(dump.as_slice()).unwrap();
    assert_eq!(back.linear, qp.linear);
    assert_eq!(back.quadratic, qp.quadratic);
}

#[test]
fn reported_gaps_are_not_meaningfully_negative() {
    let mut rng = rng(21);
    let game = random_game(&mut rng, 3, 1, 24);
    let settings = SolveSettings::default();
    let report = solve_certified(&game, &settings).unwrap();
    let cert = report.certification.as_ref().unwrap();
    assert!(cert.passed);
    for (g, o) in cert.gaps.iter().zip(&report.investors) {
        assert!(*g >= -1e-4 * (1.0 + o.profit.abs()), "{g}");
    }
    let total: f64 = report.profits().iter().sum();
    assert!(rel_diff(total, report.total_profit) <= 1e-9);
}
