//! KKT certificate for `max x'(Q - eps I)x + c'x  s.t.  Aeq x = beq, Ain x <= bin`,
//! computed from the problem data alone.
//!
//! With multipliers `y_eq` (free) and `y_in >= 0` the conditions are
//! `2(Q - eps I)x + c = Aeq' y_eq + Ain' y_in`, primal feasibility and
//! `y_in * (bin - Ain x) = 0`. Each residual is an infinity norm divided by
//! `1 + ` the magnitude of the terms it balances.

use serde::{Deserialize, Serialize};

use crate::qp::QpProblem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.primal <= tol && self.dual <= tol && self.complementarity <= tol
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn residuals(
    problem: &QpProblem,
    regularization: f64,
    x: &[f64],
    eq_multipliers: &[f64],
    ineq_multipliers: &[f64],
) -> KktResiduals {
    let cons = &problem.constraints;
    assert_eq!(x.len(), problem.dim());
    assert_eq!(eq_multipliers.len(), cons.eq_rhs.len());
    assert_eq!(ineq_multipliers.len(), cons.ineq_rhs.len());

    let ax_eq = cons.eq.mul_vec(x);
    let ax_in = cons.ineq.mul_vec(x);
    let eq_gap = ax_eq.iter().zip(&cons.eq_rhs).map(|(a, b)| (a - b).abs());
    let in_excess = ax_in
        .iter()
        .zip(&cons.ineq_rhs)
        .map(|(a, b)| (a - b).max(0.0));
    let primal_raw = eq_gap.chain(in_excess).fold(0.0, f64::max);
    let primal_scale = inf_norm(&cons.eq_rhs)
        .max(inf_norm(&cons.ineq_rhs))
        .max(inf_norm(&ax_eq))
        .max(inf_norm(&ax_in));

    let qx: Vec<f64> = problem
        .quadratic
        .mul_vec(x)
        .iter()
        .zip(x)
        .map(|(q, xi)| 2.0 * (q - regularization * xi))
        .collect();
    let aty: Vec<f64> = cons
        .eq
        .transpose_mul_vec(eq_multipliers)
        .into_iter()
        .zip(cons.ineq.transpose_mul_vec(ineq_multipliers))
        .map(|(a, b)| a + b)
        .collect();
    let stationarity = qx
        .iter()
        .zip(&problem.linear)
        .zip(&aty)
        .map(|((q, c), a)| (q + c - a).abs())
        .fold(0.0, f64::max);
    let sign = ineq_multipliers.iter().fold(0.0, |m: f64, y| m.max(-y));
    let dual_scale = inf_norm(&problem.linear)
        .max(inf_norm(&qx))
        .max(inf_norm(&aty));

    let objective = problem.objective(x) - regularization * x.iter().map(|v| v * v).sum::<f64>();
    let complementarity = ineq_multipliers
        .iter()
        .zip(ax_in.iter().zip(&cons.ineq_rhs))
        .map(|(y, (a, b))| (y * (b - a)).abs())
        .fold(0.0, f64::max);

    KktResiduals {
        primal: primal_raw / (1.0 + primal_scale),
        dual: stationarity.max(sign) / (1.0 + dual_scale),
        complementarity: complementarity / (1.0 + objective.abs()),
    }
}
