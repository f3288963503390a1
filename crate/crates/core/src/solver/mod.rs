//! Concave QP solves with an independently verified KKT certificate.
//!
//! The iterations run in Clarabel's interior-point method. Whatever it
//! reports, the returned status is only `Optimal` when [`kkt::residuals`]
//! confirms the point within `kkt_tol`.

pub mod kkt;

use std::io::Write;
use std::sync::{Arc, Mutex};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultInfo, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kkt::KktResiduals;

use crate::qp::{CooMatrix, QpProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    /// Relative tolerance on every KKT residual.
    pub kkt_tol: f64,
    pub max_iterations: u32,
    /// Relative to the largest entry of `Q` (or absolute when `Q` is zero),
    /// added to the diagonal of `-Q`; selects a unique maximizer when the
    /// objective is flat along some feasible directions.
    pub regularization: f64,
    /// Recorded for reproducibility; the interior-point path is deterministic.
    pub seed: u64,
    /// Keep a per-iteration log in [`SolveResult::log`].
    pub record_iterations: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-6,
            max_iterations: 200_000,
            regularization: 1e-9,
            seed: 0,
            record_iterations: false,
        }
    }
}

impl SolveSettings {
    /// The diagonal shift actually applied to `problem`.
    pub fn effective_regularization(&self, problem: &QpProblem) -> f64 {
        let scale = problem
            .quadratic
            .entries()
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.2.abs()));
        if scale > 0.0 {
            self.regularization * scale
        } else {
            self.regularization
        }
    }

    pub fn with_tol(&self, kkt_tol: f64) -> Self {
        Self {
            kkt_tol,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.kkt_tol.is_nan()
            || self.kkt_tol <= 0.0
            || self.regularization.is_nan()
            || self.regularization < 0.0
            || self.max_iterations == 0
        {
            return Err(SolverError::Settings(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    /// `x'Qx + c'x` without the regularization term.
    pub objective: f64,
    pub status: SolveStatus,
    pub residuals: KktResiduals,
    pub iterations: u32,
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    pub log: Vec<IterationRecord>,
    /// Diagonal shift used, see [`SolveSettings::effective_regularization`].
    pub regularization: f64,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver settings: {0}")]
    Settings(String),
    #[error("solver setup failed: {0}")]
    Setup(String),
    #[error("objective is unbounded above (the problem is not concave on its feasible set)")]
    Unbounded,
    #[error("solver hit a numerical error after {iterations} iterations")]
    Numerical { iterations: u32 },
    #[error(
        "solver reported {reported}, but the KKT check gives residuals {residuals:?} above {tol}"
    )]
    CertificateMismatch {
        reported: String,
        residuals: KktResiduals,
        tol: f64,
    },
}

fn to_csc(m: &CooMatrix, keep: impl Fn(usize, usize) -> bool, scale: f64) -> CscMatrix<f64> {
    let mut colptr = vec![0usize; m.cols() + 1];
    let mut rowval = Vec::with_capacity(m.nnz());
    let mut nzval = Vec::with_capacity(m.nnz());
    // Canonical CooMatrix entries are already column-major sorted.
    for &(r, c, v) in m.entries() {
        if keep(r, c) {
            colptr[c + 1] += 1;
            rowval.push(r);
            nzval.push(scale * v);
        }
    }
    for c in 0..m.cols() {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m.rows(), m.cols(), colptr, rowval, nzval)
}

fn stack(top: &CooMatrix, bottom: &CooMatrix) -> CooMatrix {
    let offset = top.rows();
    let mut entries: Vec<_> = top.entries().to_vec();
    entries.extend(bottom.entries().iter().map(|&(r, c, v)| (r + offset, c, v)));
    CooMatrix::from_triplets(offset + bottom.rows(), top.cols(), entries)
}

/// Maximizes `x'Qx - eps |x|^2 + c'x` over the problem's constraints.
pub fn solve_qp(problem: &QpProblem, settings: &SolveSettings) -> Result<SolveResult, SolverError> {
    settings.validate()?;
    let n = problem.dim();
    let cons = &problem.constraints;
    let (m_eq, m_in) = (cons.eq_rhs.len(), cons.ineq_rhs.len());

    // Clarabel minimizes 1/2 x'Px + q'x with P upper triangular.
    let eps = settings.effective_regularization(problem);
    let mut hessian = problem.quadratic.scaled(-2.0);
    for k in 0..n {
        hessian.push(k, k, 2.0 * eps);
    }
    hessian.canonicalize();
    let p = to_csc(&hessian, |r, c| r <= c, 1.0);
    let q: Vec<f64> = problem.linear.iter().map(|c| -c).collect();
    let a = to_csc(&stack(&cons.eq, &cons.ineq), |_, _| true, 1.0);
    let b: Vec<f64> = cons.eq_rhs.iter().chain(&cons.ineq_rhs).copied().collect();
    let mut cones = Vec::new();
    if m_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(m_eq));
    }
    if m_in > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(m_in));
    }

    let log = Arc::new(Mutex::new(Vec::new()));
    let mut total_iterations = 0;
    let mut rejected = None;
    // Loose inner tolerances converge fastest; tighten only when the
    // independent check rejects the point.
    for factor in [0.1, 0.01, 0.001] {
        let inner_tol = (factor * settings.kkt_tol).clamp(1e-10, 1e-3);
        let clarabel_settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(
                settings
                    .max_iterations
                    .saturating_sub(total_iterations)
                    .max(1),
            )
            .tol_gap_abs(inner_tol)
            .tol_gap_rel(inner_tol)
            .tol_feas(inner_tol)
            .build()
            .map_err(|e| SolverError::Setup(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, clarabel_settings)
            .map_err(|e| SolverError::Setup(format!("{e:?}")))?;
        if settings.record_iterations {
            let sink = Arc::clone(&log);
            solver.set_termination_callback(move |info: &DefaultInfo<f64>| {
                sink.lock().expect("log lock").push(IterationRecord {
                    iteration: info.iterations,
                    objective: -info.cost_primal,
                    primal_residual: info.res_primal,
                    dual_residual: info.res_dual,
                    relative_gap: info.gap_rel,
                });
                false
            });
        }
        solver.solve();
        solver.unset_termination_callback();

        let sol = &solver.solution;
        total_iterations += sol.iterations;
        let x = sol.x.clone();
        let (eq_multipliers, ineq_multipliers) = (sol.z[..m_eq].to_vec(), sol.z[m_eq..].to_vec());
        let residuals = kkt::residuals(problem, eps, &x, &eq_multipliers, &ineq_multipliers);
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                if !residuals.within(settings.kkt_tol) {
                    rejected = Some((format!("{:?}", sol.status), residuals));
                    if total_iterations < settings.max_iterations {
                        continue;
                    }
                    break;
                }
                SolveStatus::Optimal
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                return Err(SolverError::Unbounded)
            }
            SolverStatus::NumericalError if rejected.is_none() => {
                return Err(SolverError::Numerical {
                    iterations: total_iterations,
                })
            }
            SolverStatus::NumericalError => break,
            _ => SolveStatus::IterationLimit,
        };
        drop(solver);
        let log = Arc::try_unwrap(log)
            .ok()
            .and_then(|m| m.into_inner().ok())
            .unwrap_or_default();
        return Ok(SolveResult {
            objective: problem.objective(&x),
            x,
            status,
            residuals,
            iterations: total_iterations,
            eq_multipliers,
            ineq_multipliers,
            log,
            regularization: eps,
        });
    }
    let (reported, residuals) = rejected.expect("at least one rejected attempt");
    Err(SolverError::CertificateMismatch {
        reported,
        residuals,
        tol: settings.kkt_tol,
    })
}

/// Writes an iteration log as CSV.
pub fn write_iteration_log<W: Write>(log: &[IterationRecord], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "iteration,objective,primal_residual,dual_residual,relative_gap"
    )?;
    for r in log {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?}",
            r.iteration, r.objective, r.primal_residual, r.dual_residual, r.relative_gap
        )?;
    }
    Ok(())
}
