//! Assembly of the centralized equilibrium QP and of single-investor
//! best-response QPs.
//!
//! Objectives are maximized and stored as `x'Qx + c'x` with `Q` symmetric in
//! full (both triangles). All storage constraints are homogeneous, so every
//! right-hand side is zero; the vectors are kept for generality.

mod export;
mod index;
mod sparse;

pub use export::{read_text, write_text};
pub use index::{VarKind, VariableIndex};
pub use sparse::CooMatrix;

use thiserror::Error;

use crate::model::{
    aggregate_net_discharge, DecisionVector, GameInstance, InvestorSpec, ModelError,
};

#[derive(Debug, Error)]
pub enum QpError {
    #[error(
        "scenario {scenario} slot {slot}: slope {slope} is not positive, objective is not concave"
    )]
    NonConcave {
        scenario: String,
        slot: usize,
        slope: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("QP text format, line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Which storage constraint a row encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintFamily {
    DischargeLimit,
    ChargeLimit,
    DischargeNonNegative,
    ChargeNonNegative,
    EnergyBalance,
    EnergyCapacity,
    EnergyNonNegative,
    Periodicity,
    MinDuration,
    MaxDuration,
    CapacityNonNegative,
    PowerNonNegative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowTag {
    pub family: ConstraintFamily,
    pub investor: usize,
    pub scenario: Option<usize>,
    pub slot: Option<usize>,
}

/// `eq * x = eq_rhs` and `ineq * x <= ineq_rhs`, with a tag per row.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraints {
    pub eq: CooMatrix,
    pub eq_rhs: Vec<f64>,
    pub eq_tags: Vec<RowTag>,
    pub ineq: CooMatrix,
    pub ineq_rhs: Vec<f64>,
    pub ineq_tags: Vec<RowTag>,
}

impl LinearConstraints {
    fn empty(dim: usize) -> Self {
        Self {
            eq: CooMatrix::new(0, dim),
            eq_rhs: Vec::new(),
            eq_tags: Vec::new(),
            ineq: CooMatrix::new(0, dim),
            ineq_rhs: Vec::new(),
            ineq_tags: Vec::new(),
        }
    }

    fn push_eq(&mut self, tag: RowTag, terms: &[(usize, f64)], rhs: f64) {
        let row = self.eq.add_row();
        terms.iter().for_each(|&(c, v)| self.eq.push(row, c, v));
        self.eq_rhs.push(rhs);
        self.eq_tags.push(tag);
    }

    fn push_ineq(&mut self, tag: RowTag, terms: &[(usize, f64)], rhs: f64) {
        let row = self.ineq.add_row();
        terms.iter().for_each(|&(c, v)| self.ineq.push(row, c, v));
        self.ineq_rhs.push(rhs);
        self.ineq_tags.push(tag);
    }

    fn finish(mut self) -> Self {
        self.eq.canonicalize();
        self.ineq.canonicalize();
        self
    }

    /// Largest violation of any row at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq
            .mul_vec(x)
            .iter()
            .zip(&self.eq_rhs)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max);
        let ineq = self
            .ineq
            .mul_vec(x)
            .iter()
            .zip(&self.ineq_rhs)
            .map(|(ax, b)| ax - b)
            .fold(0.0, f64::max);
        eq.max(ineq)
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }
}

/// Maximize `x'Qx + c'x` subject to linear constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub quadratic: CooMatrix,
    pub linear: Vec<f64>,
    pub constraints: LinearConstraints,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.quadratic.quadratic_form(x)
            + self.linear.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// `2Qx + c`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.quadratic
            .mul_vec(x)
            .into_iter()
            .zip(&self.linear)
            .map(|(qx, c)| 2.0 * qx + c)
            .collect()
    }
}

fn check_concave(instance: &GameInstance) -> Result<(), QpError> {
    for s in instance.scenarios() {
        if let Some((slot, &slope)) = s
            .slope
            .iter()
            .enumerate()
            .find(|(_, a)| a.is_nan() || **a <= 0.0)
        {
            return Err(QpError::NonConcave {
                scenario: s.id.clone(),
                slot,
                slope,
            });
        }
    }
    Ok(())
}

fn investor_rows(cons: &mut LinearConstraints, spec: &InvestorSpec, idx: &VariableIndex, i: usize) {
    let (s, p) = (idx.capacity(i), idx.power(i));
    let tag = |family, scenario, slot| RowTag {
        family,
        investor: i,
        scenario,
        slot,
    };
    use ConstraintFamily::*;
    for w in 0..idx.scenarios() {
        for t in 0..idx.slots() {
            let (ch, dis) = (idx.charge(i, w, t), idx.discharge(i, w, t));
            cons.push_ineq(
                tag(DischargeLimit, Some(w), Some(t)),
                &[(dis, 1.0), (p, -1.0)],
                0.0,
            );
            cons.push_ineq(
                tag(DischargeNonNegative, Some(w), Some(t)),
                &[(dis, -1.0)],
                0.0,
            );
            cons.push_ineq(
                tag(ChargeLimit, Some(w), Some(t)),
                &[(ch, 1.0), (p, -1.0)],
                0.0,
            );
            cons.push_ineq(tag(ChargeNonNegative, Some(w), Some(t)), &[(ch, -1.0)], 0.0);
            cons.push_eq(
                tag(EnergyBalance, Some(w), Some(t)),
                &[
                    (idx.energy(i, w, t + 1), 1.0),
                    (idx.energy(i, w, t), -1.0),
                    (ch, -spec.charge_efficiency),
                    (dis, 1.0 / spec.discharge_efficiency),
                ],
                0.0,
            );
        }
        for t in 0..=idx.slots() {
            let e = idx.energy(i, w, t);
            cons.push_ineq(
                tag(EnergyCapacity, Some(w), Some(t)),
                &[(e, 1.0), (s, -1.0)],
                0.0,
            );
            cons.push_ineq(tag(EnergyNonNegative, Some(w), Some(t)), &[(e, -1.0)], 0.0);
        }
        cons.push_eq(
            tag(Periodicity, Some(w), None),
            &[
                (idx.energy(i, w, 0), 1.0),
                (idx.energy(i, w, idx.slots()), -1.0),
            ],
            0.0,
        );
    }
    cons.push_ineq(
        tag(MinDuration, None, None),
        &[(p, spec.min_duration), (s, -1.0)],
        0.0,
    );
    cons.push_ineq(
        tag(MaxDuration, None, None),
        &[(s, 1.0), (p, -spec.max_duration)],
        0.0,
    );
    cons.push_ineq(tag(CapacityNonNegative, None, None), &[(s, -1.0)], 0.0);
    cons.push_ineq(tag(PowerNonNegative, None, None), &[(p, -1.0)], 0.0);
}

/// Storage constraints of every investor over `index`.
pub fn build_constraints(instance: &GameInstance, index: &VariableIndex) -> LinearConstraints {
    let mut cons = LinearConstraints::empty(index.dim());
    for (i, spec) in instance.investors().iter().enumerate() {
        investor_rows(&mut cons, spec, index, i);
    }
    cons.finish()
}

pub fn variable_index(instance: &GameInstance) -> VariableIndex {
    VariableIndex::new(
        instance.investor_count(),
        instance.scenarios().len(),
        instance.slots(),
    )
}

/// Adds `w * q_i * q_j` with `q = discharge - charge` at (scenario, slot).
fn add_net_product(
    quad: &mut CooMatrix,
    idx: &VariableIndex,
    (i, j): (usize, usize),
    w: usize,
    t: usize,
    weight: f64,
) {
    let (di, ci) = (idx.discharge(i, w, t), idx.charge(i, w, t));
    let (dj, cj) = (idx.discharge(j, w, t), idx.charge(j, w, t));
    quad.add_quadratic(di, dj, weight);
    quad.add_quadratic(di, cj, -weight);
    quad.add_quadratic(ci, dj, -weight);
    quad.add_quadratic(ci, cj, weight);
}

/// Linear (price-taker) part shared by the equilibrium and best-response
/// objectives, for investor `i` placed at block `slot_i` of `idx`. `shift`
/// lowers the baseline price per (scenario, slot).
fn add_linear_terms(
    linear: &mut [f64],
    instance: &GameInstance,
    idx: &VariableIndex,
    i: usize,
    slot_i: usize,
    shift: impl Fn(usize, usize) -> f64,
) {
    let spec = &instance.investors()[i];
    let kappa = spec.cost_scale();
    linear[idx.capacity(slot_i)] -= kappa * spec.capacity_cost;
    linear[idx.power(slot_i)] -= kappa * spec.power_cost;
    for (w, s) in instance.scenarios().iter().enumerate() {
        for t in 0..s.slots() {
            let price = s.baseline[t] - shift(w, t);
            linear[idx.charge(slot_i, w, t)] += s.probability * (-price - spec.charge_cost);
            linear[idx.discharge(slot_i, w, t)] += s.probability * (price - spec.discharge_cost);
        }
    }
}

/// Objective of the centralized problem: total profit plus the expected
/// pairwise competition term `sum_{i<j} a q_i q_j`.
pub fn build_equilibrium_objective(
    instance: &GameInstance,
    index: &VariableIndex,
) -> Result<(CooMatrix, Vec<f64>), QpError> {
    check_concave(instance)?;
    let n = index.dim();
    let mut linear = vec![0.0; n];
    let mut quad = CooMatrix::new(n, n);
    let investors = instance.investor_count();
    for i in 0..investors {
        add_linear_terms(&mut linear, instance, index, i, i, |_, _| 0.0);
    }
    for (w, s) in instance.scenarios().iter().enumerate() {
        for t in 0..s.slots() {
            let weight = s.probability * s.slope[t];
            for i in 0..investors {
                // Own revenue: -a q_i (sum_j q_j).
                for j in 0..investors {
                    add_net_product(&mut quad, index, (i, j), w, t, -weight);
                }
                for j in i + 1..investors {
                    add_net_product(&mut quad, index, (i, j), w, t, weight);
                }
            }
        }
    }
    quad.canonicalize();
    Ok((quad, linear))
}

/// Centralized QP whose maximizer is a Nash equilibrium.
pub fn build_equilibrium_qp(
    instance: &GameInstance,
) -> Result<(VariableIndex, QpProblem), QpError> {
    let index = variable_index(instance);
    let (quadratic, linear) = build_equilibrium_objective(instance, &index)?;
    let constraints = build_constraints(instance, &index);
    Ok((
        index,
        QpProblem {
            quadratic,
            linear,
            constraints,
        },
    ))
}

/// Investor `i`'s profit maximization over its own block with every other
/// entry of `decisions` held fixed. The returned problem uses a single-investor
/// [`VariableIndex`]; its objective equals `f_i` exactly.
pub fn build_best_response(
    instance: &GameInstance,
    i: usize,
    decisions: &[DecisionVector],
) -> Result<(VariableIndex, QpProblem), QpError> {
    check_concave(instance)?;
    instance.check_decisions(decisions)?;
    if i >= instance.investor_count() {
        return Err(ModelError::InvestorIndex {
            index: i,
            count: instance.investor_count(),
        }
        .into());
    }
    let index = VariableIndex::new(1, instance.scenarios().len(), instance.slots());
    let rivals = |w: usize, t: usize| {
        aggregate_net_discharge(decisions, w, t) - decisions[i].dispatch[w].net_discharge(t)
    };
    let n = index.dim();
    let mut linear = vec![0.0; n];
    add_linear_terms(&mut linear, instance, &index, i, 0, |w, t| {
        instance.scenarios().scenarios()[w].slope[t] * rivals(w, t)
    });
    let mut quad = CooMatrix::new(n, n);
    for (w, s) in instance.scenarios().iter().enumerate() {
        for t in 0..s.slots() {
            add_net_product(&mut quad, &index, (0, 0), w, t, -s.probability * s.slope[t]);
        }
    }
    quad.canonicalize();
    let mut constraints = LinearConstraints::empty(n);
    investor_rows(&mut constraints, &instance.investors()[i], &index, 0);
    Ok((
        index,
        QpProblem {
            quadratic: quad,
            linear,
            constraints: constraints.finish(),
        },
    ))
}
