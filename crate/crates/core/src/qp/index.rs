use crate::model::{DecisionVector, ScenarioDispatch};

/// Variable family within one investor's block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Capacity,
    Power,
    Charge,
    Discharge,
    Energy,
}

/// Flat layout of all decision variables: investor-major; within an investor
/// `S`, `P`, then per scenario `T` charge, `T` discharge and `T + 1` energy
/// entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableIndex {
    investors: usize,
    scenarios: usize,
    slots: usize,
}

impl VariableIndex {
    pub fn new(investors: usize, scenarios: usize, slots: usize) -> Self {
        Self {
            investors,
            scenarios,
            slots,
        }
    }

    pub fn investors(&self) -> usize {
        self.investors
    }

    pub fn scenarios(&self) -> usize {
        self.scenarios
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    fn scenario_len(&self) -> usize {
        3 * self.slots + 1
    }

    /// Variables per investor, `2 + |scenarios| (3T + 1)`.
    pub fn block_len(&self) -> usize {
        2 + self.scenarios * self.scenario_len()
    }

    pub fn dim(&self) -> usize {
        self.investors * self.block_len()
    }

    /// Offset of a variable, or `None` if any argument is out of range.
    /// `scenario` and `slot` are ignored for capacity and power.
    pub fn lookup(
        &self,
        investor: usize,
        kind: VarKind,
        scenario: usize,
        slot: usize,
    ) -> Option<usize> {
        if investor >= self.investors {
            return None;
        }
        let base = investor * self.block_len();
        let per_scenario = |within: usize, limit: usize| {
            (scenario < self.scenarios && slot < limit)
                .then(|| base + 2 + scenario * self.scenario_len() + within + slot)
        };
        match kind {
            VarKind::Capacity => Some(base),
            VarKind::Power => Some(base + 1),
            VarKind::Charge => per_scenario(0, self.slots),
            VarKind::Discharge => per_scenario(self.slots, self.slots),
            VarKind::Energy => per_scenario(2 * self.slots, self.slots + 1),
        }
    }

    pub fn capacity(&self, i: usize) -> usize {
        self.at(i, VarKind::Capacity, 0, 0)
    }

    pub fn power(&self, i: usize) -> usize {
        self.at(i, VarKind::Power, 0, 0)
    }

    pub fn charge(&self, i: usize, w: usize, t: usize) -> usize {
        self.at(i, VarKind::Charge, w, t)
    }

    pub fn discharge(&self, i: usize, w: usize, t: usize) -> usize {
        self.at(i, VarKind::Discharge, w, t)
    }

    pub fn energy(&self, i: usize, w: usize, t: usize) -> usize {
        self.at(i, VarKind::Energy, w, t)
    }

    fn at(&self, i: usize, kind: VarKind, w: usize, t: usize) -> usize {
        self.lookup(i, kind, w, t).unwrap_or_else(|| {
            panic!("no variable {kind:?} for investor {i}, scenario {w}, slot {t}")
        })
    }

    pub fn pack(&self, decisions: &[DecisionVector]) -> Vec<f64> {
        assert_eq!(decisions.len(), self.investors);
        let mut x = vec![0.0; self.dim()];
        for (i, d) in decisions.iter().enumerate() {
            x[self.capacity(i)] = d.capacity;
            x[self.power(i)] = d.power;
            for (w, sd) in d.dispatch.iter().enumerate() {
                for t in 0..self.slots {
                    x[self.charge(i, w, t)] = sd.charge[t];
                    x[self.discharge(i, w, t)] = sd.discharge[t];
                }
                for t in 0..=self.slots {
                    x[self.energy(i, w, t)] = sd.energy[t];
                }
            }
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> Vec<DecisionVector> {
        assert_eq!(x.len(), self.dim());
        (0..self.investors)
            .map(|i| DecisionVector {
                capacity: x[self.capacity(i)],
                power: x[self.power(i)],
                dispatch: (0..self.scenarios)
                    .map(|w| ScenarioDispatch {
                        charge: (0..self.slots).map(|t| x[self.charge(i, w, t)]).collect(),
                        discharge: (0..self.slots)
                            .map(|t| x[self.discharge(i, w, t)])
                            .collect(),
                        energy: (0..=self.slots).map(|t| x[self.energy(i, w, t)]).collect(),
                    })
                    .collect(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_partition_the_vector() {
        let idx = VariableIndex::new(3, 2, 4);
        assert_eq!(idx.dim(), 3 * (2 + 2 * 13));
        let mut seen = vec![false; idx.dim()];
        for i in 0..3 {
            for k in [idx.capacity(i), idx.power(i)] {
                assert!(!std::mem::replace(&mut seen[k], true));
            }
            for w in 0..2 {
                for t in 0..4 {
                    for k in [idx.charge(i, w, t), idx.discharge(i, w, t)] {
                        assert!(!std::mem::replace(&mut seen[k], true));
                    }
                }
                for t in 0..=4 {
                    assert!(!std::mem::replace(&mut seen[idx.energy(i, w, t)], true));
                }
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn out_of_range_lookups() {
        let idx = VariableIndex::new(1, 1, 2);
        assert_eq!(idx.dim(), 9);
        assert_eq!(idx.lookup(1, VarKind::Capacity, 0, 0), None);
        assert_eq!(idx.lookup(0, VarKind::Charge, 0, 2), None);
        assert_eq!(idx.lookup(0, VarKind::Energy, 0, 2), Some(8));
        assert_eq!(idx.lookup(0, VarKind::Energy, 1, 0), None);
    }

    #[test]
    fn pack_unpack() {
        let idx = VariableIndex::new(2, 1, 2);
        let x: Vec<f64> = (0..idx.dim()).map(|k| k as f64).collect();
        assert_eq!(idx.pack(&idx.unpack(&x)), x);
    }
}
