//! JSON dump of one bargaining epoch, for offline certification.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bargain::{BargainOutcome, EpochProblem};
use crate::equilibrium::{self, Certificate};
use crate::error::{Error, Result};
use crate::model::{AssignmentMatrix, IncentiveMatrix, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochSnapshot {
    pub minute: u32,
    pub problem: EpochProblem,
    /// Padded assignment, row to column.
    pub permutation: Vec<usize>,
    /// `m x p`.
    pub ride_incentives: Matrix,
    /// `m x q`.
    pub charge_incentives: Matrix,
    pub epsilon: f64,
    pub converged: bool,
    pub sweeps: usize,
}

impl EpochSnapshot {
    pub fn new(problem: &EpochProblem, outcome: &BargainOutcome, epsilon: f64) -> Self {
        let (m, p, q) = (problem.m(), problem.p(), problem.q());
        let y = &outcome.incentives;
        EpochSnapshot {
            minute: problem.minute,
            problem: problem.clone(),
            permutation: outcome.assignment.permutation().to_vec(),
            ride_incentives: Matrix::from_fn(m, p, |i, j| y.ride(i, j)),
            charge_incentives: Matrix::from_fn(m, q, |i, k| y.charge(i, k)),
            epsilon,
            converged: outcome.converged(),
            sweeps: outcome.sweeps(),
        }
    }

    /// Checks that all parts agree on `m`, `p` and `q`.
    pub fn validate(&self) -> Result<()> {
        let pr = &self.problem;
        pr.costs.validate()?;
        let (m, p, q) = (pr.m(), pr.p(), pr.q());
        let bad = |msg: String| Err(Error::Invariant(format!("snapshot: {msg}")));
        if pr.ev_ids.len() != m || pr.ride_ids.len() != p || pr.charge_ids.len() != q {
            return bad("id lists do not match the cost matrices".into());
        }
        if pr.charge_facility.len() != q || pr.charge_facility.iter().any(|&f| f >= pr.facilities.len()) {
            return bad("charge requests refer to unknown facilities".into());
        }
        if (self.ride_incentives.rows(), self.ride_incentives.cols()) != (m, p) {
            return bad(format!("ride incentives are not {m}x{p}"));
        }
        if (self.charge_incentives.rows(), self.charge_incentives.cols()) != (m, q) {
            return bad(format!("charge incentives are not {m}x{q}"));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return bad(format!("epsilon {} is negative", self.epsilon));
        }
        AssignmentMatrix::new(m, p, q, self.permutation.clone())?;
        Ok(())
    }

    pub fn assignment(&self) -> Result<AssignmentMatrix> {
        let pr = &self.problem;
        AssignmentMatrix::new(pr.m(), pr.p(), pr.q(), self.permutation.clone())
    }

    pub fn incentives(&self) -> IncentiveMatrix {
        IncentiveMatrix::from_blocks(&self.ride_incentives, &self.charge_incentives)
    }

    pub fn certify(&self) -> Result<Certificate> {
        self.validate()?;
        equilibrium::certify(&self.problem, &self.assignment()?, &self.incentives(), self.epsilon)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: EpochSnapshot = serde_json::from_str(text)?;
        snap.validate()?;
        Ok(snap)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
        Self::from_json(&text).map_err(|e| Error::load(path, e.to_string()))
    }
}
