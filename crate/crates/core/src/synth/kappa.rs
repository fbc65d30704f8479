use serde::{Deserialize, Serialize};

use crate::poly::Polynomial;
use crate::system::InterconnectedSystem;

use super::SynthError;

/// Extended class-K function `eta` applied to a barrier value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassKFunction {
    /// `kappa * h`
    Linear { kappa: f64 },
    /// `kappa * h^3`
    Cubic { kappa: f64 },
}

impl Default for ClassKFunction {
    fn default() -> Self {
        ClassKFunction::Linear { kappa: 1.0 }
    }
}

impl ClassKFunction {
    pub fn linear(kappa: f64) -> Self {
        ClassKFunction::Linear { kappa }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            ClassKFunction::Linear { kappa } | ClassKFunction::Cubic { kappa } => kappa,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let k = self.kappa();
        if !(k > 0.0 && k.is_finite()) {
            return Err(SynthError::Invalid(format!("class-K gain must be positive, got {k}")));
        }
        Ok(())
    }

    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            ClassKFunction::Linear { kappa } => kappa * h,
            ClassKFunction::Cubic { kappa } => kappa * h * h * h,
        }
    }

    /// `eta(p)` as a polynomial.
    pub fn compose(&self, p: &Polynomial) -> Polynomial {
        match *self {
            ClassKFunction::Linear { kappa } => p.scale(kappa),
            ClassKFunction::Cubic { kappa } => p.powi(3).scale(kappa),
        }
    }
}

/// Weights `alpha_i^k` splitting each constraint among the protected sub-systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    /// Protected sub-systems (0-based), one row each.
    pub protected: Vec<usize>,
    /// `weights[row][k]`.
    pub weights: Vec<Vec<f64>>,
}

const SUM_TOL: f64 = 1e-9;

impl WeightMatrix {
    /// Checks entries lie in `[0, 1]` and every column sums to one, then renormalizes columns exactly.
    pub fn new(protected: Vec<usize>, mut weights: Vec<Vec<f64>>) -> Result<Self, SynthError> {
        if protected.is_empty() {
            return Err(SynthError::Invalid("no protected sub-systems to weight".into()));
        }
        if weights.len() != protected.len() {
            return Err(SynthError::Invalid(
                "one weight row per protected sub-system required".into(),
            ));
        }
        let k = weights[0].len();
        if weights.iter().any(|r| r.len() != k) {
            return Err(SynthError::Invalid("weight rows differ in length".into()));
        }
        for row in &weights {
            if let Some(a) = row.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(SynthError::Invalid(format!("weight {a} outside [0, 1]")));
            }
        }
        for c in 0..k {
            let s: f64 = weights.iter().map(|r| r[c]).sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(SynthError::Invalid(format!(
                    "weights of constraint {} sum to {s}",
                    c + 1
                )));
            }
            for r in weights.iter_mut() {
                r[c] /= s;
            }
        }
        Ok(WeightMatrix { protected, weights })
    }

    pub fn uniform(protected: &[usize], constraints: usize) -> Result<Self, SynthError> {
        let w = 1.0 / protected.len().max(1) as f64;
        WeightMatrix::new(protected.to_vec(), vec![vec![w; constraints]; protected.len()])
    }

    /// Uniform weights, except that a constraint depending only on one protected
    /// sub-system's states is assigned wholly to that sub-system.
    pub fn for_system(sys: &InterconnectedSystem) -> Result<Self, SynthError> {
        let mut m = WeightMatrix::uniform(sys.protected(), sys.safety().len())?;
        for (k, h) in sys.safety().iter().enumerate() {
            let owners: std::collections::BTreeSet<usize> = h
                .variables()
                .into_iter()
                .filter_map(|v| sys.owner_of_state(v.index as usize))
                .collect();
            if owners.len() == 1 {
                let owner = *owners.iter().next().expect("one owner");
                if let Some(row) = m.protected.iter().position(|&i| i == owner) {
                    for (r, w) in m.weights.iter_mut().enumerate() {
                        w[k] = if r == row { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn constraints(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// `alpha_i^k`; zero when `i` is not a row.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.protected
            .iter()
            .position(|&p| p == i)
            .map_or(0.0, |r| self.weights[r][k])
    }

    pub fn column_sum(&self, k: usize) -> f64 {
        self.weights.iter().map(|r| r[k]).sum()
    }
}
