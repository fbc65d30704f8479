//! Interconnected polynomial systems: sub-system dynamics, input boxes, the
//! protected/vulnerable partition and the safety constraints.

mod sampler;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::poly::{PolyError, PolyMatrix, PolyVector, Polynomial, Scope, VarId};

pub use sampler::SafetyDomainSampler;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("sub-system index {0} out of range")]
    Subsystem(usize),
    #[error("constraint index {0} out of range")]
    Constraint(usize),
    #[error("{0}")]
    Shape(String),
    #[error("system is invalid: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// One sub-system. Every polynomial lives in the global scope of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemModel {
    pub n: usize,
    pub r: usize,
    pub f_slf: PolyVector,
    pub g_slf: PolyMatrix,
    pub f_cpl: PolyVector,
    pub g_cpl: PolyMatrix,
    pub input_lo: Vec<f64>,
    pub input_hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectedSystem {
    subsystems: Vec<SubsystemModel>,
    protected: Vec<usize>,
    vulnerable: Vec<usize>,
    safety: Vec<Polynomial>,
    bounding_box: Vec<(f64, f64)>,
    state_offsets: Vec<usize>,
    input_offsets: Vec<usize>,
    scope: Scope,
}

impl InterconnectedSystem {
    /// Checks shapes and scopes only; semantic checks are in [`InterconnectedSystem::validate`].
    pub fn new(
        subsystems: Vec<SubsystemModel>,
        protected: Vec<usize>,
        vulnerable: Vec<usize>,
        safety: Vec<Polynomial>,
        bounding_box: Vec<(f64, f64)>,
    ) -> Result<Self, SystemError> {
        let mut state_offsets = Vec::with_capacity(subsystems.len());
        let mut input_offsets = Vec::with_capacity(subsystems.len());
        let (mut n, mut r) = (0, 0);
        for s in &subsystems {
            state_offsets.push(n);
            input_offsets.push(r);
            n += s.n;
            r += s.r;
        }
        let scope = Scope::states_and_inputs(n, r);
        for (i, s) in subsystems.iter().enumerate() {
            let shape_err = |what: &str| SystemError::Shape(format!("sub-system {}: {what}", i + 1));
            if s.f_slf.len() != s.n || s.f_cpl.len() != s.n {
                return Err(shape_err("drift vector length differs from state dimension"));
            }
            if s.g_slf.shape() != (s.n, s.r) || s.g_cpl.shape() != (s.n, s.r) {
                return Err(shape_err("input matrix shape differs from (states, inputs)"));
            }
            if s.input_lo.len() != s.r || s.input_hi.len() != s.r {
                return Err(shape_err("input bounds length differs from input dimension"));
            }
            for sc in [s.f_slf.scope(), s.f_cpl.scope(), s.g_slf.scope(), s.g_cpl.scope()] {
                if sc != &scope {
                    return Err(shape_err("dynamics polynomials must use the global scope"));
                }
            }
        }
        if safety.iter().any(|h| h.scope() != &scope) {
            return Err(SystemError::Shape("safety functions must use the global scope".into()));
        }
        if bounding_box.len() != n {
            return Err(SystemError::Shape(format!(
                "bounding box has {} intervals for {n} states",
                bounding_box.len()
            )));
        }
        Ok(InterconnectedSystem {
            subsystems,
            protected,
            vulnerable,
            safety,
            bounding_box,
            state_offsets,
            input_offsets,
            scope,
        })
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn subsystems(&self) -> &[SubsystemModel] {
        &self.subsystems
    }

    pub fn subsystem(&self, i: usize) -> Result<&SubsystemModel, SystemError> {
        self.subsystems.get(i).ok_or(SystemError::Subsystem(i))
    }

    pub fn num_subsystems(&self) -> usize {
        self.subsystems.len()
    }

    pub fn protected(&self) -> &[usize] {
        &self.protected
    }

    pub fn vulnerable(&self) -> &[usize] {
        &self.vulnerable
    }

    pub fn safety(&self) -> &[Polynomial] {
        &self.safety
    }

    pub fn constraint(&self, k: usize) -> Result<&Polynomial, SystemError> {
        self.safety.get(k).ok_or(SystemError::Constraint(k))
    }

    pub fn bounding_box(&self) -> &[(f64, f64)] {
        &self.bounding_box
    }

    pub fn num_states(&self) -> usize {
        self.subsystems.iter().map(|s| s.n).sum()
    }

    pub fn num_inputs(&self) -> usize {
        self.subsystems.iter().map(|s| s.r).sum()
    }

    pub fn state_vars(&self, i: usize) -> Result<Vec<VarId>, SystemError> {
        let s = self.subsystem(i)?;
        Ok((0..s.n).map(|z| VarId::state(self.state_offsets[i] + z)).collect())
    }

    pub fn input_vars(&self, i: usize) -> Result<Vec<VarId>, SystemError> {
        let s = self.subsystem(i)?;
        Ok((0..s.r).map(|j| VarId::input(self.input_offsets[i] + j)).collect())
    }

    pub fn state_offset(&self, i: usize) -> usize {
        self.state_offsets[i]
    }

    pub fn input_offset(&self, i: usize) -> usize {
        self.input_offsets[i]
    }

    /// Owning sub-system of a global state index.
    pub fn owner_of_state(&self, global: usize) -> Option<usize> {
        (0..self.subsystems.len())
            .find(|&i| global >= self.state_offsets[i] && global < self.state_offsets[i] + self.subsystems[i].n)
    }

    /// Input-box corners of sub-system `i` (all `2^r` combinations, lowest first).
    pub fn input_corners(&self, i: usize) -> Result<Vec<Vec<f64>>, SystemError> {
        let s = self.subsystem(i)?;
        Ok((0..1usize << s.r)
            .map(|mask| {
                (0..s.r)
                    .map(|j| {
                        if mask >> j & 1 == 1 {
                            s.input_hi[j]
                        } else {
                            s.input_lo[j]
                        }
                    })
                    .collect()
            })
            .collect())
    }

    fn input_vector(&self, i: usize) -> Result<PolyVector, SystemError> {
        let vars = self.input_vars(i)?;
        let entries = vars
            .into_iter()
            .map(|v| Polynomial::var(&self.scope, v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyVector::new(&self.scope, entries)?)
    }

    /// `f_slf + g_slf u_i`.
    pub fn self_dynamics(&self, i: usize) -> Result<PolyVector, SystemError> {
        let s = self.subsystem(i)?;
        let gu = s.g_slf.mul_vector(&self.input_vector(i)?)?;
        Ok(s.f_slf.checked_add(&gu)?)
    }

    /// `f_cpl + g_cpl u_i`.
    pub fn coupled_dynamics(&self, i: usize) -> Result<PolyVector, SystemError> {
        let s = self.subsystem(i)?;
        let gu = s.g_cpl.mul_vector(&self.input_vector(i)?)?;
        Ok(s.f_cpl.checked_add(&gu)?)
    }

    /// Full block dynamics of sub-system `i`.
    pub fn block_dynamics(&self, i: usize) -> Result<PolyVector, SystemError> {
        Ok(self.self_dynamics(i)?.checked_add(&self.coupled_dynamics(i)?)?)
    }

    /// Directional derivative `dp/dx_i . field` for a field over sub-system `i`'s states.
    pub fn lie_along(&self, p: &Polynomial, i: usize, field: &PolyVector) -> Result<Polynomial, SystemError> {
        let mut out = Polynomial::zero(&self.scope);
        for (z, v) in self.state_vars(i)?.into_iter().enumerate() {
            let d = p.differentiate(v)?;
            if !d.is_zero() {
                out = out.checked_add(&d.checked_mul(field.get(z))?)?;
            }
        }
        Ok(out)
    }

    /// `dh^k/dx_i . F_i,slf(x_i, u_i)`.
    pub fn lie_self(&self, i: usize, k: usize) -> Result<Polynomial, SystemError> {
        let h = self.constraint(k)?;
        self.lie_along(h, i, &self.self_dynamics(i)?)
    }

    /// `sum_{i in subset} dh^k/dx_i . F_i,cpl(x, u_i)`.
    pub fn lie_coupled_sum(&self, k: usize, subset: &[usize]) -> Result<Polynomial, SystemError> {
        let h = self.constraint(k)?;
        let mut out = Polynomial::zero(&self.scope);
        for &i in subset {
            out = out.checked_add(&self.lie_along(h, i, &self.coupled_dynamics(i)?)?)?;
        }
        Ok(out)
    }

    /// `dh^k/dx_i . F_i(x, u_i)`.
    pub fn lie_block(&self, i: usize, k: usize) -> Result<Polynomial, SystemError> {
        let h = self.constraint(k)?;
        self.lie_along(h, i, &self.block_dynamics(i)?)
    }

    /// Global vector field `F(x, u)` stacked over sub-systems.
    pub fn assemble_global(&self) -> Result<PolyVector, SystemError> {
        let mut entries = Vec::with_capacity(self.num_states());
        for i in 0..self.subsystems.len() {
            entries.extend(self.block_dynamics(i)?.into_entries());
        }
        Ok(PolyVector::new(&self.scope, entries)?)
    }

    /// Violated invariants; empty when the system is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n_sub = self.subsystems.len();
        for (i, s) in self.subsystems.iter().enumerate() {
            let own: BTreeSet<VarId> = self.state_vars(i).unwrap_or_default().into_iter().collect();
            let mut self_vars = BTreeSet::new();
            for p in s.f_slf.iter() {
                self_vars.extend(p.variables());
            }
            for r in 0..s.n {
                for c in 0..s.r {
                    self_vars.extend(s.g_slf.get(r, c).variables());
                }
            }
            if let Some(v) = self_vars.iter().find(|v| !own.contains(v)) {
                out.push(format!(
                    "sub-system {}: self-dynamics reference {v} outside its own states",
                    i + 1
                ));
            }
            let mut cpl_vars = BTreeSet::new();
            for p in s.f_cpl.iter() {
                cpl_vars.extend(p.variables());
            }
            for r in 0..s.n {
                for c in 0..s.r {
                    cpl_vars.extend(s.g_cpl.get(r, c).variables());
                }
            }
            if let Some(v) = cpl_vars.iter().find(|v| v.is_input()) {
                out.push(format!(
                    "sub-system {}: coupled dynamics reference input {v} directly",
                    i + 1
                ));
            }
            for j in 0..s.r {
                if !(s.input_lo[j] < s.input_hi[j]) || !s.input_lo[j].is_finite() || !s.input_hi[j].is_finite() {
                    out.push(format!(
                        "sub-system {}: input channel {} needs finite lo < hi",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        let mut seen = vec![0u8; n_sub];
        for &i in self.protected.iter().chain(&self.vulnerable) {
            if i >= n_sub {
                out.push(format!("partition references unknown sub-system {}", i + 1));
            } else {
                seen[i] += 1;
            }
        }
        for (i, &c) in seen.iter().enumerate() {
            if c == 0 {
                out.push(format!(
                    "partition: sub-system {} is neither protected nor vulnerable",
                    i + 1
                ));
            } else if c > 1 {
                out.push(format!("partition: sub-system {} appears more than once", i + 1));
            }
        }
        for (k, h) in self.safety.iter().enumerate() {
            if h.variables().iter().any(|v| v.is_input()) {
                out.push(format!(
                    "constraint {}: safety function references input variable",
                    k + 1
                ));
            }
        }
        for (z, &(lo, hi)) in self.bounding_box.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                out.push(format!("bounding box interval for x{} needs finite lo < hi", z + 1));
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), SystemError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SystemError::Invalid(v))
        }
    }

    /// Copy with a different partition.
    pub fn with_partition(&self, protected: Vec<usize>, vulnerable: Vec<usize>) -> Self {
        InterconnectedSystem {
            protected,
            vulnerable,
            ..self.clone()
        }
    }

    /// Copy with a different input box for sub-system `i`.
    pub fn with_input_box(&self, i: usize, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SystemError> {
        let mut out = self.clone();
        let s = out.subsystems.get_mut(i).ok_or(SystemError::Subsystem(i))?;
        if lo.len() != s.r || hi.len() != s.r {
            return Err(SystemError::Shape(
                "input bounds length differs from input dimension".into(),
            ));
        }
        s.input_lo = lo;
        s.input_hi = hi;
        Ok(out)
    }

    /// Copy with different safety constraints.
    pub fn with_safety(&self, safety: Vec<Polynomial>) -> Result<Self, SystemError> {
        if safety.iter().any(|h| h.scope() != &self.scope) {
            return Err(SystemError::Shape("safety functions must use the global scope".into()));
        }
        Ok(InterconnectedSystem { safety, ..self.clone() })
    }

    /// Dense point `[x..., u...]` in scope order.
    pub fn dense_point(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(x.len() + u.len());
        p.extend_from_slice(x);
        p.extend_from_slice(u);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    // Two scalar sub-systems: x1' = -x1 + u1 + x2, x2' = -2 x2 + u2.
    fn toy() -> InterconnectedSystem {
        let s = Scope::states_and_inputs(2, 2);
        let x = |i| Polynomial::var(&s, VarId::state(i)).unwrap();
        let one = Polynomial::constant(&s, 1.0);
        let sub1 = SubsystemModel {
            n: 1,
            r: 1,
            f_slf: PolyVector::new(&s, vec![x(0).scale(-1.0)]).unwrap(),
            g_slf: PolyMatrix::new(&s, 1, 1, vec![one.clone()]).unwrap(),
            f_cpl: PolyVector::new(&s, vec![x(1)]).unwrap(),
            g_cpl: PolyMatrix::zeros(&s, 1, 1),
            input_lo: vec![-1.0],
            input_hi: vec![1.0],
        };
        let sub2 = SubsystemModel {
            n: 1,
            r: 1,
            f_slf: PolyVector::new(&s, vec![x(1).scale(-2.0)]).unwrap(),
            g_slf: PolyMatrix::new(&s, 1, 1, vec![one]).unwrap(),
            f_cpl: PolyVector::zeros(&s, 1),
            g_cpl: PolyMatrix::zeros(&s, 1, 1),
            input_lo: vec![-1.0],
            input_hi: vec![1.0],
        };
        let h = (&x(0) * &x(0)).scale(-1.0).add_constant(4.0);
        InterconnectedSystem::new(vec![sub1, sub2], vec![0], vec![1], vec![h], vec![(-2.0, 2.0); 2]).unwrap()
    }

    #[test]
    fn toy_is_valid() {
        assert!(toy().validate().is_empty());
    }

    #[test]
    fn lie_of_independent_constraint_is_zero() {
        assert!(toy().lie_self(1, 0).unwrap().is_zero());
    }

    #[test]
    fn decomposition_sums_to_full_derivative() {
        let sys = toy();
        let f = sys.assemble_global().unwrap();
        let h = sys.constraint(0).unwrap();
        let mut full = Polynomial::zero(sys.scope());
        for z in 0..2 {
            full = &full + &(&h.differentiate(VarId::state(z)).unwrap() * f.get(z));
        }
        let mut parts = sys.lie_coupled_sum(0, &[0, 1]).unwrap();
        for i in 0..2 {
            parts = &parts + &sys.lie_self(i, 0).unwrap();
        }
        assert_eq!(parts, full);
    }

    #[test]
    fn input_in_safety_function_flagged() {
        let sys = toy();
        let s = sys.scope().clone();
        let bad = Polynomial::from_terms(&s, [(Monomial::var(VarId::input(0), 1), 1.0)]).unwrap();
        let sys = sys.with_safety(vec![bad]).unwrap();
        let v = sys.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("safety function references input variable"));
    }

    #[test]
    fn overlapping_partition_flagged() {
        let sys = toy().with_partition(vec![0, 1], vec![1]);
        assert!(sys.validate().iter().any(|m| m.contains("partition")));
    }

    #[test]
    fn empty_subset_sum_is_zero() {
        assert!(toy().lie_coupled_sum(0, &[]).unwrap().is_zero());
    }

    #[test]
    fn corners_enumerated() {
        assert_eq!(toy().input_corners(0).unwrap(), vec![vec![-1.0], vec![1.0]]);
    }
}
