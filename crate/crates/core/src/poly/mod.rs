//! Sparse multivariate polynomials over named scalar variables.
//!
//! Every polynomial carries an explicit [`Scope`]: the set of variables it is
//! allowed to mention. Binary operations require identical scopes so that a
//! safety function accidentally written in terms of an input variable is
//! caught at construction time rather than deep inside an SDP.

mod dense;
mod monomial;
mod serial;
mod vector;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

pub use dense::DenseEval;
pub use monomial::{monomial_basis, Monomial};
pub use serial::PolyTerm;
pub use vector::{PolyMatrix, PolyVector};

/// Coefficients with magnitude below this are dropped after every operation.
pub const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("variable {0} is not in scope")]
    NotInScope(VarId),
    #[error("scope mismatch: {0} is present in only one operand")]
    ScopeMismatch(VarId),
    #[error("scope mismatch between operands")]
    ScopeDiffers,
    #[error("missing assignment for variables: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    MissingAssignment(Vec<VarId>),
    #[error("cannot parse variable name `{0}`")]
    BadVariable(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Namespace of a scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    State,
    Input,
}

/// One scalar variable: a state component `x{index+1}` or an input `u{index+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub kind: VarKind,
    pub index: u32,
}

impl VarId {
    pub const fn state(index: usize) -> Self {
        VarId {
            kind: VarKind::State,
            index: index as u32,
        }
    }

    pub const fn input(index: usize) -> Self {
        VarId {
            kind: VarKind::Input,
            index: index as u32,
        }
    }

    pub fn is_state(&self) -> bool {
        self.kind == VarKind::State
    }

    pub fn is_input(&self) -> bool {
        self.kind == VarKind::Input
    }

    /// Parses `x3` / `u1` (one-based names).
    pub fn parse(name: &str) -> Result<Self, PolyError> {
        let bad = || PolyError::BadVariable(name.to_string());
        let (kind, rest) = match name.split_at_checked(1) {
            Some(("x", rest)) => (VarKind::State, rest),
            Some(("u", rest)) => (VarKind::Input, rest),
            _ => return Err(bad()),
        };
        let one_based: u32 = rest.parse().map_err(|_| bad())?;
        if one_based == 0 {
            return Err(bad());
        }
        Ok(VarId {
            kind,
            index: one_based - 1,
        })
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::State => write!(f, "x{}", self.index + 1),
            VarKind::Input => write!(f, "u{}", self.index + 1),
        }
    }
}

/// Sorted, duplicate-free set of variables shared cheaply between polynomials.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scope(Arc<[VarId]>);

impl Scope {
    pub fn new<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        let set: BTreeSet<VarId> = vars.into_iter().collect();
        Scope(set.into_iter().collect::<Vec<_>>().into())
    }

    /// States `x1..x{n}` followed by inputs `u1..u{r}`.
    pub fn states_and_inputs(n: usize, r: usize) -> Self {
        Scope::new((0..n).map(VarId::state).chain((0..r).map(VarId::input)))
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    fn first_difference(&self, other: &Scope) -> Option<VarId> {
        self.0
            .iter()
            .find(|v| !other.contains(**v))
            .or_else(|| other.0.iter().find(|v| !self.contains(**v)))
            .copied()
    }
}

impl fmt::Debug for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter().map(|v| v.to_string())).finish()
    }
}

#[derive(Clone)]
pub struct Polynomial {
    scope: Scope,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(scope: &Scope) -> Self {
        Polynomial {
            scope: scope.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(scope: &Scope, c: f64) -> Self {
        let mut p = Polynomial::zero(scope);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(scope: &Scope, v: VarId) -> Result<Self, PolyError> {
        Polynomial::from_terms(scope, [(Monomial::var(v, 1), 1.0)])
    }

    pub fn from_terms<I>(scope: &Scope, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Polynomial::zero(scope);
        for (m, c) in terms {
            if let Some(v) = m.vars().find(|v| !scope.contains(*v)) {
                return Err(PolyError::NotInScope(v));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: VarId) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Variables that actually occur in some term.
    pub fn variables(&self) -> BTreeSet<VarId> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        let e = self.terms.entry(m.clone()).or_insert(0.0);
        *e += c;
        if e.abs() < PRUNE_TOL {
            self.terms.remove(&m);
        }
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() >= PRUNE_TOL);
        self
    }

    fn check_scope(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.scope == other.scope {
            return Ok(());
        }
        Err(match self.scope.first_difference(&other.scope) {
            Some(v) => PolyError::ScopeMismatch(v),
            None => PolyError::ScopeDiffers,
        })
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_scope(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        Ok(out.prune())
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_scope(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) -= c;
        }
        Ok(out.prune())
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_scope(other)?;
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        Ok(Polynomial {
            scope: self.scope.clone(),
            terms,
        }
        .prune())
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial {
            scope: self.scope.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
        .prune()
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(Monomial::one(), c);
        out
    }

    pub fn powi(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(&self.scope, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn differentiate(&self, v: VarId) -> Result<Polynomial, PolyError> {
        if !self.scope.contains(v) {
            return Err(PolyError::NotInScope(v));
        }
        let mut out = Polynomial::zero(&self.scope);
        for (m, c) in &self.terms {
            if let Some((k, rest)) = m.derivative(v) {
                *out.terms.entry(rest).or_insert(0.0) += c * k as f64;
            }
        }
        Ok(out.prune())
    }

    /// Evaluates at an explicit assignment; every scope variable must be given.
    pub fn evaluate(&self, point: &HashMap<VarId, f64>) -> Result<f64, PolyError> {
        let missing: Vec<VarId> = self
            .scope
            .vars()
            .iter()
            .filter(|v| !point.contains_key(v))
            .copied()
            .collect();
        if !missing.is_empty() {
            return Err(PolyError::MissingAssignment(missing));
        }
        Ok(self.eval_with(|v| point[&v]))
    }

    /// Evaluates with values supplied by `value`; terms are summed in monomial order.
    pub fn eval_with<F: Fn(VarId) -> f64>(&self, value: F) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval_with(&value)).sum()
    }

    /// Evaluates with a dense vector aligned with the scope order.
    pub fn eval_dense(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.scope.len());
        self.eval_with(|v| values[self.scope.position(v).expect("variable in scope")])
    }

    /// Re-expresses the polynomial in a larger scope.
    pub fn with_scope(&self, scope: &Scope) -> Result<Polynomial, PolyError> {
        if let Some(v) = self.variables().into_iter().find(|v| !scope.contains(*v)) {
            return Err(PolyError::NotInScope(v));
        }
        Ok(Polynomial {
            scope: scope.clone(),
            terms: self.terms.clone(),
        })
    }

    /// Substitutes `v -> a * v + b` for each listed variable.
    pub fn substitute_affine(&self, map: &BTreeMap<VarId, (f64, f64)>) -> Polynomial {
        let mut out = Polynomial::zero(&self.scope);
        let mut powers: HashMap<(VarId, u32), Polynomial> = HashMap::new();
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(&self.scope, *c);
            for (v, e) in m.iter() {
                let factor = match map.get(&v) {
                    Some(&(a, b)) => powers
                        .entry((v, e))
                        .or_insert_with(|| {
                            let lin =
                                Polynomial::from_terms(&self.scope, [(Monomial::var(v, 1), a), (Monomial::one(), b)])
                                    .expect("variable in scope");
                            lin.powi(e)
                        })
                        .clone(),
                    None => {
                        Polynomial::from_terms(&self.scope, [(Monomial::var(v, e), 1.0)]).expect("variable in scope")
                    }
                };
                term = &term * &factor;
            }
            out = &out + &term;
        }
        out
    }

    /// Equality after pruning at `tol` (absolute, per coefficient).
    pub fn approx_eq(&self, other: &Polynomial, tol: f64) -> bool {
        self.scope == other.scope && self.max_coef_diff(other) <= tol
    }

    /// Infinity norm of the coefficient difference.
    pub fn max_coef_diff(&self, other: &Polynomial) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, c) in &self.terms {
            worst = worst.max((c - other.coefficient(m)).abs());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.scope == other.scope && self.terms == other.terms
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if k == 0 {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_one() {
                write!(f, "{}", c.abs())?;
            } else if (c.abs() - 1.0).abs() < PRUNE_TOL {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", c.abs())?;
            }
        }
        Ok(())
    }
}

// Operator forms panic on scope mismatch; use the `checked_*` methods when
// operands come from untrusted input.
impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial scopes differ")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial scopes differ")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial scopes differ")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}
