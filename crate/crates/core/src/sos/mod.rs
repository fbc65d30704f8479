//! Sum-of-squares programs compiled to SDPs by Gram-matrix coefficient matching.
//!
//! A program has scalar decision variables `d`, a linear objective to maximize,
//! and constraints of the form
//!
//! `p0 + sum_k d_k p_k - sum_j sigma_j g_j` is SOS, with every `sigma_j` SOS,
//!
//! where `g_j` are fixed domain polynomials (the set where `g_j >= 0`).

mod bound;
mod newton;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::optim::{solve_sdp, LinearFunctional, OptimError, SdpOptions, SdpProblem, SdpSolution, Sense, SolveStatus};
use crate::poly::{monomial_basis, Monomial, PolyError, Polynomial, Scope, VarId};

pub use bound::{compile_lower_bound, lower_bound_program, solve_lower_bound, InputBound, LowerBound};
pub use newton::half_newton_basis;

/// Largest accepted coefficient mismatch of a reconstructed certificate.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Most negative accepted Gram eigenvalue.
pub const MIN_EIG_TOL: f64 = -1e-7;

#[derive(Debug, Error)]
pub enum SosError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("unknown decision variable {0}")]
    UnknownDecision(usize),
    #[error("{0}")]
    Invalid(String),
}

/// Polynomial affine in the decision variables: `constant + sum_k d_k * linear[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoly {
    constant: Polynomial,
    linear: BTreeMap<usize, Polynomial>,
}

impl ParamPoly {
    pub fn new(constant: Polynomial) -> Self {
        ParamPoly {
            constant,
            linear: BTreeMap::new(),
        }
    }

    pub fn zero(scope: &Scope) -> Self {
        ParamPoly::new(Polynomial::zero(scope))
    }

    pub fn scope(&self) -> &Scope {
        self.constant.scope()
    }

    pub fn constant_part(&self) -> &Polynomial {
        &self.constant
    }

    pub fn linear_parts(&self) -> impl Iterator<Item = (usize, &Polynomial)> {
        self.linear.iter().map(|(k, p)| (*k, p))
    }

    /// `self += d * p`.
    pub fn add_linear(&mut self, d: usize, p: &Polynomial) -> Result<(), SosError> {
        let entry = self.linear.entry(d).or_insert_with(|| Polynomial::zero(p.scope()));
        *entry = entry.checked_add(p)?;
        if entry.is_zero() {
            self.linear.remove(&d);
        }
        Ok(())
    }

    pub fn add_poly(&mut self, p: &Polynomial) -> Result<(), SosError> {
        self.constant = self.constant.checked_add(p)?;
        Ok(())
    }

    pub fn add(&self, other: &ParamPoly) -> Result<ParamPoly, SosError> {
        let mut out = self.clone();
        out.add_poly(&other.constant)?;
        for (k, p) in &other.linear {
            out.add_linear(*k, p)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> ParamPoly {
        ParamPoly {
            constant: self.constant.scale(c),
            linear: self
                .linear
                .iter()
                .map(|(k, p)| (*k, p.scale(c)))
                .filter(|(_, p)| !p.is_zero())
                .collect(),
        }
    }

    pub fn mul_poly(&self, q: &Polynomial) -> Result<ParamPoly, SosError> {
        let mut out = ParamPoly::new(self.constant.checked_mul(q)?);
        for (k, p) in &self.linear {
            out.add_linear(*k, &p.checked_mul(q)?)?;
        }
        Ok(out)
    }

    /// Concrete polynomial for given decision values.
    pub fn substitute(&self, values: &[f64]) -> Polynomial {
        let mut out = self.constant.clone();
        for (k, p) in &self.linear {
            out = &out + &p.scale(values[*k]);
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.linear
            .values()
            .map(Polynomial::degree)
            .chain(std::iter::once(self.constant.degree()))
            .max()
            .unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<VarId> {
        let mut out = self.constant.variables();
        for p in self.linear.values() {
            out.extend(p.variables());
        }
        out
    }

    fn support(&self) -> BTreeSet<Monomial> {
        let mut out: BTreeSet<Monomial> = self.constant.terms().map(|(m, _)| m.clone()).collect();
        for p in self.linear.values() {
            out.extend(p.terms().map(|(m, _)| m.clone()));
        }
        out
    }

    fn max_decision(&self) -> Option<usize> {
        self.linear.keys().next_back().copied()
    }
}

/// Unknown SOS polynomial `m' Q m` over a fixed monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SosTemplate {
    pub basis: Vec<Monomial>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosConstraint {
    pub label: String,
    pub expr: ParamPoly,
    /// Domain polynomials with the degree of their SOS multiplier.
    pub multipliers: Vec<(Polynomial, u32)>,
    /// Gram basis of the free-standing part; derived from the Newton polytope when absent.
    pub basis: Option<Vec<Monomial>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosProgram {
    scope: Scope,
    decisions: Vec<String>,
    objective: Vec<(usize, f64)>,
    constraints: Vec<SosConstraint>,
    scalar_le: Vec<(Vec<(usize, f64)>, f64)>,
}

/// Where one Gram block lives in the compiled SDP.
#[derive(Debug, Clone, PartialEq)]
pub struct GramLayout {
    pub block: usize,
    pub template: SosTemplate,
    /// `None` for the free-standing SOS part, `Some(g)` for a multiplier of `g`.
    pub domain: Option<Polynomial>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSos {
    pub sdp: SdpProblem,
    pub layouts: Vec<Vec<GramLayout>>,
    pub decision_free: Vec<usize>,
}

/// One `m' Q m * g` summand of a certificate (`g = 1` for the free-standing part).
#[derive(Debug, Clone, PartialEq)]
pub struct GramTerm {
    pub basis: Vec<Monomial>,
    pub gram: DMatrix<f64>,
    pub domain: Option<Polynomial>,
}

/// Witness that `target = sum_t (m_t' Q_t m_t) g_t` with every `Q_t` PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct SosCertificate {
    pub label: String,
    pub target: Polynomial,
    pub terms: Vec<GramTerm>,
    pub decisions: Vec<(String, f64)>,
    pub residual: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub ok: bool,
    pub residual: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosSolution {
    pub status: SolveStatus,
    pub decisions: Vec<f64>,
    pub objective: f64,
    pub certificates: Vec<SosCertificate>,
    /// Every certificate reconstructs its target within tolerance.
    pub certified: bool,
    pub sdp_iterations: usize,
}

fn even_ceil(d: u32) -> u32 {
    d + d % 2
}

impl SosProgram {
    pub fn new(scope: &Scope) -> Self {
        SosProgram {
            scope: scope.clone(),
            decisions: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
            scalar_le: Vec::new(),
        }
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn add_decision(&mut self, name: impl Into<String>) -> usize {
        self.decisions.push(name.into());
        self.decisions.len() - 1
    }

    pub fn decisions(&self) -> &[String] {
        &self.decisions
    }

    pub fn constraints(&self) -> &[SosConstraint] {
        &self.constraints
    }

    pub fn maximize(&mut self, coefs: Vec<(usize, f64)>) -> Result<(), SosError> {
        if let Some(&(k, _)) = coefs.iter().find(|(k, _)| *k >= self.decisions.len()) {
            return Err(SosError::UnknownDecision(k));
        }
        self.objective = coefs;
        Ok(())
    }

    /// `sum coef_k d_k <= rhs`.
    pub fn add_scalar_le(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) -> Result<(), SosError> {
        if let Some(&(k, _)) = coefs.iter().find(|(k, _)| *k >= self.decisions.len()) {
            return Err(SosError::UnknownDecision(k));
        }
        self.scalar_le.push((coefs, rhs));
        Ok(())
    }

    pub fn add_sos(
        &mut self,
        label: impl Into<String>,
        expr: ParamPoly,
        multipliers: Vec<(Polynomial, u32)>,
    ) -> Result<(), SosError> {
        if expr.scope() != &self.scope || multipliers.iter().any(|(g, _)| g.scope() != &self.scope) {
            return Err(PolyError::ScopeDiffers.into());
        }
        if let Some(k) = expr.max_decision().filter(|k| *k >= self.decisions.len()) {
            return Err(SosError::UnknownDecision(k));
        }
        let multipliers = multipliers
            .into_iter()
            .map(|(g, d)| {
                if d % 2 == 1 {
                    log::warn!("odd multiplier degree {d} rounded up to {}", d + 1);
                }
                (g, even_ceil(d))
            })
            .collect();
        self.constraints.push(SosConstraint {
            label: label.into(),
            expr,
            multipliers,
            basis: None,
        });
        Ok(())
    }

    /// Like [`SosProgram::add_sos`] with a caller-chosen Gram basis and no multipliers.
    pub fn add_sos_with_basis(
        &mut self,
        label: impl Into<String>,
        expr: ParamPoly,
        basis: Vec<Monomial>,
    ) -> Result<(), SosError> {
        self.add_sos(label, expr, Vec::new())?;
        self.constraints.last_mut().expect("just pushed").basis = Some(basis);
        Ok(())
    }

    pub fn compile(&self) -> Result<CompiledSos, SosError> {
        let mut sdp = SdpProblem::new();
        let decision_free: Vec<usize> = self.decisions.iter().map(|n| sdp.add_free(n.clone())).collect();
        let mut layouts = Vec::with_capacity(self.constraints.len());

        for c in &self.constraints {
            let mut vars = c.expr.variables();
            for (g, _) in &c.multipliers {
                vars.extend(g.variables());
            }
            let vars: Vec<VarId> = vars.into_iter().collect();

            let mut blocks: Vec<GramLayout> = Vec::new();
            let mut support = c.expr.support();
            let mut top = c.expr.degree();
            let mut mult_layouts = Vec::new();
            for (g, d) in &c.multipliers {
                let basis = monomial_basis(&vars, d / 2);
                for a in &basis {
                    for b in &basis {
                        let ab = a.mul(b);
                        for (gm, _) in g.terms() {
                            support.insert(ab.mul(gm));
                        }
                    }
                }
                top = top.max(d + g.degree());
                mult_layouts.push((basis, g.clone()));
            }
            let main_basis = match &c.basis {
                Some(b) => b.clone(),
                None => half_newton_basis(&vars, &support, even_ceil(top) / 2),
            };
            if !main_basis.is_empty() {
                let block = sdp.add_block(main_basis.len());
                blocks.push(GramLayout {
                    block,
                    template: SosTemplate { basis: main_basis },
                    domain: None,
                });
            }
            for (basis, g) in mult_layouts {
                let block = sdp.add_block(basis.len());
                blocks.push(GramLayout {
                    block,
                    template: SosTemplate { basis },
                    domain: Some(g),
                });
            }

            // Coefficient matching, one row per monomial.
            let mut rows: BTreeMap<Monomial, LinearFunctional> = BTreeMap::new();
            let mut rhs: BTreeMap<Monomial, f64> = BTreeMap::new();
            for layout in &blocks {
                let basis = &layout.template.basis;
                for a in 0..basis.len() {
                    for b in a..basis.len() {
                        let ab = basis[a].mul(&basis[b]);
                        let w = if a == b { 1.0 } else { 2.0 };
                        match &layout.domain {
                            None => {
                                rows.entry(ab).or_default().add_entry(layout.block, a, b, w);
                            }
                            Some(g) => {
                                for (gm, gc) in g.terms() {
                                    rows.entry(ab.mul(gm))
                                        .or_default()
                                        .add_entry(layout.block, a, b, w * gc);
                                }
                            }
                        }
                    }
                }
            }
            for (m, v) in c.expr.constant_part().terms() {
                rows.entry(m.clone()).or_default();
                rhs.insert(m.clone(), v);
            }
            for (k, p) in c.expr.linear_parts() {
                for (m, v) in p.terms() {
                    rows.entry(m.clone()).or_default().add_free(decision_free[k], -v);
                }
            }
            for (m, f) in rows {
                let r = rhs.get(&m).copied().unwrap_or(0.0);
                sdp.add_constraint(f, r)?;
            }
            layouts.push(blocks);
        }

        for (coefs, r) in &self.scalar_le {
            let slack = sdp.add_block(1);
            let mut f = LinearFunctional::new();
            f.add_entry(slack, 0, 0, 1.0);
            for &(k, c) in coefs {
                f.add_free(decision_free[k], c);
            }
            sdp.add_constraint(f, *r)?;
        }

        let mut obj = LinearFunctional::new();
        for &(k, c) in &self.objective {
            obj.add_free(decision_free[k], c);
        }
        sdp.set_objective(Sense::Maximize, obj)?;
        Ok(CompiledSos {
            sdp,
            layouts,
            decision_free,
        })
    }

    pub fn solve(&self, opts: &SdpOptions) -> Result<SosSolution, SosError> {
        let compiled = self.compile()?;
        let sol = solve_sdp(&compiled.sdp, opts)?;
        Ok(self.extract(&compiled, &sol))
    }

    fn extract(&self, compiled: &CompiledSos, sol: &SdpSolution) -> SosSolution {
        let decisions: Vec<f64> = compiled.decision_free.iter().map(|&k| sol.free[k]).collect();
        let named: Vec<(String, f64)> = self.decisions.iter().cloned().zip(decisions.iter().copied()).collect();
        let mut certificates = Vec::with_capacity(self.constraints.len());
        let mut certified = matches!(
            sol.status,
            SolveStatus::Optimal | SolveStatus::MaxIter | SolveStatus::NumericalFailure
        );
        for (c, blocks) in self.constraints.iter().zip(&compiled.layouts) {
            let terms: Vec<GramTerm> = blocks
                .iter()
                .map(|l| GramTerm {
                    basis: l.template.basis.clone(),
                    gram: sol.blocks[l.block].clone(),
                    domain: l.domain.clone(),
                })
                .collect();
            let mut cert = SosCertificate {
                label: c.label.clone(),
                target: c.expr.substitute(&decisions),
                terms,
                decisions: named.clone(),
                residual: f64::NAN,
                min_eig: f64::NAN,
            };
            let report = verify_certificate(&cert, &cert.target);
            cert.residual = report.residual;
            cert.min_eig = report.min_eig;
            certified &= report.ok;
            certificates.push(cert);
        }
        SosSolution {
            status: sol.status,
            decisions,
            objective: sol.primal_objective,
            certificates,
            certified,
            sdp_iterations: sol.iterations,
        }
    }
}

/// Recomputes `sum_t (m' Q m) g_t` and compares with `target` coefficient-wise.
pub fn verify_certificate(cert: &SosCertificate, target: &Polynomial) -> VerifyReport {
    let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
    let mut min_eig = f64::INFINITY;
    let mut shape_ok = true;
    for t in &cert.terms {
        let n = t.basis.len();
        if t.gram.shape() != (n, n) {
            shape_ok = false;
            continue;
        }
        if n > 0 {
            let sym = (&t.gram + t.gram.transpose()) * 0.5;
            min_eig = min_eig.min(sym.symmetric_eigenvalues().min());
        }
        for a in 0..n {
            for b in 0..n {
                let q = t.gram[(a, b)];
                if q == 0.0 {
                    continue;
                }
                let ab = t.basis[a].mul(&t.basis[b]);
                match &t.domain {
                    None => *acc.entry(ab).or_insert(0.0) += q,
                    Some(g) => {
                        for (gm, gc) in g.terms() {
                            *acc.entry(ab.mul(gm)).or_insert(0.0) += q * gc;
                        }
                    }
                }
            }
        }
    }
    let mut residual: f64 = 0.0;
    for (m, v) in &acc {
        residual = residual.max((v - target.coefficient(m)).abs());
    }
    for (m, v) in target.terms() {
        if !acc.contains_key(m) {
            residual = residual.max(v.abs());
        }
    }
    if min_eig == f64::INFINITY {
        min_eig = 0.0;
    }
    VerifyReport {
        ok: shape_ok && residual <= RESIDUAL_TOL && min_eig >= MIN_EIG_TOL,
        residual,
        min_eig,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    Sos(SosCertificate),
    NotSos(String),
}

/// Decides whether `p` is a sum of squares over its half Newton polytope basis.
pub fn sos_decompose(p: &Polynomial) -> Result<Decomposition, SosError> {
    if p.degree() % 2 == 1 {
        return Ok(Decomposition::NotSos(format!("odd degree {}", p.degree())));
    }
    let vars: Vec<VarId> = p.variables().into_iter().collect();
    let support: BTreeSet<Monomial> = p.terms().map(|(m, _)| m.clone()).collect();
    let basis = half_newton_basis(&vars, &support, p.degree() / 2);
    if p.is_zero() {
        return Ok(Decomposition::Sos(SosCertificate {
            label: "sos".into(),
            target: p.clone(),
            terms: Vec::new(),
            decisions: Vec::new(),
            residual: 0.0,
            min_eig: 0.0,
        }));
    }
    if basis.is_empty() {
        return Ok(Decomposition::NotSos("empty Newton polytope basis".into()));
    }
    // Largest t with p - t * sum m_i^2 SOS; p is SOS iff t >= 0.
    let scope = p.scope();
    let mut prog = SosProgram::new(scope);
    let t = prog.add_decision("t");
    let mut diag = Polynomial::zero(scope);
    for m in &basis {
        diag = &diag + &Polynomial::from_terms(scope, [(m.mul(m), 1.0)])?;
    }
    let mut expr = ParamPoly::new(p.clone());
    expr.add_linear(t, &diag.scale(-1.0))?;
    prog.add_sos_with_basis("sos", expr, basis.clone())?;
    prog.maximize(vec![(t, 1.0)])?;
    prog.add_scalar_le(vec![(t, 1.0)], 1.0)?;
    let opts = SdpOptions {
        feas_tol: 1e-9,
        gap_tol: 1e-9,
        max_iter: 200,
    };
    let sol = prog.solve(&opts)?;
    if matches!(sol.status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
        return Ok(Decomposition::NotSos(format!(
            "Gram feasibility SDP reported {}",
            sol.status
        )));
    }
    let tval = sol.decisions[t];
    if tval < -1e-8 {
        return Ok(Decomposition::NotSos(format!(
            "largest diagonal shift keeping the Gram matrix PSD is {tval:.3e} < 0"
        )));
    }
    let mut gram = sol.certificates[0].terms[0].gram.clone();
    for k in 0..basis.len() {
        gram[(k, k)] += tval;
    }
    let mut cert = SosCertificate {
        label: "sos".into(),
        target: p.clone(),
        terms: vec![GramTerm {
            basis,
            gram,
            domain: None,
        }],
        decisions: Vec::new(),
        residual: f64::NAN,
        min_eig: f64::NAN,
    };
    let report = verify_certificate(&cert, p);
    cert.residual = report.residual;
    cert.min_eig = report.min_eig;
    if !report.ok {
        return Ok(Decomposition::NotSos(format!(
            "certificate failed verification (residual {:.2e}, min eigenvalue {:.2e})",
            report.residual, report.min_eig
        )));
    }
    Ok(Decomposition::Sos(cert))
}

/// Affine change of coordinates `v = center + half_width * xi` per variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Normalization {
    pub map: BTreeMap<VarId, (f64, f64)>,
}

impl Normalization {
    pub fn from_bounds<I: IntoIterator<Item = (VarId, f64, f64)>>(bounds: I) -> Self {
        Normalization {
            map: bounds
                .into_iter()
                .map(|(v, lo, hi)| (v, (0.5 * (lo + hi), 0.5 * (hi - lo))))
                .collect(),
        }
    }

    /// Expresses `p(v)` in unit coordinates `xi`.
    pub fn to_unit(&self, p: &Polynomial) -> Polynomial {
        let m: BTreeMap<VarId, (f64, f64)> = self.map.iter().map(|(v, &(c, h))| (*v, (h, c))).collect();
        p.substitute_affine(&m)
    }

    /// Expresses a unit-coordinate polynomial back in the original variables.
    pub fn from_unit(&self, p: &Polynomial) -> Polynomial {
        let m: BTreeMap<VarId, (f64, f64)> = self.map.iter().map(|(v, &(c, h))| (*v, (1.0 / h, -c / h))).collect();
        p.substitute_affine(&m)
    }

    pub fn point_to_unit(&self, v: VarId, value: f64) -> f64 {
        match self.map.get(&v) {
            Some(&(c, h)) => (value - c) / h,
            None => value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> VarId {
        VarId::state(0)
    }

    fn y() -> VarId {
        VarId::state(1)
    }

    fn poly(scope: &Scope, terms: &[(&[(VarId, u32)], f64)]) -> Polynomial {
        Polynomial::from_terms(
            scope,
            terms.iter().map(|(m, c)| (Monomial::from_pairs(m.iter().copied()), *c)),
        )
        .unwrap()
    }

    #[test]
    fn perfect_square_gram() {
        let s = Scope::new([x(), y()]);
        let p = poly(
            &s,
            &[(&[(x(), 2)], 1.0), (&[(x(), 1), (y(), 1)], 2.0), (&[(y(), 2)], 1.0)],
        );
        let Decomposition::Sos(c) = sos_decompose(&p).unwrap() else {
            panic!("expected SOS");
        };
        let g = &c.terms[0].gram;
        assert_eq!(c.terms[0].basis.len(), 2);
        for v in g.iter() {
            assert!((v - 1.0).abs() < 1e-6, "{g}");
        }
        assert!(c.residual <= 1e-9);
    }

    #[test]
    fn negative_somewhere_is_not_sos() {
        let s = Scope::new([x()]);
        let p = poly(&s, &[(&[], 1.0), (&[(x(), 2)], -1.0)]);
        assert!(matches!(sos_decompose(&p).unwrap(), Decomposition::NotSos(_)));
    }

    #[test]
    fn motzkin_is_not_sos() {
        let s = Scope::new([x(), y()]);
        let p = poly(
            &s,
            &[
                (&[(x(), 4), (y(), 2)], 1.0),
                (&[(x(), 2), (y(), 4)], 1.0),
                (&[(x(), 2), (y(), 2)], -3.0),
                (&[], 1.0),
            ],
        );
        assert!(matches!(sos_decompose(&p).unwrap(), Decomposition::NotSos(_)));
    }

    #[test]
    fn odd_degree_is_not_sos() {
        let s = Scope::new([x()]);
        let p = poly(&s, &[(&[(x(), 3)], 1.0)]);
        assert!(matches!(sos_decompose(&p).unwrap(), Decomposition::NotSos(r) if r.contains("odd")));
    }

    #[test]
    fn perturbed_gram_fails_verification() {
        let s = Scope::new([x(), y()]);
        let p = poly(
            &s,
            &[(&[(x(), 2)], 1.0), (&[(x(), 1), (y(), 1)], 2.0), (&[(y(), 2)], 1.0)],
        );
        let Decomposition::Sos(mut c) = sos_decompose(&p).unwrap() else {
            panic!("expected SOS");
        };
        c.terms[0].gram[(0, 0)] += 1e-3;
        let r = verify_certificate(&c, &p);
        assert!(!r.ok);
        assert!((r.residual - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn quadratic_over_interval() {
        let s = Scope::new([x()]);
        let xx = poly(&s, &[(&[(x(), 2)], 1.0)]);
        let dom = poly(&s, &[(&[], 1.0), (&[(x(), 2)], -1.0)]);
        let lb = solve_lower_bound(&xx, std::slice::from_ref(&dom), &[], 0, &SdpOptions::default()).unwrap();
        assert!(lb.certified);
        assert!(lb.value.abs() < 1e-5, "{}", lb.value);

        let xl = poly(&s, &[(&[(x(), 1)], 1.0)]);
        let lb = solve_lower_bound(&xl, &[dom], &[], 2, &SdpOptions::default()).unwrap();
        assert!(lb.certified);
        assert!((lb.value + 1.0).abs() < 1e-5, "{}", lb.value);
    }

    #[test]
    fn completing_the_square() {
        let s = Scope::new([x()]);
        let q = poly(&s, &[(&[(x(), 2)], 1.0), (&[(x(), 1)], -2.0), (&[], 3.0)]);
        let lb = solve_lower_bound(&q, &[], &[], 0, &SdpOptions::default()).unwrap();
        assert!((lb.value - 2.0).abs() < 1e-5, "{}", lb.value);
    }

    #[test]
    fn normalization_round_trip() {
        let s = Scope::new([x(), y()]);
        let p = poly(&s, &[(&[(x(), 2), (y(), 1)], 3.0), (&[(y(), 1)], -1.0), (&[], 0.5)]);
        let n = Normalization::from_bounds([(x(), 15.0, 20.0), (y(), -2.0, 2.0)]);
        let back = n.from_unit(&n.to_unit(&p));
        assert!(back.approx_eq(&p, 1e-9), "{back}");
    }
}
