use crate::optim::{SdpOptions, SolveStatus};
use crate::poly::{monomial_basis, DenseEval, Monomial, PolyVector, Polynomial, VarId};
use crate::rsi::{compute_report, BackendChoice, RsiOptions, RsiReport};
use crate::sos::{verify_certificate, Normalization, ParamPoly, SosCertificate, SosProgram};
use crate::system::InterconnectedSystem;

use super::local::lie_split;
use super::{shifted_safety, ClassKFunction, LocalConstraint, PolicyStatus, SynthError, WeightMatrix};

/// A certified program counts as feasible when its optimal margin is at least `-MARGIN_TOL`.
pub const MARGIN_TOL: f64 = 1e-7;
/// Pointwise tolerance of the grid checks in [`verify_policy`].
pub const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Total degree of each policy polynomial.
    pub policy_degree: u32,
    pub multiplier_degree: u32,
    /// Shrinks constraint `k` to `h^k >= offsets[k]`.
    pub offsets: Vec<f64>,
    /// Upper limit on the maximized margin of the policy conditions.
    pub margin_cap: f64,
    pub sdp: SdpOptions,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            policy_degree: 1,
            multiplier_degree: 2,
            offsets: Vec::new(),
            margin_cap: 1.0,
            sdp: SdpOptions::default(),
        }
    }
}

/// One solved SOS program and the sub-systems whose policies it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramRecord {
    pub subsystems: Vec<usize>,
    pub status: SolveStatus,
    pub feasible: bool,
    /// Largest uniform slack of the policy conditions (unit coordinates).
    pub margin: f64,
    /// Certificates in the unit coordinates of [`PolicyCertificate::normalization`].
    pub certificates: Vec<SosCertificate>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCertificate {
    pub status: PolicyStatus,
    /// Policies `tau_i(x)` in the original coordinates.
    pub policies: Vec<(usize, PolyVector)>,
    pub eta: Vec<ClassKFunction>,
    pub alpha: WeightMatrix,
    /// `beta^k + sum_j gamma_j^k`; unused for local constraints.
    pub budgets: Vec<f64>,
    pub offsets: Vec<f64>,
    pub local: Vec<LocalConstraint>,
    pub normalization: Normalization,
    pub programs: Vec<ProgramRecord>,
}

impl PolicyCertificate {
    pub fn is_feasible(&self) -> bool {
        self.status == PolicyStatus::Feasible
    }

    pub fn policy(&self, i: usize) -> Option<&PolyVector> {
        self.policies.iter().find(|(j, _)| *j == i).map(|(_, p)| p)
    }

    /// Writes the clamped policy inputs of every protected sub-system into `u`.
    pub fn apply(&self, sys: &InterconnectedSystem, x: &[f64], u: &mut [f64]) {
        for (i, tau) in &self.policies {
            let s = &sys.subsystems()[*i];
            let off = sys.input_offset(*i);
            let vals = tau.eval_with(|v: VarId| if v.is_state() { x[v.index as usize] } else { 0.0 });
            for (j, t) in vals.into_iter().enumerate() {
                u[off + j] = t.clamp(s.input_lo[j], s.input_hi[j]);
            }
        }
    }
}

pub(crate) fn check_report(
    sys: &InterconnectedSystem,
    rsi: &RsiReport,
    skip: &[usize],
) -> Result<Vec<f64>, SynthError> {
    let k_count = sys.safety().len();
    let mut budgets = vec![0.0; k_count];
    for (k, b) in budgets.iter_mut().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        if rsi.beta(k).is_none() {
            return Err(SynthError::Invalid(format!(
                "report lacks beta for constraint {}",
                k + 1
            )));
        }
        for &j in sys.vulnerable() {
            if rsi.gamma(j, k).is_none() {
                return Err(SynthError::Invalid(format!(
                    "report lacks gamma for sub-system {} and constraint {}",
                    j + 1,
                    k + 1
                )));
            }
        }
        *b = rsi.budget(k);
    }
    Ok(budgets)
}

pub(crate) fn state_normalization(sys: &InterconnectedSystem) -> Normalization {
    Normalization::from_bounds(
        sys.bounding_box()
            .iter()
            .enumerate()
            .map(|(j, &(lo, hi))| (VarId::state(j), lo, hi)),
    )
}

/// A solved program, the policies it produced and their coordinate map.
type Finished = (ProgramRecord, Vec<(usize, PolyVector)>, Normalization);

struct Builder<'a> {
    sys: &'a InterconnectedSystem,
    norm: Normalization,
    prog: SosProgram,
    domain: Vec<(Polynomial, u32)>,
    basis_unit: Vec<Polynomial>,
    basis_orig: Vec<Polynomial>,
    /// `theta[(i, j)]` decision indices, aligned with the basis.
    theta: Vec<((usize, usize), Vec<usize>)>,
    margin: usize,
}

impl<'a> Builder<'a> {
    fn new(sys: &'a InterconnectedSystem, set: &[usize], opts: &SynthOptions) -> Result<Self, SynthError> {
        let scope = sys.scope();
        let norm = state_normalization(sys);
        let mut domain: Vec<(Polynomial, u32)> = shifted_safety(sys, &opts.offsets)
            .iter()
            .map(|h| (norm.to_unit(h), opts.multiplier_degree))
            .collect();
        let states: Vec<VarId> = (0..sys.num_states()).map(VarId::state).collect();
        for &v in &states {
            let xi = Polynomial::var(scope, v)?;
            domain.push(((-&(&xi * &xi)).add_constant(1.0), opts.multiplier_degree));
        }
        let monos: Vec<Monomial> = monomial_basis(&states, opts.policy_degree);
        let basis_unit: Vec<Polynomial> = monos
            .iter()
            .map(|m| Polynomial::from_terms(scope, [(m.clone(), 1.0)]))
            .collect::<Result<_, _>>()?;
        let basis_orig: Vec<Polynomial> = basis_unit.iter().map(|p| norm.from_unit(p)).collect();
        let mut prog = SosProgram::new(scope);
        let mut theta = Vec::new();
        for &i in set {
            for j in 0..sys.subsystem(i)?.r {
                let ids = (0..monos.len())
                    .map(|d| prog.add_decision(format!("tau{}_{}[{}]", i + 1, j + 1, monos[d])))
                    .collect();
                theta.push(((i, j), ids));
            }
        }
        let margin = prog.add_decision("margin");
        prog.add_scalar_le(vec![(margin, 1.0)], opts.margin_cap)?;
        prog.maximize(vec![(margin, 1.0)])?;
        Ok(Builder {
            sys,
            norm,
            prog,
            domain,
            basis_unit,
            basis_orig,
            theta,
            margin,
        })
    }

    fn ids(&self, i: usize, j: usize) -> &[usize] {
        &self
            .theta
            .iter()
            .find(|(key, _)| *key == (i, j))
            .expect("policy decision")
            .1
    }

    /// Adds `constant + sum_i sum_j coefs[i][j] tau_{i,j} - margin` as an SOS condition.
    fn add_condition(
        &mut self,
        label: String,
        constant: &Polynomial,
        coefs: &[(usize, Vec<Polynomial>)],
        extra_domain: Option<&Polynomial>,
        mult_degree: u32,
    ) -> Result<(), SynthError> {
        let mut e = ParamPoly::new(self.norm.to_unit(constant));
        for (i, per) in coefs {
            for (j, c) in per.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let ids = self.ids(*i, j).to_vec();
                for (d, id) in ids.into_iter().enumerate() {
                    e.add_linear(id, &self.norm.to_unit(&c.checked_mul(&self.basis_orig[d])?))?;
                }
            }
        }
        e.add_linear(self.margin, &Polynomial::constant(self.sys.scope(), -1.0))?;
        let mut mults = self.domain.clone();
        if let Some(b) = extra_domain {
            mults.push((self.norm.to_unit(b), mult_degree));
        }
        self.prog.add_sos(label, e, mults)?;
        Ok(())
    }

    fn add_box(&mut self, i: usize) -> Result<(), SynthError> {
        let s = self.sys.subsystem(i)?.clone();
        for j in 0..s.r {
            let ids = self.ids(i, j).to_vec();
            for (sign, bound, tag) in [(1.0, s.input_lo[j], "lower"), (-1.0, s.input_hi[j], "upper")] {
                let mut e = ParamPoly::new(Polynomial::constant(self.sys.scope(), -sign * bound));
                for (d, &id) in ids.iter().enumerate() {
                    e.add_linear(id, &self.basis_unit[d].scale(sign))?;
                }
                self.prog
                    .add_sos(format!("box {tag} [{},{}]", i + 1, j + 1), e, self.domain.clone())?;
            }
        }
        Ok(())
    }

    fn finish(self, set: &[usize], opts: &SynthOptions) -> Result<Finished, SynthError> {
        let sol = self.prog.solve(&opts.sdp)?;
        let margin = sol.decisions[self.margin];
        let feasible = sol.certified && margin >= -MARGIN_TOL;
        let scope = self.sys.scope();
        let mut policies = Vec::new();
        for &i in set {
            let r = self.sys.subsystem(i)?.r;
            let mut entries = Vec::with_capacity(r);
            for j in 0..r {
                let mut t = Polynomial::zero(scope);
                for (d, &id) in self.ids(i, j).iter().enumerate() {
                    t = &t + &self.basis_unit[d].scale(sol.decisions[id]);
                }
                entries.push(self.norm.from_unit(&t));
            }
            policies.push((i, PolyVector::new(scope, entries)?));
        }
        let record = ProgramRecord {
            subsystems: set.to_vec(),
            status: sol.status,
            feasible,
            margin,
            certificates: sol.certificates,
            iterations: sol.sdp_iterations,
        };
        Ok((record, policies, self.norm))
    }
}

fn validate_inputs(sys: &InterconnectedSystem, eta: &[ClassKFunction], alpha: &WeightMatrix) -> Result<(), SynthError> {
    if sys.protected().is_empty() {
        return Err(SynthError::Invalid("no protected sub-systems to synthesize for".into()));
    }
    if eta.len() != sys.safety().len() || alpha.constraints() != sys.safety().len() {
        return Err(SynthError::Invalid(
            "one class-K function and weight column per constraint required".into(),
        ));
    }
    for e in eta {
        e.validate()?;
    }
    Ok(())
}

/// Adds the weighted conditions of every non-local constraint for sub-system `i`.
fn add_standard(
    b: &mut Builder<'_>,
    i: usize,
    budgets: &[f64],
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    skip: &[usize],
    opts: &SynthOptions,
) -> Result<(), SynthError> {
    let hs = shifted_safety(b.sys, &opts.offsets);
    for (k, h) in hs.iter().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        let a = alpha.get(i, k);
        let (drift, coefs) = lie_split(b.sys, h, i)?;
        if a == 0.0 && drift.is_zero() && coefs.iter().all(Polynomial::is_zero) {
            continue;
        }
        let rhs = eta[k].compose(h).add_constant(budgets[k]).scale(a);
        let constant = drift.checked_add(&rhs)?;
        b.add_condition(
            format!("condition [{},{}]", i + 1, k + 1),
            &constant,
            &[(i, coefs)],
            None,
            opts.multiplier_degree,
        )?;
    }
    Ok(())
}

/// SOS policy for one protected sub-system from its weighted share of each constraint.
pub fn synthesize_policy(
    sys: &InterconnectedSystem,
    rsi: &RsiReport,
    i: usize,
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    opts: &SynthOptions,
) -> Result<PolicyCertificate, SynthError> {
    validate_inputs(sys, eta, alpha)?;
    if !sys.protected().contains(&i) {
        return Err(SynthError::Invalid(format!("sub-system {} is not protected", i + 1)));
    }
    let budgets = check_report(sys, rsi, &[])?;
    let mut b = Builder::new(sys, &[i], opts)?;
    add_standard(&mut b, i, &budgets, eta, alpha, &[], opts)?;
    b.add_box(i)?;
    let (record, policies, normalization) = b.finish(&[i], opts)?;
    Ok(PolicyCertificate {
        status: if record.feasible {
            PolicyStatus::Feasible
        } else {
            PolicyStatus::Infeasible(i)
        },
        policies,
        eta: eta.to_vec(),
        alpha: alpha.clone(),
        budgets,
        offsets: opts.offsets.clone(),
        local: Vec::new(),
        normalization,
        programs: vec![record],
    })
}

/// One program over all protected policies; required when some constraint is
/// local to a vulnerable sub-system, since its derived barriers couple them.
pub fn synthesize_joint(
    sys: &InterconnectedSystem,
    rsi: &RsiReport,
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    local: &[LocalConstraint],
    opts: &SynthOptions,
) -> Result<PolicyCertificate, SynthError> {
    validate_inputs(sys, eta, alpha)?;
    let skip: Vec<usize> = local.iter().map(|l| l.constraint).collect();
    let budgets = check_report(sys, rsi, &skip)?;
    let set = sys.protected().to_vec();
    let mut b = Builder::new(sys, &set, opts)?;
    for &i in &set {
        add_standard(&mut b, i, &budgets, eta, alpha, &skip, opts)?;
        b.add_box(i)?;
    }
    for l in local {
        for (c, d) in l.condition(sys, &opts.offsets)?.into_iter().enumerate() {
            let mut drift = l.outer.compose(&d.barrier);
            let mut coefs = Vec::new();
            for &i in &set {
                let (di, ci) = lie_split(sys, &d.barrier, i)?;
                drift = drift.checked_add(&di)?;
                coefs.push((i, ci));
            }
            for (w, vt) in l.vulnerable_terms(sys, &d.barrier)?.into_iter().enumerate() {
                let constant = drift.checked_add(&vt)?;
                b.add_condition(
                    format!("local [{}] corner {} worst {}", l.constraint + 1, c + 1, w + 1),
                    &constant,
                    &coefs,
                    Some(&d.barrier),
                    opts.multiplier_degree,
                )?;
            }
        }
    }
    let (record, policies, normalization) = b.finish(&set, opts)?;
    Ok(PolicyCertificate {
        status: if record.feasible {
            PolicyStatus::Feasible
        } else {
            PolicyStatus::Infeasible(set[0])
        },
        policies,
        eta: eta.to_vec(),
        alpha: alpha.clone(),
        budgets,
        offsets: opts.offsets.clone(),
        local: local.to_vec(),
        normalization,
        programs: vec![record],
    })
}

/// One policy per protected sub-system from a given report, stopping at the first failure.
pub fn synthesize_protected(
    sys: &InterconnectedSystem,
    rsi: &RsiReport,
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    opts: &SynthOptions,
) -> Result<PolicyCertificate, SynthError> {
    validate_inputs(sys, eta, alpha)?;
    let mut merged: Option<PolicyCertificate> = None;
    for &i in sys.protected() {
        let cert = synthesize_policy(sys, rsi, i, eta, alpha, opts)?;
        let failed = !cert.is_feasible();
        merged = Some(match merged {
            None => cert,
            Some(mut m) => {
                m.policies.extend(cert.policies);
                m.programs.extend(cert.programs);
                m.status = cert.status;
                m
            }
        });
        if failed {
            break;
        }
    }
    merged.ok_or_else(|| SynthError::Invalid("no protected sub-systems".into()))
}

/// Computes the report with SOS over the (possibly shrunk) safe set, then
/// synthesizes one policy per protected sub-system.
pub fn compute_and_synthesize(
    sys: &InterconnectedSystem,
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    rsi_opts: &RsiOptions,
    opts: &SynthOptions,
) -> Result<(RsiReport, PolicyCertificate), SynthError> {
    validate_inputs(sys, eta, alpha)?;
    let mut rsi_opts = rsi_opts.clone();
    rsi_opts.offsets = opts.offsets.clone();
    let rsi = compute_report(sys, BackendChoice::Fixed(crate::rsi::Backend::Sos), &rsi_opts)?;
    let cert = synthesize_protected(sys, &rsi, eta, alpha, opts)?;
    Ok((rsi, cert))
}

/// Outcome of re-checking a policy certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheck {
    pub ok: bool,
    pub worst_residual: f64,
    pub worst_min_eig: f64,
    /// Smallest slack of the policy conditions over the grid.
    pub worst_condition: f64,
    /// Smallest box slack and its `(sub-system, channel)`, 0-based.
    pub worst_box: (f64, usize, usize),
    pub grid_points: usize,
    pub messages: Vec<String>,
}

/// Re-verifies stored certificates and checks the policy conditions and input
/// boxes pointwise on a grid over the (shrunk) safe set.
pub fn verify_policy(
    sys: &InterconnectedSystem,
    cert: &PolicyCertificate,
    resolution: usize,
) -> Result<PolicyCheck, SynthError> {
    let mut messages = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut worst_min_eig = f64::INFINITY;
    let mut certs_ok = true;
    for p in &cert.programs {
        for c in &p.certificates {
            let r = verify_certificate(c, &c.target);
            worst_residual = worst_residual.max(r.residual);
            worst_min_eig = worst_min_eig.min(r.min_eig);
            if !r.ok {
                certs_ok = false;
                messages.push(format!(
                    "certificate '{}' fails: residual {:.3e}, min eigenvalue {:.3e}",
                    c.label, r.residual, r.min_eig
                ));
            }
        }
    }
    if worst_min_eig == f64::INFINITY {
        worst_min_eig = 0.0;
    }

    let hs = shifted_safety(sys, &cert.offsets);
    let skip: Vec<usize> = cert.local.iter().map(|l| l.constraint).collect();
    struct Row {
        label: String,
        constant: DenseEval,
        coefs: Vec<(usize, Vec<DenseEval>)>,
        gate: Option<DenseEval>,
        worst: Vec<DenseEval>,
    }
    let mut rows = Vec::new();
    for (i, _) in &cert.policies {
        for (k, h) in hs.iter().enumerate() {
            if skip.contains(&k) {
                continue;
            }
            let a = cert.alpha.get(*i, k);
            let (drift, coefs) = lie_split(sys, h, *i)?;
            let rhs = cert.eta[k].compose(h).add_constant(cert.budgets[k]).scale(a);
            rows.push(Row {
                label: format!("condition [{},{}]", i + 1, k + 1),
                constant: DenseEval::new(&drift.checked_add(&rhs)?),
                coefs: vec![(*i, coefs.iter().map(DenseEval::new).collect())],
                gate: None,
                worst: Vec::new(),
            });
        }
    }
    for l in &cert.local {
        for (c, d) in l.condition(sys, &cert.offsets)?.into_iter().enumerate() {
            let mut drift = l.outer.compose(&d.barrier);
            let mut coefs = Vec::new();
            for (i, _) in &cert.policies {
                let (di, ci) = lie_split(sys, &d.barrier, *i)?;
                drift = drift.checked_add(&di)?;
                coefs.push((*i, ci.iter().map(DenseEval::new).collect()));
            }
            rows.push(Row {
                label: format!("local [{}] corner {}", l.constraint + 1, c + 1),
                constant: DenseEval::new(&drift),
                coefs,
                gate: Some(DenseEval::new(&d.barrier)),
                worst: l
                    .vulnerable_terms(sys, &d.barrier)?
                    .iter()
                    .map(DenseEval::new)
                    .collect(),
            });
        }
    }
    let taus: Vec<(usize, Vec<DenseEval>)> = cert
        .policies
        .iter()
        .map(|(i, p)| (*i, p.iter().map(DenseEval::new).collect()))
        .collect();
    let safe: Vec<DenseEval> = hs.iter().map(DenseEval::new).collect();

    let n = sys.num_states();
    let axes: Vec<Vec<f64>> = sys
        .bounding_box()
        .iter()
        .map(|&(lo, hi)| crate::rsi::grid::linspace(lo, hi, resolution.max(2)))
        .collect();
    let lens: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut idx = vec![0usize; n];
    let mut point = vec![0.0; sys.scope().len()];
    let mut worst_condition = f64::INFINITY;
    let mut worst_label = String::new();
    let mut worst_box = (f64::INFINITY, 0, 0);
    let mut grid_points = 0;
    loop {
        for j in 0..n {
            point[j] = axes[j][idx[j]];
        }
        if safe.iter().all(|h| h.eval(&point) >= 0.0) {
            grid_points += 1;
            let tau_vals: Vec<(usize, Vec<f64>)> = taus
                .iter()
                .map(|(i, t)| (*i, t.iter().map(|e| e.eval(&point)).collect()))
                .collect();
            for (i, vals) in &tau_vals {
                let s = &sys.subsystems()[*i];
                for (j, v) in vals.iter().enumerate() {
                    let slack = (v - s.input_lo[j]).min(s.input_hi[j] - v);
                    if slack < worst_box.0 {
                        worst_box = (slack, *i, j);
                    }
                }
            }
            for r in &rows {
                if let Some(g) = &r.gate {
                    if g.eval(&point) < 0.0 {
                        continue;
                    }
                }
                let mut v = r.constant.eval(&point);
                for (i, cs) in &r.coefs {
                    let t = &tau_vals.iter().find(|(j, _)| j == i).expect("policy").1;
                    v += cs.iter().zip(t).map(|(c, tv)| c.eval(&point) * tv).sum::<f64>();
                }
                if !r.worst.is_empty() {
                    v += r.worst.iter().map(|w| w.eval(&point)).fold(f64::INFINITY, f64::min);
                }
                if v < worst_condition {
                    worst_condition = v;
                    worst_label = r.label.clone();
                }
            }
        }
        if !crate::rsi::grid::advance(&mut idx, &lens) {
            break;
        }
    }
    if worst_condition < -GRID_TOL {
        messages.push(format!(
            "{worst_label} violated on the grid: slack {worst_condition:.3e}"
        ));
    }
    if worst_box.0 < -GRID_TOL {
        messages.push(format!(
            "policy channel ({},{}) leaves its input box: slack {:.3e}",
            worst_box.1 + 1,
            worst_box.2 + 1,
            worst_box.0
        ));
    }
    if !cert.is_feasible() {
        messages.push("certificate is marked infeasible".into());
    }
    Ok(PolicyCheck {
        ok: certs_ok && messages.is_empty(),
        worst_residual,
        worst_min_eig,
        worst_condition,
        worst_box,
        grid_points,
        messages,
    })
}
