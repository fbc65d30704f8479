use crate::optim::{SdpOptions, SolveStatus};
use crate::poly::{Polynomial, VarId};

use super::{CompiledSos, ParamPoly, SosCertificate, SosError, SosProgram};

/// Interval constraint `lo <= v <= hi` on one input channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBound {
    pub var: VarId,
    pub lo: f64,
    pub hi: f64,
}

/// Outcome of maximizing a certified lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub status: SolveStatus,
    pub value: f64,
    pub certified: bool,
    pub certificate: SosCertificate,
}

/// Program: maximize `gamma` such that
/// `expr - gamma - sum_s p_s g_s - sum_j [w_j (u_j - lo_j) + v_j (hi_j - u_j)]` is SOS.
pub fn lower_bound_program(
    expr: &Polynomial,
    domain_polys: &[Polynomial],
    inputs: &[InputBound],
    multiplier_degree: u32,
) -> Result<SosProgram, SosError> {
    let scope = expr.scope();
    for b in inputs {
        if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
            return Err(SosError::Invalid(format!(
                "input box for {} must satisfy lo < hi",
                b.var
            )));
        }
    }
    let mut prog = SosProgram::new(scope);
    let gamma = prog.add_decision("gamma");
    let mut e = ParamPoly::new(expr.clone());
    e.add_linear(gamma, &Polynomial::constant(scope, -1.0))?;
    let mut mults: Vec<(Polynomial, u32)> = domain_polys.iter().map(|g| (g.clone(), multiplier_degree)).collect();
    for b in inputs {
        let u = Polynomial::var(scope, b.var)?;
        mults.push((u.add_constant(-b.lo), multiplier_degree));
        mults.push(((-&u).add_constant(b.hi), multiplier_degree));
    }
    prog.add_sos("lower bound", e, mults)?;
    prog.maximize(vec![(gamma, 1.0)])?;
    Ok(prog)
}

pub fn compile_lower_bound(
    expr: &Polynomial,
    domain_polys: &[Polynomial],
    inputs: &[InputBound],
    multiplier_degree: u32,
) -> Result<CompiledSos, SosError> {
    lower_bound_program(expr, domain_polys, inputs, multiplier_degree)?.compile()
}

pub fn solve_lower_bound(
    expr: &Polynomial,
    domain_polys: &[Polynomial],
    inputs: &[InputBound],
    multiplier_degree: u32,
    opts: &SdpOptions,
) -> Result<LowerBound, SosError> {
    let prog = lower_bound_program(expr, domain_polys, inputs, multiplier_degree)?;
    let sol = prog.solve(opts)?;
    Ok(LowerBound {
        status: sol.status,
        value: sol.decisions[0],
        certified: sol.certified,
        certificate: sol.certificates.into_iter().next().expect("one constraint"),
    })
}
