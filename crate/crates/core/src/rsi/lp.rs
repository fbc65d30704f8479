use std::collections::BTreeSet;

use crate::optim::{solve_lp, LpProblem, SolveStatus};
use crate::poly::{Polynomial, VarId};
use crate::sos::InputBound;
use crate::system::InterconnectedSystem;

use super::{centre_point, dense_index, Attainment, RsiError};

fn affine_parts(p: &Polynomial, cols: &[VarId], what: &str) -> Result<(Vec<f64>, f64), RsiError> {
    let mut a = vec![0.0; cols.len()];
    let mut c = 0.0;
    for (m, coef) in p.terms() {
        match m.degree() {
            0 => c += coef,
            1 => {
                let v = m.vars().next().expect("degree one");
                let j = cols.binary_search(&v).expect("column for variable");
                a[j] += coef;
            }
            d => return Err(RsiError::NotApplicable(format!("{what} has a term of degree {d}"))),
        }
    }
    Ok((a, c))
}

fn ensure_lti(sys: &InterconnectedSystem) -> Result<(), RsiError> {
    for (i, s) in sys.subsystems().iter().enumerate() {
        let drift_ok = s.f_slf.iter().chain(s.f_cpl.iter()).all(|p| p.degree() <= 1);
        let (r, c) = s.g_slf.shape();
        let gain_ok =
            (0..r).all(|a| (0..c).all(|b| s.g_slf.get(a, b).degree() == 0 && s.g_cpl.get(a, b).degree() == 0));
        if !drift_ok || !gain_ok {
            return Err(RsiError::NotApplicable(format!(
                "dynamics of sub-system {} are not affine",
                i + 1
            )));
        }
    }
    for (k, h) in sys.safety().iter().enumerate() {
        if h.degree() > 1 {
            return Err(RsiError::NotApplicable(format!(
                "safety function {} is not affine",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Exact minimum of an affine integrand over the polytope cut from the bounding
/// box by the affine safety constraints, times the input box.
pub fn lp_minimum(
    sys: &InterconnectedSystem,
    expr: &Polynomial,
    inputs: &[InputBound],
    filters: &[Polynomial],
) -> Result<(f64, Attainment), RsiError> {
    ensure_lti(sys)?;
    let mut vars: BTreeSet<VarId> = expr.variables().into_iter().filter(|v| v.is_state()).collect();
    for f in filters {
        vars.extend(f.variables());
    }
    vars.extend(inputs.iter().map(|b| b.var));
    let cols: Vec<VarId> = vars.into_iter().collect();
    let (cost, constant) = affine_parts(expr, &cols, "integrand")?;
    let mut lp = LpProblem::new(cost);
    for (j, v) in cols.iter().enumerate() {
        let (lo, hi) = if v.is_state() {
            sys.bounding_box()[v.index as usize]
        } else {
            let b = inputs.iter().find(|b| b.var == *v).expect("input bound");
            (b.lo, b.hi)
        };
        lp.set_bounds(j, lo, hi);
    }
    for (k, f) in filters.iter().enumerate() {
        let (a, c) = affine_parts(f, &cols, &format!("safety function {}", k + 1))?;
        lp.add_ge(a, -c);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != SolveStatus::Optimal {
        return Err(RsiError::Solver {
            what: "linear program".into(),
            status: sol.status,
        });
    }
    let mut point = centre_point(sys);
    for (j, v) in cols.iter().enumerate() {
        point[dense_index(sys, *v)] = sol.x[j];
    }
    Ok((
        sol.objective + constant,
        Attainment {
            point,
            is_vertex: sol.is_vertex,
        },
    ))
}
