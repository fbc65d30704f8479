use std::collections::BTreeSet;

use crate::poly::{DenseEval, Polynomial, VarId};
use crate::sos::InputBound;
use crate::system::InterconnectedSystem;

use super::grid::{advance, linspace};
use super::{centre_point, dense_index, Attainment, RsiError};

/// Sign tolerance of sampled partial derivatives.
const SIGN_TOL: f64 = 1e-12;

struct Axis {
    var: VarId,
    lo: f64,
    hi: f64,
}

fn axes(sys: &InterconnectedSystem, vars: &BTreeSet<VarId>, inputs: &[InputBound]) -> Vec<Axis> {
    vars.iter()
        .map(|&v| {
            let (lo, hi) = if v.is_state() {
                sys.bounding_box()[v.index as usize]
            } else {
                let b = inputs.iter().find(|b| b.var == v).expect("input bound");
                (b.lo, b.hi)
            };
            Axis { var: v, lo, hi }
        })
        .collect()
}

/// Calls `visit` on every grid point of the box spanned by `axes`.
fn sweep(sys: &InterconnectedSystem, axes: &[Axis], res: usize, mut visit: impl FnMut(&[f64]) -> bool) -> bool {
    let grids: Vec<Vec<f64>> = axes.iter().map(|a| linspace(a.lo, a.hi, res)).collect();
    let pos: Vec<usize> = axes.iter().map(|a| dense_index(sys, a.var)).collect();
    let lens = vec![res; axes.len()];
    let mut idx = vec![0usize; axes.len()];
    let mut point = centre_point(sys);
    loop {
        for (a, &p) in pos.iter().enumerate() {
            point[p] = grids[a][idx[a]];
        }
        if !visit(&point) {
            return false;
        }
        if !advance(&mut idx, &lens) {
            return true;
        }
    }
}

/// Minimum of an integrand that is monotone in every variable over a safe set
/// equal to the bounding box: the value at the matching box corner.
pub fn monotone_minimum(
    sys: &InterconnectedSystem,
    expr: &Polynomial,
    inputs: &[InputBound],
    filters: &[Polynomial],
    resolution: usize,
) -> Result<(f64, Attainment), RsiError> {
    let res = resolution.max(2);
    let mut safe_vars: BTreeSet<VarId> = BTreeSet::new();
    for f in filters {
        safe_vars.extend(f.variables());
    }
    let safe_axes = axes(sys, &safe_vars, inputs);
    let evals: Vec<DenseEval> = filters.iter().map(DenseEval::new).collect();
    if !sweep(sys, &safe_axes, res, |p| evals.iter().all(|f| f.eval(p) >= -SIGN_TOL)) {
        return Err(RsiError::NotApplicable("safe set is not the whole bounding box".into()));
    }

    let vars = expr.variables();
    let all_axes = axes(sys, &vars, inputs);
    let mut corner = centre_point(sys);
    for a in &all_axes {
        let d = expr.differentiate(a.var).map_err(crate::system::SystemError::from)?;
        let increasing = if d.degree() == 0 {
            d.coefficient(&crate::poly::Monomial::one()) >= 0.0
        } else {
            let de = DenseEval::new(&d);
            let (mut pos, mut neg) = (false, false);
            sweep(sys, &all_axes, res, |p| {
                let v = de.eval(p);
                pos |= v > SIGN_TOL;
                neg |= v < -SIGN_TOL;
                !(pos && neg)
            });
            if pos && neg {
                return Err(RsiError::NotApplicable(format!(
                    "partial derivative in {} changes sign: {d}",
                    a.var
                )));
            }
            !neg
        };
        corner[dense_index(sys, a.var)] = if increasing { a.lo } else { a.hi };
    }
    Ok((
        expr.eval_dense(&corner),
        Attainment {
            point: corner,
            is_vertex: true,
        },
    ))
}
