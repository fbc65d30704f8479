use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::poly::{DenseEval, Polynomial, VarId};
use crate::sos::InputBound;
use crate::system::InterconnectedSystem;

use super::{centre_point, dense_index, RsiError};

/// Smallest sampled value of an integrand; an upper bound on its infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBound {
    pub min: f64,
    /// Dense `(x, u)` point attaining `min`.
    pub argmin: Vec<f64>,
    /// State grid points inside the safe set.
    pub points: usize,
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            if t + 1 == n {
                hi
            } else {
                lo + (hi - lo) * t as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Odometer over axes of given lengths, first axis slowest.
pub(crate) fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < lens[a] {
            return true;
        }
        idx[a] = 0;
    }
    false
}

/// Minimizes `expr` over bounding-box grid points with every filter `>= 0`,
/// times a grid on each input box. Ties keep the lexicographically first point.
pub fn grid_minimum(
    sys: &InterconnectedSystem,
    label: &str,
    expr: &Polynomial,
    inputs: &[InputBound],
    filters: &[Polynomial],
    resolution: usize,
    input_resolution: usize,
) -> Result<OracleBound, RsiError> {
    if resolution < 2 || input_resolution < 2 {
        return Err(RsiError::Invalid("grid resolution must be at least 2".into()));
    }
    let mut states: BTreeSet<VarId> = expr.variables().into_iter().filter(|v| v.is_state()).collect();
    for f in filters {
        states.extend(f.variables().into_iter().filter(|v| v.is_state()));
    }
    let states: Vec<VarId> = states.into_iter().collect();
    let bbox = sys.bounding_box();
    let state_axes: Vec<Vec<f64>> = states
        .iter()
        .map(|v| {
            let (lo, hi) = bbox[v.index as usize];
            linspace(lo, hi, resolution)
        })
        .collect();
    let input_axes: Vec<Vec<f64>> = inputs.iter().map(|b| linspace(b.lo, b.hi, input_resolution)).collect();
    let state_pos: Vec<usize> = states.iter().map(|&v| dense_index(sys, v)).collect();
    let input_pos: Vec<usize> = inputs.iter().map(|b| dense_index(sys, b.var)).collect();
    let f_eval = DenseEval::new(expr);
    let filter_eval: Vec<DenseEval> = filters.iter().map(DenseEval::new).collect();

    let mut point = centre_point(sys);
    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut count = 0usize;
    let s_lens: Vec<usize> = state_axes.iter().map(Vec::len).collect();
    let u_lens: Vec<usize> = input_axes.iter().map(Vec::len).collect();
    let mut si = vec![0usize; states.len()];
    loop {
        for (a, &p) in state_pos.iter().enumerate() {
            point[p] = state_axes[a][si[a]];
        }
        if filter_eval.iter().all(|f| f.eval(&point) >= 0.0) {
            count += 1;
            let mut ui = vec![0usize; inputs.len()];
            loop {
                for (a, &p) in input_pos.iter().enumerate() {
                    point[p] = input_axes[a][ui[a]];
                }
                let v = f_eval.eval(&point);
                if v < best {
                    best = v;
                    argmin = point.clone();
                }
                if !advance(&mut ui, &u_lens) {
                    break;
                }
            }
        }
        if !advance(&mut si, &s_lens) {
            break;
        }
    }
    if count == 0 {
        return Err(RsiError::EmptyGrid(label.to_string()));
    }
    Ok(OracleBound {
        min: best,
        argmin,
        points: count,
    })
}
