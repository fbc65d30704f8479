use std::collections::BTreeSet;

use crate::optim::{solve_lp, LpProblem, SolveStatus};
use crate::poly::{monomial_basis, Monomial, VarId};

/// Monomials `b` of degree at most `half_degree` with `2b` in the convex hull of `support`.
pub fn half_newton_basis(vars: &[VarId], support: &BTreeSet<Monomial>, half_degree: u32) -> Vec<Monomial> {
    let candidates = monomial_basis(vars, half_degree);
    if support.is_empty() {
        return Vec::new();
    }
    let points: Vec<Vec<f64>> = support
        .iter()
        .map(|m| vars.iter().map(|&v| m.exponent(v) as f64).collect())
        .collect();
    // Per-coordinate bounds reject most candidates without an LP.
    let lo: Vec<f64> = (0..vars.len())
        .map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..vars.len())
        .map(|k| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let dlo = support.iter().map(|m| m.degree()).min().unwrap_or(0) as f64;
    let dhi = support.iter().map(|m| m.degree()).max().unwrap_or(0) as f64;

    candidates
        .into_iter()
        .filter(|b| {
            let target: Vec<f64> = vars.iter().map(|&v| 2.0 * b.exponent(v) as f64).collect();
            let deg = 2.0 * b.degree() as f64;
            if deg < dlo || deg > dhi || (0..vars.len()).any(|k| target[k] < lo[k] || target[k] > hi[k]) {
                return false;
            }
            if support.contains(&b.mul(b)) {
                return true;
            }
            in_hull(&points, &target)
        })
        .collect()
}

fn in_hull(points: &[Vec<f64>], target: &[f64]) -> bool {
    let np = points.len();
    let mut lp = LpProblem::new(vec![0.0; np]);
    for j in 0..np {
        lp.set_bounds(j, 0.0, f64::INFINITY);
    }
    lp.add_eq(vec![1.0; np], 1.0);
    for (k, &t) in target.iter().enumerate() {
        lp.add_eq(points.iter().map(|p| p[k]).collect(), t);
    }
    matches!(solve_lp(&lp), Ok(s) if s.status == SolveStatus::Optimal)
}
