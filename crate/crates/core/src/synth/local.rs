use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::poly::{DenseEval, PolyVector, Polynomial, VarId};
use crate::rsi::grid::{advance, linspace};
use crate::system::InterconnectedSystem;

use super::{shifted_safety, ClassKFunction, SynthError};

/// A safety constraint that depends only on the states of one vulnerable
/// sub-system. Instead of its gamma/beta budget, the protected sub-systems keep
/// `b_c = dh/dx_owner F_owner(x, c) + eta(h) >= 0` for every input corner `c`,
/// which makes `h` invariant whatever the owner's input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalConstraint {
    pub constraint: usize,
    pub owner: usize,
    /// Class-K function on `h`.
    pub eta: ClassKFunction,
    /// Class-K function on each derived barrier `b_c`.
    pub outer: ClassKFunction,
}

/// `b_c` for one input corner `c` of the owner.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedBarrier {
    pub corner: Vec<f64>,
    pub barrier: Polynomial,
}

/// `dp/dx_i F_i(x, u_i) = drift + sum_j coef_j u_{i,j}`.
pub fn lie_split(
    sys: &InterconnectedSystem,
    p: &Polynomial,
    i: usize,
) -> Result<(Polynomial, Vec<Polynomial>), SynthError> {
    let s = sys.subsystem(i)?;
    let drift_field = s.f_slf.checked_add(&s.f_cpl)?;
    let drift = sys.lie_along(p, i, &drift_field)?;
    let vars = sys.state_vars(i)?;
    let grads: Vec<Polynomial> = vars.iter().map(|&v| p.differentiate(v)).collect::<Result<_, _>>()?;
    let mut coefs = Vec::with_capacity(s.r);
    for j in 0..s.r {
        let mut c = Polynomial::zero(sys.scope());
        for (z, g) in grads.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            let gain = s.g_slf.get(z, j).checked_add(s.g_cpl.get(z, j))?;
            c = c.checked_add(&g.checked_mul(&gain)?)?;
        }
        coefs.push(c);
    }
    Ok((drift, coefs))
}

/// Block dynamics of `i` with its input fixed to `u`.
fn dynamics_at(sys: &InterconnectedSystem, i: usize, u: &[f64]) -> Result<PolyVector, SynthError> {
    let map: BTreeMap<VarId, (f64, f64)> = sys
        .input_vars(i)?
        .into_iter()
        .zip(u)
        .map(|(v, &c)| (v, (0.0, c)))
        .collect();
    let entries = sys
        .block_dynamics(i)?
        .iter()
        .map(|p| p.substitute_affine(&map))
        .collect();
    Ok(PolyVector::new(sys.scope(), entries)?)
}

impl LocalConstraint {
    /// Checks that constraint `k` depends only on the states of a vulnerable sub-system.
    pub fn new(
        sys: &InterconnectedSystem,
        k: usize,
        eta: ClassKFunction,
        outer: ClassKFunction,
    ) -> Result<Self, SynthError> {
        eta.validate()?;
        outer.validate()?;
        let h = sys.constraint(k)?;
        let owners: std::collections::BTreeSet<usize> = h
            .variables()
            .into_iter()
            .filter_map(|v| sys.owner_of_state(v.index as usize))
            .collect();
        if owners.len() != 1 {
            return Err(SynthError::NotApplicable(format!(
                "constraint {} is not local to a single sub-system",
                k + 1
            )));
        }
        let owner = *owners.iter().next().expect("one owner");
        if !sys.vulnerable().contains(&owner) {
            return Err(SynthError::NotApplicable(format!(
                "constraint {} is local to protected sub-system {}; its gamma and beta vanish",
                k + 1,
                owner + 1
            )));
        }
        Ok(LocalConstraint {
            constraint: k,
            owner,
            eta,
            outer,
        })
    }

    /// Every constraint of `sys` local to a vulnerable sub-system.
    pub fn detect(sys: &InterconnectedSystem, eta: ClassKFunction, outer: ClassKFunction) -> Vec<LocalConstraint> {
        (0..sys.safety().len())
            .filter_map(|k| LocalConstraint::new(sys, k, eta, outer).ok())
            .collect()
    }

    /// `dh/dx_owner F_owner(x, c) + eta(h)` at every corner `c`, with `h` shifted by `offsets`.
    pub fn condition(&self, sys: &InterconnectedSystem, offsets: &[f64]) -> Result<Vec<DerivedBarrier>, SynthError> {
        let h = &shifted_safety(sys, offsets)[self.constraint];
        let eta_h = self.eta.compose(h);
        sys.input_corners(self.owner)?
            .into_iter()
            .map(|c| {
                let f = dynamics_at(sys, self.owner, &c)?;
                let b = sys.lie_along(h, self.owner, &f)?.checked_add(&eta_h)?;
                Ok(DerivedBarrier { corner: c, barrier: b })
            })
            .collect()
    }

    /// `sum_j db/dx_j F_j(x, c_j)` over vulnerable `j`, one polynomial per joint corner choice.
    pub fn vulnerable_terms(&self, sys: &InterconnectedSystem, b: &Polynomial) -> Result<Vec<Polynomial>, SynthError> {
        let mut out = vec![Polynomial::zero(sys.scope())];
        for &j in sys.vulnerable() {
            let per: Vec<Polynomial> = sys
                .input_corners(j)?
                .into_iter()
                .map(|c| Ok(sys.lie_along(b, j, &dynamics_at(sys, j, &c)?)?))
                .collect::<Result<_, SynthError>>()?;
            let mut next = Vec::with_capacity(out.len() * per.len());
            for acc in &out {
                for p in &per {
                    next.push(acc.checked_add(p)?);
                }
            }
            next.sort_by_key(|a| a.to_string());
            next.dedup();
            out = next;
        }
        Ok(out)
    }
}

/// Grid test of whether the states can compensate the owner's worst input: for
/// every grid value of the owner's states inside the safe set there must be a
/// grid value of the remaining states, also inside it, at which the local
/// condition holds at every input corner.
pub fn compatible(sys: &InterconnectedSystem, local: &LocalConstraint, resolution: usize) -> Result<bool, SynthError> {
    let res = resolution.max(2);
    let conds: Vec<DenseEval> = local
        .condition(sys, &[])?
        .iter()
        .map(|d| DenseEval::new(&d.barrier))
        .collect();
    let safe: Vec<DenseEval> = sys.safety().iter().map(DenseEval::new).collect();
    let own: Vec<usize> = sys.state_vars(local.owner)?.iter().map(|v| v.index as usize).collect();
    let rest: Vec<usize> = (0..sys.num_states()).filter(|j| !own.contains(j)).collect();
    let bbox = sys.bounding_box();
    let axis = |j: usize| linspace(bbox[j].0, bbox[j].1, res);
    let own_axes: Vec<Vec<f64>> = own.iter().map(|&j| axis(j)).collect();
    let rest_axes: Vec<Vec<f64>> = rest.iter().map(|&j| axis(j)).collect();
    let mut point = vec![0.0; sys.scope().len()];
    let lens_own = vec![res; own.len()];
    let lens_rest = vec![res; rest.len()];
    let mut oi = vec![0usize; own.len()];
    loop {
        for (a, &j) in own.iter().enumerate() {
            point[j] = own_axes[a][oi[a]];
        }
        let mut any_inside = false;
        let mut found = false;
        let mut ri = vec![0usize; rest.len()];
        loop {
            for (a, &j) in rest.iter().enumerate() {
                point[j] = rest_axes[a][ri[a]];
            }
            if safe.iter().all(|h| h.eval(&point) >= 0.0) {
                any_inside = true;
                if conds.iter().all(|c| c.eval(&point) >= 0.0) {
                    found = true;
                    break;
                }
            }
            if !advance(&mut ri, &lens_rest) {
                break;
            }
        }
        if any_inside && !found {
            return Ok(false);
        }
        if !advance(&mut oi, &lens_own) {
            return Ok(true);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Smallest tested bound found infeasible, within `tol` of the transition.
    pub threshold: Option<f64>,
    /// Coarse scan of `(bound, feasible)` pairs from `lo` to `hi`.
    pub scan: Vec<(f64, bool)>,
    /// The scan switches from feasible to infeasible exactly once.
    pub monotone: bool,
    pub evaluations: usize,
}

/// Bisects on a scalar bound between a feasible `lo` and an infeasible `hi`.
pub fn infeasibility_threshold<F>(
    mut feasible: F,
    lo: f64,
    hi: f64,
    tol: f64,
    scan_points: usize,
) -> Result<ThresholdResult, SynthError>
where
    F: FnMut(f64) -> Result<bool, SynthError>,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(SynthError::Invalid("bisection needs lo < hi and tol > 0".into()));
    }
    let mut evaluations = 0;
    let scan: Vec<(f64, bool)> = linspace(lo, hi, scan_points.max(2))
        .into_iter()
        .map(|u| {
            evaluations += 1;
            feasible(u).map(|f| (u, f))
        })
        .collect::<Result<_, _>>()?;
    let switches = scan.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let monotone = scan[0].1 && !scan[scan.len() - 1].1 && switches == 1;
    if !scan[0].1 || scan[scan.len() - 1].1 {
        return Ok(ThresholdResult {
            threshold: None,
            scan,
            monotone,
            evaluations,
        });
    }
    let k = scan.iter().position(|s| !s.1).expect("an infeasible point");
    let (mut a, mut b) = (scan[k - 1].0, scan[k].0);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        evaluations += 1;
        if feasible(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(ThresholdResult {
        threshold: Some(b),
        scan,
        monotone,
        evaluations,
    })
}
