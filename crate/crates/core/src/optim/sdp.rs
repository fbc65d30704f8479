//! Dense primal-dual interior point method for block-diagonal SDPs with free
//! scalar variables.
//!
//! Primal: minimize <C, X> + d'v subject to <A_i, X> + B_i v = b_i, X PSD.
//! Dual:   maximize b'y subject to C - sum_i y_i A_i = Z PSD, B'y = d.

use nalgebra::{DMatrix, DVector};

use super::rows::independent_rows;
use super::{OptimError, SolveStatus};

/// Reference to the upper-triangle entry `(i, j)`, `i <= j`, of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub coef: f64,
}

/// `sum coef * X_b[i][j] + sum coef * v_k`; each off-diagonal entry is counted once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearFunctional {
    pub entries: Vec<BlockEntry>,
    pub free: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entry(&mut self, block: usize, i: usize, j: usize, coef: f64) -> &mut Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push(BlockEntry { block, i, j, coef });
        self
    }

    pub fn add_free(&mut self, index: usize, coef: f64) -> &mut Self {
        self.free.push((index, coef));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.coef == 0.0) && self.free.iter().all(|f| f.1 == 0.0)
    }

    pub fn evaluate(&self, blocks: &[DMatrix<f64>], free: &[f64]) -> f64 {
        let mut s = 0.0;
        for e in &self.entries {
            s += e.coef * blocks[e.block][(e.i, e.j)];
        }
        for &(k, c) in &self.free {
            s += c * free[k];
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    block_sizes: Vec<usize>,
    free_names: Vec<String>,
    sense: Sense,
    objective: LinearFunctional,
    constraints: Vec<(LinearFunctional, f64)>,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        SdpProblem {
            block_sizes: Vec::new(),
            free_names: Vec::new(),
            sense: Sense::Minimize,
            objective: LinearFunctional::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_block(&mut self, size: usize) -> usize {
        assert!(size > 0, "PSD blocks must be nonempty");
        self.block_sizes.push(size);
        self.block_sizes.len() - 1
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> usize {
        self.free_names.push(name.into());
        self.free_names.len() - 1
    }

    pub fn set_objective(&mut self, sense: Sense, f: LinearFunctional) -> Result<(), OptimError> {
        self.check(&f)?;
        self.sense = sense;
        self.objective = f;
        Ok(())
    }

    pub fn add_constraint(&mut self, f: LinearFunctional, rhs: f64) -> Result<(), OptimError> {
        self.check(&f)?;
        if !rhs.is_finite() {
            return Err(OptimError::Invalid("non-finite right-hand side".into()));
        }
        self.constraints.push((f, rhs));
        Ok(())
    }

    fn check(&self, f: &LinearFunctional) -> Result<(), OptimError> {
        for e in &f.entries {
            let Some(&n) = self.block_sizes.get(e.block) else {
                return Err(OptimError::Invalid(format!("unknown block {}", e.block)));
            };
            if e.j >= n || e.i > e.j {
                return Err(OptimError::Invalid(format!(
                    "entry ({}, {}) outside upper triangle of block {} (size {n})",
                    e.i, e.j, e.block
                )));
            }
            if !e.coef.is_finite() {
                return Err(OptimError::Invalid("non-finite coefficient".into()));
            }
        }
        for &(k, c) in &f.free {
            if k >= self.free_names.len() {
                return Err(OptimError::Invalid(format!("unknown free variable {k}")));
            }
            if !c.is_finite() {
                return Err(OptimError::Invalid("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn free_names(&self) -> &[String] {
        &self.free_names
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &LinearFunctional {
        &self.objective
    }

    pub fn constraints(&self) -> &[(LinearFunctional, f64)] {
        &self.constraints
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Absolute bound on the primal equality residual (infinity norm).
    pub feas_tol: f64,
    /// Relative duality gap.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            feas_tol: 1e-7,
            gap_tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub blocks: Vec<DMatrix<f64>>,
    pub free: Vec<f64>,
    /// Dual multipliers of the equality constraints, in input order (zero for dropped rows).
    pub dual: Vec<f64>,
    /// Primal objective in the problem's own sense.
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }
}

// Symmetric expansion of one constraint matrix restricted to a block.
struct SparseSym {
    block: usize,
    entries: Vec<(usize, usize, f64)>,
}

struct Compiled {
    sizes: Vec<usize>,
    rows: Vec<Vec<SparseSym>>,
    b: DVector<f64>,
    bfree: DMatrix<f64>,
    c: Vec<DMatrix<f64>>,
    d: DVector<f64>,
}

fn expand(f: &LinearFunctional, nblocks: usize) -> Vec<SparseSym> {
    let mut per: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nblocks];
    for e in &f.entries {
        if e.coef == 0.0 {
            continue;
        }
        if e.i == e.j {
            per[e.block].push((e.i, e.i, e.coef));
        } else {
            per[e.block].push((e.i, e.j, 0.5 * e.coef));
            per[e.block].push((e.j, e.i, 0.5 * e.coef));
        }
    }
    per.into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(block, entries)| SparseSym { block, entries })
        .collect()
}

fn dense(f: &LinearFunctional, sizes: &[usize]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for e in &f.entries {
        if e.i == e.j {
            out[e.block][(e.i, e.i)] += e.coef;
        } else {
            out[e.block][(e.i, e.j)] += 0.5 * e.coef;
            out[e.block][(e.j, e.i)] += 0.5 * e.coef;
        }
    }
    out
}

impl Compiled {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn nfree(&self) -> usize {
        self.d.len()
    }

    /// `<A_i, M>` for every row.
    fn apply(&self, mats: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(|s| {
                        s.entries
                            .iter()
                            .map(|&(p, q, v)| v * mats[s.block][(q, p)])
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            }),
        )
    }

    /// `sum_i y_i A_i`.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for s in row {
                for &(p, q, v) in &s.entries {
                    out[s.block][(p, q)] += yi * v;
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = tr(A_i X A_j Z^-1)`.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for si in &self.rows[i] {
                    for sj in self.rows[j].iter().filter(|sj| sj.block == si.block) {
                        let (xb, wb) = (&x[si.block], &zinv[si.block]);
                        for &(r, t, a) in &si.entries {
                            for &(p, q, v) in &sj.entries {
                                s += a * v * xb[(t, p)] * wb[(q, r)];
                            }
                        }
                    }
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest step in (0, 1] keeping `x + a * dx` positive definite.
fn max_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> Option<f64> {
    let mut alpha: f64 = 1.0;
    for (xb, db) in x.iter().zip(dx) {
        let chol = xb.clone().cholesky()?;
        let l = chol.l();
        let t = l.solve_lower_triangular(db)?;
        let t = l.solve_lower_triangular(&t.transpose())?;
        let lmin = sym(&t).symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Some(alpha)
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

pub fn solve_sdp(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, OptimError> {
    if problem.block_sizes.is_empty() && problem.free_names.is_empty() {
        return Err(OptimError::Invalid("SDP has neither blocks nor free variables".into()));
    }
    let sizes = problem.block_sizes.clone();
    let nb = sizes.len();
    let nf = problem.free_names.len();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let kept = independent_rows(&problem.block_sizes, nf, &problem.constraints, 1e-10);
    if let Some(bad) = kept.inconsistent {
        log::debug!("equality row {bad} is dependent with an inconsistent right-hand side");
        return Ok(infeasible_solution(problem));
    }
    if kept.rows.len() < problem.constraints.len() {
        log::warn!(
            "dropped {} linearly dependent equality rows",
            problem.constraints.len() - kept.rows.len()
        );
    }

    let rows: Vec<Vec<SparseSym>> = kept
        .rows
        .iter()
        .map(|&k| expand(&problem.constraints[k].0, nb))
        .collect();
    let m = rows.len();
    let b = DVector::from_iterator(m, kept.rows.iter().map(|&k| problem.constraints[k].1));
    let mut bfree = DMatrix::zeros(m, nf);
    for (r, &k) in kept.rows.iter().enumerate() {
        for &(j, c) in &problem.constraints[k].0.free {
            bfree[(r, j)] += c;
        }
    }
    let c: Vec<DMatrix<f64>> = dense(&problem.objective, &sizes)
        .into_iter()
        .map(|m| m * sign)
        .collect();
    let mut d = DVector::zeros(nf);
    for &(j, v) in &problem.objective.free {
        d[j] += sign * v;
    }
    let cp = Compiled {
        sizes: sizes.clone(),
        rows,
        b,
        bfree,
        c,
        d,
    };

    let mut sol = ipm(&cp, opts);
    // Report in caller's sense and original row indexing.
    let mut dual = vec![0.0; problem.constraints.len()];
    for (r, &k) in kept.rows.iter().enumerate() {
        dual[k] = sign * sol.dual[r];
    }
    sol.dual = dual;
    sol.primal_objective *= sign;
    sol.dual_objective *= sign;
    // Re-measure the primal residual against every original row, dropped ones included.
    let mut worst: f64 = 0.0;
    for (f, rhs) in &problem.constraints {
        worst = worst.max((f.evaluate(&sol.blocks, &sol.free) - rhs).abs());
    }
    sol.primal_residual = worst;
    if sol.status == SolveStatus::Optimal && worst > opts.feas_tol {
        sol.status = SolveStatus::NumericalFailure;
    }
    Ok(sol)
}

fn infeasible_solution(problem: &SdpProblem) -> SdpSolution {
    SdpSolution {
        status: SolveStatus::Infeasible,
        blocks: problem.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        free: vec![0.0; problem.free_names.len()],
        dual: vec![0.0; problem.constraints.len()],
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        iterations: 0,
    }
}

/// Search direction `(dX, dZ, dy, dv)`.
type Direction = (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, DVector<f64>, DVector<f64>);

struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    v: DVector<f64>,
}

fn ipm(cp: &Compiled, opts: &SdpOptions) -> SdpSolution {
    let m = cp.m();
    let nf = cp.nfree();
    let ntot: usize = cp.sizes.iter().sum();

    // Starting point scaled to the data, as is customary for infeasible methods.
    let anorms: Vec<f64> = (0..m)
        .map(|i| {
            let r: f64 = cp.rows[i]
                .iter()
                .flat_map(|s| s.entries.iter().map(|e| e.2 * e.2))
                .sum::<f64>()
                + cp.bfree.row(i).norm_squared();
            r.sqrt()
        })
        .collect();
    let nsq = (ntot.max(1) as f64).sqrt();
    let mut xi: f64 = 10.0f64.max(nsq);
    let mut eta: f64 = 10.0f64.max(nsq).max(frob(&cp.c)).max(cp.d.norm());
    for (i, &an) in anorms.iter().enumerate().take(m) {
        xi = xi.max(ntot as f64 * (1.0 + cp.b[i].abs()) / (1.0 + an));
        eta = eta.max(an);
    }
    let mut it = Iterate {
        x: cp.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi).collect(),
        z: cp.sizes.iter().map(|&n| DMatrix::identity(n, n) * eta).collect(),
        y: DVector::zeros(m),
        v: DVector::zeros(nf),
    };

    let bnorm = 1.0 + cp.b.amax();
    let cnorm = 1.0 + frob(&cp.c) + cp.d.norm();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    let mut best: Option<(f64, Iterate)> = None;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let ax = cp.apply(&it.x);
        let rp = &cp.b - &ax - &cp.bfree * &it.v;
        let aty = cp.adjoint(&it.y);
        let rd: Vec<DMatrix<f64>> = (0..cp.sizes.len()).map(|k| &cp.c[k] - &aty[k] - &it.z[k]).collect();
        let rf = &cp.d - cp.bfree.transpose() * &it.y;
        let pobj = inner(&cp.c, &it.x) + cp.d.dot(&it.v);
        let dobj = cp.b.dot(&it.y);
        let pinf = rp.amax();
        let dinf = (frob(&rd) + rf.norm()) / cnorm;
        let gap = inner(&it.x, &it.z);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        log::trace!("sdp iter {iter}: pobj {pobj:.6e} dobj {dobj:.6e} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e}");

        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && relgap <= opts.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        let merit = pinf / bnorm + dinf + relgap;
        if best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
            best = Some((
                merit,
                Iterate {
                    x: it.x.clone(),
                    z: it.z.clone(),
                    y: it.y.clone(),
                    v: it.v.clone(),
                },
            ));
        }
        // Certificates of infeasibility along diverging iterates.
        if dobj > 0.0 {
            let ray = (frob(&aty.iter().zip(&it.z).map(|(a, z)| a + z).collect::<Vec<_>>())
                + (cp.bfree.transpose() * &it.y).norm())
                / dobj;
            if dobj > 1e6 * cnorm && ray < 1e-7 {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if -pobj > 0.0 {
            let ray = (ax.clone() + &cp.bfree * &it.v).norm() / -pobj;
            if -pobj > 1e6 * bnorm && ray < 1e-7 {
                status = SolveStatus::Unbounded;
                break;
            }
        }

        let mu = gap / ntot.max(1) as f64;
        let Some(zinv) = it.z.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let schur = cp.schur(&it.x, &zinv);
        let kkt = assemble_kkt(&schur, &cp.bfree);
        let lu = kkt.lu();

        // X Rd Z^-1, reused by predictor and corrector.
        let xrdz: Vec<DMatrix<f64>> = (0..cp.sizes.len()).map(|k| &it.x[k] * &rd[k] * &zinv[k]).collect();
        let solve_dir = |rc: &[DMatrix<f64>]| -> Option<Direction> {
            let rcz: Vec<DMatrix<f64>> = (0..cp.sizes.len()).map(|k| &rc[k] * &zinv[k]).collect();
            let t: Vec<DMatrix<f64>> = (0..cp.sizes.len()).map(|k| sym(&(&rcz[k] - &xrdz[k]))).collect();
            let rhs1 = &rp - cp.apply(&t);
            let mut rhs = DVector::zeros(m + nf);
            rhs.rows_mut(0, m).copy_from(&rhs1);
            rhs.rows_mut(m, nf).copy_from(&rf);
            let sol = lu.solve(&rhs)?;
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let dy = sol.rows(0, m).into_owned();
            let dv = sol.rows(m, nf).into_owned();
            let atdy = cp.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = (0..cp.sizes.len()).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..cp.sizes.len())
                .map(|k| sym(&(&rcz[k] - &it.x[k] * &dz[k] * &zinv[k])))
                .collect();
            Some((dx, dz, dy, dv))
        };

        // Predictor.
        let rc_aff: Vec<DMatrix<f64>> = it.x.iter().zip(&it.z).map(|(x, z)| -(x * z)).collect();
        let Some((dxa, dza, _, _)) = solve_dir(&rc_aff) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&it.x, &dxa), max_step(&it.z, &dza)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let xa: Vec<DMatrix<f64>> = it.x.iter().zip(&dxa).map(|(x, d)| x + d * ap).collect();
        let za: Vec<DMatrix<f64>> = it.z.iter().zip(&dza).map(|(z, d)| z + d * ad).collect();
        let mu_aff = inner(&xa, &za) / ntot.max(1) as f64;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let sigma = sigma.max(if pinf > 1e3 * opts.feas_tol { 0.1 } else { 0.0 });

        // Corrector.
        let rc: Vec<DMatrix<f64>> = (0..cp.sizes.len())
            .map(|k| {
                DMatrix::identity(cp.sizes[k], cp.sizes[k]) * (sigma * mu) - &it.x[k] * &it.z[k] - &dxa[k] * &dza[k]
            })
            .collect();
        let Some((dx, dz, dy, dv)) = solve_dir(&rc) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let (Some(ap), Some(ad)) = (max_step(&it.x, &dx), max_step(&it.z, &dz)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let ap = (0.98 * ap).min(1.0);
        let ad = (0.98 * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            status = SolveStatus::NumericalFailure;
            break;
        }
        for k in 0..cp.sizes.len() {
            it.x[k] = sym(&(&it.x[k] + &dx[k] * ap));
            it.z[k] = sym(&(&it.z[k] + &dz[k] * ad));
        }
        it.v += &dv * ap;
        it.y += &dy * ad;
        iterations = iter + 1;
    }

    if matches!(status, SolveStatus::MaxIter | SolveStatus::NumericalFailure) {
        if let Some((_, b)) = best {
            // Keep whichever of the final and best iterates has the smaller merit.
            it = b;
        }
    }
    let ax = cp.apply(&it.x);
    let rp = &cp.b - &ax - &cp.bfree * &it.v;
    let aty = cp.adjoint(&it.y);
    let rd: Vec<DMatrix<f64>> = (0..cp.sizes.len()).map(|k| &cp.c[k] - &aty[k] - &it.z[k]).collect();
    let rf = &cp.d - cp.bfree.transpose() * &it.y;
    SdpSolution {
        status,
        primal_objective: inner(&cp.c, &it.x) + cp.d.dot(&it.v),
        dual_objective: cp.b.dot(&it.y),
        primal_residual: rp.amax(),
        dual_residual: (frob(&rd) + rf.norm()) / cnorm,
        blocks: it.x,
        free: it.v.iter().copied().collect(),
        dual: it.y.iter().copied().collect(),
        iterations,
    }
}

fn assemble_kkt(schur: &DMatrix<f64>, bfree: &DMatrix<f64>) -> DMatrix<f64> {
    let m = schur.nrows();
    let nf = bfree.ncols();
    let mut k = DMatrix::zeros(m + nf, m + nf);
    k.view_mut((0, 0), (m, m)).copy_from(schur);
    k.view_mut((0, m), (m, nf)).copy_from(bfree);
    k.view_mut((m, 0), (nf, m)).copy_from(&bfree.transpose());
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_determinant() {
        // maximize t s.t. [[1, t], [t, 1]] PSD
        let mut p = SdpProblem::new();
        let b = p.add_block(2);
        let t = p.add_free("t");
        let mut f = LinearFunctional::new();
        f.add_entry(b, 0, 0, 1.0);
        p.add_constraint(f, 1.0).unwrap();
        let mut f = LinearFunctional::new();
        f.add_entry(b, 1, 1, 1.0);
        p.add_constraint(f, 1.0).unwrap();
        let mut f = LinearFunctional::new();
        f.add_entry(b, 0, 1, 1.0).add_free(t, -1.0);
        p.add_constraint(f, 0.0).unwrap();
        let mut obj = LinearFunctional::new();
        obj.add_free(t, 1.0);
        p.set_objective(Sense::Maximize, obj).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.free[0] - 1.0).abs() < 1e-5, "{:?}", s.free);
    }

    #[test]
    fn trace_minimization() {
        let mut p = SdpProblem::new();
        let b = p.add_block(3);
        let mut f = LinearFunctional::new();
        f.add_entry(b, 0, 0, 1.0);
        p.add_constraint(f, 1.0).unwrap();
        let mut obj = LinearFunctional::new();
        for i in 0..3 {
            obj.add_entry(b, i, i, 1.0);
        }
        p.set_objective(Sense::Minimize, obj).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal_objective - 1.0).abs() < 1e-5);
        assert!((s.blocks[0][(0, 0)] - 1.0).abs() < 1e-7);
        assert!(s.blocks[0][(1, 1)].abs() < 1e-5);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut p = SdpProblem::new();
        let b = p.add_block(1);
        for rhs in [1.0, 2.0] {
            let mut f = LinearFunctional::new();
            f.add_entry(b, 0, 0, 1.0);
            p.add_constraint(f, rhs).unwrap();
        }
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn negative_diagonal_is_infeasible() {
        let mut p = SdpProblem::new();
        let b = p.add_block(2);
        let mut f = LinearFunctional::new();
        f.add_entry(b, 0, 0, 1.0);
        p.add_constraint(f, -1.0).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_free_variable() {
        // minimize t with X = t + 1 and X >= 0: optimum -1. Then drop the block link.
        let mut p = SdpProblem::new();
        let b = p.add_block(1);
        let t = p.add_free("t");
        let mut f = LinearFunctional::new();
        f.add_entry(b, 0, 0, 1.0).add_free(t, 1.0);
        p.add_constraint(f, 1.0).unwrap();
        let mut obj = LinearFunctional::new();
        obj.add_free(t, -1.0);
        p.set_objective(Sense::Minimize, obj).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.free[0] - 1.0).abs() < 1e-5);

        let mut obj = LinearFunctional::new();
        obj.add_free(t, 1.0);
        p.set_objective(Sense::Minimize, obj).unwrap();
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn rejects_bad_entry() {
        let mut p = SdpProblem::new();
        let b = p.add_block(2);
        let mut f = LinearFunctional::new();
        f.add_entry(b, 0, 2, 1.0);
        assert!(p.add_constraint(f, 0.0).is_err());
    }
}
