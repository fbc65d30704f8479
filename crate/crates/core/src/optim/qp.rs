//! Primal active-set method for convex QPs with a positive semidefinite Hessian.

use nalgebra::{DMatrix, DVector};

use super::lp::{solve_lp, LpProblem};
use super::{OptimError, SolveStatus};

/// Minimize `0.5 z'Hz + g'z` subject to `A z >= b` and `E z = e`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub ineq: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub eq: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    /// Largest constraint violation (zero when feasible).
    pub primal: f64,
    /// Most negative inequality multiplier, as a positive number.
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    /// Indices of inequality rows in the final working set.
    pub active: Vec<usize>,
    pub ineq_multipliers: DVector<f64>,
    pub eq_multipliers: DVector<f64>,
    pub kkt: KktResiduals,
}

impl QpProblem {
    /// `min ||z||^2` style problem with only inequalities.
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Self {
        let n = linear.len();
        QpProblem {
            hessian,
            linear,
            ineq: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
            eq: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn add_ge(&mut self, a: &[f64], b: f64) {
        self.ineq = append_row(&self.ineq, a);
        self.ineq_rhs = self.ineq_rhs.push(b);
    }

    pub fn add_eq(&mut self, a: &[f64], b: f64) {
        self.eq = append_row(&self.eq, a);
        self.eq_rhs = self.eq_rhs.push(b);
    }

    fn validate(&self) -> Result<(), OptimError> {
        let n = self.dim();
        if self.hessian.shape() != (n, n)
            || self.ineq.ncols() != n
            || self.eq.ncols() != n
            || self.ineq.nrows() != self.ineq_rhs.len()
            || self.eq.nrows() != self.eq_rhs.len()
        {
            return Err(OptimError::Invalid("QP dimensions are inconsistent".into()));
        }
        let asym = (&self.hessian - self.hessian.transpose()).amax();
        if asym > 1e-10 * (1.0 + self.hessian.amax()) {
            return Err(OptimError::Invalid("Hessian is not symmetric".into()));
        }
        if n > 0 && self.hessian.clone().symmetric_eigenvalues().min() < -1e-10 * (1.0 + self.hessian.amax()) {
            return Err(OptimError::Invalid("Hessian is not positive semidefinite".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    /// KKT residuals of `(x, lambda, mu)`.
    pub fn kkt(&self, x: &DVector<f64>, lambda: &DVector<f64>, mu: &DVector<f64>) -> KktResiduals {
        let grad = &self.hessian * x + &self.linear;
        let stat = grad - self.ineq.transpose() * lambda - self.eq.transpose() * mu;
        let slack = &self.ineq * x - &self.ineq_rhs;
        let eqres = &self.eq * x - &self.eq_rhs;
        let primal = slack.iter().fold(0.0f64, |a, s| a.max(-s)).max(eqres.amax());
        let dual = lambda.iter().fold(0.0f64, |a, l| a.max(-l));
        let comp = lambda
            .iter()
            .zip(slack.iter())
            .fold(0.0f64, |a, (l, s)| a.max((l * s).abs()));
        KktResiduals {
            stationarity: if stat.is_empty() { 0.0 } else { stat.amax() },
            primal,
            dual,
            complementarity: comp,
        }
    }
}

fn append_row(m: &DMatrix<f64>, row: &[f64]) -> DMatrix<f64> {
    let n = m.ncols().max(row.len());
    let mut out = DMatrix::zeros(m.nrows() + 1, n);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    for (j, v) in row.iter().enumerate() {
        out[(m.nrows(), j)] = *v;
    }
    out
}

/// Orthonormal basis of the null space of `a` (columns), via SVD.
fn null_space(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full V.
    let mut padded = DMatrix::zeros(a.nrows().max(n), n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1.0);
    let cols: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= tol).collect();
    DMatrix::from_fn(n, cols.len(), |r, c| vt[(cols[c], r)])
}

/// Least-squares multipliers for `W' lambda = grad`.
fn multipliers(w: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    if w.nrows() == 0 {
        return DVector::zeros(0);
    }
    let wt = w.transpose();
    let svd = wt.svd(true, true);
    svd.solve(grad, 1e-12).unwrap_or_else(|_| DVector::zeros(w.nrows()))
}

pub fn solve_qp(p: &QpProblem) -> Result<QpSolution, OptimError> {
    p.validate()?;
    let n = p.dim();
    let mi = p.ineq.nrows();
    let me = p.eq.nrows();

    // Phase 1: any feasible point.
    let mut lp = LpProblem::new(vec![0.0; n]);
    for r in 0..mi {
        lp.add_ge(p.ineq.row(r).iter().copied().collect(), p.ineq_rhs[r]);
    }
    for r in 0..me {
        lp.add_eq(p.eq.row(r).iter().copied().collect(), p.eq_rhs[r]);
    }
    let start = solve_lp(&lp)?;
    if start.status != SolveStatus::Optimal {
        let status = if start.status == SolveStatus::Infeasible {
            SolveStatus::Infeasible
        } else {
            SolveStatus::NumericalFailure
        };
        return Ok(QpSolution {
            status,
            x: DVector::zeros(n),
            active: Vec::new(),
            ineq_multipliers: DVector::zeros(mi),
            eq_multipliers: DVector::zeros(me),
            kkt: KktResiduals {
                stationarity: f64::INFINITY,
                primal: f64::INFINITY,
                dual: 0.0,
                complementarity: 0.0,
            },
        });
    }
    let mut x = DVector::from_vec(start.x);

    let scale = 1.0 + p.hessian.amax() + p.linear.amax();
    let row_norm = |r: usize| p.ineq.row(r).norm().max(1e-300);
    let working_matrix = |w: &[usize]| {
        let mut m = DMatrix::zeros(me + w.len(), n);
        if me > 0 {
            m.view_mut((0, 0), (me, n)).copy_from(&p.eq);
        }
        for (k, &r) in w.iter().enumerate() {
            m.row_mut(me + k).copy_from(&p.ineq.row(r));
        }
        m
    };

    // Initial working set: active rows kept only while they add rank.
    let mut work: Vec<usize> = Vec::new();
    for r in 0..mi {
        let s = p.ineq.row(r).dot(&x.transpose()) - p.ineq_rhs[r];
        if s.abs() <= 1e-9 * (1.0 + p.ineq_rhs[r].abs()) {
            let mut trial = work.clone();
            trial.push(r);
            if working_matrix(&trial).rank(1e-10) == me + trial.len() {
                work = trial;
            }
        }
    }

    let max_iter = 100 * (n + mi + 10);
    let mut status = SolveStatus::MaxIter;
    for _ in 0..max_iter {
        let w = working_matrix(&work);
        let grad = &p.hessian * &x + &p.linear;
        let z = null_space(&w, n);
        let mut step: Option<(DVector<f64>, bool)> = None; // (direction, is_ray)
        if z.ncols() > 0 {
            let gr = z.transpose() * &grad;
            let hr = z.transpose() * &p.hessian * &z;
            let eig = hr.clone().symmetric_eigen();
            let lam_tol = 1e-11 * scale;
            // Split the reduced gradient over curved and flat eigendirections.
            let mut newton = DVector::zeros(z.ncols());
            let mut flat = DVector::zeros(z.ncols());
            for k in 0..z.ncols() {
                let v = eig.eigenvectors.column(k);
                let c = v.dot(&gr);
                if eig.eigenvalues[k] > lam_tol {
                    newton -= v * (c / eig.eigenvalues[k]);
                } else {
                    flat -= v * c;
                }
            }
            if flat.norm() > 1e-12 * scale {
                step = Some((&z * flat, true));
            } else if newton.norm() > 1e-14 * (1.0 + x.norm()) {
                step = Some((&z * newton, false));
            }
        }
        match step {
            None => {
                let lam = multipliers(&w, &grad);
                let ineq_lam = lam.rows(me, work.len());
                let worst = (0..work.len())
                    .filter(|&k| ineq_lam[k] < -1e-12 * scale)
                    .min_by(|&a, &b| ineq_lam[a].total_cmp(&ineq_lam[b]));
                match worst {
                    None => {
                        status = SolveStatus::Optimal;
                        break;
                    }
                    Some(k) => {
                        work.remove(k);
                    }
                }
            }
            Some((d, is_ray)) => {
                let mut alpha = if is_ray { f64::INFINITY } else { 1.0 };
                let mut blocking = None;
                for r in 0..mi {
                    if work.contains(&r) {
                        continue;
                    }
                    let ad = p.ineq.row(r).dot(&d.transpose());
                    if ad < -1e-14 * row_norm(r) * d.norm() {
                        let slack = (p.ineq.row(r).dot(&x.transpose()) - p.ineq_rhs[r]).max(0.0);
                        let a = slack / -ad;
                        if a < alpha {
                            alpha = a;
                            blocking = Some(r);
                        }
                    }
                }
                if !alpha.is_finite() {
                    status = SolveStatus::Unbounded;
                    break;
                }
                x += d * alpha;
                if let Some(r) = blocking {
                    work.push(r);
                }
            }
        }
    }

    let w = working_matrix(&work);
    let grad = &p.hessian * &x + &p.linear;
    let lam = multipliers(&w, &grad);
    let mut ineq_multipliers = DVector::zeros(mi);
    for (k, &r) in work.iter().enumerate() {
        ineq_multipliers[r] = lam[me + k];
    }
    let eq_multipliers = lam.rows(0, me).into_owned();
    let kkt = p.kkt(&x, &ineq_multipliers, &eq_multipliers);
    work.sort_unstable();
    Ok(QpSolution {
        status,
        x,
        active: work,
        ineq_multipliers,
        eq_multipliers,
        kkt,
    })
}
