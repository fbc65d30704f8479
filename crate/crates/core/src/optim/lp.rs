//! Two-phase dense simplex with Bland's rule, plus brute-force vertex enumeration.

use nalgebra::{DMatrix, DVector};

use super::{OptimError, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const ACTIVE_TOL: f64 = 1e-7;

/// Minimize `cost . z` subject to `a . z >= b`, `a . z = b` and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub ge: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// A constraint that holds with equality at a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Active {
    Ge(usize),
    Eq(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub active: Vec<Active>,
    /// Active constraint normals span the whole space.
    pub is_vertex: bool,
}

impl LpProblem {
    /// Free variables, no constraints.
    pub fn new(cost: Vec<f64>) -> Self {
        let n = cost.len();
        LpProblem {
            cost,
            ge: Vec::new(),
            eq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.cost.len()
    }

    pub fn add_ge(&mut self, a: Vec<f64>, b: f64) -> &mut Self {
        self.ge.push((a, b));
        self
    }

    pub fn add_le(&mut self, a: Vec<f64>, b: f64) -> &mut Self {
        self.ge.push((a.into_iter().map(|v| -v).collect(), -b));
        self
    }

    pub fn add_eq(&mut self, a: Vec<f64>, b: f64) -> &mut Self {
        self.eq.push((a, b));
        self
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) -> &mut Self {
        self.lower[j] = lo;
        self.upper[j] = hi;
        self
    }

    fn validate(&self) -> Result<(), OptimError> {
        let n = self.dim();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(OptimError::Invalid("bound vectors have wrong length".into()));
        }
        for (a, b) in self.ge.iter().chain(&self.eq) {
            if a.len() != n {
                return Err(OptimError::Invalid(format!(
                    "constraint row of length {} for {n} variables",
                    a.len()
                )));
            }
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(OptimError::Invalid("non-finite constraint data".into()));
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(OptimError::Invalid(format!("empty bounds on variable {j}")));
            }
        }
        Ok(())
    }

    /// Constraints holding with equality at `x`, and whether their normals have full rank.
    pub fn active_at(&self, x: &[f64]) -> (Vec<Active>, bool) {
        let n = self.dim();
        let mut active = Vec::new();
        let mut normals: Vec<Vec<f64>> = Vec::new();
        for (k, (a, _)) in self.eq.iter().enumerate() {
            active.push(Active::Eq(k));
            normals.push(a.clone());
        }
        for (k, (a, b)) in self.ge.iter().enumerate() {
            let scale = 1.0 + b.abs() + a.iter().map(|v| v.abs()).sum::<f64>();
            if (dot(a, x) - b).abs() <= ACTIVE_TOL * scale {
                active.push(Active::Ge(k));
                normals.push(a.clone());
            }
        }
        for (j, &xj) in x.iter().enumerate().take(n) {
            let unit = |j: usize| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            };
            if self.lower[j].is_finite() && (xj - self.lower[j]).abs() <= ACTIVE_TOL * (1.0 + self.lower[j].abs()) {
                active.push(Active::Lower(j));
                normals.push(unit(j));
            }
            if self.upper[j].is_finite() && (xj - self.upper[j]).abs() <= ACTIVE_TOL * (1.0 + self.upper[j].abs()) {
                active.push(Active::Upper(j));
                normals.push(unit(j));
            }
        }
        let rank = if normals.is_empty() || n == 0 {
            0
        } else {
            let m = DMatrix::from_fn(normals.len(), n, |r, c| normals[r][c]);
            m.rank(1e-9)
        };
        (active, rank == n)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in &self.ge {
            worst = worst.max(b - dot(a, x));
        }
        for (a, b) in &self.eq {
            worst = worst.max((dot(a, x) - b).abs());
        }
        for (j, &xj) in x.iter().enumerate().take(self.dim()) {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Each original variable is `offset + sum sign * y_col`.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, OptimError> {
    p.validate()?;
    let n = p.dim();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap {
                offset: lo,
                cols: vec![(ncols, 1.0)],
            });
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap {
                offset: hi,
                cols: vec![(ncols, -1.0)],
            });
            ncols += 1;
        } else {
            maps.push(VarMap {
                offset: 0.0,
                cols: vec![(ncols, 1.0), (ncols + 1, -1.0)],
            });
            ncols += 2;
        }
    }

    // Rows: ge (with surplus), bound rows (with slack), eq.
    let nge = p.ge.len();
    let nslack = nge + bound_rows.len();
    let nrows = nge + bound_rows.len() + p.eq.len();
    let nstd = ncols + nslack;
    let mut a = DMatrix::<f64>::zeros(nrows, nstd);
    let mut rhs = DVector::<f64>::zeros(nrows);
    let mut row = 0;
    for (k, (coef, b)) in p.ge.iter().enumerate() {
        let mut r = *b;
        for j in 0..n {
            r -= coef[j] * maps[j].offset;
            for &(c, s) in &maps[j].cols {
                a[(row, c)] += coef[j] * s;
            }
        }
        a[(row, ncols + k)] = -1.0;
        rhs[row] = r;
        row += 1;
    }
    for (k, &(c, ub)) in bound_rows.iter().enumerate() {
        a[(row, c)] = 1.0;
        a[(row, ncols + nge + k)] = 1.0;
        rhs[row] = ub;
        row += 1;
    }
    for (coef, b) in &p.eq {
        let mut r = *b;
        for j in 0..n {
            r -= coef[j] * maps[j].offset;
            for &(c, s) in &maps[j].cols {
                a[(row, c)] += coef[j] * s;
            }
        }
        rhs[row] = r;
        row += 1;
    }
    let mut cstd = DVector::<f64>::zeros(nstd);
    for (j, map) in maps.iter().enumerate().take(n) {
        for &(c, s) in &map.cols {
            cstd[c] += p.cost[j] * s;
        }
    }

    let (status, y) = simplex_standard(a, rhs, &cstd);
    let mut x = vec![0.0; n];
    if let Some(y) = &y {
        for j in 0..n {
            x[j] = maps[j].offset + maps[j].cols.iter().map(|&(c, s)| s * y[c]).sum::<f64>();
        }
    }
    let objective = match status {
        SolveStatus::Optimal => dot(&p.cost, &x),
        SolveStatus::Unbounded => f64::NEG_INFINITY,
        _ => f64::NAN,
    };
    let (active, is_vertex) = if status == SolveStatus::Optimal {
        p.active_at(&x)
    } else {
        (Vec::new(), false)
    };
    Ok(LpSolution {
        status,
        x,
        objective,
        active,
        is_vertex,
    })
}

/// Minimize `c . y` s.t. `A y = b`, `y >= 0`.
fn simplex_standard(mut a: DMatrix<f64>, mut b: DVector<f64>, c: &DVector<f64>) -> (SolveStatus, Option<Vec<f64>>) {
    let (m, n) = a.shape();
    for r in 0..m {
        if b[r] < 0.0 {
            b[r] = -b[r];
            for j in 0..n {
                a[(r, j)] = -a[(r, j)];
            }
        }
    }
    // Tableau columns: n structural, m artificial, then rhs.
    let width = n + m + 1;
    let mut t = DMatrix::<f64>::zeros(m, width);
    for r in 0..m {
        for j in 0..n {
            t[(r, j)] = a[(r, j)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, width - 1)] = b[r];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_iter = 50 * (n + m + 10);

    let mut phase1 = DVector::<f64>::zeros(n + m);
    for r in 0..m {
        phase1[n + r] = 1.0;
    }
    match run_simplex(&mut t, &mut basis, &phase1, n + m, max_iter) {
        Ok(()) => {}
        Err(s) => return (s, None),
    }
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(r, _)| t[(r, width - 1)])
        .sum();
    let scale = 1.0 + b.amax();
    if infeas > 1e-8 * scale {
        return (SolveStatus::Infeasible, None);
    }
    // Pivot remaining artificials out; rows that cannot pivot are redundant.
    let mut r = 0;
    while r < basis.len() {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[(r, j)].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, r, j);
            } else {
                t = t.remove_row(r);
                basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    let mut cost2 = DVector::<f64>::zeros(n + m);
    cost2.rows_mut(0, n).copy_from(c);
    if let Err(s) = run_simplex(&mut t, &mut basis, &cost2, n, max_iter) {
        return (s, None);
    }
    let mut y = vec![0.0; n];
    for (r, &j) in basis.iter().enumerate() {
        if j < n {
            y[j] = t[(r, t.ncols() - 1)];
        }
    }
    (SolveStatus::Optimal, Some(y))
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], r: usize, j: usize) {
    let pv = t[(r, j)];
    let w = t.ncols();
    for c in 0..w {
        t[(r, c)] /= pv;
    }
    for rr in 0..t.nrows() {
        if rr != r {
            let f = t[(rr, j)];
            if f != 0.0 {
                for c in 0..w {
                    t[(rr, c)] -= f * t[(r, c)];
                }
            }
        }
    }
    basis[r] = j;
}

/// Bland's rule on the tableau; only columns below `allowed` may enter.
fn run_simplex(
    t: &mut DMatrix<f64>,
    basis: &mut [usize],
    cost: &DVector<f64>,
    allowed: usize,
    max_iter: usize,
) -> Result<(), SolveStatus> {
    let m = t.nrows();
    let w = t.ncols();
    for _ in 0..max_iter {
        let mut entering = None;
        for j in 0..allowed {
            if basis.contains(&j) {
                continue;
            }
            let mut rc = cost[j];
            for r in 0..m {
                rc -= cost[basis[r]] * t[(r, j)];
            }
            if rc < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = t[(r, j)];
            if coef > PIVOT_TOL {
                let ratio = t[(r, w - 1)] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(SolveStatus::Unbounded);
        };
        pivot(t, basis, r, j);
    }
    Err(SolveStatus::MaxIter)
}

/// Every vertex of the feasible polyhedron, by solving all square active subsystems.
pub fn enumerate_vertices(p: &LpProblem) -> Result<Vec<Vec<f64>>, OptimError> {
    p.validate()?;
    let n = p.dim();
    if n > 12 {
        return Err(OptimError::Invalid(format!(
            "vertex enumeration limited to 12 variables, got {n}"
        )));
    }
    let mut candidates: Vec<(Vec<f64>, f64)> = p.ge.clone();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if p.lower[j].is_finite() {
            candidates.push((e.clone(), p.lower[j]));
        }
        if p.upper[j].is_finite() {
            candidates.push((e, p.upper[j]));
        }
    }
    if p.eq.len() > n {
        return Err(OptimError::Invalid("more equalities than variables".into()));
    }
    let need = n - p.eq.len();
    let combos = binomial(candidates.len(), need);
    if combos > 2_000_000 {
        return Err(OptimError::Invalid(format!(
            "{combos} candidate subsystems is too many to enumerate"
        )));
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..need).collect();
    if need > candidates.len() {
        return Ok(out);
    }
    loop {
        let rows: Vec<&(Vec<f64>, f64)> = p.eq.iter().chain(idx.iter().map(|&k| &candidates[k])).collect();
        let m = DMatrix::from_fn(n, n, |r, c| rows[r].0[c]);
        let rhs = DVector::from_iterator(n, rows.iter().map(|r| r.1));
        if n == 0 {
            out.push(Vec::new());
            break;
        }
        if let Some(x) = m.clone().lu().solve(&rhs) {
            let x: Vec<f64> = x.iter().copied().collect();
            let resid = (&m * DVector::from_column_slice(&x) - &rhs).amax();
            if x.iter().all(|v| v.is_finite())
                && resid <= 1e-9 * (1.0 + rhs.amax())
                && p.max_violation(&x) <= 1e-9 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs())))
                && !out
                    .iter()
                    .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs())))
            {
                out.push(x);
            }
        }
        // Next combination in lexicographic order.
        let mut k = need;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if idx[k] < candidates.len() - need + k {
                idx[k] += 1;
                for l in k + 1..need {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
        if need == 0 {
            return Ok(out);
        }
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Minimum of the objective over enumerated vertices; intended as a cross-check.
pub fn solve_lp_by_enumeration(p: &LpProblem) -> Result<Option<(f64, Vec<f64>)>, OptimError> {
    let vs = enumerate_vertices(p)?;
    Ok(vs
        .into_iter()
        .map(|v| (dot(&p.cost, &v), v))
        .min_by(|a, b| a.0.total_cmp(&b.0)))
}
