use nalgebra::{DMatrix, DVector};

use crate::optim::{solve_qp, QpProblem, SolveStatus};
use crate::poly::DenseEval;
use crate::rsi::RsiReport;
use crate::system::InterconnectedSystem;

use super::local::lie_split;
use super::policy::check_report;
use super::{shifted_safety, ClassKFunction, LocalConstraint, SynthError, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QpFilterOptions {
    /// Optimize the weights `alpha_i^k` jointly with the inputs.
    pub alpha_as_variables: bool,
    /// Shrinks constraint `k` to `h^k >= offsets[k]`.
    pub offsets: Vec<f64>,
}

/// Min-norm inputs of the protected sub-systems at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct QpOutcome {
    /// `(sub-system, input)` for each protected sub-system.
    pub inputs: Vec<(usize, Vec<f64>)>,
    /// Optimized weights `[row][k]` when requested.
    pub alpha: Option<Vec<Vec<f64>>>,
    /// `(row label, lhs - rhs)` of every barrier row at the solution.
    pub slacks: Vec<(String, f64)>,
    pub kkt: f64,
}

struct Row {
    label: String,
    /// Per protected position, coefficient of each input channel.
    coefs: Vec<Vec<DenseEval>>,
    /// Everything not multiplied by an input, moved to the right-hand side negated.
    constant: DenseEval,
    /// For weighted rows: `(row of alpha, k, eta(h) + budget)`.
    weighted: Option<(usize, usize, DenseEval, f64)>,
    /// Worst vulnerable contribution, minimized over joint corners.
    worst: Vec<DenseEval>,
    outer: Option<(ClassKFunction, DenseEval)>,
}

/// Precompiled min-norm filter: `min sum_i |u_i|^2` subject to every barrier row and the input boxes.
pub struct QpFilter {
    protected: Vec<usize>,
    offsets: Vec<usize>,
    dims: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<Row>,
    alpha: WeightMatrix,
    alpha_vars: bool,
    constraints: usize,
    safe: Vec<DenseEval>,
    scope_len: usize,
}

impl QpFilter {
    pub fn new(
        sys: &InterconnectedSystem,
        rsi: &RsiReport,
        eta: &[ClassKFunction],
        alpha: &WeightMatrix,
        local: &[LocalConstraint],
        opts: &QpFilterOptions,
    ) -> Result<Self, SynthError> {
        if sys.protected().is_empty() {
            return Err(SynthError::Invalid("no protected sub-systems to filter".into()));
        }
        if eta.len() != sys.safety().len() {
            return Err(SynthError::Invalid(
                "one class-K function per constraint required".into(),
            ));
        }
        let skip: Vec<usize> = local.iter().map(|l| l.constraint).collect();
        let budgets = check_report(sys, rsi, &skip)?;
        let protected = sys.protected().to_vec();
        let mut dims = Vec::new();
        let mut offsets = Vec::new();
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        let mut total = 0;
        for &i in &protected {
            let s = sys.subsystem(i)?;
            offsets.push(total);
            dims.push(s.r);
            total += s.r;
            lo.extend_from_slice(&s.input_lo);
            hi.extend_from_slice(&s.input_hi);
        }
        let hs = shifted_safety(sys, &opts.offsets);
        let mut rows = Vec::new();
        for (k, h) in hs.iter().enumerate() {
            if skip.contains(&k) {
                continue;
            }
            let eta_h = eta[k].compose(h).add_constant(budgets[k]);
            for (p, &i) in protected.iter().enumerate() {
                let (drift, coefs) = lie_split(sys, h, i)?;
                let a = alpha.get(i, k);
                if !opts.alpha_as_variables && a == 0.0 && coefs.iter().all(|c| c.is_zero()) {
                    continue;
                }
                let mut all = vec![Vec::new(); protected.len()];
                all[p] = coefs.iter().map(DenseEval::new).collect();
                rows.push(Row {
                    label: format!("constraint {} at sub-system {}", k + 1, i + 1),
                    coefs: all,
                    constant: DenseEval::new(&drift),
                    weighted: Some((p, k, DenseEval::new(&eta_h), a)),
                    worst: Vec::new(),
                    outer: None,
                });
            }
        }
        for l in local {
            for (c, d) in l.condition(sys, &opts.offsets)?.into_iter().enumerate() {
                let mut drift = crate::poly::Polynomial::zero(sys.scope());
                let mut all = Vec::new();
                for &i in &protected {
                    let (di, ci) = lie_split(sys, &d.barrier, i)?;
                    drift = drift.checked_add(&di)?;
                    all.push(ci.iter().map(DenseEval::new).collect());
                }
                rows.push(Row {
                    label: format!("local constraint {} corner {}", l.constraint + 1, c + 1),
                    coefs: all,
                    constant: DenseEval::new(&drift),
                    weighted: None,
                    worst: l
                        .vulnerable_terms(sys, &d.barrier)?
                        .iter()
                        .map(DenseEval::new)
                        .collect(),
                    outer: Some((l.outer, DenseEval::new(&d.barrier))),
                });
            }
        }
        Ok(QpFilter {
            protected,
            offsets,
            dims,
            lo,
            hi,
            rows,
            alpha: alpha.clone(),
            alpha_vars: opts.alpha_as_variables,
            constraints: sys.safety().len(),
            safe: hs.iter().map(DenseEval::new).collect(),
            scope_len: sys.scope().len(),
        })
    }

    fn num_inputs(&self) -> usize {
        self.lo.len()
    }

    /// Solves the filter at state `x`.
    pub fn solve(&self, x: &[f64]) -> Result<QpOutcome, SynthError> {
        let mut point = vec![0.0; self.scope_len];
        point[..x.len()].copy_from_slice(x);
        if self.safe.iter().any(|h| h.eval(&point) < 0.0) {
            log::warn!("filter queried outside the safe set");
        }
        let nu = self.num_inputs();
        let np = self.protected.len();
        let na = if self.alpha_vars { np * self.constraints } else { 0 };
        let nz = nu + na;
        let mut hess = DMatrix::zeros(nz, nz);
        for j in 0..nu {
            hess[(j, j)] = 2.0;
        }
        let mut qp = QpProblem::new(hess, DVector::zeros(nz));
        // Each row reads `a . z >= b`.
        let mut built: Vec<(String, Vec<f64>, f64)> = Vec::new();
        for r in &self.rows {
            let mut a = vec![0.0; nz];
            for (p, cs) in r.coefs.iter().enumerate() {
                for (j, c) in cs.iter().enumerate() {
                    a[self.offsets[p] + j] = c.eval(&point);
                }
            }
            let mut b = -r.constant.eval(&point);
            if let Some((p, k, eh, w)) = &r.weighted {
                let e = eh.eval(&point);
                if self.alpha_vars {
                    a[nu + p * self.constraints + k] = e;
                } else {
                    b -= w * e;
                }
            }
            if !r.worst.is_empty() {
                b -= r.worst.iter().map(|w| w.eval(&point)).fold(f64::INFINITY, f64::min);
            }
            if let Some((eta, bar)) = &r.outer {
                b -= eta.eval(bar.eval(&point));
            }
            qp.add_ge(&a, b);
            built.push((r.label.clone(), a, b));
        }
        for j in 0..nu {
            let mut e = vec![0.0; nz];
            e[j] = 1.0;
            qp.add_ge(&e, self.lo[j]);
            e[j] = -1.0;
            qp.add_ge(&e, -self.hi[j]);
        }
        if self.alpha_vars {
            for k in 0..self.constraints {
                let mut s = vec![0.0; nz];
                for p in 0..np {
                    let col = nu + p * self.constraints + k;
                    s[col] = 1.0;
                    let mut e = vec![0.0; nz];
                    e[col] = 1.0;
                    qp.add_ge(&e, 0.0);
                    e[col] = -1.0;
                    qp.add_ge(&e, -1.0);
                }
                qp.add_eq(&s, 1.0);
            }
        }
        let sol = solve_qp(&qp)?;
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => return Err(SynthError::QpInfeasible(self.diagnose(&built, nu))),
            s => return Err(SynthError::QpSolver(s)),
        }
        let z: Vec<f64> = sol.x.iter().copied().collect();
        let inputs = self
            .protected
            .iter()
            .enumerate()
            .map(|(p, &i)| (i, z[self.offsets[p]..self.offsets[p] + self.dims[p]].to_vec()))
            .collect();
        let alpha = self.alpha_vars.then(|| {
            (0..np)
                .map(|p| {
                    (0..self.constraints)
                        .map(|k| z[nu + p * self.constraints + k])
                        .collect()
                })
                .collect()
        });
        let slacks = built
            .iter()
            .map(|(l, a, b)| (l.clone(), a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>() - b))
            .collect();
        Ok(QpOutcome {
            inputs,
            alpha,
            slacks,
            kkt: sol.kkt.max(),
        })
    }

    /// Names the first row that no input in the box can satisfy on its own.
    fn diagnose(&self, rows: &[(String, Vec<f64>, f64)], nu: usize) -> String {
        for (label, a, b) in rows {
            let mut best = 0.0;
            for (j, &c) in a.iter().enumerate() {
                best += if j < nu {
                    (c * self.lo[j]).max(c * self.hi[j])
                } else {
                    c.max(0.0)
                };
            }
            if best < *b {
                return format!("{label} cannot be met by any input in the box (needs {b:.4e}, best {best:.4e})");
            }
        }
        "barrier rows cannot be met simultaneously".into()
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.alpha
    }
}

/// One-shot form of [`QpFilter::solve`].
pub fn qp_filter(
    sys: &InterconnectedSystem,
    rsi: &RsiReport,
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    local: &[LocalConstraint],
    x: &[f64],
    opts: &QpFilterOptions,
) -> Result<QpOutcome, SynthError> {
    QpFilter::new(sys, rsi, eta, alpha, local, opts)?.solve(x)
}
