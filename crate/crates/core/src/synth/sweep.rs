use crate::poly::DenseEval;
use crate::rsi::grid::{advance, linspace};
use crate::rsi::{RsiError, RsiOptions, RsiReport};
use crate::system::InterconnectedSystem;

use super::policy::compute_and_synthesize;
use super::{ClassKFunction, PolicyCertificate, SynthError, SynthOptions, WeightMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub constraint: usize,
    /// Smallest tested offset whose shrunk set admits a certified policy.
    pub c: f64,
    pub c_bar: f64,
    pub iterations: usize,
    /// The policy holds on `h^k >= c` with `c > 0` only.
    pub shrunk: bool,
    pub report: RsiReport,
    pub certificate: PolicyCertificate,
}

/// Largest value of `h^k` on the bounding-box grid.
pub fn grid_max(sys: &InterconnectedSystem, k: usize, resolution: usize) -> Result<f64, SynthError> {
    let h = DenseEval::new(sys.constraint(k)?);
    let axes: Vec<Vec<f64>> = sys
        .bounding_box()
        .iter()
        .map(|&(lo, hi)| linspace(lo, hi, resolution.max(2)))
        .collect();
    let lens: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut idx = vec![0usize; axes.len()];
    let mut point = vec![0.0; sys.scope().len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        for (j, a) in axes.iter().enumerate() {
            point[j] = a[idx[j]];
        }
        best = best.max(h.eval(&point));
        if !advance(&mut idx, &lens) {
            return Ok(best);
        }
    }
}

/// Tests `c_k = 0, eps, 2 eps, ...` while `c_k < c_bar`, recomputing the indices
/// over `h^k >= c_k` and re-running synthesis, until a policy certifies.
#[allow(clippy::too_many_arguments)]
pub fn ck_sweep(
    sys: &InterconnectedSystem,
    k: usize,
    epsilon: f64,
    eta: &[ClassKFunction],
    alpha: &WeightMatrix,
    rsi_opts: &RsiOptions,
    opts: &SynthOptions,
) -> Result<SweepResult, SynthError> {
    if !(epsilon > 0.0) {
        return Err(SynthError::Invalid("sweep step must be positive".into()));
    }
    let c_bar = grid_max(sys, k, rsi_opts.grid_resolution)?;
    let mut iterations = 0;
    loop {
        let c = iterations as f64 * epsilon;
        if c >= c_bar {
            return Err(SynthError::NotFeasibleOnAnyShrunkSet { k, c_bar, iterations });
        }
        iterations += 1;
        let mut o = opts.clone();
        o.offsets.resize(sys.safety().len(), 0.0);
        o.offsets[k] = c;
        match compute_and_synthesize(sys, eta, alpha, rsi_opts, &o) {
            Ok((report, certificate)) if certificate.is_feasible() => {
                return Ok(SweepResult {
                    constraint: k,
                    c,
                    c_bar,
                    iterations,
                    shrunk: c > 0.0,
                    report,
                    certificate,
                });
            }
            Ok(_) => log::info!("sweep: c = {c} not feasible"),
            Err(SynthError::Rsi(e @ (RsiError::Solver { .. } | RsiError::EmptyGrid(_)))) => {
                log::info!("sweep: c = {c} skipped ({e})")
            }
            Err(e) => return Err(e),
        }
    }
}
