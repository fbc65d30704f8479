//! Resilient-safety indices: the worst-case Lie-derivative contribution of a
//! vulnerable sub-system's self dynamics (gamma) and of all vulnerable coupled
//! dynamics (beta) to each safety constraint.

pub(crate) mod grid;
mod lp;
mod monotone;
mod sos;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{OptimError, SdpOptions, SolveStatus};
use crate::poly::{Polynomial, VarId};
use crate::sos::{InputBound, Normalization, SosCertificate, SosError};
use crate::system::{InterconnectedSystem, SystemError};

pub use grid::{grid_minimum, OracleBound};
pub use lp::lp_minimum;
pub use monotone::monotone_minimum;
pub use sos::sos_lower_bound;

/// Slack allowed between a certified lower bound and the grid minimum.
pub const SANDWICH_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum RsiError {
    #[error("backend not applicable: {0}")]
    NotApplicable(String),
    #[error("{what}: solver finished with status {status}; try a higher multiplier degree")]
    Solver { what: String, status: SolveStatus },
    #[error("no grid point of {0} lies inside the safe set; use a finer resolution")]
    EmptyGrid(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Sos,
    Lp,
    Monotone,
    Grid,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Backend::Sos => "sos",
            Backend::Lp => "lp",
            Backend::Monotone => "monotone",
            Backend::Grid => "grid",
        };
        f.write_str(s)
    }
}

/// Backend request; `Auto` tries monotone, then LP, then SOS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Fixed(Backend),
    Auto,
}

/// Which index to compute. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Gamma { subsystem: usize, constraint: usize },
    Beta { constraint: usize },
}

impl Target {
    pub fn constraint(&self) -> usize {
        match *self {
            Target::Gamma { constraint, .. } | Target::Beta { constraint } => constraint,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Target::Gamma { subsystem, constraint } => write!(f, "gamma[{},{}]", subsystem + 1, constraint + 1),
            Target::Beta { constraint } => write!(f, "beta[{}]", constraint + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsiOptions {
    /// Degree of the SOS multipliers on domain and input-box polynomials.
    pub multiplier_degree: u32,
    /// Use every safety constraint as a domain polynomial, not only `h^s` with `s <= k`.
    pub all_constraints: bool,
    /// Grid points per state axis for the oracle and sampled checks.
    pub grid_resolution: usize,
    /// Grid points per input axis (box corners included).
    pub input_resolution: usize,
    /// Shrinks constraint `k` to `h^k >= offsets[k]`; missing entries read as zero.
    pub offsets: Vec<f64>,
    /// Also run the grid oracle next to non-grid backends.
    pub with_oracle: bool,
    pub sdp: SdpOptions,
}

impl Default for RsiOptions {
    fn default() -> Self {
        RsiOptions {
            multiplier_degree: 2,
            all_constraints: false,
            grid_resolution: 21,
            input_resolution: 3,
            offsets: Vec::new(),
            with_oracle: true,
            sdp: SdpOptions::default(),
        }
    }
}

impl RsiOptions {
    pub fn offset(&self, k: usize) -> f64 {
        self.offsets.get(k).copied().unwrap_or(0.0)
    }
}

/// Minimizer reported by the LP and monotone backends, as a dense `(x, u)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attainment {
    pub point: Vec<f64>,
    /// The point is a vertex of the constraint polytope (LP) or a box corner (monotone).
    pub is_vertex: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsiValue {
    pub value: f64,
    pub backend: Backend,
    /// SOS certificate expressed in the unit coordinates of `normalization`.
    pub certificate: Option<SosCertificate>,
    pub normalization: Option<Normalization>,
    pub attainment: Option<Attainment>,
    pub oracle: Option<OracleBound>,
    /// Certified value exceeds the grid minimum by more than [`SANDWICH_TOL`].
    pub flagged: bool,
}

impl RsiValue {
    fn plain(value: f64, backend: Backend) -> Self {
        RsiValue {
            value,
            backend,
            certificate: None,
            normalization: None,
            attainment: None,
            oracle: None,
            flagged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEntry {
    pub subsystem: usize,
    pub constraint: usize,
    pub entry: RsiValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaEntry {
    pub constraint: usize,
    pub entry: RsiValue,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RsiReport {
    pub gamma: Vec<GammaEntry>,
    pub beta: Vec<BetaEntry>,
}

impl RsiReport {
    pub fn gamma(&self, i: usize, k: usize) -> Option<f64> {
        self.gamma
            .iter()
            .find(|e| e.subsystem == i && e.constraint == k)
            .map(|e| e.entry.value)
    }

    pub fn beta(&self, k: usize) -> Option<f64> {
        self.beta.iter().find(|e| e.constraint == k).map(|e| e.entry.value)
    }

    /// `beta^k + sum_j gamma_j^k`, with missing entries read as zero.
    pub fn budget(&self, k: usize) -> f64 {
        self.beta(k).unwrap_or(0.0)
            + self
                .gamma
                .iter()
                .filter(|e| e.constraint == k)
                .map(|e| e.entry.value)
                .sum::<f64>()
    }

    pub fn flagged(&self) -> Vec<Target> {
        let g = self.gamma.iter().filter(|e| e.entry.flagged).map(|e| Target::Gamma {
            subsystem: e.subsystem,
            constraint: e.constraint,
        });
        let b = self.beta.iter().filter(|e| e.entry.flagged).map(|e| Target::Beta {
            constraint: e.constraint,
        });
        g.chain(b).collect()
    }

    /// Every pair the report must contain for `sys`.
    pub fn targets(sys: &InterconnectedSystem) -> Vec<Target> {
        let k = sys.safety().len();
        let mut out = Vec::new();
        for &i in sys.vulnerable() {
            for c in 0..k {
                out.push(Target::Gamma {
                    subsystem: i,
                    constraint: c,
                });
            }
        }
        out.extend((0..k).map(|c| Target::Beta { constraint: c }));
        out
    }
}

/// The integrand of `target` and the input channels it depends on.
pub fn integrand(sys: &InterconnectedSystem, target: Target) -> Result<(Polynomial, Vec<InputBound>), RsiError> {
    let (expr, owners) = match target {
        Target::Gamma { subsystem, constraint } => {
            if !sys.vulnerable().contains(&subsystem) {
                return Err(RsiError::Invalid(format!(
                    "sub-system {} is not vulnerable",
                    subsystem + 1
                )));
            }
            (sys.lie_self(subsystem, constraint)?, vec![subsystem])
        }
        Target::Beta { constraint } => (
            sys.lie_coupled_sum(constraint, sys.vulnerable())?,
            sys.vulnerable().to_vec(),
        ),
    };
    let used = expr.variables();
    let mut inputs = Vec::new();
    for i in owners {
        let s = sys.subsystem(i)?;
        for (j, v) in sys.input_vars(i)?.into_iter().enumerate() {
            if used.contains(&v) {
                inputs.push(InputBound {
                    var: v,
                    lo: s.input_lo[j],
                    hi: s.input_hi[j],
                });
            }
        }
    }
    Ok((expr, inputs))
}

/// `h^s - c_s` for every constraint (the possibly shrunk safe set).
pub fn safe_set(sys: &InterconnectedSystem, opts: &RsiOptions) -> Vec<Polynomial> {
    sys.safety()
        .iter()
        .enumerate()
        .map(|(s, h)| h.add_constant(-opts.offset(s)))
        .collect()
}

/// Domain polynomials handed to the SOS backend for constraint `k`.
pub fn sos_domain(sys: &InterconnectedSystem, k: usize, opts: &RsiOptions) -> Vec<Polynomial> {
    let all = safe_set(sys, opts);
    if opts.all_constraints {
        all
    } else {
        all.into_iter().take(k + 1).collect()
    }
}

/// Dense `(x, u)` point with every coordinate at the centre of its box.
fn centre_point(sys: &InterconnectedSystem) -> Vec<f64> {
    let mut p: Vec<f64> = sys.bounding_box().iter().map(|b| 0.5 * (b.0 + b.1)).collect();
    for s in sys.subsystems() {
        p.extend(s.input_lo.iter().zip(&s.input_hi).map(|(a, b)| 0.5 * (a + b)));
    }
    p
}

fn dense_index(sys: &InterconnectedSystem, v: VarId) -> usize {
    sys.scope().position(v).expect("variable in system scope")
}

/// Computes one index with one backend.
pub fn compute(
    sys: &InterconnectedSystem,
    target: Target,
    backend: Backend,
    opts: &RsiOptions,
) -> Result<RsiValue, RsiError> {
    let (expr, inputs) = integrand(sys, target)?;
    if expr.is_zero() {
        let mut v = RsiValue::plain(0.0, backend);
        if backend == Backend::Sos {
            v.certificate = Some(SosCertificate {
                label: target.to_string(),
                target: expr.clone(),
                terms: Vec::new(),
                decisions: vec![("bound".into(), 0.0)],
                residual: 0.0,
                min_eig: 0.0,
            });
        }
        return Ok(v);
    }
    let filters = safe_set(sys, opts);
    let label = target.to_string();
    let mut v = match backend {
        Backend::Sos => {
            let domain = sos_domain(sys, target.constraint(), opts);
            let (value, cert, norm) = sos_lower_bound(sys, &label, &expr, &domain, &inputs, opts)?;
            let mut v = RsiValue::plain(value, backend);
            v.certificate = Some(cert);
            v.normalization = Some(norm);
            v
        }
        Backend::Lp => {
            let (value, att) = lp_minimum(sys, &expr, &inputs, &filters)?;
            let mut v = RsiValue::plain(value, backend);
            v.attainment = Some(att);
            v
        }
        Backend::Monotone => {
            let (value, att) = monotone_minimum(sys, &expr, &inputs, &filters, opts.grid_resolution)?;
            let mut v = RsiValue::plain(value, backend);
            v.attainment = Some(att);
            v
        }
        Backend::Grid => {
            let o = grid_minimum(
                sys,
                &label,
                &expr,
                &inputs,
                &filters,
                opts.grid_resolution,
                opts.input_resolution,
            )?;
            let mut v = RsiValue::plain(o.min, backend);
            v.oracle = Some(o);
            return Ok(v);
        }
    };
    if opts.with_oracle {
        let o = grid_minimum(
            sys,
            &label,
            &expr,
            &inputs,
            &filters,
            opts.grid_resolution,
            opts.input_resolution,
        )?;
        v.flagged = backend == Backend::Sos && v.value > o.min + SANDWICH_TOL;
        if v.flagged {
            log::warn!("{label}: certified bound {} exceeds grid minimum {}", v.value, o.min);
        }
        v.oracle = Some(o);
    }
    Ok(v)
}

/// Computes one index, falling through monotone, LP and SOS for [`BackendChoice::Auto`].
pub fn compute_with(
    sys: &InterconnectedSystem,
    target: Target,
    choice: BackendChoice,
    opts: &RsiOptions,
) -> Result<RsiValue, RsiError> {
    match choice {
        BackendChoice::Fixed(b) => compute(sys, target, b, opts),
        BackendChoice::Auto => {
            for b in [Backend::Monotone, Backend::Lp] {
                match compute(sys, target, b, opts) {
                    Err(RsiError::NotApplicable(why)) => log::info!("{target}: {b} skipped ({why})"),
                    other => return other,
                }
            }
            compute(sys, target, Backend::Sos, opts)
        }
    }
}

/// Computes every gamma and beta of `sys`; entries are solved in parallel.
pub fn compute_report(
    sys: &InterconnectedSystem,
    choice: BackendChoice,
    opts: &RsiOptions,
) -> Result<RsiReport, RsiError> {
    sys.ensure_valid()?;
    let targets = RsiReport::targets(sys);
    let results: Vec<Result<RsiValue, RsiError>> = std::thread::scope(|s| {
        let handles: Vec<_> = targets
            .iter()
            .map(|&t| s.spawn(move || compute_with(sys, t, choice, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut report = RsiReport::default();
    for (t, r) in targets.into_iter().zip(results) {
        let entry = r?;
        match t {
            Target::Gamma { subsystem, constraint } => report.gamma.push(GammaEntry {
                subsystem,
                constraint,
                entry,
            }),
            Target::Beta { constraint } => report.beta.push(BetaEntry { constraint, entry }),
        }
    }
    Ok(report)
}
