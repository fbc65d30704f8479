//! Policy synthesis for the protected sub-systems: offline SOS policies, the
//! runtime min-norm QP filter, constraints local to a vulnerable sub-system,
//! and the shrinking sweep over `h^k >= c_k`.

mod kappa;
mod local;
mod policy;
mod qp;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{OptimError, SolveStatus};
use crate::poly::{PolyError, Polynomial};
use crate::rsi::RsiError;
use crate::sos::SosError;
use crate::system::{InterconnectedSystem, SystemError};

pub use kappa::{ClassKFunction, WeightMatrix};
pub use local::{compatible, infeasibility_threshold, lie_split, DerivedBarrier, LocalConstraint, ThresholdResult};
pub use policy::{
    compute_and_synthesize, synthesize_joint, synthesize_policy, synthesize_protected, verify_policy,
    PolicyCertificate, PolicyCheck, ProgramRecord, SynthOptions,
};
pub use qp::{qp_filter, QpFilter, QpFilterOptions, QpOutcome};
pub use sweep::{ck_sweep, grid_max, SweepResult};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{0}")]
    Invalid(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("QP infeasible at this state: {0}")]
    QpInfeasible(String),
    #[error("QP solver finished with status {0}")]
    QpSolver(SolveStatus),
    #[error("no shrunk set below c = {c_bar} admits a certified policy for constraint {} ({iterations} tried)", .k + 1)]
    NotFeasibleOnAnyShrunkSet { k: usize, c_bar: f64, iterations: usize },
    #[error(transparent)]
    Rsi(#[from] RsiError),
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// Status of a synthesized policy set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyStatus {
    Feasible,
    /// First protected sub-system (0-based) whose program failed.
    Infeasible(usize),
}

/// `h^k - c_k` for each constraint.
pub(crate) fn shifted_safety(sys: &InterconnectedSystem, offsets: &[f64]) -> Vec<Polynomial> {
    sys.safety()
        .iter()
        .enumerate()
        .map(|(k, h)| h.add_constant(-offsets.get(k).copied().unwrap_or(0.0)))
        .collect()
}
