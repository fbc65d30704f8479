//! Small dense solvers: SDP (interior point), QP (active set) and LP (simplex).

mod lp;
mod qp;
mod rows;
mod sdp;
mod sdpa;

use thiserror::Error;

pub use lp::{enumerate_vertices, solve_lp, solve_lp_by_enumeration, Active, LpProblem, LpSolution};
pub use qp::{solve_qp, KktResiduals, QpProblem, QpSolution};
pub use sdp::{solve_sdp, BlockEntry, LinearFunctional, SdpOptions, SdpProblem, SdpSolution, Sense};
pub use sdpa::{export_sdpa, write_sdpa};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
