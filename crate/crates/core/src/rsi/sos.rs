use std::collections::BTreeSet;

use crate::optim::SolveStatus;
use crate::poly::{Polynomial, VarId};
use crate::sos::{solve_lower_bound, InputBound, Normalization, SosCertificate};
use crate::system::InterconnectedSystem;

use super::{RsiError, RsiOptions};

/// Certified lower bound of `expr` over `{domain >= 0} x inputs`, solved in unit
/// coordinates of the bounding and input boxes. Box polynomials of the states
/// involved are added as extra domain polynomials.
pub fn sos_lower_bound(
    sys: &InterconnectedSystem,
    label: &str,
    expr: &Polynomial,
    domain: &[Polynomial],
    inputs: &[InputBound],
    opts: &RsiOptions,
) -> Result<(f64, SosCertificate, Normalization), RsiError> {
    let mut states: BTreeSet<VarId> = expr.variables().into_iter().filter(|v| v.is_state()).collect();
    for g in domain {
        states.extend(g.variables());
    }
    let bbox = sys.bounding_box();
    let norm = Normalization::from_bounds(
        states
            .iter()
            .map(|&v| {
                let (lo, hi) = bbox[v.index as usize];
                (v, lo, hi)
            })
            .chain(inputs.iter().map(|b| (b.var, b.lo, b.hi))),
    );
    let scope = sys.scope();
    let unit_expr = norm.to_unit(expr);
    let mut unit_domain: Vec<Polynomial> = domain.iter().map(|g| norm.to_unit(g)).collect();
    for &v in &states {
        let xi = Polynomial::var(scope, v).map_err(crate::system::SystemError::from)?;
        unit_domain.push((-&(&xi * &xi)).add_constant(1.0));
    }
    let unit_inputs: Vec<InputBound> = inputs
        .iter()
        .map(|b| InputBound {
            var: b.var,
            lo: -1.0,
            hi: 1.0,
        })
        .collect();
    let lb = solve_lower_bound(
        &unit_expr,
        &unit_domain,
        &unit_inputs,
        opts.multiplier_degree,
        &opts.sdp,
    )?;
    if !lb.certified
        || !matches!(
            lb.status,
            SolveStatus::Optimal | SolveStatus::MaxIter | SolveStatus::NumericalFailure
        )
    {
        return Err(RsiError::Solver {
            what: format!(
                "{label} (residual {:.2e}, min eigenvalue {:.2e})",
                lb.certificate.residual, lb.certificate.min_eig
            ),
            status: lb.status,
        });
    }
    if lb.status != SolveStatus::Optimal {
        log::warn!(
            "{label}: solver stopped with {} but the certificate verifies",
            lb.status
        );
    }
    let mut cert = lb.certificate;
    cert.label = label.to_string();
    Ok((lb.value, cert, norm))
}
