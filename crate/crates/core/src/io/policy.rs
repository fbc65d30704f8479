use serde::{Deserialize, Serialize};

use crate::optim::SolveStatus;
use crate::poly::{PolyTerm, PolyVector, Polynomial, Scope, VarId};
use crate::synth::{ClassKFunction, LocalConstraint, PolicyCertificate, PolicyStatus, ProgramRecord, WeightMatrix};

use super::{
    normalization_from_records, normalization_records, one_based, zero_based, CertificateRecord, Document, IoError,
    NormalizationRecord, FORMAT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub subsystem: usize,
    pub scope: Vec<String>,
    /// One polynomial per input channel.
    pub inputs: Vec<Vec<PolyTerm>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyProgramRecord {
    pub subsystems: Vec<usize>,
    pub status: SolveStatus,
    pub feasible: bool,
    pub margin: f64,
    pub iterations: usize,
    pub certificates: Vec<CertificateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub protected: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRecord {
    pub constraint: usize,
    pub owner: usize,
    pub eta: ClassKFunction,
    pub outer: ClassKFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub version: u32,
    pub kind: String,
    pub feasible: bool,
    /// First protected sub-system whose program failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_subsystem: Option<usize>,
    pub policies: Vec<PolicyRecord>,
    pub eta: Vec<ClassKFunction>,
    pub alpha: WeightRecord,
    pub budgets: Vec<f64>,
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub local: Vec<LocalRecord>,
    pub normalization: Vec<NormalizationRecord>,
    pub programs: Vec<PolicyProgramRecord>,
}

impl Document for PolicyFile {
    const KIND: &'static str = "policy";
    fn version(&self) -> u32 {
        self.version
    }
    fn kind(&self) -> &str {
        &self.kind
    }
}

fn one(i: usize, what: &str) -> Result<usize, IoError> {
    i.checked_sub(1)
        .ok_or_else(|| IoError::Invalid(format!("{what} indices are one-based")))
}

impl PolicyFile {
    pub fn from_certificate(c: &PolicyCertificate) -> Self {
        let (feasible, failed_subsystem) = match c.status {
            PolicyStatus::Feasible => (true, None),
            PolicyStatus::Infeasible(i) => (false, Some(i + 1)),
        };
        PolicyFile {
            version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            feasible,
            failed_subsystem,
            policies: c
                .policies
                .iter()
                .map(|(i, p)| PolicyRecord {
                    subsystem: i + 1,
                    scope: p.scope().vars().iter().map(ToString::to_string).collect(),
                    inputs: p.iter().map(Polynomial::to_records).collect(),
                })
                .collect(),
            eta: c.eta.clone(),
            alpha: WeightRecord {
                protected: one_based(&c.alpha.protected),
                weights: c.alpha.weights.clone(),
            },
            budgets: c.budgets.clone(),
            offsets: c.offsets.clone(),
            local: c
                .local
                .iter()
                .map(|l| LocalRecord {
                    constraint: l.constraint + 1,
                    owner: l.owner + 1,
                    eta: l.eta,
                    outer: l.outer,
                })
                .collect(),
            normalization: normalization_records(&c.normalization),
            programs: c
                .programs
                .iter()
                .map(|p| PolicyProgramRecord {
                    subsystems: one_based(&p.subsystems),
                    status: p.status,
                    feasible: p.feasible,
                    margin: p.margin,
                    iterations: p.iterations,
                    certificates: p.certificates.iter().map(CertificateRecord::from_certificate).collect(),
                })
                .collect(),
        }
    }

    pub fn to_certificate(&self) -> Result<PolicyCertificate, IoError> {
        let status = match (self.feasible, self.failed_subsystem) {
            (true, None) => PolicyStatus::Feasible,
            (false, Some(i)) => PolicyStatus::Infeasible(one(i, "sub-system")?),
            _ => {
                return Err(IoError::Invalid(
                    "an infeasible policy names exactly one failed sub-system".into(),
                ))
            }
        };
        let mut policies = Vec::with_capacity(self.policies.len());
        for p in &self.policies {
            let scope = Scope::new(p.scope.iter().map(|v| VarId::parse(v)).collect::<Result<Vec<_>, _>>()?);
            let entries = p
                .inputs
                .iter()
                .map(|t| Polynomial::from_records(&scope, t))
                .collect::<Result<Vec<_>, _>>()?;
            policies.push((one(p.subsystem, "sub-system")?, PolyVector::new(&scope, entries)?));
        }
        let alpha = WeightMatrix::new(
            zero_based(&self.alpha.protected, "protected")?,
            self.alpha.weights.clone(),
        )
        .map_err(|e| IoError::Invalid(e.to_string()))?;
        let local = self
            .local
            .iter()
            .map(|l| {
                Ok(LocalConstraint {
                    constraint: one(l.constraint, "constraint")?,
                    owner: one(l.owner, "sub-system")?,
                    eta: l.eta,
                    outer: l.outer,
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let programs = self
            .programs
            .iter()
            .map(|p| {
                Ok(ProgramRecord {
                    subsystems: zero_based(&p.subsystems, "sub-system")?,
                    status: p.status,
                    feasible: p.feasible,
                    margin: p.margin,
                    certificates: p
                        .certificates
                        .iter()
                        .map(CertificateRecord::to_certificate)
                        .collect::<Result<_, _>>()?,
                    iterations: p.iterations,
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(PolicyCertificate {
            status,
            policies,
            eta: self.eta.clone(),
            alpha,
            budgets: self.budgets.clone(),
            offsets: self.offsets.clone(),
            local,
            normalization: normalization_from_records(&self.normalization)?,
            programs,
        })
    }
}
