//! Versioned JSON documents for systems, index reports and policy certificates.
//! Sub-system, constraint and variable indices are one-based in files.

mod policy;
mod report;
mod system;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Monomial, PolyError, PolyTerm, Polynomial, Scope, VarId};
use crate::sos::{GramTerm, Normalization, SosCertificate};
use crate::system::SystemError;

pub use policy::{LocalRecord, PolicyFile, PolicyProgramRecord, PolicyRecord, WeightRecord};
pub use report::{ReportEntryRecord, ReportFile};
pub use system::{RunOptions, SdpRecord, SubsystemRecord, SystemFile};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("expected a '{expected}' document, found '{found}'")]
    Kind { expected: String, found: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Header shared by every document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    version: u32,
    kind: String,
}

/// Documents that carry a `version` and `kind` field.
pub trait Document: Serialize + DeserializeOwned {
    const KIND: &'static str;
    fn version(&self) -> u32;
    fn kind(&self) -> &str;
}

pub fn to_json<D: Document>(doc: &D) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

pub fn from_json<D: Document>(text: &str, path: &str) -> Result<D, IoError> {
    let header: Header = serde_json::from_str(text).map_err(|source| IoError::Json {
        path: path.to_string(),
        source,
    })?;
    if header.kind != D::KIND {
        return Err(IoError::Kind {
            expected: D::KIND.into(),
            found: header.kind,
        });
    }
    if header.version != FORMAT_VERSION {
        return Err(IoError::Version(header.version));
    }
    serde_json::from_str(text).map_err(|source| IoError::Json {
        path: path.to_string(),
        source,
    })
}

pub fn save<D: Document>(doc: &D, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, to_json(doc)).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load<D: Document>(path: &Path) -> Result<D, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text, &path.display().to_string())
}

fn monomial_record(m: &Monomial) -> BTreeMap<String, u32> {
    m.iter().map(|(v, e)| (v.to_string(), e)).collect()
}

fn monomial_from_record(r: &BTreeMap<String, u32>) -> Result<Monomial, IoError> {
    let pairs = r
        .iter()
        .map(|(k, &e)| Ok((VarId::parse(k)?, e)))
        .collect::<Result<Vec<_>, PolyError>>()?;
    Ok(Monomial::from_pairs(pairs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramRecord {
    pub basis: Vec<BTreeMap<String, u32>>,
    pub gram: Vec<Vec<f64>>,
    /// Domain polynomial this block multiplies; absent for the free-standing part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<PolyTerm>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub label: String,
    /// Variables of every polynomial in the certificate.
    pub scope: Vec<String>,
    pub target: Vec<PolyTerm>,
    pub terms: Vec<GramRecord>,
    pub decisions: Vec<(String, f64)>,
    pub residual: f64,
    pub min_eig: f64,
}

impl CertificateRecord {
    pub fn from_certificate(c: &SosCertificate) -> Self {
        CertificateRecord {
            label: c.label.clone(),
            scope: c.target.scope().vars().iter().map(ToString::to_string).collect(),
            target: c.target.to_records(),
            terms: c
                .terms
                .iter()
                .map(|t| GramRecord {
                    basis: t.basis.iter().map(monomial_record).collect(),
                    gram: (0..t.gram.nrows())
                        .map(|r| (0..t.gram.ncols()).map(|c| t.gram[(r, c)]).collect())
                        .collect(),
                    domain: t.domain.as_ref().map(Polynomial::to_records),
                })
                .collect(),
            decisions: c.decisions.clone(),
            residual: c.residual,
            min_eig: c.min_eig,
        }
    }

    pub fn to_certificate(&self) -> Result<SosCertificate, IoError> {
        let scope = &Scope::new(
            self.scope
                .iter()
                .map(|v| VarId::parse(v))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let n = t.basis.len();
            if t.gram.len() != n || t.gram.iter().any(|r| r.len() != n) {
                return Err(IoError::Invalid(format!(
                    "certificate '{}': Gram matrix does not match its basis of {n} monomials",
                    self.label
                )));
            }
            terms.push(GramTerm {
                basis: t.basis.iter().map(monomial_from_record).collect::<Result<_, _>>()?,
                gram: DMatrix::from_fn(n, n, |r, c| t.gram[r][c]),
                domain: t
                    .domain
                    .as_ref()
                    .map(|d| Polynomial::from_records(scope, d))
                    .transpose()?,
            });
        }
        Ok(SosCertificate {
            label: self.label.clone(),
            target: Polynomial::from_records(scope, &self.target)?,
            terms,
            decisions: self.decisions.clone(),
            residual: self.residual,
            min_eig: self.min_eig,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub var: String,
    pub center: f64,
    pub half_width: f64,
}

pub fn normalization_records(n: &Normalization) -> Vec<NormalizationRecord> {
    n.map
        .iter()
        .map(|(v, &(center, half_width))| NormalizationRecord {
            var: v.to_string(),
            center,
            half_width,
        })
        .collect()
}

pub fn normalization_from_records(r: &[NormalizationRecord]) -> Result<Normalization, IoError> {
    let mut map = BTreeMap::new();
    for e in r {
        if !(e.half_width > 0.0) {
            return Err(IoError::Invalid(format!("non-positive half width for {}", e.var)));
        }
        map.insert(VarId::parse(&e.var)?, (e.center, e.half_width));
    }
    Ok(Normalization { map })
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn zero_based(v: &[usize], what: &str) -> Result<Vec<usize>, IoError> {
    v.iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or_else(|| IoError::Invalid(format!("{what} indices are one-based")))
        })
        .collect()
}
