use serde::{Deserialize, Serialize};

use crate::rsi::{Attainment, Backend, BetaEntry, GammaEntry, OracleBound, RsiReport, RsiValue};

use super::{
    normalization_from_records, normalization_records, CertificateRecord, Document, IoError, NormalizationRecord,
    FORMAT_VERSION,
};

/// One index value. `subsystem` is present for gamma entries only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntryRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem: Option<usize>,
    pub constraint: usize,
    pub value: f64,
    pub backend: Backend,
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attainment: Option<Attainment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Vec<NormalizationRecord>>,
}

impl ReportEntryRecord {
    fn new(subsystem: Option<usize>, constraint: usize, v: &RsiValue) -> Self {
        ReportEntryRecord {
            subsystem: subsystem.map(|i| i + 1),
            constraint: constraint + 1,
            value: v.value,
            backend: v.backend,
            flagged: v.flagged,
            oracle: v.oracle.clone(),
            attainment: v.attainment.clone(),
            certificate: v.certificate.as_ref().map(CertificateRecord::from_certificate),
            normalization: v.normalization.as_ref().map(normalization_records),
        }
    }

    fn value(&self) -> Result<RsiValue, IoError> {
        Ok(RsiValue {
            value: self.value,
            backend: self.backend,
            certificate: self
                .certificate
                .as_ref()
                .map(CertificateRecord::to_certificate)
                .transpose()?,
            normalization: self
                .normalization
                .as_deref()
                .map(normalization_from_records)
                .transpose()?,
            attainment: self.attainment.clone(),
            oracle: self.oracle.clone(),
            flagged: self.flagged,
        })
    }
}

fn index(i: usize, what: &str) -> Result<usize, IoError> {
    i.checked_sub(1)
        .ok_or_else(|| IoError::Invalid(format!("{what} indices are one-based")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub kind: String,
    pub gamma: Vec<ReportEntryRecord>,
    pub beta: Vec<ReportEntryRecord>,
}

impl Document for ReportFile {
    const KIND: &'static str = "rsi_report";
    fn version(&self) -> u32 {
        self.version
    }
    fn kind(&self) -> &str {
        &self.kind
    }
}

impl ReportFile {
    pub fn from_report(r: &RsiReport) -> Self {
        ReportFile {
            version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            gamma: r
                .gamma
                .iter()
                .map(|g| ReportEntryRecord::new(Some(g.subsystem), g.constraint, &g.entry))
                .collect(),
            beta: r
                .beta
                .iter()
                .map(|b| ReportEntryRecord::new(None, b.constraint, &b.entry))
                .collect(),
        }
    }

    pub fn to_report(&self) -> Result<RsiReport, IoError> {
        let mut gamma = Vec::with_capacity(self.gamma.len());
        for g in &self.gamma {
            let i = g
                .subsystem
                .ok_or_else(|| IoError::Invalid("gamma entry without a sub-system".into()))?;
            gamma.push(GammaEntry {
                subsystem: index(i, "sub-system")?,
                constraint: index(g.constraint, "constraint")?,
                entry: g.value()?,
            });
        }
        let mut beta = Vec::with_capacity(self.beta.len());
        for b in &self.beta {
            beta.push(BetaEntry {
                constraint: index(b.constraint, "constraint")?,
                entry: b.value()?,
            });
        }
        Ok(RsiReport { gamma, beta })
    }
}
