use serde::{Deserialize, Serialize};

use crate::optim::SdpOptions;
use crate::poly::{PolyMatrix, PolyTerm, PolyVector, Polynomial, Scope};
use crate::rsi::RsiOptions;
use crate::sim::{EpisodeConfig, Scheme};
use crate::synth::{ClassKFunction, LocalConstraint, SynthError, SynthOptions, WeightMatrix};
use crate::system::{InterconnectedSystem, SubsystemModel};

use super::{one_based, zero_based, Document, IoError, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemRecord {
    pub states: usize,
    pub inputs: usize,
    /// One polynomial per state.
    pub f_slf: Vec<Vec<PolyTerm>>,
    /// Row-major, `states` rows of `inputs` entries.
    pub g_slf: Vec<Vec<Vec<PolyTerm>>>,
    pub f_cpl: Vec<Vec<PolyTerm>>,
    pub g_cpl: Vec<Vec<Vec<PolyTerm>>>,
    pub input_lo: Vec<f64>,
    pub input_hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdpRecord {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpRecord {
    fn default() -> Self {
        SdpOptions::default().into()
    }
}

impl From<SdpOptions> for SdpRecord {
    fn from(o: SdpOptions) -> Self {
        SdpRecord {
            feas_tol: o.feas_tol,
            gap_tol: o.gap_tol,
            max_iter: o.max_iter,
        }
    }
}

impl From<SdpRecord> for SdpOptions {
    fn from(r: SdpRecord) -> Self {
        SdpOptions {
            feas_tol: r.feas_tol,
            gap_tol: r.gap_tol,
            max_iter: r.max_iter,
        }
    }
}

/// Solver, synthesis and simulation settings stored next to a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// One function per constraint; empty means the default for every constraint.
    pub eta: Vec<ClassKFunction>,
    /// Rows follow `protected`, one weight per constraint; absent means [`WeightMatrix::for_system`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<f64>>>,
    /// Enables the local-constraint treatment of constraints owned by a vulnerable sub-system.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_outer: Option<ClassKFunction>,
    pub multiplier_degree: u32,
    pub policy_degree: u32,
    pub grid_resolution: usize,
    pub margin_cap: f64,
    pub sdp: SdpRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
}

impl Default for RunOptions {
    fn default() -> Self {
        let ep = EpisodeConfig::default();
        RunOptions {
            eta: Vec::new(),
            alpha: None,
            local_outer: None,
            multiplier_degree: 2,
            policy_degree: 1,
            grid_resolution: 21,
            margin_cap: 1.0,
            sdp: SdpRecord::default(),
            x0: None,
            dt: ep.dt,
            steps: ep.steps,
            scheme: ep.scheme,
        }
    }
}

impl RunOptions {
    pub fn eta_for(&self, sys: &InterconnectedSystem) -> Result<Vec<ClassKFunction>, SynthError> {
        let k = sys.safety().len();
        let eta = match self.eta.len() {
            0 => vec![ClassKFunction::default(); k],
            1 => vec![self.eta[0]; k],
            n if n == k => self.eta.clone(),
            n => {
                return Err(SynthError::Invalid(format!(
                    "{n} class-K functions given for {k} constraints"
                )))
            }
        };
        for e in &eta {
            e.validate()?;
        }
        Ok(eta)
    }

    pub fn alpha_for(&self, sys: &InterconnectedSystem) -> Result<WeightMatrix, SynthError> {
        match &self.alpha {
            None => WeightMatrix::for_system(sys),
            Some(w) => WeightMatrix::new(sys.protected().to_vec(), w.clone()),
        }
    }

    /// Constraints handled in local mode; empty unless `local_outer` is set.
    pub fn local_for(&self, sys: &InterconnectedSystem) -> Result<Vec<LocalConstraint>, SynthError> {
        let Some(outer) = self.local_outer else {
            return Ok(Vec::new());
        };
        let eta = self.eta_for(sys)?;
        Ok((0..sys.safety().len())
            .filter_map(|k| LocalConstraint::new(sys, k, eta[k], outer).ok())
            .collect())
    }

    pub fn rsi_options(&self) -> RsiOptions {
        RsiOptions {
            multiplier_degree: self.multiplier_degree,
            grid_resolution: self.grid_resolution,
            sdp: self.sdp.into(),
            ..RsiOptions::default()
        }
    }

    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            policy_degree: self.policy_degree,
            multiplier_degree: self.multiplier_degree,
            margin_cap: self.margin_cap,
            sdp: self.sdp.into(),
            ..SynthOptions::default()
        }
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            steps: self.steps,
            dt: self.dt,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub version: u32,
    pub kind: String,
    pub subsystems: Vec<SubsystemRecord>,
    /// One-based sub-system indices.
    pub protected: Vec<usize>,
    pub vulnerable: Vec<usize>,
    pub safety: Vec<Vec<PolyTerm>>,
    pub bounding_box: Vec<(f64, f64)>,
    #[serde(default)]
    pub options: RunOptions,
}

impl Document for SystemFile {
    const KIND: &'static str = "system";
    fn version(&self) -> u32 {
        self.version
    }
    fn kind(&self) -> &str {
        &self.kind
    }
}

fn vector_records(v: &PolyVector) -> Vec<Vec<PolyTerm>> {
    v.iter().map(Polynomial::to_records).collect()
}

fn matrix_records(m: &PolyMatrix) -> Vec<Vec<Vec<PolyTerm>>> {
    let (rows, cols) = m.shape();
    (0..rows)
        .map(|r| (0..cols).map(|c| m.get(r, c).to_records()).collect())
        .collect()
}

fn vector_from(scope: &Scope, v: &[Vec<PolyTerm>]) -> Result<PolyVector, IoError> {
    let entries = v
        .iter()
        .map(|p| Polynomial::from_records(scope, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PolyVector::new(scope, entries)?)
}

fn matrix_from(
    scope: &Scope,
    m: &[Vec<Vec<PolyTerm>>],
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<PolyMatrix, IoError> {
    if m.is_empty() && rows * cols > 0 {
        return Ok(PolyMatrix::zeros(scope, rows, cols));
    }
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(IoError::Invalid(format!("{what} must be {rows} x {cols}")));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for row in m {
        for p in row {
            entries.push(Polynomial::from_records(scope, p)?);
        }
    }
    Ok(PolyMatrix::new(scope, rows, cols, entries)?)
}

impl SystemFile {
    pub fn from_system(sys: &InterconnectedSystem, options: RunOptions) -> Self {
        SystemFile {
            version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            subsystems: sys
                .subsystems()
                .iter()
                .map(|s| SubsystemRecord {
                    states: s.n,
                    inputs: s.r,
                    f_slf: vector_records(&s.f_slf),
                    g_slf: matrix_records(&s.g_slf),
                    f_cpl: vector_records(&s.f_cpl),
                    g_cpl: matrix_records(&s.g_cpl),
                    input_lo: s.input_lo.clone(),
                    input_hi: s.input_hi.clone(),
                })
                .collect(),
            protected: one_based(sys.protected()),
            vulnerable: one_based(sys.vulnerable()),
            safety: sys.safety().iter().map(Polynomial::to_records).collect(),
            bounding_box: sys.bounding_box().to_vec(),
            options,
        }
    }

    /// Builds the system and rejects it unless it passes validation.
    /// An empty `g_cpl` is read as all zeros.
    pub fn to_system(&self) -> Result<InterconnectedSystem, IoError> {
        let n: usize = self.subsystems.iter().map(|s| s.states).sum();
        let r: usize = self.subsystems.iter().map(|s| s.inputs).sum();
        let scope = Scope::states_and_inputs(n, r);
        let mut subsystems = Vec::with_capacity(self.subsystems.len());
        for (i, s) in self.subsystems.iter().enumerate() {
            let at = |what: &str| format!("sub-system {} {what}", i + 1);
            subsystems.push(SubsystemModel {
                n: s.states,
                r: s.inputs,
                f_slf: vector_from(&scope, &s.f_slf)?,
                g_slf: matrix_from(&scope, &s.g_slf, s.states, s.inputs, &at("g_slf"))?,
                f_cpl: vector_from(&scope, &s.f_cpl)?,
                g_cpl: matrix_from(&scope, &s.g_cpl, s.states, s.inputs, &at("g_cpl"))?,
                input_lo: s.input_lo.clone(),
                input_hi: s.input_hi.clone(),
            });
        }
        let safety = self
            .safety
            .iter()
            .map(|p| Polynomial::from_records(&scope, p))
            .collect::<Result<Vec<_>, _>>()?;
        let sys = InterconnectedSystem::new(
            subsystems,
            zero_based(&self.protected, "protected")?,
            zero_based(&self.vulnerable, "vulnerable")?,
            safety,
            self.bounding_box.clone(),
        )?;
        sys.ensure_valid()?;
        Ok(sys)
    }
}
