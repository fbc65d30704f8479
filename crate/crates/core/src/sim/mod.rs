//! Closed-loop simulation with adversarial inputs on the vulnerable
//! sub-systems, safety monitoring and CSV output.

mod csv;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::DenseEval;
use crate::synth::{PolicyCertificate, QpFilter, SynthError};
use crate::system::{InterconnectedSystem, SystemError};

pub use csv::{read_csv, write_csv, CsvTable};

/// A constraint counts as violated once it drops below `-VIOLATION_TOL`.
pub const VIOLATION_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state became non-finite at step {0}")]
    NonFinite(usize),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Rk4,
}

/// Global vector field compiled for repeated evaluation.
pub struct Field {
    entries: Vec<DenseEval>,
    n: usize,
    buf_len: usize,
}

impl Field {
    pub fn new(sys: &InterconnectedSystem) -> Result<Self, SimError> {
        let f = sys.assemble_global()?;
        Ok(Field {
            entries: f.iter().map(DenseEval::new).collect(),
            n: sys.num_states(),
            buf_len: sys.scope().len(),
        })
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.buf_len);
        p.extend_from_slice(x);
        p.extend_from_slice(u);
        self.entries.iter().map(|e| e.eval(&p)).collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// One integration step with `u` held constant.
pub fn step(field: &Field, x: &[f64], u: &[f64], dt: f64, scheme: Scheme) -> Vec<f64> {
    let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, d)| x + h * d).collect() };
    match scheme {
        Scheme::Euler => axpy(x, &field.eval(x, u), dt),
        Scheme::Rk4 => {
            let k1 = field.eval(x, u);
            let k2 = field.eval(&axpy(x, &k1, 0.5 * dt), u);
            let k3 = field.eval(&axpy(x, &k2, 0.5 * dt), u);
            let k4 = field.eval(&axpy(x, &k3, dt), u);
            (0..x.len())
                .map(|j| x[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect()
        }
    }
}

/// Input model of the vulnerable sub-systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryModel {
    /// Fixed box corner; `true` selects the upper bound of that vulnerable channel.
    ConstantCorner(Vec<bool>),
    UniformRandom {
        seed: u64,
    },
    /// Each step picks the corner minimizing `sum_k dh^k/dx_i F_i`.
    GreedyWorst,
}

impl AdversaryModel {
    /// Every constant-corner adversary for `sys`.
    pub fn all_corners(sys: &InterconnectedSystem) -> Vec<AdversaryModel> {
        let r: usize = sys.vulnerable().iter().map(|&i| sys.subsystems()[i].r).sum();
        (0..1usize << r)
            .map(|mask| AdversaryModel::ConstantCorner((0..r).map(|j| mask >> j & 1 == 1).collect()))
            .collect()
    }
}

struct Adversary {
    model: AdversaryModel,
    rng: ChaCha8Rng,
    /// Per vulnerable sub-system: corners and the compiled greedy objective.
    greedy: Vec<(usize, Vec<Vec<f64>>, DenseEval)>,
}

impl Adversary {
    fn new(sys: &InterconnectedSystem, model: &AdversaryModel) -> Result<Self, SimError> {
        let seed = match model {
            AdversaryModel::UniformRandom { seed } => *seed,
            _ => 0,
        };
        if let AdversaryModel::ConstantCorner(mask) = model {
            let r: usize = sys.vulnerable().iter().map(|&i| sys.subsystems()[i].r).sum();
            if mask.len() != r {
                return Err(SimError::Invalid(format!("corner adversary needs {r} channel flags")));
            }
        }
        let mut greedy = Vec::new();
        if matches!(model, AdversaryModel::GreedyWorst) {
            for &i in sys.vulnerable() {
                let mut obj = crate::poly::Polynomial::zero(sys.scope());
                for k in 0..sys.safety().len() {
                    obj = obj.checked_add(&sys.lie_block(i, k)?).map_err(SystemError::from)?;
                }
                greedy.push((i, sys.input_corners(i)?, DenseEval::new(&obj)));
            }
        }
        Ok(Adversary {
            model: model.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            greedy,
        })
    }

    fn apply(&mut self, sys: &InterconnectedSystem, x: &[f64], u: &mut [f64]) {
        match &self.model {
            AdversaryModel::ConstantCorner(mask) => {
                let mut c = 0;
                for &i in sys.vulnerable() {
                    let s = &sys.subsystems()[i];
                    let off = sys.input_offset(i);
                    for j in 0..s.r {
                        u[off + j] = if mask[c] { s.input_hi[j] } else { s.input_lo[j] };
                        c += 1;
                    }
                }
            }
            AdversaryModel::UniformRandom { .. } => {
                for &i in sys.vulnerable() {
                    let s = &sys.subsystems()[i];
                    let off = sys.input_offset(i);
                    for j in 0..s.r {
                        u[off + j] = self.rng.random_range(s.input_lo[j]..=s.input_hi[j]);
                    }
                }
            }
            AdversaryModel::GreedyWorst => {
                let mut p: Vec<f64> = x.iter().chain(u.iter()).copied().collect();
                for (i, corners, obj) in &self.greedy {
                    let off = sys.num_states() + sys.input_offset(*i);
                    let mut best = (f64::INFINITY, 0);
                    for (c, corner) in corners.iter().enumerate() {
                        p[off..off + corner.len()].copy_from_slice(corner);
                        let v = obj.eval(&p);
                        if v < best.0 {
                            best = (v, c);
                        }
                    }
                    let corner = &corners[best.1];
                    p[off..off + corner.len()].copy_from_slice(corner);
                    let uo = sys.input_offset(*i);
                    u[uo..uo + corner.len()].copy_from_slice(corner);
                }
            }
        }
    }
}

/// Input law of the protected sub-systems.
pub enum Controller<'a> {
    SosPolicy(&'a PolicyCertificate),
    QpFilter(&'a QpFilter),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub steps: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            steps: 50,
            dt: 0.01,
            scheme: Scheme::Euler,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpisodeStatus {
    Completed,
    /// The controller had no admissible input at this step; the trajectory stops there.
    ControllerInfeasible {
        step: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub time: Vec<f64>,
    /// One row per time point.
    pub states: Vec<Vec<f64>>,
    /// One row per step; row `t` is applied on `[t, t + dt)`.
    pub inputs: Vec<Vec<f64>>,
    /// `h^k` at every time point.
    pub safety: Vec<Vec<f64>>,
    /// First time index with some `h^k < -VIOLATION_TOL`.
    pub first_violation: Option<usize>,
    pub status: EpisodeStatus,
}

impl Trajectory {
    pub fn violated(&self) -> bool {
        self.first_violation.is_some()
    }

    /// Smallest `h^k` over all time points and constraints.
    pub fn min_safety(&self) -> f64 {
        self.safety.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Per-constraint minimum over time.
    pub fn min_per_constraint(&self) -> Vec<f64> {
        let k = self.safety.first().map_or(0, Vec::len);
        (0..k)
            .map(|c| self.safety.iter().map(|h| h[c]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Mean of the state vector at every time point.
    pub fn average_state(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|x| x.iter().sum::<f64>() / x.len().max(1) as f64)
            .collect()
    }
}

/// Simulates `steps` steps from `x0`; deterministic for a given adversary seed.
pub fn run_episode(
    sys: &InterconnectedSystem,
    controller: &Controller<'_>,
    adversary: &AdversaryModel,
    x0: &[f64],
    cfg: &EpisodeConfig,
) -> Result<Trajectory, SimError> {
    if !(cfg.dt > 0.0) {
        return Err(SimError::Invalid("time step must be positive".into()));
    }
    if x0.len() != sys.num_states() {
        return Err(SimError::Invalid(format!(
            "initial state needs {} entries",
            sys.num_states()
        )));
    }
    let field = Field::new(sys)?;
    let hs: Vec<DenseEval> = sys.safety().iter().map(DenseEval::new).collect();
    let scope_len = sys.scope().len();
    let eval_h = |x: &[f64]| -> Vec<f64> {
        let mut p = x.to_vec();
        p.resize(scope_len, 0.0);
        hs.iter().map(|h| h.eval(&p)).collect()
    };
    let mut adv = Adversary::new(sys, adversary)?;
    let mut x = x0.to_vec();
    let h0 = eval_h(&x);
    if h0.iter().any(|&h| h < 0.0) {
        log::warn!("initial state lies outside the safe set");
    }
    let mut traj = Trajectory {
        time: vec![0.0],
        states: vec![x.clone()],
        inputs: Vec::new(),
        safety: vec![h0],
        first_violation: None,
        status: EpisodeStatus::Completed,
    };
    if traj.safety[0].iter().any(|&h| h < -VIOLATION_TOL) {
        traj.first_violation = Some(0);
    }
    for t in 0..cfg.steps {
        let mut u = vec![0.0; sys.num_inputs()];
        match controller {
            Controller::SosPolicy(cert) => cert.apply(sys, &x, &mut u),
            Controller::QpFilter(f) => match f.solve(&x) {
                Ok(out) => {
                    for (i, ui) in out.inputs {
                        let off = sys.input_offset(i);
                        u[off..off + ui.len()].copy_from_slice(&ui);
                    }
                }
                Err(e) => {
                    traj.status = EpisodeStatus::ControllerInfeasible {
                        step: t,
                        message: e.to_string(),
                    };
                    break;
                }
            },
            Controller::Zero => {}
        }
        adv.apply(sys, &x, &mut u);
        x = step(&field, &x, &u, cfg.dt, cfg.scheme);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite(t));
        }
        let h = eval_h(&x);
        if traj.first_violation.is_none() && h.iter().any(|&v| v < -VIOLATION_TOL) {
            traj.first_violation = Some(t + 1);
        }
        traj.inputs.push(u);
        traj.time.push((t + 1) as f64 * cfg.dt);
        traj.states.push(x.clone());
        traj.safety.push(h);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casestudy::{three_rooms, RoomParameters, Scenario};

    #[test]
    fn euler_step_matches_hand_expansion() {
        let sys = three_rooms(&RoomParameters::default(), Scenario::AverageBand, None);
        let f = Field::new(&sys).unwrap();
        let x = step(&f, &[15.0; 3], &[0.0, 0.6, 0.6], 0.1, Scheme::Euler);
        let expect = 15.0 + (0.45 * 0.0 + 0.045 * (-1.0 - 15.0) + 0.09 * (50.0 - 15.0) * 0.6) / 0.1 * 0.1;
        assert!((x[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn corner_adversaries_cover_all_masks() {
        let sys = three_rooms(&RoomParameters::default(), Scenario::AverageBand, None);
        assert_eq!(AdversaryModel::all_corners(&sys).len(), 2);
    }
}
