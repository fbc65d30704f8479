//! The `rsi` command line: index computation, policy synthesis, simulation,
//! certificate checks and the packaged case study.

mod casestudy;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::io::{self, IoError, PolicyFile, ReportFile, RunOptions, SystemFile};
use crate::rsi::{compute_report, Backend, BackendChoice, RsiError, RsiReport};
use crate::sim::{self, AdversaryModel, Controller, EpisodeStatus, Scheme, SimError, Trajectory};
use crate::synth::{
    ck_sweep, synthesize_joint, synthesize_protected, verify_policy, PolicyCertificate, QpFilter, QpFilterOptions,
    SynthError,
};
use crate::system::{InterconnectedSystem, SystemError};

/// Overrides the SDP feasibility and gap tolerances of every solve.
pub const TOL_ENV: &str = "RSI_SOLVER_TOL";
/// Relative tolerance when comparing stored budgets against a report.
const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotApplicable(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NotApplicable(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Verify(_) => 5,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<RsiError> for CliError {
    fn from(e: RsiError) -> Self {
        match e {
            RsiError::NotApplicable(_) => CliError::NotApplicable(e.to_string()),
            RsiError::Invalid(_) | RsiError::System(_) => CliError::Usage(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Rsi(r) => r.into(),
            SynthError::NotApplicable(_) => CliError::NotApplicable(e.to_string()),
            SynthError::Invalid(_) | SynthError::System(_) => CliError::Usage(e.to_string()),
            SynthError::NotFeasibleOnAnyShrunkSet { .. } | SynthError::QpInfeasible(_) => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Synth(s) => s.into(),
            SimError::Invalid(_) | SimError::System(_) => CliError::Usage(e.to_string()),
            SimError::Io(_) => CliError::Usage(e.to_string()),
            SimError::NonFinite(_) => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rsi",
    version,
    about = "Resilient-safety indices and safety policies for interconnected systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the intrinsic and coupled indices of a system.
    ComputeRsi(ComputeArgs),
    /// Synthesize policies for the protected sub-systems.
    Synthesize(SynthesizeArgs),
    /// Simulate the closed loop and write a CSV trajectory.
    Simulate(SimulateArgs),
    /// Re-check a policy certificate.
    Verify(VerifyArgs),
    /// Run the packaged three-room study end to end.
    Casestudy(CasestudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Sos,
    Lp,
    Monotone,
    Grid,
    Auto,
}

impl BackendArg {
    fn choice(self) -> BackendChoice {
        match self {
            BackendArg::Sos => BackendChoice::Fixed(Backend::Sos),
            BackendArg::Lp => BackendChoice::Fixed(Backend::Lp),
            BackendArg::Monotone => BackendChoice::Fixed(Backend::Monotone),
            BackendArg::Grid => BackendChoice::Fixed(Backend::Grid),
            BackendArg::Auto => BackendChoice::Auto,
        }
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendArg::Sos)]
    pub backend: BackendArg,
    /// Degree of the SOS multipliers; defaults to the system file.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Grid points per axis of the oracle and the grid backend.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Use every constraint as an SOS domain, not only the one being bounded.
    #[arg(long)]
    pub all_constraints: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sos,
    Sweep,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub rsi: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Sos)]
    pub mode: ModeArg,
    /// Step of the shrinking offset in sweep mode.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// One-based constraint shrunk in sweep mode.
    #[arg(long, default_value_t = 1)]
    pub constraint: usize,
    /// Where sweep mode writes the report of the shrunk set.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerArg {
    Sos,
    Qp,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversaryArg {
    Corner,
    Random,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Euler,
    Rk4,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Rk4 => Scheme::Rk4,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Policy certificate; required by the sos controller.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Index report for the qp controller; computed when absent.
    #[arg(long)]
    pub rsi: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ControllerArg::Sos)]
    pub controller: ControllerArg,
    #[arg(long, value_enum, default_value_t = AdversaryArg::Random)]
    pub adversary: AdversaryArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corner flags of the vulnerable channels, 1 for the upper bound, e.g. `1,0`.
    #[arg(long, value_delimiter = ',')]
    pub corner: Option<Vec<u8>>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    /// Also check the stored budgets against this report.
    #[arg(long)]
    pub rsi: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CasestudyArgs {
    #[arg(long)]
    pub scenario: u32,
    #[arg(long)]
    pub out: PathBuf,
    /// Seeded random-adversary episodes per controller and scheme.
    #[arg(long, default_value_t = 100)]
    pub episodes: u64,
}

/// Parses `args` and runs the command, writing human-readable output to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{e}").map_err(|e| CliError::Usage(e.to_string()))
                }
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    match cli.command {
        Command::ComputeRsi(a) => compute_rsi(&a, out),
        Command::Synthesize(a) => synthesize(&a, out),
        Command::Simulate(a) => simulate(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Casestudy(a) => casestudy::run(&a, out),
    }
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Usage(e.to_string()))
}

/// Applies the tolerance override from the environment.
fn apply_env(options: &mut RunOptions) -> Result<(), CliError> {
    if let Ok(v) = std::env::var(TOL_ENV) {
        let tol: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{TOL_ENV} must be a number, got '{v}'")))?;
        if !(tol > 0.0) {
            return Err(CliError::Usage(format!("{TOL_ENV} must be positive")));
        }
        options.sdp.feas_tol = tol;
        options.sdp.gap_tol = tol;
    }
    Ok(())
}

pub(crate) fn load_system(path: &Path) -> Result<(InterconnectedSystem, RunOptions), CliError> {
    let file: SystemFile = io::load(path)?;
    let sys = file.to_system()?;
    let mut options = file.options;
    apply_env(&mut options)?;
    Ok((sys, options))
}

pub(crate) fn write_report(out: &mut dyn Write, report: &RsiReport) -> Result<(), CliError> {
    say(
        out,
        format!(
            "{:<14} {:>14} {:>9} {:>14}",
            "index", "value", "backend", "grid minimum"
        ),
    )?;
    let rows = report
        .gamma
        .iter()
        .map(|g| (format!("gamma[{},{}]", g.subsystem + 1, g.constraint + 1), &g.entry))
        .chain(
            report
                .beta
                .iter()
                .map(|b| (format!("beta[{}]", b.constraint + 1), &b.entry)),
        );
    for (name, e) in rows {
        let oracle = e.oracle.as_ref().map_or("-".to_string(), |o| format!("{:.6}", o.min));
        let flag = if e.flagged { "  above grid minimum" } else { "" };
        say(
            out,
            format!("{name:<14} {:>14.6} {:>9} {oracle:>14}{flag}", e.value, e.backend),
        )?;
    }
    Ok(())
}

fn compute_rsi(a: &ComputeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, options) = load_system(&a.system)?;
    let mut opts = options.rsi_options();
    if let Some(d) = a.degree {
        opts.multiplier_degree = d;
    }
    if let Some(r) = a.resolution {
        opts.grid_resolution = r;
    }
    opts.all_constraints = a.all_constraints;
    let report = compute_report(&sys, a.backend.choice(), &opts)?;
    io::save(&ReportFile::from_report(&report), &a.out)?;
    write_report(out, &report)
}

pub(crate) fn write_programs(out: &mut dyn Write, cert: &PolicyCertificate) -> Result<(), CliError> {
    for p in &cert.programs {
        let subs: Vec<String> = p.subsystems.iter().map(|i| (i + 1).to_string()).collect();
        say(
            out,
            format!(
                "sub-systems {}: {} (solver {}, margin {:.6e}, {} iterations)",
                subs.join(","),
                if p.feasible { "feasible" } else { "infeasible" },
                p.status,
                p.margin,
                p.iterations
            ),
        )?;
    }
    for (i, tau) in &cert.policies {
        for (j, t) in tau.iter().enumerate() {
            say(out, format!("u{}[{}] = {t}", i + 1, j + 1))?;
        }
    }
    Ok(())
}

/// SOS synthesis from a report, jointly when some constraint is handled in local mode.
pub(crate) fn synthesize_from(
    sys: &InterconnectedSystem,
    report: &RsiReport,
    options: &RunOptions,
) -> Result<PolicyCertificate, CliError> {
    let eta = options.eta_for(sys)?;
    let alpha = options.alpha_for(sys)?;
    let local = options.local_for(sys)?;
    let opts = options.synth_options();
    Ok(if local.is_empty() {
        synthesize_protected(sys, report, &eta, &alpha, &opts)?
    } else {
        synthesize_joint(sys, report, &eta, &alpha, &local, &opts)?
    })
}

fn synthesize(a: &SynthesizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, options) = load_system(&a.system)?;
    let report = io::load::<ReportFile>(&a.rsi)?.to_report()?;
    match a.mode {
        ModeArg::Sos => {
            let cert = synthesize_from(&sys, &report, &options)?;
            io::save(&PolicyFile::from_certificate(&cert), &a.out)?;
            write_programs(out, &cert)?;
            if !cert.is_feasible() {
                return Err(CliError::Infeasible("policy synthesis is infeasible".into()));
            }
            Ok(())
        }
        ModeArg::Sweep => {
            let k = a
                .constraint
                .checked_sub(1)
                .filter(|&k| k < sys.safety().len())
                .ok_or_else(|| CliError::Usage(format!("constraint {} does not exist", a.constraint)))?;
            let r = ck_sweep(
                &sys,
                k,
                a.epsilon,
                &options.eta_for(&sys)?,
                &options.alpha_for(&sys)?,
                &options.rsi_options(),
                &options.synth_options(),
            )?;
            io::save(&PolicyFile::from_certificate(&r.certificate), &a.out)?;
            if let Some(p) = &a.report_out {
                io::save(&ReportFile::from_report(&r.report), p)?;
            }
            say(
                out,
                format!(
                    "constraint {}: feasible at c = {} after {} iterations (c_bar = {:.6})",
                    a.constraint, r.c, r.iterations, r.c_bar
                ),
            )?;
            write_programs(out, &r.certificate)
        }
    }
}

/// Report for the QP filter: the stored one, or a fresh one over the same offsets.
pub(crate) fn qp_filter_for(
    sys: &InterconnectedSystem,
    options: &RunOptions,
    report: Option<&RsiReport>,
    offsets: &[f64],
) -> Result<QpFilter, CliError> {
    let computed;
    let report = match report {
        Some(r) => r,
        None => {
            let mut o = options.rsi_options();
            o.offsets = offsets.to_vec();
            o.with_oracle = false;
            computed = compute_report(sys, BackendChoice::Auto, &o)?;
            &computed
        }
    };
    Ok(QpFilter::new(
        sys,
        report,
        &options.eta_for(sys)?,
        &options.alpha_for(sys)?,
        &options.local_for(sys)?,
        &QpFilterOptions {
            alpha_as_variables: false,
            offsets: offsets.to_vec(),
        },
    )?)
}

pub(crate) fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    sim::write_csv(traj, std::io::BufWriter::new(file))?;
    Ok(())
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, mut options) = load_system(&a.system)?;
    if let Some(s) = a.steps {
        options.steps = s;
    }
    if let Some(dt) = a.dt {
        options.dt = dt;
    }
    if let Some(s) = a.scheme {
        options.scheme = s.into();
    }
    let x0 = match a.x0.clone().or_else(|| options.x0.clone()) {
        Some(x) => x,
        None => sys.bounding_box().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
    };
    let cert = match &a.policy {
        Some(p) => Some(io::load::<PolicyFile>(p)?.to_certificate()?),
        None => None,
    };
    let report = match &a.rsi {
        Some(p) => Some(io::load::<ReportFile>(p)?.to_report()?),
        None => None,
    };
    let adversary = match a.adversary {
        AdversaryArg::Random => AdversaryModel::UniformRandom { seed: a.seed },
        AdversaryArg::Greedy => AdversaryModel::GreedyWorst,
        AdversaryArg::Corner => {
            let r: usize = sys.vulnerable().iter().map(|&i| sys.subsystems()[i].r).sum();
            let flags = a.corner.clone().unwrap_or_else(|| vec![1; r]);
            if flags.iter().any(|&f| f > 1) {
                return Err(CliError::Usage("corner flags must be 0 or 1".into()));
            }
            AdversaryModel::ConstantCorner(flags.into_iter().map(|f| f == 1).collect())
        }
    };
    let filter;
    let controller = match a.controller {
        ControllerArg::Zero => Controller::Zero,
        ControllerArg::Sos => {
            let c = cert
                .as_ref()
                .ok_or_else(|| CliError::Usage("the sos controller needs --policy".into()))?;
            if !c.is_feasible() {
                return Err(CliError::Infeasible("the policy certificate is infeasible".into()));
            }
            Controller::SosPolicy(c)
        }
        ControllerArg::Qp => {
            let offsets = cert.as_ref().map(|c| c.offsets.clone()).unwrap_or_default();
            filter = qp_filter_for(&sys, &options, report.as_ref(), &offsets)?;
            Controller::QpFilter(&filter)
        }
    };
    let traj = sim::run_episode(&sys, &controller, &adversary, &x0, &options.episode())?;
    write_trajectory(&a.out, &traj)?;
    let mins: Vec<String> = traj.min_per_constraint().iter().map(|m| format!("{m:.6e}")).collect();
    say(out, format!("steps: {}", traj.inputs.len()))?;
    say(out, format!("minimum h per constraint: {}", mins.join(", ")))?;
    match traj.first_violation {
        Some(t) => say(out, format!("VIOLATION at t = {}", traj.time[t]))?,
        None => say(out, "no violation")?,
    }
    if let EpisodeStatus::ControllerInfeasible { step, message } = &traj.status {
        return Err(CliError::Infeasible(format!(
            "controller infeasible at step {step}: {message}"
        )));
    }
    Ok(())
}

/// Differences between stored budgets and the budgets of `report`.
pub(crate) fn budget_mismatches(
    sys: &InterconnectedSystem,
    cert: &PolicyCertificate,
    report: &RsiReport,
) -> Vec<String> {
    let skip: Vec<usize> = cert.local.iter().map(|l| l.constraint).collect();
    (0..sys.safety().len())
        .filter(|k| !skip.contains(k))
        .filter_map(|k| {
            let stored = cert.budgets.get(k).copied().unwrap_or(f64::NAN);
            let fresh = report.budget(k);
            ((stored - fresh).abs() > BUDGET_TOL * fresh.abs().max(1.0) || stored.is_nan())
                .then(|| format!("budget of constraint {} is {stored}, report gives {fresh}", k + 1))
        })
        .collect()
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (sys, options) = load_system(&a.system)?;
    let cert = io::load::<PolicyFile>(&a.policy)?.to_certificate()?;
    let check = verify_policy(&sys, &cert, a.resolution.unwrap_or(options.grid_resolution))?;
    let mut failures = check.messages.clone();
    if let Some(p) = &a.rsi {
        let report = io::load::<ReportFile>(p)?.to_report()?;
        failures.extend(budget_mismatches(&sys, &cert, &report));
    }
    say(
        out,
        format!("worst reconstruction residual: {:.3e}", check.worst_residual),
    )?;
    say(out, format!("worst Gram eigenvalue floor: {:.3e}", check.worst_min_eig))?;
    say(
        out,
        format!("worst condition slack on grid: {:.6e}", check.worst_condition),
    )?;
    let (slack, i, j) = check.worst_box;
    say(
        out,
        format!("worst input-box slack on grid: {slack:.6e} at ({},{})", i + 1, j + 1),
    )?;
    say(out, format!("grid points checked: {}", check.grid_points))?;
    for m in &failures {
        say(out, format!("FAIL: {m}"))?;
    }
    if check.ok && failures.is_empty() {
        say(out, "PASS")
    } else {
        Err(CliError::Verify(format!("{} check(s) failed", failures.len().max(1))))
    }
}
