use std::io::Write;
use std::time::Instant;

use crate::casestudy::{attack_threshold, packaged, Scenario, ThresholdSearch, AVERAGE_BAND};
use crate::io::{self, PolicyFile, ReportFile, SystemFile};
use crate::rsi::{compute_report, Backend, BackendChoice};
use crate::sim::{self, AdversaryModel, Controller, EpisodeStatus, Scheme, VIOLATION_TOL};
use crate::synth::verify_policy;

use super::{
    apply_env, qp_filter_for, say, synthesize_from, write_programs, write_report, write_trajectory, CasestudyArgs,
    CliError,
};

/// Bound on the attacked input reported for the room-band scenario in the source study.
const REFERENCE_THRESHOLD: f64 = 6.2498;

fn io_err(e: std::io::Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Writes the summary collected so far, then returns `result`.
fn finish(dir: &std::path::Path, summary: &[u8], result: Result<(), CliError>) -> Result<(), CliError> {
    std::fs::write(dir.join("summary.txt"), summary).map_err(io_err)?;
    result
}

pub(super) fn run(a: &CasestudyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = Scenario::from_number(a.scenario)
        .ok_or_else(|| CliError::Usage(format!("unknown scenario {}; expected 1 or 2", a.scenario)))?;
    let dir = a.out.as_path();
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let text = packaged(scenario);
    std::fs::write(dir.join("system.json"), text).map_err(io_err)?;
    let file: SystemFile = io::from_json(text, "packaged system")?;
    let sys = file.to_system()?;
    let mut options = file.options;
    apply_env(&mut options)?;

    let mut s: Vec<u8> = Vec::new();
    say(&mut s, format!("scenario {}", scenario.number()))?;

    let t = Instant::now();
    let report = compute_report(&sys, BackendChoice::Fixed(Backend::Sos), &options.rsi_options())?;
    io::save(&ReportFile::from_report(&report), &dir.join("report.json"))?;
    say(&mut s, format!("indices (sos, {:.2} s):", t.elapsed().as_secs_f64()))?;
    write_report(&mut s, &report)?;

    let cert = synthesize_from(&sys, &report, &options)?;
    io::save(&PolicyFile::from_certificate(&cert), &dir.join("policy.json"))?;
    say(&mut s, "synthesis:")?;
    write_programs(&mut s, &cert)?;
    if !cert.is_feasible() {
        if options.local_for(&sys)?.is_empty() {
            out.write_all(&s).map_err(io_err)?;
            return finish(
                dir,
                &s,
                Err(CliError::Infeasible("policy synthesis is infeasible".into())),
            );
        }
        say(
            &mut s,
            "SOS policy infeasible over the whole safe set; simulating with the QP filter only",
        )?;
    } else {
        let check = verify_policy(&sys, &cert, options.grid_resolution)?;
        say(
            &mut s,
            format!(
                "verify: residual {:.3e}, eigenvalue floor {:.3e}, condition slack {:.3e}, box slack {:.3e}: {}",
                check.worst_residual,
                check.worst_min_eig,
                check.worst_condition,
                check.worst_box.0,
                if check.ok { "PASS" } else { "FAIL" }
            ),
        )?;
        for m in &check.messages {
            say(&mut s, format!("  {m}"))?;
        }
        if !check.ok {
            out.write_all(&s).map_err(io_err)?;
            return finish(dir, &s, Err(CliError::Verify("certificate check failed".into())));
        }
    }

    let filter = qp_filter_for(&sys, &options, Some(&report), &cert.offsets)?;
    let mut controllers = Vec::new();
    if cert.is_feasible() {
        controllers.push(("sos", Controller::SosPolicy(&cert)));
    }
    controllers.push(("qp", Controller::QpFilter(&filter)));
    let mut adversaries: Vec<(String, AdversaryModel)> = (0..a.episodes)
        .map(|seed| (format!("random{seed}"), AdversaryModel::UniformRandom { seed }))
        .collect();
    for (c, m) in AdversaryModel::all_corners(&sys).into_iter().enumerate() {
        adversaries.push((format!("corner{}", c + 1), m));
    }
    adversaries.push(("greedy".into(), AdversaryModel::GreedyWorst));
    let x0 = options
        .x0
        .clone()
        .unwrap_or_else(|| sys.bounding_box().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());

    say(
        &mut s,
        format!(
            "simulation: {} episodes of {} steps, dt {}",
            adversaries.len(),
            options.steps,
            options.dt
        ),
    )?;
    let mut safe = true;
    for (name, controller) in &controllers {
        for scheme in [Scheme::Euler, Scheme::Rk4] {
            let mut cfg = options.episode();
            cfg.scheme = scheme;
            let mut mins = vec![f64::INFINITY; sys.safety().len()];
            let (mut lo_avg, mut hi_avg) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut violations, mut stalls) = (0, 0);
            for (adv_name, adv) in &adversaries {
                let traj = sim::run_episode(&sys, controller, adv, &x0, &cfg)?;
                for (m, v) in mins.iter_mut().zip(traj.min_per_constraint()) {
                    *m = m.min(v);
                }
                for v in traj.average_state() {
                    lo_avg = lo_avg.min(v);
                    hi_avg = hi_avg.max(v);
                }
                violations += usize::from(traj.violated());
                stalls += usize::from(matches!(traj.status, EpisodeStatus::ControllerInfeasible { .. }));
                if scheme == options.scheme && (adv_name == "random0" || adv_name == "greedy") {
                    write_trajectory(&dir.join(format!("trajectory_{name}_{adv_name}.csv")), &traj)?;
                }
            }
            let pass = violations == 0 && stalls == 0;
            // Only the configured scheme decides the outcome; the other is a cross-check.
            let primary = scheme == options.scheme;
            if primary {
                safe &= pass;
            }
            let mins: Vec<String> = mins.iter().map(|m| format!("{m:.4e}")).collect();
            let mut line = format!(
                "  {name:<3} {:<5} min h [{}], violations {violations}, controller failures {stalls}",
                format!("{scheme:?}").to_lowercase(),
                mins.join(", ")
            );
            if scenario == Scenario::AverageBand {
                line.push_str(&format!(
                    ", average in [{lo_avg:.4}, {hi_avg:.4}] vs band [{}, {}]",
                    AVERAGE_BAND.0, AVERAGE_BAND.1
                ));
            }
            line.push_str(if pass { ": PASS" } else { ": FAIL" });
            if !primary {
                line.push_str(" (cross-check)");
            }
            say(&mut s, line)?;
        }
    }
    say(&mut s, format!("violation tolerance {VIOLATION_TOL}"))?;

    if scenario == Scenario::RoomBands {
        let t = attack_threshold(&ThresholdSearch::default())?;
        let value = t.threshold.map_or("none in range".to_string(), |v| format!("{v:.4}"));
        say(
            &mut s,
            format!(
                "attack threshold on room 1 input: {value} (reference {REFERENCE_THRESHOLD}), monotone {}, {} evaluations",
                t.monotone, t.evaluations
            ),
        )?;
    }
    out.write_all(&s).map_err(io_err)?;
    let result = if safe {
        Ok(())
    } else {
        Err(CliError::Verify("a simulated episode left the safe set".into()))
    };
    finish(dir, &s, result)
}
