use rsi_core::casestudy::{self, RoomParameters, Scenario};
use rsi_core::rsi::{compute_report, BackendChoice};
use rsi_core::sim::{run_episode, AdversaryModel, Controller, EpisodeConfig, EpisodeStatus, Scheme};
use rsi_core::synth::{compute_and_synthesize, synthesize_joint, QpFilter, QpFilterOptions};

const TOL: f64 = 1e-3;

fn adversaries() -> Vec<AdversaryModel> {
    let mut out: Vec<AdversaryModel> = (0..10).map(|seed| AdversaryModel::UniformRandom { seed }).collect();
    out.push(AdversaryModel::ConstantCorner(vec![false]));
    out.push(AdversaryModel::ConstantCorner(vec![true]));
    out.push(AdversaryModel::GreedyWorst);
    out
}

#[test]
fn average_band_stays_safe_under_both_controllers_and_schemes() {
    let sc = Scenario::AverageBand;
    let sys = casestudy::three_rooms(&RoomParameters::default(), sc, None);
    let opts = casestudy::run_options(sc);
    let (eta, alpha) = (opts.eta_for(&sys).unwrap(), opts.alpha_for(&sys).unwrap());
    let (report, cert) =
        compute_and_synthesize(&sys, &eta, &alpha, &opts.rsi_options(), &opts.synth_options()).unwrap();
    assert!(cert.is_feasible());
    let filter = QpFilter::new(&sys, &report, &eta, &alpha, &[], &QpFilterOptions::default()).unwrap();
    let x0 = casestudy::initial_state(sc);
    for ctrl in [Controller::SosPolicy(&cert), Controller::QpFilter(&filter)] {
        for scheme in [Scheme::Euler, Scheme::Rk4] {
            let cfg = EpisodeConfig {
                scheme,
                ..opts.episode()
            };
            for adv in adversaries() {
                let traj = run_episode(&sys, &ctrl, &adv, &x0, &cfg).unwrap();
                assert_eq!(traj.status, EpisodeStatus::Completed);
                assert!(traj.min_safety() >= -TOL, "{adv:?} {scheme:?}: {}", traj.min_safety());
            }
        }
    }
}

#[test]
fn room_bands_stay_safe_under_the_filter() {
    let sc = Scenario::RoomBands;
    let sys = casestudy::three_rooms(&RoomParameters::default(), sc, None);
    let opts = casestudy::run_options(sc);
    let (eta, alpha) = (opts.eta_for(&sys).unwrap(), opts.alpha_for(&sys).unwrap());
    let local = opts.local_for(&sys).unwrap();
    assert_eq!(local.len(), 1);
    let mut rsi_opts = opts.rsi_options();
    rsi_opts.with_oracle = false;
    let report = compute_report(&sys, BackendChoice::Auto, &rsi_opts).unwrap();
    let filter = QpFilter::new(&sys, &report, &eta, &alpha, &local, &QpFilterOptions::default()).unwrap();
    let x0 = casestudy::initial_state(sc);
    for adv in adversaries() {
        let traj = run_episode(&sys, &Controller::QpFilter(&filter), &adv, &x0, &opts.episode()).unwrap();
        assert_eq!(traj.status, EpisodeStatus::Completed);
        for (k, m) in traj.min_per_constraint().into_iter().enumerate() {
            assert!(m >= -TOL, "{adv:?}: band {} reaches {m}", k + 1);
        }
    }
}

#[test]
fn room_band_sos_program_is_infeasible() {
    let sc = Scenario::RoomBands;
    let sys = casestudy::three_rooms(&RoomParameters::default(), sc, None);
    let opts = casestudy::run_options(sc);
    let (eta, alpha) = (opts.eta_for(&sys).unwrap(), opts.alpha_for(&sys).unwrap());
    let local = opts.local_for(&sys).unwrap();
    let mut rsi_opts = opts.rsi_options();
    rsi_opts.with_oracle = false;
    let report = compute_report(&sys, BackendChoice::Auto, &rsi_opts).unwrap();
    let cert = synthesize_joint(&sys, &report, &eta, &alpha, &local, &opts.synth_options()).unwrap();
    assert!(!cert.is_feasible());
    assert!(cert.programs[0].margin < 0.0);
}
