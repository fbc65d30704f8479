use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsi_core::casestudy::{self, RoomParameters, Scenario, ThresholdSearch, ETA_GAIN};
use rsi_core::poly::{PolyVector, Polynomial};
use rsi_core::rsi::{compute_report, Backend, BackendChoice, RsiReport};
use rsi_core::sim::Field;
use rsi_core::synth::{
    ck_sweep, compute_and_synthesize, infeasibility_threshold, verify_policy, ClassKFunction, PolicyCertificate,
    PolicyStatus, QpFilter, QpFilterOptions, SynthError,
};
use rsi_core::system::InterconnectedSystem;

fn average_band() -> InterconnectedSystem {
    casestudy::three_rooms(&RoomParameters::default(), Scenario::AverageBand, None)
}

fn synthesize(sys: &InterconnectedSystem, kappa: f64) -> (RsiReport, PolicyCertificate) {
    let mut opts = casestudy::run_options(Scenario::AverageBand);
    opts.eta = vec![ClassKFunction::linear(kappa)];
    let (eta, alpha) = (opts.eta_for(sys).unwrap(), opts.alpha_for(sys).unwrap());
    compute_and_synthesize(sys, &eta, &alpha, &opts.rsi_options(), &opts.synth_options()).unwrap()
}

#[test]
fn average_band_policy_certifies_and_verifies() {
    let sys = average_band();
    let (_, cert) = synthesize(&sys, ETA_GAIN);
    assert!(cert.is_feasible());
    assert_eq!(cert.policies.len(), 2);
    let check = verify_policy(&sys, &cert, 11).unwrap();
    assert!(check.ok, "{:?}", check.messages);
    assert!(check.worst_residual <= 1e-6 && check.worst_min_eig >= -1e-7);
}

#[test]
fn unit_gain_cannot_offset_the_attack() {
    let sys = average_band();
    let (_, cert) = synthesize(&sys, 1.0);
    assert!(matches!(cert.status, PolicyStatus::Infeasible(1)));
}

#[test]
fn out_of_box_policy_fails_verification() {
    let sys = average_band();
    let (_, mut cert) = synthesize(&sys, ETA_GAIN);
    let s = sys.scope().clone();
    cert.policies[0].1 = PolyVector::new(&s, vec![Polynomial::constant(&s, 50.0)]).unwrap();
    assert!(!verify_policy(&sys, &cert, 11).unwrap().ok);
}

/// `dh/dx_i` by central differences.
fn partial(h: &Polynomial, p: &[f64], i: usize) -> f64 {
    let (mut up, mut down) = (p.to_vec(), p.to_vec());
    up[i] += 1e-6;
    down[i] -= 1e-6;
    (h.eval_dense(&up) - h.eval_dense(&down)) / 2e-6
}

#[test]
fn qp_filter_returns_the_smallest_admissible_inputs() {
    let sys = average_band();
    let report = compute_report(&sys, BackendChoice::Fixed(Backend::Sos), &Default::default()).unwrap();
    let eta = vec![ClassKFunction::linear(ETA_GAIN)];
    let alpha = rsi_core::synth::WeightMatrix::for_system(&sys).unwrap();
    let filter = QpFilter::new(&sys, &report, &eta, &alpha, &[], &QpFilterOptions::default()).unwrap();
    let field = Field::new(&sys).unwrap();
    let h = &sys.safety()[0];
    let budget = report.budget(0);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 20 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(15.0..20.0)).collect();
        let dense = [x[0], x[1], x[2], 0.0, 0.0, 0.0];
        let hv = h.eval_dense(&dense);
        if hv < 0.0 {
            continue;
        }
        checked += 1;
        let out = filter.solve(&x).unwrap();
        assert!(out.kkt <= 1e-8);
        for (i, u) in out.inputs {
            let dh = partial(h, &dense, i);
            let rate = |ui: f64| {
                let mut u = vec![0.0; 3];
                u[i] = ui;
                dh * field.eval(&x, &u)[i]
            };
            let need = -alpha.get(i, 0) * (ETA_GAIN * hv + budget);
            let brute = (0..=40000)
                .map(|t| -2.0 + 4.0 * t as f64 / 40000.0)
                .filter(|&v| rate(v) >= need)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .expect("some admissible input");
            assert!((u[0] - brute).abs() <= 2e-4, "room {}: {} vs {brute}", i + 1, u[0]);
        }
    }
}

#[test]
fn free_weights_form_a_partition() {
    let sys = average_band();
    let report = compute_report(&sys, BackendChoice::Fixed(Backend::Sos), &Default::default()).unwrap();
    let eta = vec![ClassKFunction::linear(ETA_GAIN)];
    let alpha = rsi_core::synth::WeightMatrix::for_system(&sys).unwrap();
    let opts = QpFilterOptions {
        alpha_as_variables: true,
        ..Default::default()
    };
    let filter = QpFilter::new(&sys, &report, &eta, &alpha, &[], &opts).unwrap();
    let out = filter.solve(&[15.2, 15.1, 15.3]).unwrap();
    let w = out.alpha.unwrap();
    let total: f64 = w.iter().map(|row| row[0]).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(w.iter().all(|row| (-1e-9..=1.0 + 1e-9).contains(&row[0])));
    assert!(out.slacks.iter().all(|(_, s)| *s >= -1e-8));
}

#[test]
fn sweep_stops_within_its_iteration_bound() {
    let sys = average_band();
    let mut opts = casestudy::run_options(Scenario::AverageBand);
    opts.eta = vec![ClassKFunction::linear(1.0)];
    let (eta, alpha) = (opts.eta_for(&sys).unwrap(), opts.alpha_for(&sys).unwrap());
    let eps = 0.25;
    match ck_sweep(&sys, 0, eps, &eta, &alpha, &opts.rsi_options(), &opts.synth_options()) {
        Err(SynthError::NotFeasibleOnAnyShrunkSet { c_bar, iterations, .. }) => {
            assert!((c_bar - 6.25).abs() < 1e-9);
            assert!(iterations <= (c_bar / eps).ceil() as usize);
        }
        Ok(r) => assert!(r.iterations <= (r.c_bar / eps).ceil() as usize),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn sweep_rejects_a_nonpositive_step() {
    let sys = average_band();
    let opts = casestudy::run_options(Scenario::AverageBand);
    let (eta, alpha) = (opts.eta_for(&sys).unwrap(), opts.alpha_for(&sys).unwrap());
    let r = ck_sweep(&sys, 0, 0.0, &eta, &alpha, &opts.rsi_options(), &opts.synth_options());
    assert!(matches!(r, Err(SynthError::Invalid(_))));
}

#[test]
fn threshold_bisection_finds_a_step_change() {
    let r = infeasibility_threshold(|v| Ok(v < 3.0), 0.0, 10.0, 1e-4, 9).unwrap();
    assert!(r.monotone);
    assert!((r.threshold.unwrap() - 3.0).abs() <= 1e-4);
}

#[test]
fn attack_threshold_matches_the_coolest_neighbour_bound() {
    // At x1 = 16 with neighbours summing to 29, dx1/dt <= 0 needs
    // u1 <= (0.765 - 0.45 (29 - 32)) / 3.06.
    let analytic = (0.765 - 0.45 * (29.0 - 32.0)) / 3.06;
    let r = casestudy::attack_threshold(&ThresholdSearch::default()).unwrap();
    assert!(r.monotone);
    assert!((r.threshold.unwrap() - analytic).abs() < 5e-3, "{:?}", r.threshold);
}
