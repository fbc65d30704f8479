mod common;

use rsi_core::casestudy::{self, RoomParameters, Scenario};
use rsi_core::poly::{Polynomial, Scope};
use rsi_core::sim::{
    self, run_episode, AdversaryModel, Controller, EpisodeConfig, EpisodeStatus, Field, Scheme, SimError,
};
use rsi_core::system::InterconnectedSystem;

/// Two decoupled nodes with `x' = -x` and no input authority.
fn decay() -> InterconnectedSystem {
    let s = Scope::states_and_inputs(2, 2);
    let node = |i| {
        common::scalar_subsystem(
            &s,
            common::x(&s, i).scale(-1.0),
            Polynomial::zero(&s),
            Polynomial::zero(&s),
            0.0,
            0.0,
        )
    };
    let h = &Polynomial::constant(&s, 1.0) - &common::x(&s, 0).powi(2);
    InterconnectedSystem::new(vec![node(0), node(1)], vec![0], vec![1], vec![h], vec![(-1.0, 1.0); 2]).unwrap()
}

fn error_at_one(scheme: Scheme, steps: usize) -> f64 {
    let field = Field::new(&decay()).unwrap();
    let mut x = vec![1.0, 1.0];
    for _ in 0..steps {
        x = sim::step(&field, &x, &[0.0, 0.0], 1.0 / steps as f64, scheme);
    }
    (x[0] - (-1.0f64).exp()).abs()
}

#[test]
fn rk4_converges_at_fourth_order() {
    for n in [10, 20, 40] {
        let order = (error_at_one(Scheme::Rk4, n) / error_at_one(Scheme::Rk4, 2 * n)).log2();
        assert!((3.8..=4.2).contains(&order), "order {order} at {n} steps");
    }
}

#[test]
fn euler_converges_at_first_order() {
    let order = (error_at_one(Scheme::Euler, 100) / error_at_one(Scheme::Euler, 200)).log2();
    assert!((0.9..=1.1).contains(&order), "order {order}");
}

fn rooms() -> InterconnectedSystem {
    casestudy::three_rooms(&RoomParameters::default(), Scenario::AverageBand, None)
}

#[test]
fn seeded_episodes_are_reproducible() {
    let sys = rooms();
    let x0 = casestudy::initial_state(Scenario::AverageBand);
    let cfg = EpisodeConfig::default();
    let adv = AdversaryModel::UniformRandom { seed: 9 };
    let a = run_episode(&sys, &Controller::Zero, &adv, &x0, &cfg).unwrap();
    let b = run_episode(&sys, &Controller::Zero, &adv, &x0, &cfg).unwrap();
    assert_eq!(a, b);
    let c = run_episode(
        &sys,
        &Controller::Zero,
        &AdversaryModel::UniformRandom { seed: 10 },
        &x0,
        &cfg,
    )
    .unwrap();
    assert_ne!(a.inputs, c.inputs);
}

#[test]
fn uncontrolled_rooms_leave_the_band_under_the_greedy_attack() {
    let sys = rooms();
    let x0 = casestudy::initial_state(Scenario::AverageBand);
    let traj = run_episode(
        &sys,
        &Controller::Zero,
        &AdversaryModel::GreedyWorst,
        &x0,
        &EpisodeConfig::default(),
    )
    .unwrap();
    assert!(traj.violated());
    assert_eq!(traj.status, EpisodeStatus::Completed);
    // The greedy attacker switches the room-1 heater off.
    assert!(traj.inputs.iter().all(|u| u[0] == 0.0));
}

#[test]
fn corner_adversaries_cover_every_channel_combination() {
    let corners = AdversaryModel::all_corners(&rooms());
    assert_eq!(
        corners,
        vec![
            AdversaryModel::ConstantCorner(vec![false]),
            AdversaryModel::ConstantCorner(vec![true])
        ]
    );
}

#[test]
fn csv_round_trip_preserves_the_trajectory() {
    let sys = rooms();
    let x0 = casestudy::initial_state(Scenario::AverageBand);
    let cfg = EpisodeConfig {
        steps: 7,
        scheme: Scheme::Rk4,
        ..EpisodeConfig::default()
    };
    let traj = run_episode(
        &sys,
        &Controller::Zero,
        &AdversaryModel::UniformRandom { seed: 3 },
        &x0,
        &cfg,
    )
    .unwrap();
    let mut buf = Vec::new();
    sim::write_csv(&traj, &mut buf).unwrap();
    let table = sim::read_csv(buf.as_slice()).unwrap();
    assert_eq!(table.rows.len(), cfg.steps + 1);
    let x2 = table.column("x2").unwrap();
    for (t, x) in traj.states.iter().enumerate() {
        assert_eq!(x2[t], x[1]);
    }
    let h1 = table.column("h1").unwrap();
    assert_eq!(h1[3], traj.safety[3][0]);
    assert_eq!(table.column("u1").unwrap()[0], traj.inputs[0][0]);
}

#[test]
fn invalid_settings_are_rejected() {
    let sys = rooms();
    let cfg = EpisodeConfig {
        dt: 0.0,
        ..EpisodeConfig::default()
    };
    let x0 = casestudy::initial_state(Scenario::AverageBand);
    let r = run_episode(&sys, &Controller::Zero, &AdversaryModel::GreedyWorst, &x0, &cfg);
    assert!(matches!(r, Err(SimError::Invalid(_))));
    let r = run_episode(
        &sys,
        &Controller::Zero,
        &AdversaryModel::GreedyWorst,
        &[15.0],
        &EpisodeConfig::default(),
    );
    assert!(matches!(r, Err(SimError::Invalid(_))));
    let r = run_episode(
        &sys,
        &Controller::Zero,
        &AdversaryModel::ConstantCorner(vec![true, false]),
        &x0,
        &EpisodeConfig::default(),
    );
    assert!(matches!(r, Err(SimError::Invalid(_))));
}
