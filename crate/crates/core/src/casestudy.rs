//! The packaged temperature-regulation example: three rooms on a ring, each
//! heated by its own controller, with room 1 compromised.

use crate::io::{RunOptions, SystemFile};
use crate::poly::{PolyMatrix, PolyVector, Polynomial, Scope, VarId};
use crate::synth::{compatible, infeasibility_threshold, ClassKFunction, LocalConstraint, SynthError, ThresholdResult};
use crate::system::{InterconnectedSystem, SubsystemModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomParameters {
    /// Heat exchange with each neighbour.
    pub w: f64,
    /// Heat exchange with the outside.
    pub y: f64,
    /// Heater gain.
    pub z: f64,
    pub delta: f64,
    pub t_outside: f64,
    pub t_heater: f64,
}

impl Default for RoomParameters {
    fn default() -> Self {
        RoomParameters {
            w: 0.45,
            y: 0.045,
            z: 0.09,
            delta: 0.1,
            t_outside: -1.0,
            t_heater: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// One constraint on the average temperature.
    AverageBand,
    /// One band per room.
    RoomBands,
}

impl Scenario {
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            1 => Some(Scenario::AverageBand),
            2 => Some(Scenario::RoomBands),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Scenario::AverageBand => 1,
            Scenario::RoomBands => 2,
        }
    }
}

pub const ROOMS: usize = 3;
pub const AVERAGE_BAND: (f64, f64) = (15.0, 20.0);
pub const ROOM_BANDS: [(f64, f64); ROOMS] = [(10.0, 16.0), (15.0, 22.0), (14.0, 25.0)];
pub const ATTACKED_BOX: (f64, f64) = (0.0, 0.6);
pub const PROTECTED_BOX: (f64, f64) = (-2.0, 2.0);

/// `(x - lo)(hi - x)` for a linear form `x`.
pub fn band(x: &Polynomial, lo: f64, hi: f64) -> Polynomial {
    &x.add_constant(-lo) * &(-x).add_constant(hi)
}

/// Builds the three-room system; `attacked_hi` overrides the upper input bound of room 1.
pub fn three_rooms(params: &RoomParameters, scenario: Scenario, attacked_hi: Option<f64>) -> InterconnectedSystem {
    let s = Scope::states_and_inputs(ROOMS, ROOMS);
    let x = |i: usize| Polynomial::var(&s, VarId::state(i)).expect("in scope");
    let inv = 1.0 / params.delta;
    let mut subsystems = Vec::with_capacity(ROOMS);
    for i in 0..ROOMS {
        let next = x((i + 1) % ROOMS);
        let prev = x((i + ROOMS - 1) % ROOMS);
        let own = x(i);
        let f_slf = own
            .scale(-params.y)
            .add_constant(params.y * params.t_outside)
            .scale(inv);
        let g_slf = own.scale(-params.z).add_constant(params.z * params.t_heater).scale(inv);
        let f_cpl = (&(&next + &prev) - &own.scale(2.0)).scale(params.w * inv);
        let (lo, hi) = if i == 0 {
            (ATTACKED_BOX.0, attacked_hi.unwrap_or(ATTACKED_BOX.1))
        } else {
            PROTECTED_BOX
        };
        subsystems.push(SubsystemModel {
            n: 1,
            r: 1,
            f_slf: PolyVector::new(&s, vec![f_slf]).expect("scope"),
            g_slf: PolyMatrix::new(&s, 1, 1, vec![g_slf]).expect("scope"),
            f_cpl: PolyVector::new(&s, vec![f_cpl]).expect("scope"),
            g_cpl: PolyMatrix::zeros(&s, 1, 1),
            input_lo: vec![lo],
            input_hi: vec![hi],
        });
    }
    let (safety, bbox) = match scenario {
        Scenario::AverageBand => {
            let mean = (&(&x(0) + &x(1)) + &x(2)).scale(1.0 / 3.0);
            (
                vec![band(&mean, AVERAGE_BAND.0, AVERAGE_BAND.1)],
                vec![AVERAGE_BAND; ROOMS],
            )
        }
        Scenario::RoomBands => (
            (0..ROOMS)
                .map(|i| band(&x(i), ROOM_BANDS[i].0, ROOM_BANDS[i].1))
                .collect(),
            ROOM_BANDS.to_vec(),
        ),
    };
    InterconnectedSystem::new(subsystems, vec![1, 2], vec![0], safety, bbox).expect("well-formed")
}

/// Initial state used in simulations.
pub fn initial_state(scenario: Scenario) -> Vec<f64> {
    match scenario {
        Scenario::AverageBand => vec![AVERAGE_BAND.0; ROOMS],
        Scenario::RoomBands => ROOM_BANDS.iter().map(|b| b.0).collect(),
    }
}

/// Gain of the linear class-K function used for every constraint.
pub const ETA_GAIN: f64 = 10.0;
/// Gain of the outer class-K function on the derived barriers of room-local bands.
pub const OUTER_GAIN: f64 = 30.0;

pub fn run_options(scenario: Scenario) -> RunOptions {
    RunOptions {
        eta: vec![ClassKFunction::linear(ETA_GAIN)],
        local_outer: match scenario {
            Scenario::AverageBand => None,
            Scenario::RoomBands => Some(ClassKFunction::linear(OUTER_GAIN)),
        },
        x0: Some(initial_state(scenario)),
        ..RunOptions::default()
    }
}

pub fn system_file(scenario: Scenario) -> SystemFile {
    SystemFile::from_system(
        &three_rooms(&RoomParameters::default(), scenario, None),
        run_options(scenario),
    )
}

/// The shipped JSON description of a scenario.
pub fn packaged(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::AverageBand => include_str!("../data/scenario1.json"),
        Scenario::RoomBands => include_str!("../data/scenario2.json"),
    }
}

/// Settings of the search for the attacked-input bound beyond which the first
/// room band can no longer be defended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub scan_points: usize,
    pub resolution: usize,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            lo: ATTACKED_BOX.1,
            hi: 10.0,
            tol: 1e-3,
            scan_points: 9,
            resolution: 21,
        }
    }
}

/// Bisects the upper bound of room 1's input in the room-band scenario,
/// testing whether the other rooms can still keep room 1 inside its band.
pub fn attack_threshold(search: &ThresholdSearch) -> Result<ThresholdResult, SynthError> {
    let params = RoomParameters::default();
    infeasibility_threshold(
        |hi| {
            let sys = three_rooms(&params, Scenario::RoomBands, Some(hi));
            let local = LocalConstraint::new(
                &sys,
                0,
                ClassKFunction::linear(ETA_GAIN),
                ClassKFunction::linear(OUTER_GAIN),
            )?;
            compatible(&sys, &local, search.resolution)
        },
        search.lo,
        search.hi,
        search.tol,
        search.scan_points,
    )
}
