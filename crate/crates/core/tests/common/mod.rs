//! Test systems shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use rand::Rng;
use rsi_core::poly::{Monomial, PolyMatrix, PolyVector, Polynomial, Scope, VarId};
use rsi_core::system::{InterconnectedSystem, SubsystemModel};

pub fn x(s: &Scope, i: usize) -> Polynomial {
    Polynomial::var(s, VarId::state(i)).unwrap()
}

/// `c + sum coef * x_i`.
pub fn affine(s: &Scope, c: f64, coefs: &[(usize, f64)]) -> Polynomial {
    let terms = coefs
        .iter()
        .map(|&(i, a)| (Monomial::var(VarId::state(i), 1), a))
        .chain(std::iter::once((Monomial::one(), c)));
    Polynomial::from_terms(s, terms).unwrap()
}

/// One scalar state and one scalar input per sub-system.
pub fn scalar_subsystem(
    s: &Scope,
    f_slf: Polynomial,
    g_slf: Polynomial,
    f_cpl: Polynomial,
    lo: f64,
    hi: f64,
) -> SubsystemModel {
    SubsystemModel {
        n: 1,
        r: 1,
        f_slf: PolyVector::new(s, vec![f_slf]).unwrap(),
        g_slf: PolyMatrix::new(s, 1, 1, vec![g_slf]).unwrap(),
        f_cpl: PolyVector::new(s, vec![f_cpl]).unwrap(),
        g_cpl: PolyMatrix::zeros(s, 1, 1),
        input_lo: vec![lo],
        input_hi: vec![hi],
    }
}

/// Synchronization network with three scalar nodes; nodes 1 and 2 are protected.
pub struct Sync {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl Sync {
    pub fn standard() -> Self {
        let off = [[0.0, 1.0, 0.5], [1.0, 0.0, 1.5], [0.5, 1.5, 0.0]];
        let mut a = off;
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = -off[i].iter().sum::<f64>();
        }
        Sync {
            a,
            b: [1.0, 0.8, 1.2],
            c: [1.0, 2.0, 0.5],
        }
    }

    pub fn system(&self) -> InterconnectedSystem {
        let s = Scope::states_and_inputs(3, 3);
        let subsystems = (0..3)
            .map(|i| {
                let cpl: Vec<(usize, f64)> = (0..3).filter(|&j| j != i).map(|j| (j, self.a[i][j])).collect();
                scalar_subsystem(
                    &s,
                    affine(&s, 0.0, &[(i, self.a[i][i])]),
                    Polynomial::constant(&s, self.b[i]),
                    affine(&s, 0.0, &cpl),
                    -1.0,
                    1.0,
                )
            })
            .collect();
        let mut h = Polynomial::constant(&s, 1.0);
        for i in 0..3 {
            h = &h - &x(&s, i).powi(2).scale(self.c[i]);
        }
        let bbox = self.c.iter().map(|c| (-1.0 / c.sqrt(), 1.0 / c.sqrt())).collect();
        InterconnectedSystem::new(subsystems, vec![0, 1], vec![2], vec![h], bbox).unwrap()
    }

    /// Closed-form intrinsic index of the vulnerable node.
    pub fn gamma(&self) -> f64 {
        -self.b[2].powi(2) * self.c[2] / (2.0 * self.a[2][2].abs())
    }

    /// Closed-form coupled index; the vulnerable set is the single node 3.
    pub fn beta(&self) -> f64 {
        let (cmax, cmin) = (self.c[2], self.c[2]);
        -(cmax / cmin) * self.a[2][2].abs()
    }
}

fn random_poly(rng: &mut impl Rng, s: &Scope, vars: &[usize], max_degree: u32, terms: usize, scale: f64) -> Polynomial {
    let mut out = Vec::new();
    for _ in 0..terms {
        let mut m = Monomial::one();
        let d = rng.random_range(1..=max_degree);
        for _ in 0..d {
            let v = vars[rng.random_range(0..vars.len())];
            m = m.mul(&Monomial::var(VarId::state(v), 1));
        }
        out.push((m, rng.random_range(-scale..scale)));
    }
    Polynomial::from_terms(s, out).unwrap()
}

/// Random polynomial network of 2 to 4 scalar nodes, the last one or two vulnerable,
/// with an ellipsoidal safe set; every index integrand has degree at most 4.
pub fn random_polynomial_system(rng: &mut impl Rng) -> InterconnectedSystem {
    let n = rng.random_range(2..=4usize);
    let s = Scope::states_and_inputs(n, n);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let subsystems = (0..n)
        .map(|i| {
            let own = random_poly(rng, &s, &[i], 3, 2, 1.0);
            let f_slf = &own - &x(&s, i).scale(rng.random_range(0.5..2.0));
            let g_slf = Polynomial::constant(&s, rng.random_range(0.5..1.5))
                .checked_add(&random_poly(rng, &s, &[i], 1, 1, 0.5))
                .unwrap();
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let f_cpl = random_poly(rng, &s, &others, 2, 3, 1.0);
            let lo = rng.random_range(-1.5..-0.5);
            scalar_subsystem(&s, f_slf, g_slf, f_cpl, lo, rng.random_range(0.5..1.5))
        })
        .collect();
    let mut h = Polynomial::constant(&s, 1.0);
    for (i, ci) in c.iter().enumerate() {
        h = &h - &x(&s, i).powi(2).scale(*ci);
    }
    let bbox = c.iter().map(|ci| (-1.0 / ci.sqrt(), 1.0 / ci.sqrt())).collect();
    let vulnerable: Vec<usize> = if n > 2 && rng.random_bool(0.5) {
        vec![n - 2, n - 1]
    } else {
        vec![n - 1]
    };
    let protected = (0..n).filter(|i| !vulnerable.contains(i)).collect();
    InterconnectedSystem::new(subsystems, protected, vulnerable, vec![h], bbox).unwrap()
}

/// Random LTI network on `[-1, 1]^3` with one or two half-plane constraints
/// whose polytope vertices lie on the 21-point grid; the polytope is never empty.
pub fn random_lti_system(rng: &mut impl Rng) -> InterconnectedSystem {
    loop {
        let sys = draw_lti_system(rng);
        let n = sys.num_states() + sys.num_inputs();
        let nonempty = grid(sys.bounding_box(), 21).into_iter().any(|mut p| {
            p.resize(n, 0.0);
            sys.safety().iter().all(|h| h.eval_dense(&p) >= 0.0)
        });
        if nonempty {
            return sys;
        }
    }
}

fn draw_lti_system(rng: &mut impl Rng) -> InterconnectedSystem {
    let n = 3;
    let s = Scope::states_and_inputs(n, n);
    let step = |rng: &mut _| (rng_int(rng, -10, 10) as f64) / 10.0;
    let subsystems = (0..n)
        .map(|i| {
            let cpl: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, step(rng))).collect();
            let lo = -(rng_int(rng, 1, 10) as f64) / 10.0;
            let hi = rng_int(rng, 1, 10) as f64 / 10.0;
            scalar_subsystem(
                &s,
                affine(&s, step(rng), &[(i, step(rng) - 1.0)]),
                Polynomial::constant(&s, step(rng)),
                affine(&s, 0.0, &cpl),
                lo,
                hi,
            )
        })
        .collect();
    let count = rng_int(rng, 1, 2);
    let mut safety = Vec::new();
    for _ in 0..count {
        let i = rng_int(rng, 0, 2) as usize;
        let j = (i + rng_int(rng, 1, 2) as usize) % n;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        safety.push(match rng_int(rng, 0, 2) {
            0 => affine(&s, rng_int(rng, -8, 8) as f64 / 10.0, &[(j, sign)]),
            1 => affine(&s, 0.0, &[(i, 1.0), (j, -1.0)]),
            _ => affine(&s, 0.0, &[(i, sign), (j, sign)]),
        });
    }
    let vulnerable = if rng.random_bool(0.5) { vec![2] } else { vec![1, 2] };
    let protected = (0..n).filter(|i| !vulnerable.contains(i)).collect();
    InterconnectedSystem::new(subsystems, protected, vulnerable, safety, vec![(-1.0, 1.0); n]).unwrap()
}

fn rng_int(rng: &mut impl Rng, lo: i32, hi: i32) -> i32 {
    rng.random_range(lo..=hi)
}

/// Random network whose index integrands are monotone in every variable over
/// a positive box contained in the safe half-space.
pub fn random_monotone_system(rng: &mut impl Rng) -> InterconnectedSystem {
    let n = rng.random_range(2..=3usize);
    let s = Scope::states_and_inputs(n, n);
    let subsystems = (0..n)
        .map(|i| {
            let own =
                &x(&s, i).scale(-rng.random_range(0.2..2.0)) - &x(&s, i).powi(3).scale(rng.random_range(0.0..1.0));
            let mut f_cpl = Polynomial::zero(&s);
            for j in (0..n).filter(|&j| j != i) {
                f_cpl = &f_cpl + &x(&s, j).scale(rng.random_range(0.0..1.0));
                f_cpl = &f_cpl + &x(&s, j).powi(2).scale(rng.random_range(0.0..0.5));
            }
            let lo = rng.random_range(-1.0..0.0);
            scalar_subsystem(
                &s,
                own,
                Polynomial::constant(&s, rng.random_range(0.2..1.5)),
                f_cpl,
                lo,
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    let weights: Vec<(usize, f64)> = (0..n).map(|i| (i, rng.random_range(0.1..1.0))).collect();
    let h = affine(&s, rng.random_range(0.0..1.0), &weights);
    let bbox = (0..n)
        .map(|_| {
            let lo = rng.random_range(0.1..0.5);
            (lo, lo + rng.random_range(0.3..1.0))
        })
        .collect();
    InterconnectedSystem::new(subsystems, (0..n - 1).collect(), vec![n - 1], vec![h], bbox).unwrap()
}

/// Every point of a `res`-per-axis grid over `bounds`.
pub fn grid(bounds: &[(f64, f64)], res: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in bounds {
        let axis: Vec<f64> = (0..res).map(|t| lo + (hi - lo) * t as f64 / (res - 1) as f64).collect();
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}
