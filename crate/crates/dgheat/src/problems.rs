//! Manufactured solutions with analytically derived forcing.

use crate::spatial::{DomainKind, Point};
use std::f64::consts::PI;

type TimeSpace = fn(f64, Point) -> f64;
type TimeSpaceGrad = fn(f64, Point) -> Point;

/// An exact solution `u(t, x)` of the heat equation together with the data
/// that manufactures it: `f = d_t u - Lap u`, `u_0 = u(0, .)`.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub id: &'static str,
    pub domain: DomainKind,
    pub u: TimeSpace,
    pub u_t: TimeSpace,
    pub lap_u: TimeSpace,
    pub grad_u: TimeSpaceGrad,
    pub f: TimeSpace,
    /// Smoothness in time / space, informally: "smooth" problems admit any
    /// `(q, r)` order scan.
    pub regularity: &'static str,
}

impl ManufacturedProblem {
    pub fn u0(&self) -> impl Fn(Point) -> f64 + Sync + '_ {
        move |x| (self.u)(0.0, x)
    }

    /// Max residual `|d_t u - Lap u - f|` over a deterministic sample of
    /// space-time points; consistency check of the analytic derivatives.
    pub fn residual_spot_check(&self, samples: usize) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let t = rng.gen_range(0.01..1.0);
            let x = match self.domain {
                DomainKind::UnitInterval => [rng.gen_range(0.0..1.0), 0.0],
                DomainKind::UnitSquare => [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)],
            };
            let res = (self.u_t)(t, x) - (self.lap_u)(t, x) - (self.f)(t, x);
            worst = worst.max(res.abs());
        }
        worst
    }
}

/// `u = sin(pi x) e^{-t}` on the unit interval.
pub fn sin_heat_1d() -> ManufacturedProblem {
    ManufacturedProblem {
        id: "sin_heat_1d",
        domain: DomainKind::UnitInterval,
        u: |t, x| (PI * x[0]).sin() * (-t).exp(),
        u_t: |t, x| -(PI * x[0]).sin() * (-t).exp(),
        lap_u: |t, x| -PI * PI * (PI * x[0]).sin() * (-t).exp(),
        grad_u: |t, x| [PI * (PI * x[0]).cos() * (-t).exp(), 0.0],
        f: |t, x| (PI * PI - 1.0) * (PI * x[0]).sin() * (-t).exp(),
        regularity: "smooth",
    }
}

/// `u = sin(pi x) sin(pi y) e^{-t}` on the unit square.
pub fn sin_heat_2d() -> ManufacturedProblem {
    ManufacturedProblem {
        id: "sin_heat_2d",
        domain: DomainKind::UnitSquare,
        u: |t, x| (PI * x[0]).sin() * (PI * x[1]).sin() * (-t).exp(),
        u_t: |t, x| -(PI * x[0]).sin() * (PI * x[1]).sin() * (-t).exp(),
        lap_u: |t, x| -2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin() * (-t).exp(),
        grad_u: |t, x| {
            let e = (-t).exp();
            [
                PI * (PI * x[0]).cos() * (PI * x[1]).sin() * e,
                PI * (PI * x[0]).sin() * (PI * x[1]).cos() * e,
            ]
        },
        f: |t, x| (2.0 * PI * PI - 1.0) * (PI * x[0]).sin() * (PI * x[1]).sin() * (-t).exp(),
        regularity: "smooth",
    }
}

pub fn by_id(id: &str) -> Option<ManufacturedProblem> {
    match id {
        "sin_heat_1d" => Some(sin_heat_1d()),
        "sin_heat_2d" => Some(sin_heat_2d()),
        _ => None,
    }
}

pub const ALL_IDS: &[&str] = &["sin_heat_1d", "sin_heat_2d"];
