//! Generic particle swarm machinery: the inertia-weighted velocity update,
//! rotation-invariant spherical sampling, and the charged-swarm repulsion term.
//!
//! Randomised operations come in two flavours: one that draws from an
//! [`Rng`], and a `*_with` form that takes the draws explicitly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng;

/// Best position a particle has visited, with its fitness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonalBest {
    pub position: Vec2,
    pub fitness: f64,
}

/// One particle (drone) of the swarm.
///
/// `personal_best` is only kept by the reference optimizers; the drone-swarm
/// strategies never remember past positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub index: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub personal_best: Option<PersonalBest>,
}

impl Particle {
    pub fn new(index: usize, position: Vec2) -> Self {
        Self {
            index,
            position,
            velocity: Vec2::ZERO,
            personal_best: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    /// Inertia weight.
    pub omega: f64,
    /// Cognitive factor.
    pub cognitive: f64,
    /// Social factor.
    pub social: f64,
    /// Radius sharpness exponent for spherical sampling.
    pub sharpness: u32,
    /// Charge shared by all particles.
    pub charge: f64,
    /// Repulsion cutoff distance.
    pub d_max: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            cognitive: 2.0,
            social: 2.0,
            sharpness: 3,
            charge: 1.0,
            d_max: 10.0,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.sharpness < 1 {
            return Err(Error::config("sharpness exponent must be >= 1"));
        }
        if !(self.d_max > 0.0) {
            return Err(Error::config("d_max must be positive"));
        }
        if !(self.charge >= 0.0) {
            return Err(Error::config("charge must be non-negative"));
        }
        if !(self.cognitive >= 0.0 && self.social >= 0.0) {
            return Err(Error::config(
                "cognitive and social factors must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Standard velocity update with per-dimension random weights drawn from `rng`.
pub fn pso_velocity_update<R: Rng + ?Sized>(
    particle: &Particle,
    global_best: Vec2,
    params: &PsoParams,
    rng: &mut R,
) -> Result<Vec2> {
    let r_c = Vec2::new(rng.gen(), rng.gen());
    let r_s = Vec2::new(rng.gen(), rng.gen());
    pso_velocity_with(particle, global_best, params, r_c, r_s)
}

/// `ω·v + c_c·R_c⊙(p − x) + c_s·R_s⊙(g − x)` with the draws `r_c`, `r_s` given.
pub fn pso_velocity_with(
    particle: &Particle,
    global_best: Vec2,
    params: &PsoParams,
    r_c: Vec2,
    r_s: Vec2,
) -> Result<Vec2> {
    let best = particle
        .personal_best
        .ok_or(Error::MissingPersonalBest(particle.index))?;
    let x = particle.position;
    Ok(params.omega * particle.velocity
        + params.cognitive * r_c.hadamard(best.position - x)
        + params.social * r_s.hadamard(global_best - x))
}

pub fn pso_position_update(position: Vec2, velocity: Vec2) -> Vec2 {
    position + velocity
}

/// Attraction towards a random point in the ball of radius
/// `‖attractor − current‖` around `attractor`.
pub fn sphere_sample<R: Rng + ?Sized>(
    attractor: Vec2,
    current: Vec2,
    coefficient: f64,
    sharpness: u32,
    rng: &mut R,
) -> Vec2 {
    let radius_draw = rng.gen::<f64>();
    let direction = rng::unit_vector(rng);
    sphere_sample_with(
        attractor,
        current,
        coefficient,
        sharpness,
        radius_draw,
        direction,
    )
}

/// `coefficient·(R^m·‖a − x‖·u + a − x)` with `R` and unit `u` given.
pub fn sphere_sample_with(
    attractor: Vec2,
    current: Vec2,
    coefficient: f64,
    sharpness: u32,
    radius_draw: f64,
    direction: Vec2,
) -> Vec2 {
    let offset = attractor - current;
    let radius = radius_draw.powi(sharpness as i32) * offset.norm();
    coefficient * (radius * direction + offset)
}

/// Coulomb-like repulsion acting on particle `i` from the rest of the swarm.
///
/// Pairs that coincide or are at least `d_max` apart contribute nothing.
pub fn cpso_repulsion(i: usize, swarm: &[Particle], params: &PsoParams) -> Vec2 {
    let xi = swarm[i].position;
    let q = params.charge;
    swarm
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .fold(Vec2::ZERO, |acc, (_, other)| {
            let d = xi - other.position;
            let dist = d.norm();
            if dist > 0.0 && dist < params.d_max {
                acc + (q * q / (dist * dist)) * (d / dist)
            } else {
                acc
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_best(x: Vec2, v: Vec2, best: Vec2) -> Particle {
        Particle {
            index: 0,
            position: x,
            velocity: v,
            personal_best: Some(PersonalBest {
                position: best,
                fitness: 0.0,
            }),
        }
    }

    #[test]
    fn velocity_is_zero_when_everything_coincides() {
        let p = with_best(Vec2::ZERO, Vec2::ZERO, Vec2::ZERO);
        let mut rng = rng::stream(1, 0);
        let v = pso_velocity_update(&p, Vec2::ZERO, &PsoParams::default(), &mut rng).unwrap();
        assert_eq!(v, Vec2::ZERO);
    }

    #[test]
    fn velocity_with_pinned_draws() {
        let params = PsoParams {
            omega: 1.0,
            cognitive: 2.0,
            social: 2.0,
            ..PsoParams::default()
        };
        let p = with_best(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        let half = Vec2::new(0.5, 0.5);
        let v = pso_velocity_with(&p, Vec2::new(2.0, 0.0), &params, half, half).unwrap();
        assert_eq!(v, Vec2::new(4.0, 0.0));

        let params = PsoParams {
            omega: 0.0,
            cognitive: 0.0,
            social: 2.0,
            ..PsoParams::default()
        };
        let p = with_best(Vec2::ZERO, Vec2::new(9.0, 9.0), Vec2::new(-4.0, 1.0));
        let ones = Vec2::new(1.0, 1.0);
        let v = pso_velocity_with(&p, Vec2::new(3.0, 4.0), &params, half, ones).unwrap();
        assert_eq!(v, Vec2::new(6.0, 8.0));
    }

    #[test]
    fn velocity_requires_personal_best() {
        let p = Particle::new(4, Vec2::ZERO);
        let mut rng = rng::stream(1, 0);
        let err = pso_velocity_update(&p, Vec2::ZERO, &PsoParams::default(), &mut rng);
        assert!(matches!(err, Err(Error::MissingPersonalBest(4))));
    }

    #[test]
    fn position_update_adds() {
        assert_eq!(
            pso_position_update(Vec2::new(1.0, 2.0), Vec2::ZERO),
            Vec2::new(1.0, 2.0)
        );
        assert_eq!(
            pso_position_update(Vec2::ZERO, Vec2::new(3.0, -4.0)),
            Vec2::new(3.0, -4.0)
        );
        assert_eq!(
            pso_position_update(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)),
            Vec2::new(2.0, 2.0)
        );
    }

    #[test]
    fn sphere_sample_degenerate_ball() {
        let p = Vec2::new(5.0, 5.0);
        let mut rng = rng::stream(3, 0);
        for _ in 0..10 {
            assert_eq!(sphere_sample(p, p, 1.7, 3, &mut rng), Vec2::ZERO);
        }
    }

    #[test]
    fn sphere_sample_zero_radius_draw_is_pure_attraction() {
        let v = sphere_sample_with(
            Vec2::new(1.0, 0.0),
            Vec2::ZERO,
            2.5,
            3,
            0.0,
            Vec2::from_angle(1.0),
        );
        assert_eq!(v, Vec2::new(2.5, 0.0));
    }

    #[test]
    fn sphere_sample_median_radius() {
        // Median of R^3 for uniform R is 0.5^3.
        let attractor = Vec2::new(1.0, 0.0);
        let mut rng = rng::stream(42, 0);
        let mut radii: Vec<f64> = (0..10_000)
            .map(|_| (sphere_sample(attractor, Vec2::ZERO, 1.0, 3, &mut rng) - attractor).norm())
            .collect();
        radii.sort_by(f64::total_cmp);
        let median = 0.5 * (radii[4999] + radii[5000]);
        assert!((median - 0.125).abs() < 0.02, "median {median}");
    }

    #[test]
    fn repulsion_cases() {
        let params = PsoParams {
            charge: 1.0,
            d_max: 10.0,
            ..PsoParams::default()
        };
        let coincident = [Particle::new(0, Vec2::ZERO), Particle::new(1, Vec2::ZERO)];
        assert_eq!(cpso_repulsion(0, &coincident, &params), Vec2::ZERO);

        let far = [
            Particle::new(0, Vec2::ZERO),
            Particle::new(1, Vec2::new(10.0, 0.0)),
        ];
        assert_eq!(cpso_repulsion(0, &far, &params), Vec2::ZERO);

        let unit = [
            Particle::new(0, Vec2::new(1.0, 0.0)),
            Particle::new(1, Vec2::ZERO),
        ];
        assert_eq!(cpso_repulsion(0, &unit, &params), Vec2::new(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn sphere_sample_stays_in_ball(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            cx in -50.0..50.0f64, cy in -50.0..50.0f64,
            m in 1u32..6, seed in any::<u64>(),
        ) {
            let a = Vec2::new(ax, ay);
            let c = Vec2::new(cx, cy);
            let mut rng = rng::stream(seed, 0);
            let v = sphere_sample(a, c, 1.0, m, &mut rng);
            let offset = (c + v) - a;
            prop_assert!(offset.norm() <= a.distance(c) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn repulsion_is_antisymmetric_for_pairs(
            ax in -20.0..20.0f64, ay in -20.0..20.0f64,
            bx in -20.0..20.0f64, by in -20.0..20.0f64,
            q in 0.0..3.0f64,
        ) {
            let params = PsoParams { charge: q, d_max: 15.0, ..PsoParams::default() };
            let swarm = [Particle::new(0, Vec2::new(ax, ay)), Particle::new(1, Vec2::new(bx, by))];
            let fi = cpso_repulsion(0, &swarm, &params);
            let fj = cpso_repulsion(1, &swarm, &params);
            prop_assert_eq!(fi, -fj);
            prop_assert!(fi.is_finite());
        }

        #[test]
        fn degenerate_closed_form(
            x in -20.0..20.0f64, y in -20.0..20.0f64,
            gx in -20.0..20.0f64, gy in -20.0..20.0f64,
            cs in 0.0..4.0f64,
        ) {
            let params = PsoParams { omega: 0.0, cognitive: 0.0, social: cs, ..PsoParams::default() };
            let p = with_best(Vec2::new(x, y), Vec2::new(1.0, -1.0), Vec2::new(3.0, 3.0));
            let g = Vec2::new(gx, gy);
            let v = pso_velocity_with(&p, g, &params, Vec2::new(0.3, 0.9), Vec2::new(1.0, 1.0)).unwrap();
            prop_assert_eq!(v, cs * (g - p.position));
        }
    }
}
