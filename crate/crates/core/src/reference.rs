//! Box-constrained reference optimizers built from the generic swarm
//! operations: standard, charged, spherical-sampling and adaptive PSO.
//!
//! These keep personal bests and a cross-iteration global best, unlike the
//! drone-swarm strategies in [`crate::stepper`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adapt::{self, ApsoParams, EvolutionaryState, StateMapping};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::SwarmRng;
use crate::swarm::{self, Particle, PersonalBest, PsoParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceVariant {
    Standard,
    Charged,
    Spherical,
    Adaptive,
}

#[derive(Clone, Debug)]
pub struct ReferencePso {
    pub variant: ReferenceVariant,
    pub params: PsoParams,
    pub apso: ApsoParams,
    pub n: usize,
    pub lower: Vec2,
    pub upper: Vec2,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ReferenceResult {
    pub best: PersonalBest,
    /// Global best fitness after each iteration.
    pub trace: Vec<f64>,
    /// States visited by the adaptive variant.
    pub states: Vec<EvolutionaryState>,
}

impl ReferencePso {
    pub fn new(variant: ReferenceVariant, lower: Vec2, upper: Vec2) -> Self {
        Self {
            variant,
            params: PsoParams::default(),
            apso: ApsoParams::default(),
            n: 20,
            lower,
            upper,
            iterations: 200,
            seed: 0,
        }
    }

    fn clamp(&self, x: Vec2) -> Vec2 {
        Vec2::new(
            x.x.clamp(self.lower.x, self.upper.x),
            x.y.clamp(self.lower.y, self.upper.y),
        )
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.gen_range(self.lower.x..=self.upper.x),
            rng.gen_range(self.lower.y..=self.upper.y),
        )
    }

    /// Minimise `f` over the box.
    pub fn minimize(&self, mut f: impl FnMut(Vec2) -> f64) -> Result<ReferenceResult> {
        self.params.validate()?;
        if self.n < 2 {
            return Err(Error::DegenerateSwarm(self.n));
        }
        if !(self.lower.x < self.upper.x && self.lower.y < self.upper.y) {
            return Err(Error::config("empty search box"));
        }
        let mut rng = SwarmRng::new(self.seed, self.n);
        let mut init = rng.init_stream();
        let mut particles: Vec<Particle> = (0..self.n)
            .map(|i| {
                let x = self.random_point(&mut init);
                let mut p = Particle::new(i, x);
                p.personal_best = Some(PersonalBest {
                    position: x,
                    fitness: f(x),
                });
                p
            })
            .collect();
        let mut best = global_best(&particles);
        let mut params = self.params.clone();
        let mut prev_state = EvolutionaryState::Exploration;
        let mut trace = Vec::with_capacity(self.iterations);
        let mut states = Vec::new();

        for _ in 0..self.iterations {
            if self.variant == ReferenceVariant::Adaptive {
                let positions: Vec<Vec2> = particles.iter().map(|p| p.position).collect();
                let leader = best_current(&particles);
                let e_f = adapt::evolutionary_factor(&positions, leader)?;
                let state = adapt::classify_state(e_f, prev_state, StateMapping::OriginalApso);
                params.omega = adapt::adapt_inertia(e_f);
                let (c, s) =
                    adapt::apso_adapt_factors(state, params.cognitive, params.social, &self.apso);
                params.cognitive = c;
                params.social = s;
                if state == EvolutionaryState::Convergence {
                    let worst = worst_current(&particles);
                    let x = self.random_point(rng.swarm());
                    particles[worst].position = x;
                    particles[worst].velocity = Vec2::ZERO;
                }
                prev_state = state;
                states.push(state);
            }

            let snapshot = particles.clone();
            for p in particles.iter_mut() {
                let i = p.index;
                let v = match self.variant {
                    ReferenceVariant::Spherical => {
                        let pb = p.personal_best.ok_or(Error::MissingPersonalBest(i))?;
                        let r = rng.particle(i);
                        params.omega * p.velocity
                            + swarm::sphere_sample(
                                pb.position,
                                p.position,
                                params.cognitive,
                                params.sharpness,
                                r,
                            )
                            + swarm::sphere_sample(
                                best.position,
                                p.position,
                                params.social,
                                params.sharpness,
                                r,
                            )
                    }
                    ReferenceVariant::Charged => {
                        swarm::pso_velocity_update(p, best.position, &params, rng.particle(i))?
                            + swarm::cpso_repulsion(i, &snapshot, &params)
                    }
                    ReferenceVariant::Standard | ReferenceVariant::Adaptive => {
                        swarm::pso_velocity_update(p, best.position, &params, rng.particle(i))?
                    }
                };
                p.velocity = v;
                p.position = self.clamp(swarm::pso_position_update(p.position, v));
            }
            for p in particles.iter_mut() {
                let fitness = f(p.position);
                if p.personal_best.is_none_or(|b| fitness < b.fitness) {
                    p.personal_best = Some(PersonalBest {
                        position: p.position,
                        fitness,
                    });
                }
            }
            best = global_best(&particles);
            trace.push(best.fitness);
        }
        Ok(ReferenceResult {
            best,
            trace,
            states,
        })
    }
}

fn global_best(particles: &[Particle]) -> PersonalBest {
    particles
        .iter()
        .filter_map(|p| p.personal_best)
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .expect("particles carry personal bests")
}

fn fitness_of(p: &Particle) -> f64 {
    p.personal_best.map_or(f64::INFINITY, |b| b.fitness)
}

fn best_current(particles: &[Particle]) -> usize {
    (0..particles.len())
        .min_by(|&a, &b| fitness_of(&particles[a]).total_cmp(&fitness_of(&particles[b])))
        .unwrap_or(0)
}

fn worst_current(particles: &[Particle]) -> usize {
    (0..particles.len())
        .max_by(|&a, &b| fitness_of(&particles[a]).total_cmp(&fitness_of(&particles[b])))
        .unwrap_or(0)
}
