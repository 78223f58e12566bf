//! One time step of the drone-swarm update.
//!
//! Every step captures a photo at each drone, folds the photos into the sample
//! history and scores each drone against it. Below the visibility threshold
//! the swarm flies the default scanning pattern: a line perpendicular to the
//! scanning direction, advanced by `c3` per step. Otherwise the best drone
//! becomes the leader, every drone takes a random step of length `c_c` plus a
//! pull of length `c_s` towards the leader, and Rutherford scattering pushes
//! apart drones closer than `c4`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adapt::{
    self, AdaptionState, ApsoParams, EvolutionaryState, StateMapping, FIXED_FRACTION_COGNITIVE,
    FIXED_FRACTION_SOCIAL,
};
use crate::error::{Error, Result};
use crate::geom::{centroid, Vec2};
use crate::rng::{self, SwarmRng};
use crate::scene::{capture_sample, Scene};
use crate::visibility::{evaluate_many, integral_visibility, SampleHistory};

/// How drones are assigned to the slots of the default line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineOrdering {
    ByIndex,
    ByProjection,
}

/// The four strategies compared by the experiment harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Fixed weights, plain scattering.
    #[serde(rename = "aos-pso")]
    AosPso,
    /// Fixed weights, leader-stabilized scattering.
    #[serde(rename = "aos-pso-stabilized")]
    AosPsoStabilized,
    /// Fractional weights with multiplicative adaption and the lowered state table.
    #[serde(rename = "aos-apso-tuned")]
    AosApsoTuned,
    /// Additive adaption and state table of the original adaptive PSO.
    #[serde(rename = "aos-apso-untuned")]
    AosApsoUntuned,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::AosPso,
        Variant::AosPsoStabilized,
        Variant::AosApsoTuned,
        Variant::AosApsoUntuned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::AosPso => "aos-pso",
            Variant::AosPsoStabilized => "aos-pso-stabilized",
            Variant::AosApsoTuned => "aos-apso-tuned",
            Variant::AosApsoUntuned => "aos-apso-untuned",
        }
    }

    pub fn leader_stabilized(self) -> bool {
        !matches!(self, Variant::AosPso)
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Variant::AosApsoTuned | Variant::AosApsoUntuned)
    }

    fn mapping(self) -> StateMapping {
        match self {
            Variant::AosApsoUntuned => StateMapping::OriginalApso,
            _ => StateMapping::AosApso,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AosParams {
    /// Scan advance per default step (m).
    pub c3: f64,
    /// Minimal optimal sample distance: line spacing and scattering radius (m).
    pub c4: f64,
    /// Pull towards the assigned line slot.
    pub c5: f64,
    /// Fixed cognitive weight (m) of the non-adaptive variants.
    pub c_c: f64,
    /// Fixed social weight (m) of the non-adaptive variants.
    pub c_s: f64,
    pub visibility_threshold: f64,
    /// Number of drones.
    pub n: usize,
    pub scatter_iterations: usize,
    /// Strength of the inverse-square push; defaults to `c4² / 4`.
    pub scatter_gain: Option<f64>,
    pub line_ordering: LineOrdering,
    /// Overrides the variant's choice of leader stabilization.
    pub leader_stabilized: Option<bool>,
    /// Deceleration factor γ of the tuned adaptive variant.
    pub gamma: f64,
    pub apso: ApsoParams,
    pub history_capacity: usize,
    /// Drone cruise speed (m/s).
    pub drone_speed: f64,
    /// Floor on simulated time per step (s).
    pub min_step_time: f64,
}

impl Default for AosParams {
    fn default() -> Self {
        let c4 = 5.0;
        let c_s = c4 * FIXED_FRACTION_SOCIAL;
        Self {
            c3: c4,
            c4,
            c5: 1.0,
            c_c: c_s * FIXED_FRACTION_COGNITIVE,
            c_s,
            visibility_threshold: 0.05,
            n: 10,
            scatter_iterations: 10,
            scatter_gain: None,
            line_ordering: LineOrdering::ByProjection,
            leader_stabilized: None,
            gamma: 0.9,
            apso: ApsoParams::default(),
            history_capacity: 20,
            drone_speed: 10.0,
            min_step_time: 0.01,
        }
    }
}

impl AosParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive")))
            }
        };
        positive(self.c4, "c4")?;
        positive(self.drone_speed, "drone_speed")?;
        positive(self.min_step_time, "min_step_time")?;
        if !(self.c3 >= 0.0 && self.c5 >= 0.0 && self.c_c >= 0.0) {
            return Err(Error::config("c3, c5 and c_c must be non-negative"));
        }
        if !(self.c_s > self.c_c) {
            return Err(Error::config("social weight must exceed cognitive weight"));
        }
        if !(self.c_s + self.c_c <= self.c4) {
            return Err(Error::config("c_s + c_c must not exceed c4"));
        }
        if !(self.visibility_threshold > 0.0 && self.visibility_threshold < 1.0) {
            return Err(Error::config("visibility threshold must lie in (0, 1)"));
        }
        if self.n < 2 {
            return Err(Error::DegenerateSwarm(self.n));
        }
        if self.scatter_iterations == 0 {
            return Err(Error::config("scatter_iterations must be at least 1"));
        }
        if let Some(g) = self.scatter_gain {
            positive(g, "scatter_gain")?;
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma must lie in (0, 1)"));
        }
        if self.history_capacity == 0 {
            return Err(Error::config("history_capacity must be at least 1"));
        }
        self.apso.validate()
    }

    pub fn scatter_gain(&self) -> f64 {
        self.scatter_gain.unwrap_or(self.c4 * self.c4 / 4.0)
    }

    pub fn stabilized(&self, variant: Variant) -> bool {
        self.leader_stabilized
            .unwrap_or_else(|| variant.leader_stabilized())
    }
}

/// Adaption bookkeeping for all variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adaption {
    pub fractions: AdaptionState,
    /// `(cognitive, social)` of the additive scheme.
    pub factors: (f64, f64),
}

const RESET_FACTORS: (f64, f64) = (2.0, 2.0);

impl Adaption {
    fn new(params: &AosParams, variant: Variant) -> Self {
        let mut fractions = AdaptionState::new(params.gamma, variant.mapping());
        if !variant.is_adaptive() {
            fractions.frac_social = params.c_s / params.c4;
            fractions.frac_cognitive = params.c_c / params.c_s;
        }
        Self {
            fractions,
            factors: RESET_FACTORS,
        }
    }

    fn reset(&mut self) {
        self.fractions.reset();
        self.factors = RESET_FACTORS;
    }

    /// Effective `(c_s, c_c)` for the leader-following update.
    fn weights(&self, params: &AosParams, variant: Variant) -> Result<(f64, f64)> {
        if variant.is_adaptive() {
            adapt::translate_fractions(
                self.fractions.frac_social,
                self.fractions.frac_cognitive,
                params.c4,
            )
        } else {
            Ok((params.c_s, params.c_c))
        }
    }

    /// Classify `e_f` and adapt. Non-adaptive variants are left untouched.
    fn adapt(
        &mut self,
        e_f: f64,
        params: &AosParams,
        variant: Variant,
    ) -> Option<EvolutionaryState> {
        let state = match variant {
            Variant::AosPso | Variant::AosPsoStabilized => return None,
            Variant::AosApsoTuned => {
                let state =
                    adapt::classify_state(e_f, self.fractions.prev_state, StateMapping::AosApso);
                self.fractions = adapt::aos_apso_adapt_fractions(state, &self.fractions);
                state
            }
            Variant::AosApsoUntuned => {
                let state = adapt::classify_state(
                    e_f,
                    self.fractions.prev_state,
                    StateMapping::OriginalApso,
                );
                let (c, s) = self.factors;
                self.factors = adapt::apso_adapt_factors(state, c, s, &params.apso);
                let (fs, fc) =
                    adapt::factors_to_fractions(self.factors.0, self.factors.1, &params.apso);
                self.fractions.frac_social = fs;
                self.fractions.frac_cognitive = fc;
                self.fractions.prev_state = state;
                state
            }
        };
        Some(state)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub positions: Vec<Vec2>,
    /// Displacement of each drone during the last step.
    pub velocities: Vec<Vec2>,
    pub leader: Option<usize>,
    /// Unit vector of the default scanning direction.
    pub scan_direction: Vec2,
    pub adaption: Adaption,
    pub last_sighting: Option<Vec2>,
    pub sim_time: f64,
    pub step: u64,
}

impl SwarmState {
    pub fn new(
        positions: Vec<Vec2>,
        scan_direction: Vec2,
        params: &AosParams,
        variant: Variant,
    ) -> Result<Self> {
        let scan_direction = scan_direction
            .normalized()
            .ok_or_else(|| Error::config("scan direction must be non-zero"))?;
        if positions.len() < 2 {
            return Err(Error::DegenerateSwarm(positions.len()));
        }
        Ok(Self {
            velocities: vec![Vec2::ZERO; positions.len()],
            positions,
            leader: None,
            scan_direction,
            adaption: Adaption::new(params, variant),
            last_sighting: None,
            sim_time: 0.0,
            step: 0,
        })
    }

    pub fn centroid(&self) -> Vec2 {
        centroid(self.positions.iter().copied())
    }
}

/// Slot positions `anchor + c4(k − (n−1)/2)·ŵ` with `ŵ ⊥ SD`.
pub fn line_slots(anchor: Vec2, scan_direction: Vec2, n: usize, c4: f64) -> Vec<Vec2> {
    let across = scan_direction.perp();
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|k| anchor + (c4 * (k as f64 - mid)) * across)
        .collect()
}

/// Slot index for each particle.
pub fn line_assignment(
    positions: &[Vec2],
    scan_direction: Vec2,
    ordering: LineOrdering,
) -> Vec<usize> {
    match ordering {
        LineOrdering::ByIndex => (0..positions.len()).collect(),
        LineOrdering::ByProjection => {
            let across = scan_direction.perp();
            let mut order: Vec<usize> = (0..positions.len()).collect();
            order.sort_by(|&a, &b| {
                positions[a]
                    .dot(across)
                    .total_cmp(&positions[b].dot(across))
                    .then(a.cmp(&b))
            });
            let mut slot = vec![0; positions.len()];
            for (rank, particle) in order.into_iter().enumerate() {
                slot[particle] = rank;
            }
            slot
        }
    }
}

/// The default-line position assigned to each particle. The line passes
/// through the swarm centroid.
pub fn default_line_positions(state: &SwarmState, params: &AosParams) -> Vec<Vec2> {
    let n = state.positions.len();
    let slots = line_slots(state.centroid(), state.scan_direction, n, params.c4);
    line_assignment(&state.positions, state.scan_direction, params.line_ordering)
        .into_iter()
        .map(|k| slots[k])
        .collect()
}

/// Default scanning branch: `v = c3·SD + c5(l − x)`, then move.
///
/// Adaptive variants restart their adaption here.
pub fn default_update(state: &mut SwarmState, params: &AosParams) -> Vec<Vec2> {
    let slots = default_line_positions(state, params);
    let velocities: Vec<Vec2> = state
        .positions
        .iter()
        .zip(&slots)
        .map(|(&x, &l)| params.c3 * state.scan_direction + params.c5 * (l - x))
        .collect();
    for (x, v) in state.positions.iter_mut().zip(&velocities) {
        *x += *v;
    }
    state.adaption.reset();
    state.leader = None;
    velocities
}

/// Leader-following velocities: `c_c·Û + c_s·(g − x)/‖g − x‖`.
///
/// The leader keeps only the random term. A drone sitting exactly on the
/// leader gets no social pull.
pub fn pso_like_update(
    positions: &[Vec2],
    leader: usize,
    social: f64,
    cognitive: f64,
    rng: &mut SwarmRng,
) -> Vec<Vec2> {
    let g = positions[leader];
    positions
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let random = cognitive * rng::unit_vector(rng.particle(i));
            let pull = if i == leader {
                Vec2::ZERO
            } else {
                (g - x).normalized().map_or(Vec2::ZERO, |dir| social * dir)
            };
            random + pull
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterParams {
    /// Pairs closer than this repel each other.
    pub radius: f64,
    pub iterations: usize,
    pub gain: f64,
    pub leader_stabilized: bool,
    /// Run seed, for separating coincident pairs.
    pub seed: u64,
}

impl ScatterParams {
    pub fn from_aos(params: &AosParams, leader_stabilized: bool, seed: u64) -> Self {
        Self {
            radius: params.c4,
            iterations: params.scatter_iterations,
            gain: params.scatter_gain(),
            leader_stabilized,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterOutcome {
    pub positions: Vec<Vec2>,
    /// Force applications performed.
    pub iterations: usize,
    /// Every pair ended at least `radius` apart.
    pub settled: bool,
}

const COINCIDENT: f64 = 1e-9;

pub fn min_pairwise_distance(positions: &[Vec2]) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            min = min.min(positions[i].distance(positions[j]));
        }
    }
    min
}

/// Iterated inverse-square repulsion between drones closer than `radius`.
///
/// Each round accumulates, for every pair within range, a push of
/// `gain/‖d‖²` along the connecting line (capped at `radius` per pair) and
/// applies all pushes at once. With leader stabilization the leader is never
/// pushed and the push it exerts is doubled. Stops early once all pairs are
/// at least `radius` apart.
pub fn rutherford_scatter(
    positions: &[Vec2],
    leader: Option<usize>,
    params: &ScatterParams,
) -> ScatterOutcome {
    let mut current = positions.to_vec();
    let n = current.len();
    let fixed = leader.filter(|_| params.leader_stabilized);
    for iteration in 0..params.iterations {
        if min_pairwise_distance(&current) >= params.radius {
            return ScatterOutcome {
                positions: current,
                iterations: iteration,
                settled: true,
            };
        }
        let mut push = vec![Vec2::ZERO; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = current[i] - current[j];
                let dist = d.norm();
                if dist >= params.radius {
                    continue;
                }
                let (dir, magnitude) = if dist < COINCIDENT {
                    (rng::pair_direction(params.seed, i, j), params.radius / 2.0)
                } else {
                    (d / dist, (params.gain / (dist * dist)).min(params.radius))
                };
                let force = magnitude * dir;
                match fixed {
                    Some(l) if l == i => push[j] -= 2.0 * force,
                    Some(l) if l == j => push[i] += 2.0 * force,
                    _ => {
                        push[i] += force;
                        push[j] -= force;
                    }
                }
            }
        }
        for (x, p) in current.iter_mut().zip(&push) {
            *x += *p;
        }
    }
    let settled = min_pairwise_distance(&current) >= params.radius;
    ScatterOutcome {
        positions: current,
        iterations: params.iterations,
        settled,
    }
}

/// Point SD from the swarm centroid towards the leader, and remember the
/// leader's position as the last sighting.
pub fn update_scan_direction(state: &mut SwarmState) {
    let Some(leader) = state.leader else {
        return;
    };
    let sighting = state.positions[leader];
    state.last_sighting = Some(sighting);
    if let Some(dir) = (sighting - state.centroid()).normalized() {
        state.scan_direction = dir;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Default,
    PsoLike,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Default => "default",
            Branch::PsoLike => "pso",
        }
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Branch::Default),
            "pso" => Ok(Branch::PsoLike),
            _ => Err(Error::config(format!("unknown branch `{s}`"))),
        }
    }
}

/// What happened during one step, measured at the drones' positions when the
/// photos were taken.
#[derive(Clone, Debug, PartialEq)]
pub struct StepMetrics {
    pub step: u64,
    /// Simulated time at capture.
    pub sim_time: f64,
    /// Simulated time the step's flight took.
    pub elapsed: f64,
    pub branch: Branch,
    /// Best per-drone score.
    pub visibility: f64,
    /// Visibility of the updated history alone.
    pub history_visibility: f64,
    /// Visibility of this step's photos alone.
    pub new_visibility: f64,
    pub e_f: Option<f64>,
    pub state: Option<EvolutionaryState>,
    /// Effective social weight after adaption.
    pub c_s: f64,
    /// Effective cognitive weight after adaption.
    pub c_c: f64,
    pub frac_social: f64,
    pub frac_cognitive: f64,
    pub leader: Option<usize>,
    pub positions: Vec<Vec2>,
    /// Scattering moved the leader (only possible without stabilization).
    pub leader_scattered: bool,
    pub scatter_iterations: usize,
}

/// Simulated time for a step whose farthest drone travels `distance`.
pub fn step_duration(distance: f64, params: &AosParams) -> f64 {
    (distance / params.drone_speed).max(params.min_step_time)
}

/// Advance the swarm by one step.
pub fn step(
    state: &mut SwarmState,
    scene: &Scene,
    history: &mut SampleHistory,
    params: &AosParams,
    rng: &mut SwarmRng,
    variant: Variant,
) -> Result<StepMetrics> {
    let samples: Vec<_> = state
        .positions
        .iter()
        .map(|&x| {
            let mut s = capture_sample(scene, x);
            s.step = state.step;
            s
        })
        .collect();
    let new_visibility = integral_visibility(&samples);
    *history = history.update(samples.clone());
    let scores = evaluate_many(&samples, history);
    let (best, visibility) =
        scores
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );

    let before = state.positions.clone();
    let mut e_f = None;
    let mut evo_state = None;
    let mut leader_scattered = false;
    let mut scatter_iterations = 0;
    let branch;

    if visibility < params.visibility_threshold {
        branch = Branch::Default;
        default_update(state, params);
    } else {
        branch = Branch::PsoLike;
        state.leader = Some(best);
        let ef = adapt::evolutionary_factor(&state.positions, best)?;
        e_f = Some(ef);
        evo_state = state.adaption.adapt(ef, params, variant);
        let (social, cognitive) = state.adaption.weights(params, variant)?;
        let velocities = pso_like_update(&state.positions, best, social, cognitive, rng);
        let moved: Vec<Vec2> = state
            .positions
            .iter()
            .zip(&velocities)
            .map(|(&x, &v)| x + v)
            .collect();
        let scatter = ScatterParams::from_aos(params, params.stabilized(variant), rng.seed());
        let outcome = rutherford_scatter(&moved, Some(best), &scatter);
        leader_scattered = outcome.positions[best] != moved[best];
        scatter_iterations = outcome.iterations;
        update_scan_direction(state);
        state.positions = outcome.positions;
    }

    for ((v, &x), &x0) in state
        .velocities
        .iter_mut()
        .zip(&state.positions)
        .zip(&before)
    {
        *v = x - x0;
    }
    let farthest = state
        .velocities
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let elapsed = step_duration(farthest, params);
    let (c_s, c_c) = state.adaption.weights(params, variant)?;

    let metrics = StepMetrics {
        step: state.step,
        sim_time: state.sim_time,
        elapsed,
        branch,
        visibility,
        history_visibility: history.visibility(),
        new_visibility,
        e_f,
        state: evo_state,
        c_s,
        c_c,
        frac_social: state.adaption.fractions.frac_social,
        frac_cognitive: state.adaption.fractions.frac_cognitive,
        leader: state.leader,
        positions: before,
        leader_scattered,
        scatter_iterations,
    };
    state.sim_time += elapsed;
    state.step += 1;
    Ok(metrics)
}
