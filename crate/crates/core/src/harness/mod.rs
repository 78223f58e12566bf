//! Experiment orchestration.
//!
//! A run flies one variant over one scene until the simulated clock reaches
//! the time limit. Each step costs the time the farthest-moving drone needs
//! at cruise speed, with a small floor so that every run terminates.

pub mod analysis;
pub mod batch;
pub mod export;

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adapt::EvolutionaryState;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::SwarmRng;
use crate::scene::{generate_forest, ForestConfig, Scene};
use crate::stepper::{self, AosParams, Branch, StepMetrics, SwarmState, Variant};
use crate::visibility::SampleHistory;

pub use crate::stepper::step_duration;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub variant: Variant,
    pub scene_seed: u64,
    pub rng_seed: u64,
    /// Simulated seconds per run.
    pub time_limit: f64,
    /// Radius of the disk around the swarm start in which drones are placed.
    pub start_spread: f64,
    /// Initial default scanning direction, degrees from +x.
    pub scan_direction_deg: f64,
    /// Load the scene from this file instead of generating it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub forest: ForestConfig,
    pub params: AosParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            variant: Variant::AosPso,
            scene_seed: 1,
            rng_seed: 1,
            time_limit: 20.0,
            start_spread: 10.0,
            scan_direction_deg: 90.0,
            scene_file: None,
            out: None,
            forest: ForestConfig::default(),
            params: AosParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported config schema version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return Err(Error::config("time_limit must be positive"));
        }
        if !(self.start_spread >= 0.0) {
            return Err(Error::config("start_spread must be non-negative"));
        }
        self.params.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn scene(&self) -> Result<Scene> {
        match &self.scene_file {
            Some(path) => Scene::load(path),
            None => generate_forest(self.scene_seed, &self.forest),
        }
    }

    /// Drones placed uniformly in the start disk.
    pub fn initial_positions(&self, rng: &SwarmRng) -> Vec<Vec2> {
        let mut init = rng.init_stream();
        (0..self.params.n)
            .map(|_| {
                let r = self.start_spread * init.gen::<f64>().sqrt();
                let a = init.gen::<f64>() * std::f64::consts::TAU;
                self.forest.swarm_start + r * Vec2::from_angle(a)
            })
            .collect()
    }
}

/// One recorded step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub step: u64,
    pub sim_time: f64,
    pub branch: Branch,
    pub visibility: f64,
    pub e_f: Option<f64>,
    pub state: Option<EvolutionaryState>,
    pub c_s: f64,
    pub c_c: f64,
    pub frac_social: f64,
    pub frac_cognitive: f64,
    pub leader: Option<usize>,
    pub positions: Vec<Vec2>,
}

impl From<&StepMetrics> for RecordRow {
    fn from(m: &StepMetrics) -> Self {
        Self {
            step: m.step,
            sim_time: m.sim_time,
            branch: m.branch,
            visibility: m.visibility,
            e_f: m.e_f,
            state: m.state,
            c_s: m.c_s,
            c_c: m.c_c,
            frac_social: m.frac_social,
            frac_cognitive: m.frac_cognitive,
            leader: m.leader,
            positions: m.positions.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: Variant,
    pub rows: Vec<RecordRow>,
}

impl RunRecord {
    /// Highest per-step visibility reached.
    pub fn best_visibility(&self) -> f64 {
        self.rows.iter().map(|r| r.visibility).fold(0.0, f64::max)
    }

    /// e_f values of leader-following steps.
    pub fn pso_e_f(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows
            .iter()
            .filter(|r| r.branch == Branch::PsoLike)
            .filter_map(|r| r.e_f)
    }
}

/// Run one experiment, handing every step's metrics to `observe`.
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    mut observe: impl FnMut(&StepMetrics),
) -> Result<RunRecord> {
    config.validate()?;
    let scene = config.scene()?;
    let params = &config.params;
    let mut rng = SwarmRng::new(config.rng_seed, params.n);
    let positions = config.initial_positions(&rng);
    let sd = Vec2::from_angle(config.scan_direction_deg.to_radians());
    let mut state = SwarmState::new(positions, sd, params, config.variant)?;
    let mut history = SampleHistory::new(params.history_capacity);
    let mut rows = Vec::new();
    while state.sim_time < config.time_limit {
        let metrics = stepper::step(
            &mut state,
            &scene,
            &mut history,
            params,
            &mut rng,
            config.variant,
        )?;
        observe(&metrics);
        rows.push(RecordRow::from(&metrics));
    }
    Ok(RunRecord {
        variant: config.variant,
        rows,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    run_experiment_observed(config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(variant: Variant) -> ExperimentConfig {
        ExperimentConfig {
            variant,
            time_limit: 6.0,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn step_time_examples() {
        let p = AosParams::default();
        assert_eq!(step_duration(5.0, &p), 0.5);
        assert_eq!(step_duration(0.0, &p), 0.01);
        // 0.5 s steps over 20 s give at most 41 rows.
        let mut t = 0.0;
        let mut rows = 0;
        while t < 20.0 {
            rows += 1;
            t += step_duration(5.0, &p);
        }
        assert!(rows <= 41);
    }

    #[test]
    fn run_is_deterministic_and_timed() {
        let a = run_experiment(&quick(Variant::AosApsoTuned)).unwrap();
        let b = run_experiment(&quick(Variant::AosApsoTuned)).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.windows(2).all(|w| w[1].sim_time > w[0].sim_time));
        assert_eq!(a.rows[0].branch, Branch::Default);
        assert_eq!(a.rows[0].sim_time, 0.0);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = quick(Variant::AosApsoUntuned);
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(ExperimentConfig::from_toml("time_limit = 0.0").is_err());
        assert!(ExperimentConfig::from_toml("schema_version = 7").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("[params]\ndrone_speed = -1.0").is_err());
        let partial =
            ExperimentConfig::from_toml("variant = \"aos-apso-tuned\"\n[params]\nc3 = 2.0")
                .unwrap();
        assert_eq!(partial.variant, Variant::AosApsoTuned);
        assert_eq!(partial.params.c3, 2.0);
        assert_eq!(partial.params.c4, 5.0);
    }

    #[test]
    fn initial_positions_stay_in_start_disk() {
        let cfg = ExperimentConfig::default();
        let rng = SwarmRng::new(4, cfg.params.n);
        for p in cfg.initial_positions(&rng) {
            assert!(p.distance(cfg.forest.swarm_start) <= cfg.start_spread);
        }
    }
}
