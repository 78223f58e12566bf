//! Browser bindings. Every export takes plain numbers and strings and returns
//! a JSON string for the page script.

use aos_swarm::adapt::{self, AdaptionState, EvolutionaryState, StateMapping};
use aos_swarm::harness::{run_experiment_observed, ExperimentConfig};
use aos_swarm::stepper::{AosParams, Variant};
use aos_swarm::Vec2;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct SimStep {
    t: f64,
    branch: &'static str,
    visibility: f64,
    history_visibility: f64,
    e_f: Option<f64>,
    state: Option<&'static str>,
    c_s: f64,
    c_c: f64,
    leader: Option<usize>,
    positions: Vec<Vec2>,
}

#[derive(Serialize)]
struct Simulation<'a> {
    scene: &'a aos_swarm::scene::Scene,
    steps: Vec<SimStep>,
}

fn config(
    variant: &str,
    seed: u64,
    time_limit: f64,
    density: f64,
) -> Result<ExperimentConfig, String> {
    let mut config = ExperimentConfig {
        variant: variant
            .parse()
            .map_err(|e: aos_swarm::Error| e.to_string())?,
        scene_seed: seed,
        rng_seed: seed,
        time_limit,
        ..ExperimentConfig::default()
    };
    config.forest.density = density;
    Ok(config)
}

pub fn scene_json(seed: u64, density: f64) -> Result<String, String> {
    let config = config(Variant::AosPso.name(), seed, 1.0, density)?;
    let scene = config.scene().map_err(|e| e.to_string())?;
    serde_json::to_string(&scene).map_err(|e| e.to_string())
}

pub fn simulate_json(
    variant: &str,
    seed: u64,
    time_limit: f64,
    density: f64,
) -> Result<String, String> {
    let config = config(variant, seed, time_limit, density)?;
    let scene = config.scene().map_err(|e| e.to_string())?;
    let mut steps = Vec::new();
    run_experiment_observed(&config, |m| {
        steps.push(SimStep {
            t: m.sim_time,
            branch: m.branch.as_str(),
            visibility: m.visibility,
            history_visibility: m.history_visibility,
            e_f: m.e_f,
            state: m.state.map(|s| s.as_str()),
            c_s: m.c_s,
            c_c: m.c_c,
            leader: m.leader,
            positions: m.positions.clone(),
        })
    })
    .map_err(|e| e.to_string())?;
    serde_json::to_string(&Simulation {
        scene: &scene,
        steps,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct AdaptPreview {
    state: &'static str,
    inertia: f64,
    frac_social: f64,
    frac_cognitive: f64,
    c_s: f64,
    c_c: f64,
}

/// One fraction update of the tuned adaptive variant from the given state.
pub fn adapt_json(
    e_f: f64,
    prev_state: &str,
    frac_social: f64,
    frac_cognitive: f64,
) -> Result<String, String> {
    if !(0.0..=1.0).contains(&e_f) {
        return Err("e_f must lie in [0, 1]".into());
    }
    let prev: EvolutionaryState = prev_state
        .parse()
        .map_err(|e: aos_swarm::Error| e.to_string())?;
    let params = AosParams::default();
    let state = adapt::classify_state(e_f, prev, StateMapping::AosApso);
    let current = AdaptionState {
        frac_social: frac_social.clamp(adapt::FRACTION_MARGIN, 1.0 - adapt::FRACTION_MARGIN),
        frac_cognitive: frac_cognitive.clamp(adapt::FRACTION_MARGIN, 1.0 - adapt::FRACTION_MARGIN),
        prev_state: prev,
        ..AdaptionState::new(params.gamma, StateMapping::AosApso)
    };
    let next = adapt::aos_apso_adapt_fractions(state, &current);
    let (c_s, c_c) = adapt::translate_fractions(next.frac_social, next.frac_cognitive, params.c4)
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&AdaptPreview {
        state: state.as_str(),
        inertia: adapt::adapt_inertia(e_f),
        frac_social: next.frac_social,
        frac_cognitive: next.frac_cognitive,
        c_s,
        c_c,
    })
    .map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Forest and target for `seed` at `density` trees per hectare.
#[wasm_bindgen(js_name = generateScene)]
pub fn generate_scene(seed: u32, density: f64) -> Result<String, JsValue> {
    js(scene_json(seed.into(), density))
}

/// Scene plus every step of one run.
#[wasm_bindgen]
pub fn simulate(
    variant: &str,
    seed: u32,
    time_limit: f64,
    density: f64,
) -> Result<String, JsValue> {
    js(simulate_json(variant, seed.into(), time_limit, density))
}

/// Evolutionary state, inertia and next weights for an e_f value.
#[wasm_bindgen(js_name = adaptPreview)]
pub fn adapt_preview(
    e_f: f64,
    prev_state: &str,
    frac_social: f64,
    frac_cognitive: f64,
) -> Result<String, JsValue> {
    js(adapt_json(e_f, prev_state, frac_social, frac_cognitive))
}
