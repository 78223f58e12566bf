//! Evolutionary-state estimation and parameter adaption.
//!
//! The evolutionary factor measures how far the best particle sits from the
//! centre of the swarm, normalised to `[0, 1]`. It is mapped to one of four
//! evolutionary states, which then drive either the additive acceleration
//! scheme (social/cognitive factors in `[1.5, 2.5]`) or the multiplicative
//! deceleration scheme on fractional factors in `(0, 1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionaryState {
    Exploration,
    Exploitation,
    Convergence,
    JumpingOut,
}

impl EvolutionaryState {
    pub const ALL: [EvolutionaryState; 4] = [
        EvolutionaryState::Exploration,
        EvolutionaryState::Exploitation,
        EvolutionaryState::Convergence,
        EvolutionaryState::JumpingOut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EvolutionaryState::Exploration => "exploration",
            EvolutionaryState::Exploitation => "exploitation",
            EvolutionaryState::Convergence => "convergence",
            EvolutionaryState::JumpingOut => "jumping_out",
        }
    }
}

impl fmt::Display for EvolutionaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvolutionaryState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvolutionaryState::ALL
            .into_iter()
            .find(|state| state.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown evolutionary state `{s}`")))
    }
}

/// Which e_f → state table to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMapping {
    /// Wide intervals of the original adaptive PSO.
    OriginalApso,
    /// Lowered bounds tuned for drone swarms.
    AosApso,
}

impl StateMapping {
    /// Band edges `[t0, …, t5]`. Bands alternate between a single state and an
    /// overlap resolved by the previous state:
    ///
    /// ```text
    /// [0, t0) convergence   [t0, t1) conv/exploit   [t1, t2) exploitation
    /// [t2, t3) exploit/explore   [t3, t4) exploration   [t4, t5) explore/jump
    /// [t5, 1] jumping out
    /// ```
    pub fn thresholds(self) -> [f64; 6] {
        match self {
            StateMapping::OriginalApso => [0.2, 0.3, 0.4, 0.6, 0.7, 0.9],
            StateMapping::AosApso => [0.025, 0.1, 0.15, 0.25, 0.5, 0.6],
        }
    }
}

/// Additive adaption settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApsoParams {
    /// Acceleration rate δ.
    pub delta: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    /// Upper bound on the sum of both factors.
    pub sum_cap: f64,
}

impl Default for ApsoParams {
    fn default() -> Self {
        Self {
            delta: 0.1,
            clamp_lo: 1.5,
            clamp_hi: 2.5,
            sum_cap: 4.0,
        }
    }
}

impl ApsoParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.05..=0.1).contains(&self.delta) {
            return Err(Error::config("acceleration rate must lie in [0.05, 0.1]"));
        }
        if !(self.clamp_lo < self.clamp_hi) {
            return Err(Error::config("clamp_lo must be below clamp_hi"));
        }
        Ok(())
    }
}

/// Social/cognitive fractions start here and are reset here on the default branch.
pub const RESET_FRACTION: f64 = 0.5;

/// Fractions equivalent to the fixed weights of the non-adaptive strategy.
pub const FIXED_FRACTION_SOCIAL: f64 = 10.0 / 21.0;
pub const FIXED_FRACTION_COGNITIVE: f64 = 0.5;

/// Fractions are kept this far inside `(0, 1)` so that repeated
/// multiplicative steps cannot round onto the boundary.
pub const FRACTION_MARGIN: f64 = 1e-9;

/// Adaption state threaded through the step loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptionState {
    /// ĉ_s in (0, 1).
    pub frac_social: f64,
    /// ĉ_c in (0, 1).
    pub frac_cognitive: f64,
    /// Deceleration factor γ in (0, 1).
    pub gamma: f64,
    pub prev_state: EvolutionaryState,
    pub mapping: StateMapping,
}

impl AdaptionState {
    pub fn new(gamma: f64, mapping: StateMapping) -> Self {
        Self {
            frac_social: RESET_FRACTION,
            frac_cognitive: RESET_FRACTION,
            gamma,
            prev_state: EvolutionaryState::Exploration,
            mapping,
        }
    }

    /// Back to the start-of-run values.
    pub fn reset(&mut self) {
        self.frac_social = RESET_FRACTION;
        self.frac_cognitive = RESET_FRACTION;
        self.prev_state = EvolutionaryState::Exploration;
    }
}

/// Mean distance from particle `i` to every other particle.
pub fn mean_pairwise_distance(positions: &[Vec2], i: usize) -> Result<f64> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::DegenerateSwarm(n));
    }
    let xi = positions[i];
    let sum: f64 = positions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &xj)| xi.distance(xj))
        .sum();
    Ok(sum / (n - 1) as f64)
}

/// `(d_best − min d) / (max d − min d)`; 0 when every particle is equally central.
pub fn evolutionary_factor(positions: &[Vec2], best: usize) -> Result<f64> {
    let d = (0..positions.len())
        .map(|i| mean_pairwise_distance(positions, i))
        .collect::<Result<Vec<_>>>()?;
    let (min, max) = d
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if max <= min {
        return Ok(0.0);
    }
    Ok(((d[best] - min) / (max - min)).clamp(0.0, 1.0))
}

/// Map an evolutionary factor to a state, using `prev` inside overlap bands.
pub fn classify_state(
    e_f: f64,
    prev: EvolutionaryState,
    mapping: StateMapping,
) -> EvolutionaryState {
    use EvolutionaryState::*;
    let [t0, t1, t2, t3, t4, t5] = mapping.thresholds();
    if e_f < t0 {
        Convergence
    } else if e_f < t1 {
        if matches!(prev, Exploitation | Exploration) {
            Exploitation
        } else {
            Convergence
        }
    } else if e_f < t2 {
        Exploitation
    } else if e_f < t3 {
        if matches!(prev, Exploration | JumpingOut) {
            Exploration
        } else {
            Exploitation
        }
    } else if e_f < t4 {
        Exploration
    } else if e_f < t5 {
        if matches!(prev, JumpingOut | Convergence) {
            JumpingOut
        } else {
            Exploration
        }
    } else {
        JumpingOut
    }
}

/// Inertia weight as a sigmoid of the evolutionary factor.
pub fn adapt_inertia(e_f: f64) -> f64 {
    1.0 / (1.0 + 1.5 * (-2.6 * e_f).exp())
}

/// Direction of change for one factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Change {
    Up,
    SlightUp,
    SlightDown,
    Down,
}

/// `(cognitive, social)` changes for each state.
fn changes(state: EvolutionaryState) -> (Change, Change) {
    use Change::*;
    match state {
        EvolutionaryState::Exploration => (Up, Down),
        EvolutionaryState::Exploitation => (SlightUp, SlightDown),
        EvolutionaryState::Convergence => (SlightUp, SlightUp),
        EvolutionaryState::JumpingOut => (Down, Up),
    }
}

/// Additive adaption of `(cognitive, social)` followed by clamping and
/// normalisation to the sum cap.
pub fn apso_adapt_factors(
    state: EvolutionaryState,
    cognitive: f64,
    social: f64,
    params: &ApsoParams,
) -> (f64, f64) {
    let step = |c: f64, change: Change| {
        let delta = params.delta;
        let c = match change {
            Change::Up => c + delta,
            Change::SlightUp => c + delta / 2.0,
            Change::SlightDown => c - delta / 2.0,
            Change::Down => c - delta,
        };
        c.clamp(params.clamp_lo, params.clamp_hi)
    };
    let (dc, ds) = changes(state);
    let c_c = step(cognitive, dc);
    let c_s = step(social, ds);
    let sum = c_c + c_s;
    if sum > params.sum_cap {
        let scale = params.sum_cap / sum;
        (c_c * scale, c_s * scale)
    } else {
        (c_c, c_s)
    }
}

/// `c ← 1 − γ(1 − c)`
pub fn decelerated_increase(c: f64, gamma: f64) -> f64 {
    1.0 - gamma * (1.0 - c)
}

/// `c ← γc`
pub fn decelerated_decrease(c: f64, gamma: f64) -> f64 {
    gamma * c
}

/// The factor used for half-strength steps: midway between no change and a
/// full step.
pub fn half_gamma(gamma: f64) -> f64 {
    (1.0 + gamma) / 2.0
}

/// Rescale ĉ_s so that `ĉ_s(1 + ĉ_c) ≤ 1`.
pub fn normalize_fractions(frac_social: f64, frac_cognitive: f64) -> (f64, f64) {
    if frac_social * (1.0 + frac_cognitive) > 1.0 {
        (1.0 / (1.0 + frac_cognitive), frac_cognitive)
    } else {
        (frac_social, frac_cognitive)
    }
}

/// Multiplicative adaption of the fractional factors for `state`.
///
/// Updates `prev_state` and returns the adapted value.
pub fn aos_apso_adapt_fractions(state: EvolutionaryState, adapt: &AdaptionState) -> AdaptionState {
    let gamma = adapt.gamma;
    let step = |c: f64, change: Change| match change {
        Change::Up => decelerated_increase(c, gamma),
        Change::SlightUp => decelerated_increase(c, half_gamma(gamma)),
        Change::SlightDown => decelerated_decrease(c, half_gamma(gamma)),
        Change::Down => decelerated_decrease(c, gamma),
    };
    let (dc, ds) = changes(state);
    let keep_open = |c: f64| c.clamp(FRACTION_MARGIN, 1.0 - FRACTION_MARGIN);
    let frac_cognitive = keep_open(step(adapt.frac_cognitive, dc));
    let frac_social = keep_open(step(adapt.frac_social, ds));
    let (frac_social, frac_cognitive) = normalize_fractions(frac_social, frac_cognitive);
    AdaptionState {
        frac_social,
        frac_cognitive,
        prev_state: state,
        ..adapt.clone()
    }
}

/// Social and cognitive weights (meters) from fractions: `c_s = c4·ĉ_s`,
/// `c_c = c_s·ĉ_c`.
///
/// For normalised fractions this gives `c_c < c_s` and `c_s + c_c ≤ c4`.
pub fn translate_fractions(frac_social: f64, frac_cognitive: f64, c4: f64) -> Result<(f64, f64)> {
    if !(c4 > 0.0) {
        return Err(Error::config("c4 must be positive"));
    }
    let social = c4 * frac_social;
    let mut cognitive = social * frac_cognitive;
    // Normalised fractions can still land one ulp above c4.
    if social + cognitive > c4 {
        cognitive = c4 - social;
    }
    Ok((social, cognitive))
}

/// Map additive-scheme factors in `[clamp_lo, clamp_hi]` onto fractions in
/// `(0, 1)` for translation into drone-swarm weights.
pub fn factors_to_fractions(cognitive: f64, social: f64, params: &ApsoParams) -> (f64, f64) {
    const FLOOR: f64 = 0.01;
    let span = params.clamp_hi - params.clamp_lo;
    let frac = |c: f64| ((c - params.clamp_lo) / span).clamp(FLOOR, 1.0 - FLOOR);
    normalize_fractions(frac(social), frac(cognitive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use EvolutionaryState::*;

    fn line(xs: &[f64]) -> Vec<Vec2> {
        xs.iter().map(|&x| Vec2::new(x, 0.0)).collect()
    }

    #[test]
    fn mean_distance_examples() {
        assert_eq!(mean_pairwise_distance(&line(&[0.0, 1.0]), 0).unwrap(), 1.0);
        let three = line(&[0.0, 1.0, 2.0]);
        assert_eq!(mean_pairwise_distance(&three, 1).unwrap(), 1.0);
        assert_eq!(mean_pairwise_distance(&three, 2).unwrap(), 1.5);
        assert!(matches!(
            mean_pairwise_distance(&line(&[3.0]), 0),
            Err(Error::DegenerateSwarm(1))
        ));
    }

    #[test]
    fn evolutionary_factor_examples() {
        let three = line(&[0.0, 1.0, 2.0]);
        assert_eq!(evolutionary_factor(&three, 1).unwrap(), 0.0);
        assert_eq!(evolutionary_factor(&three, 2).unwrap(), 1.0);
        assert_eq!(evolutionary_factor(&line(&[0.0, 4.0]), 1).unwrap(), 0.0);
    }

    #[test]
    fn table_examples() {
        let m = StateMapping::AosApso;
        for prev in EvolutionaryState::ALL {
            assert_eq!(classify_state(0.01, prev, m), Convergence);
            assert_eq!(classify_state(0.7, prev, m), JumpingOut);
            assert_eq!(classify_state(0.3, prev, m), Exploration);
        }
        assert_eq!(classify_state(0.05, Exploitation, m), Exploitation);
        assert_eq!(classify_state(0.05, Convergence, m), Convergence);
    }

    #[test]
    fn original_mapping_overlaps() {
        let m = StateMapping::OriginalApso;
        assert_eq!(classify_state(0.1, JumpingOut, m), Convergence);
        assert_eq!(classify_state(0.25, Exploration, m), Exploitation);
        assert_eq!(classify_state(0.25, Convergence, m), Convergence);
        assert_eq!(classify_state(0.5, JumpingOut, m), Exploration);
        assert_eq!(classify_state(0.8, Convergence, m), JumpingOut);
        assert_eq!(classify_state(0.8, Exploitation, m), Exploration);
        assert_eq!(classify_state(1.0, Exploitation, m), JumpingOut);
    }

    #[test]
    fn inertia_examples() {
        assert!((adapt_inertia(0.0) - 0.4).abs() < 1e-15);
        assert!((adapt_inertia(1.0) - 0.8998).abs() < 1e-3);
        assert!((adapt_inertia(0.5) - 0.7098).abs() < 1e-3);
    }

    #[test]
    fn additive_adaption_examples() {
        let p = ApsoParams {
            delta: 0.1,
            ..ApsoParams::default()
        };
        let (c, s) = apso_adapt_factors(Exploration, 2.0, 2.0, &p);
        assert!((c - 2.1).abs() < 1e-12 && (s - 1.9).abs() < 1e-12);
        assert_eq!(apso_adapt_factors(Convergence, 2.5, 2.5, &p), (2.0, 2.0));
        assert_eq!(apso_adapt_factors(JumpingOut, 1.5, 2.5, &p), (1.5, 2.5));
    }

    #[test]
    fn deceleration_examples() {
        assert!((decelerated_increase(0.5, 0.9) - 0.55).abs() < 1e-15);
        assert!((decelerated_decrease(0.5, 0.9) - 0.45).abs() < 1e-15);
        assert_eq!(decelerated_increase(1.0, 0.9), 1.0);
        assert_eq!(decelerated_decrease(0.0, 0.9), 0.0);
    }

    #[test]
    fn translation_examples() {
        assert_eq!(translate_fractions(0.5, 0.5, 5.0).unwrap(), (2.5, 1.25));
        let (s, c) = translate_fractions(0.5, 0.0, 5.0).unwrap();
        assert_eq!((s, c), (2.5, 0.0));
        assert!(translate_fractions(0.5, 0.5, 0.0).is_err());

        // The fixed fractions sit exactly on the sum bound.
        let (s, c) =
            translate_fractions(FIXED_FRACTION_SOCIAL, FIXED_FRACTION_COGNITIVE, 5.0).unwrap();
        assert!((FIXED_FRACTION_SOCIAL - 0.47619).abs() < 1e-5);
        assert!(s > c && s + c <= 5.0);
        assert!((s + c - 5.0 * FIXED_FRACTION_SOCIAL * 1.5).abs() < 1e-12);
    }

    #[test]
    fn reset_values() {
        let mut a = AdaptionState::new(0.9, StateMapping::AosApso);
        a.frac_social = 0.9;
        a.prev_state = JumpingOut;
        a.reset();
        assert_eq!((a.frac_social, a.frac_cognitive), (0.5, 0.5));
    }

    #[test]
    fn state_names_round_trip() {
        for s in EvolutionaryState::ALL {
            assert_eq!(s.as_str().parse::<EvolutionaryState>().unwrap(), s);
        }
        assert!("calm".parse::<EvolutionaryState>().is_err());
    }

    fn any_state() -> impl Strategy<Value = EvolutionaryState> {
        prop::sample::select(EvolutionaryState::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn ef_in_unit_interval_and_similarity_invariant(
            pts in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 2..12),
            best_seed in any::<usize>(),
            angle in 0.0..std::f64::consts::TAU, scale in 0.1..10.0f64,
            tx in -100.0..100.0f64, ty in -100.0..100.0f64,
        ) {
            let pos: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let best = best_seed % pos.len();
            let ef = evolutionary_factor(&pos, best).unwrap();
            prop_assert!((0.0..=1.0).contains(&ef));

            let rot = Vec2::from_angle(angle);
            let moved: Vec<Vec2> = pos.iter().map(|p| {
                let r = Vec2::new(rot.x * p.x - rot.y * p.y, rot.y * p.x + rot.x * p.y);
                scale * r + Vec2::new(tx, ty)
            }).collect();
            let ef2 = evolutionary_factor(&moved, best).unwrap();
            prop_assert!((ef - ef2).abs() < 1e-6, "{} vs {}", ef, ef2);
        }

        #[test]
        fn additive_adaption_respects_bounds(
            state in any_state(), c in 1.5..=2.5f64, s in 1.5..=2.5f64, delta in 0.05..=0.1f64,
        ) {
            let p = ApsoParams { delta, ..ApsoParams::default() };
            let (c2, s2) = apso_adapt_factors(state, c, s, &p);
            prop_assert!(c2 + s2 <= 4.0 + 1e-12);
            prop_assert!(c2 <= 2.5 && s2 <= 2.5);
            prop_assert!(c2 >= 1.5 - 1e-12 && s2 >= 1.5 - 1e-12);
        }

        #[test]
        fn fractions_stay_open(
            state in any_state(), s in 0.0001..0.9999f64, c in 0.0001..0.9999f64, gamma in 0.01..0.99f64,
        ) {
            let mut a = AdaptionState::new(gamma, StateMapping::AosApso);
            a.frac_social = s;
            a.frac_cognitive = c;
            let b = aos_apso_adapt_fractions(state, &a);
            prop_assert!(b.frac_social > 0.0 && b.frac_social < 1.0);
            prop_assert!(b.frac_cognitive > 0.0 && b.frac_cognitive < 1.0);
            prop_assert!(b.frac_social * (1.0 + b.frac_cognitive) <= 1.0 + 1e-12);
            prop_assert_eq!(b.prev_state, state);
        }

        #[test]
        fn translation_respects_constraints(
            s in 0.0001..0.9999f64, c in 0.0001..0.9999f64, c4 in 0.5..20.0f64,
        ) {
            let (s, c) = normalize_fractions(s, c);
            let (cs, cc) = translate_fractions(s, c, c4).unwrap();
            prop_assert!(cc < cs);
            prop_assert!(cs + cc <= c4);
        }

        #[test]
        fn inertia_is_increasing(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            prop_assume!(a < b);
            prop_assert!(adapt_inertia(a) < adapt_inertia(b));
            prop_assert!(adapt_inertia(a) > 0.39 && adapt_inertia(b) < 0.91);
        }

        #[test]
        fn factor_fractions_translate_within_constraints(
            c in 1.5..=2.5f64, s in 1.5..=2.5f64,
        ) {
            let (fs, fc) = factors_to_fractions(c, s, &ApsoParams::default());
            prop_assert!(fs > 0.0 && fs < 1.0 && fc > 0.0 && fc < 1.0);
            let (cs, cc) = translate_fractions(fs, fc, 5.0).unwrap();
            prop_assert!(cc < cs && cs + cc <= 5.0);
        }
    }
}
