use aos_swarm::adapt::{self, ApsoParams, EvolutionaryState, StateMapping, FIXED_FRACTION_SOCIAL};
use aos_swarm::harness::{run_experiment, ExperimentConfig};
use aos_swarm::rng::SwarmRng;
use aos_swarm::stepper::{pso_like_update, AosParams, Branch, Variant};
use aos_swarm::Vec2;
use proptest::prelude::*;

fn line(xs: &[f64]) -> Vec<Vec2> {
    xs.iter().map(|&x| Vec2::new(x, 0.0)).collect()
}

#[test]
fn mean_distance_and_e_f_on_a_line() {
    let xs = line(&[0.0, 1.0, 2.0]);
    assert_eq!(
        adapt::mean_pairwise_distance(&line(&[0.0, 1.0]), 0).unwrap(),
        1.0
    );
    assert_eq!(adapt::mean_pairwise_distance(&xs, 1).unwrap(), 1.0);
    assert_eq!(adapt::mean_pairwise_distance(&xs, 0).unwrap(), 1.5);
    assert_eq!(adapt::evolutionary_factor(&xs, 1).unwrap(), 0.0);
    assert_eq!(adapt::evolutionary_factor(&xs, 2).unwrap(), 1.0);
    assert_eq!(
        adapt::evolutionary_factor(&line(&[3.0, 7.0]), 0).unwrap(),
        0.0
    );
    assert!(adapt::mean_pairwise_distance(&line(&[1.0]), 0).is_err());
}

#[test]
fn inertia_values() {
    assert!((adapt::adapt_inertia(0.0) - 0.4).abs() < 1e-15);
    assert!((adapt::adapt_inertia(1.0) - 0.8998).abs() < 1e-3);
    assert!((adapt::adapt_inertia(0.5) - 0.7098).abs() < 1e-3);
}

#[test]
fn additive_adaption_values() {
    let p = ApsoParams::default();
    let (c, s) = adapt::apso_adapt_factors(EvolutionaryState::Exploration, 2.0, 2.0, &p);
    assert!((c - 2.1).abs() < 1e-12 && (s - 1.9).abs() < 1e-12);
    assert_eq!(
        adapt::apso_adapt_factors(EvolutionaryState::Convergence, 2.5, 2.5, &p),
        (2.0, 2.0)
    );
    assert_eq!(
        adapt::apso_adapt_factors(EvolutionaryState::JumpingOut, 1.5, 2.5, &p),
        (1.5, 2.5)
    );
}

#[test]
fn state_table_examples() {
    use EvolutionaryState::*;
    let m = StateMapping::AosApso;
    for prev in EvolutionaryState::ALL {
        assert_eq!(adapt::classify_state(0.01, prev, m), Convergence);
        assert_eq!(adapt::classify_state(0.7, prev, m), JumpingOut);
        assert_eq!(adapt::classify_state(0.3, prev, m), Exploration);
    }
    assert_eq!(adapt::classify_state(0.05, Exploitation, m), Exploitation);
    assert_eq!(adapt::classify_state(0.05, Convergence, m), Convergence);
}

#[test]
fn translation_examples() {
    assert_eq!(
        adapt::translate_fractions(0.5, 0.5, 5.0).unwrap(),
        (2.5, 1.25)
    );
    assert_eq!(
        adapt::translate_fractions(0.5, 0.0, 5.0).unwrap(),
        (2.5, 0.0)
    );
    assert!(adapt::translate_fractions(0.5, 0.5, 0.0).is_err());
    // The fixed weights of the non-adaptive variants.
    let p = AosParams::default();
    let (s, c) = adapt::translate_fractions(FIXED_FRACTION_SOCIAL, 0.5, p.c4).unwrap();
    assert!((s - p.c_s).abs() < 1e-15 && (c - p.c_c).abs() < 1e-15);
    assert!((FIXED_FRACTION_SOCIAL - 0.47619).abs() < 1e-5);
}

#[test]
fn runs_are_reproducible_and_timed() {
    for variant in Variant::ALL {
        let cfg = ExperimentConfig {
            variant,
            time_limit: 8.0,
            ..ExperimentConfig::default()
        };
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a, run_experiment(&cfg).unwrap());
        assert!(a.rows.windows(2).all(|w| w[1].sim_time > w[0].sim_time));
        assert_eq!(a.rows[0].branch, Branch::Default);
        assert!(a.rows.last().unwrap().sim_time < cfg.time_limit);
        let other = run_experiment(&ExperimentConfig {
            rng_seed: 99,
            ..cfg
        })
        .unwrap();
        assert_ne!(a.rows, other.rows);
    }
}

fn swarm(n: usize) -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec(
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Vec2::new(x, y)),
        n,
    )
}

proptest! {
    #[test]
    fn e_f_ignores_translation_rotation_and_scale(
        xs in swarm(7),
        best in 0usize..7,
        shift in (-100.0..100.0f64, -100.0..100.0f64),
        angle in 0.0..std::f64::consts::TAU,
        scale in 0.1..10.0f64,
    ) {
        let e = adapt::evolutionary_factor(&xs, best).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let moved: Vec<Vec2> = xs
            .iter()
            .map(|p| scale * Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) + Vec2::new(shift.0, shift.1))
            .collect();
        let e2 = adapt::evolutionary_factor(&moved, best).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!((e - e2).abs() < 1e-9, "{} vs {}", e, e2);
    }

    #[test]
    fn leader_step_has_cognitive_length_and_far_drones_close_in(
        xs in swarm(8),
        leader in 0usize..8,
        seed in any::<u64>(),
        frac_s in 0.05..0.95f64,
        frac_c in 0.0..0.99f64,
    ) {
        let frac_s = frac_s.min(1.0 / (1.0 + frac_c));
        let (c_s, c_c) = adapt::translate_fractions(frac_s, frac_c, 5.0).unwrap();
        let mut rng = SwarmRng::new(seed, xs.len());
        let v = pso_like_update(&xs, leader, c_s, c_c, &mut rng);
        prop_assert!((v[leader].norm() - c_c).abs() < 1e-12);
        let g = xs[leader] + v[leader];
        for i in 0..xs.len() {
            let before = xs[i].distance(xs[leader]);
            if i != leader && before >= c_s {
                prop_assert!((xs[i] + v[i]).distance(g) <= before + c_c + 1e-9);
            }
        }
    }
}
