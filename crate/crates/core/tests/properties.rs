use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svmc_core::analysis::{canonicalize, pearson, wilson_interval, Z_95};
use svmc_core::instances::{
    build_chimera, ising_energy, random_instance, ChimeraSpec, CouplingModel, SpinConfig,
};
use svmc_core::oracle::ground_state;
use svmc_core::svmc::{local_delta_energy, model_energy, round_to_spins, RotorState};

fn spins(n: usize) -> impl Strategy<Value = SpinConfig> {
    prop::collection::vec(prop::bool::ANY, n)
        .prop_map(|v| SpinConfig(v.into_iter().map(|b| if b { 1 } else { -1 }).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_idempotent_and_flip_invariant(c in spins(16)) {
        let canon = canonicalize(&c);
        prop_assert_eq!(canonicalize(&canon), canon.clone());
        prop_assert_eq!(canonicalize(&c.flipped()), canon.clone());
        prop_assert_eq!(canon.0[0], -1);
    }

    #[test]
    fn no_config_beats_the_oracle(seed in any::<u64>(), c in spins(16)) {
        let adj = build_chimera(&ChimeraSpec::new(1, 2, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&adj, &mut rng, CouplingModel::Range(5), "p").unwrap();
        let g = ground_state(&inst).unwrap();
        prop_assert!(ising_energy(&c, &inst).unwrap() >= g.energy - 1e-9);
        prop_assert!(ising_energy(&c.flipped(), &inst).unwrap() >= g.energy - 1e-9);
    }

    #[test]
    fn rounded_state_energy_matches_spin_energy(seed in any::<u64>()) {
        // with A = 0 and angles at 0 or pi the rotor energy is B times the Ising energy
        let adj = build_chimera(&ChimeraSpec::new(1, 1, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&adj, &mut rng, CouplingModel::Pm1, "p").unwrap();
        let state = RotorState::uniform(&inst, &mut rng);
        let z = round_to_spins(&state);
        let angles = z.0.iter().map(|&s| if s > 0 { 0.0 } else { std::f64::consts::PI }).collect();
        let snapped = RotorState::from_angles(&inst, angles).unwrap();
        let e = model_energy(&snapped, 0.0, 2.0, &inst).unwrap();
        prop_assert!((e - 2.0 * ising_energy(&z, &inst).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn delta_energy_antisymmetric(seed in any::<u64>(), site in 0usize..8, theta in 0.0..std::f64::consts::TAU) {
        let adj = build_chimera(&ChimeraSpec::new(1, 1, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&adj, &mut rng, CouplingModel::Range(3), "p").unwrap();
        let state = RotorState::uniform(&inst, &mut rng);
        let old = state.theta()[site];
        let mut angles = state.theta().to_vec();
        angles[site] = theta;
        let moved = RotorState::from_angles(&inst, angles).unwrap();
        let fwd = local_delta_energy(&state, site, theta, 1.3, 0.7, &inst).unwrap();
        let back = local_delta_energy(&moved, site, old, 1.3, 0.7, &inst).unwrap();
        prop_assert!((fwd + back).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1u64..500, frac in 0.0..=1.0f64) {
        let k = ((n as f64) * frac).round() as u64;
        let (lo, hi) = wilson_interval(k, n, Z_95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn pearson_affine_invariance(
        xs in prop::collection::vec(-10.0..10.0f64, 3..40),
        slope in 0.1..10.0f64,
        shift in -5.0..5.0f64,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + i as f64).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| slope * x + shift).collect();
        if let (Ok(r), Ok(r2)) = (pearson(&xs, &ys), pearson(&scaled, &ys)) {
            prop_assert!((r - r2).abs() < 1e-12);
        }
    }
}
