use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use teamdp::model::InformationStructure;
use teamdp::oracle::{exact_cost, history_weights, outcomes};
use teamdp::random::{random_model, toy_model, ModelShape};
use teamdp::sim::{estimate_cost, SimConfig};
use teamdp::strategy::{ConstantStrategy, HashedStrategy};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectory_law_sums_to_one(seed in any::<u64>(), states in 1usize..=3, members in 1usize..=2, horizon in 0usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&ModelShape::binary(states, members, horizon), &mut rng);
        let s = InformationStructure::delayed_sharing(members, 1);
        let g = HashedStrategy { seed, action_counts: m.action_counts(), centralized: false };
        let all = outcomes(&m, &s, &g).unwrap();
        let total: f64 = all.iter().map(|o| o.probability.unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let expected: f64 = all.iter().map(|o| o.probability.unwrap() * o.cost).sum();
        prop_assert!((expected - exact_cost(&m, &s, &g).unwrap()).abs() <= 1e-9 * (1.0 + expected.abs()));

        for stage in history_weights(&m, &s, &g).unwrap() {
            let mass: f64 = stage.values().flatten().sum();
            prop_assert!((mass - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn simulation_agrees_with_the_exact_cost() {
    let m = toy_model();
    let s = InformationStructure::delayed_sharing(2, 1);
    let policies: Vec<Box<dyn teamdp::Policy>> = vec![
        Box::new(ConstantStrategy { actions: vec![1, 0] }),
        Box::new(HashedStrategy {
            seed: 3,
            action_counts: vec![2, 2],
            centralized: false,
        }),
    ];
    for g in &policies {
        let exact = exact_cost(&m, &s, g.as_ref()).unwrap();
        let est = estimate_cost(&m, &s, g.as_ref(), SimConfig { samples: 200_000, seed: 21 }).unwrap();
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.std_error,
            "{} vs {exact} (se {})",
            est.mean,
            est.std_error
        );
    }
}
