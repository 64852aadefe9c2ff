use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use teamdp::filter::{belief_along, correct, member_belief, recombine, team_belief_from_history};
use teamdp::model::{InformationStructure, JointHistory, TeamModel};
use teamdp::numeric::max_abs_diff;
use teamdp::oracle::{exact_posterior, ConditioningView};
use teamdp::random::{random_model, ModelShape};
use teamdp::sim::rollout;
use teamdp::strategy::{CentralizedTable, Fallback, HashedStrategy, Override};
use teamdp::{Belief, Policy};

fn instance(seed: u64, states: usize, members: usize, horizon: usize, delay: usize) -> (TeamModel, InformationStructure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_model(&ModelShape::binary(states, members, horizon), &mut rng);
    (model, InformationStructure::delayed_sharing(members, delay))
}

fn hashed(model: &TeamModel, seed: u64) -> HashedStrategy {
    HashedStrategy {
        seed,
        action_counts: model.action_counts(),
        centralized: false,
    }
}

fn sampled_history(model: &TeamModel, s: &InformationStructure, g: &dyn Policy, seed: u64, t: usize) -> JointHistory {
    rollout(model, s, g, seed).unwrap().trajectory.history(t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn team_and_member_beliefs_match_the_oracle(
        seed in any::<u64>(),
        states in 1usize..=4,
        members in 1usize..=2,
        horizon in 1usize..=3,
        delay in 1usize..=2,
        t_frac in 0.0f64..1.0,
    ) {
        let (m, s) = instance(seed, states, members, horizon, delay);
        let g = hashed(&m, seed ^ 0x5eed);
        let t = ((horizon + 1) as f64 * t_frac) as usize;
        let h = sampled_history(&m, &s, &g, seed, t);

        let views = h.team_views(&s);
        let team = team_belief_from_history(&m, &s, &views).unwrap();
        let oracle = exact_posterior(&m, &s, &g, ConditioningView::Team(&views)).unwrap();
        prop_assert!(max_abs_diff(&team.probs, &oracle.probs) <= 1e-12);
        prop_assert!(team.is_normalized());

        for k in 0..members {
            let view = h.member_view(&s, k);
            let mine = member_belief(&m, &s, &g, &view).unwrap();
            let oracle = exact_posterior(&m, &s, &g, ConditioningView::Member(&view)).unwrap();
            prop_assert!(max_abs_diff(&mine.probs, &oracle.probs) <= 1e-12);
            prop_assert!(mine.is_normalized());

            let back = recombine(&mine, &m, &s, &g, &views, k).unwrap();
            prop_assert!(max_abs_diff(&back.probs, &team.probs) <= 1e-12);
        }
    }

    #[test]
    fn joint_correction_equals_member_by_member(
        seed in any::<u64>(),
        states in 1usize..=4,
        y0 in 0usize..2,
        y1 in 0usize..2,
    ) {
        let (m, _) = instance(seed, states, 2, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let prior = teamdp::random::random_belief(states, &mut rng);
        let joint = correct(&prior, &[y0, y1], &m);
        let mut w = prior.probs.clone();
        for (k, y) in [y0, y1].into_iter().enumerate() {
            for (x, p) in w.iter_mut().enumerate() {
                *p *= m.observation_kernels[k][x][y];
            }
            let z: f64 = w.iter().sum();
            if z > 0.0 {
                w.iter_mut().for_each(|p| *p /= z);
            }
        }
        if let Ok(b) = joint {
            prop_assert!(max_abs_diff(&b.probs, &w) <= 1e-12);
        }
    }

    #[test]
    fn team_belief_ignores_the_strategy_that_produced_the_history(
        seed in any::<u64>(),
        states in 1usize..=4,
        horizon in 1usize..=3,
        delay in 1usize..=2,
    ) {
        let (m, s) = instance(seed, states, 2, horizon, delay);
        let g1 = hashed(&m, seed);
        let h = sampled_history(&m, &s, &g1, seed, horizon);
        // g2 replays the realized actions along h and differs elsewhere.
        let mut table = std::collections::BTreeMap::new();
        for t in 0..horizon {
            let prefix = JointHistory {
                observations: h.observations[..=t].to_vec(),
                actions: h.actions[..t].to_vec(),
            };
            table.insert(prefix, h.actions[t].clone());
        }
        let g2 = CentralizedTable { table, fallback: Fallback::FirstAction };

        let views = h.team_views(&s);
        let b1 = team_belief_from_history(&m, &s, &views).unwrap();
        prop_assert_eq!(&b1, &belief_along(&m, &h).unwrap());
        let p1 = exact_posterior(&m, &s, &g1, ConditioningView::Team(&views)).unwrap();
        let p2 = exact_posterior(&m, &s, &g2, ConditioningView::Team(&views)).unwrap();
        prop_assert!(max_abs_diff(&p1.probs, &p2.probs) <= 1e-12);
        prop_assert!(max_abs_diff(&p1.probs, &b1.probs) <= 1e-12);
    }

    #[test]
    fn member_belief_ignores_its_own_strategy(
        seed in any::<u64>(),
        states in 1usize..=4,
        horizon in 1usize..=3,
        delay in 1usize..=2,
        k in 0usize..2,
    ) {
        let (m, s) = instance(seed, states, 2, horizon, delay);
        let others = hashed(&m, seed);
        let h = sampled_history(&m, &s, &others, seed, horizon);
        let view = h.member_view(&s, k);
        let own_a = hashed(&m, seed.wrapping_add(17));
        let own_b = hashed(&m, seed.wrapping_add(91));
        let a = member_belief(&m, &s, &Override { member: k, own: &own_a, others: &others }, &view).unwrap();
        let b = member_belief(&m, &s, &Override { member: k, own: &own_b, others: &others }, &view).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn correction_preserves_normalization(seed in any::<u64>(), states in 1usize..=4, y in 0usize..2) {
        let (m, _) = instance(seed, states, 1, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prior = teamdp::random::random_belief(states, &mut rng);
        let post: Belief = correct(&prior, &[y], &m).unwrap();
        prop_assert!(post.is_normalized());
        prop_assert!(post.probs.iter().all(|p| *p >= 0.0));
    }
}
