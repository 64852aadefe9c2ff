//! Reference and random instances for tests, the acceptance suite and demos.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Uniform};

use crate::model::{InformationStructure, StageCost, TeamModel};

/// Sizes of a random instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub num_states: usize,
    pub action_counts: Vec<usize>,
    pub observation_counts: Vec<usize>,
    pub horizon: usize,
}

impl ModelShape {
    pub fn binary(num_states: usize, num_members: usize, horizon: usize) -> Self {
        Self {
            num_states,
            action_counts: vec![2; num_members],
            observation_counts: vec![2; num_members],
            horizon,
        }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Flat Dirichlet sample: normalized unit exponentials.
pub fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn random_belief<R: Rng + ?Sized>(n: usize, rng: &mut R) -> crate::Belief {
    crate::Belief::new(random_distribution(n, rng), 0)
}

/// Dense random model: every kernel entry is positive, costs are uniform on
/// `[0, 10)`.
pub fn random_model<R: Rng + ?Sized>(shape: &ModelShape, rng: &mut R) -> TeamModel {
    let n = shape.num_states;
    let k = shape.action_counts.len();
    let joint: usize = shape.action_counts.iter().product();
    let cost = Uniform::new(0.0, 10.0).expect("valid range");
    TeamModel {
        num_members: k,
        horizon: shape.horizon,
        states: labels("x", n),
        actions: shape.action_counts.iter().map(|&m| labels("u", m)).collect(),
        observations: shape
            .observation_counts
            .iter()
            .map(|&m| labels("y", m))
            .collect(),
        initial_dist: random_distribution(n, rng),
        transition: (0..n)
            .map(|_| (0..joint).map(|_| random_distribution(n, rng)).collect())
            .collect(),
        observation_kernels: shape
            .observation_counts
            .iter()
            .map(|&m| (0..n).map(|_| random_distribution(m, rng)).collect())
            .collect(),
        stage_cost: StageCost::Stationary(
            (0..n)
                .map(|_| (0..joint).map(|_| cost.sample(rng)).collect())
                .collect(),
        ),
        terminal_cost: (0..n).map(|_| cost.sample(rng)).collect(),
    }
}

/// Makes `member` blind: it always observes its first symbol.
pub fn make_blind(model: &mut TeamModel, member: usize) {
    for row in &mut model.observation_kernels[member] {
        row.iter_mut().for_each(|p| *p = 0.0);
        row[0] = 1.0;
    }
}

/// Gives `member` a perfect sensor: it observes the state index. Requires as
/// many observation symbols as states.
pub fn make_perfect(model: &mut TeamModel, member: usize) {
    let n = model.num_states();
    assert_eq!(model.observations[member].len(), n);
    for (x, row) in model.observation_kernels[member].iter_mut().enumerate() {
        row.iter_mut().for_each(|p| *p = 0.0);
        row[x] = 1.0;
    }
}

/// Two states, two members with binary actions and binary sensors.
///
/// Each sensor reports the state correctly with probability 0.8. The state
/// flips with probability `0.1 + 0.1 * (u^0 + u^1)`. Being in state 1 costs 2
/// per stage, each active decision costs 0.5, and ending in state 1 costs 5.
pub fn toy_model() -> TeamModel {
    let flip = |u0: usize, u1: usize| 0.1 + 0.1 * (u0 + u1) as f64;
    let sensor = vec![vec![0.8, 0.2], vec![0.2, 0.8]];
    let mut transition = vec![Vec::new(), Vec::new()];
    let mut cost = vec![Vec::new(), Vec::new()];
    for u0 in 0..2 {
        for u1 in 0..2 {
            let p = flip(u0, u1);
            transition[0].push(vec![1.0 - p, p]);
            transition[1].push(vec![p, 1.0 - p]);
            let effort = 0.5 * (u0 + u1) as f64;
            cost[0].push(effort);
            cost[1].push(2.0 + effort);
        }
    }
    TeamModel {
        num_members: 2,
        horizon: 2,
        states: vec!["good".into(), "bad".into()],
        actions: vec![vec!["wait".into(), "act".into()]; 2],
        observations: vec![vec!["good".into(), "bad".into()]; 2],
        initial_dist: vec![0.5, 0.5],
        transition,
        observation_kernels: vec![sensor.clone(), sensor],
        stage_cost: StageCost::Stationary(cost),
        terminal_cost: vec![0.0, 5.0],
    }
}

/// A named instance together with its information structure.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub model: TeamModel,
    pub structure: InformationStructure,
    /// Single member, or every member observes the state exactly with
    /// one-step delayed sharing, so the member and manager programs coincide.
    pub classical: bool,
}

/// Twenty small instances whose centralized strategy tables fit within the
/// default enumeration budget: single-member problems over two and three
/// stages, two-member one-stage problems, two-stage problems with a blind
/// second member, and two-stage problems where both members see the state.
pub fn enumerable_instances(seed: u64) -> Vec<Instance> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..6 {
        let shape = ModelShape::binary(2 + i % 3, 1, 2 + i % 2);
        out.push(Instance {
            name: format!("single-{i}"),
            model: random_model(&shape, &mut rng),
            structure: InformationStructure::delayed_sharing(1, 1),
            classical: true,
        });
    }
    for i in 0..5 {
        let shape = ModelShape::binary(2 + i % 3, 2, 1);
        out.push(Instance {
            name: format!("one-stage-{i}"),
            model: random_model(&shape, &mut rng),
            structure: InformationStructure::delayed_sharing(2, 1 + i % 2),
            classical: false,
        });
    }
    for i in 0..5 {
        let mut model = random_model(&ModelShape::binary(2 + i % 2, 2, 2), &mut rng);
        make_blind(&mut model, 1);
        out.push(Instance {
            name: format!("blind-{i}"),
            model,
            structure: InformationStructure::delayed_sharing(2, 1 + i % 2),
            classical: false,
        });
    }
    for i in 0..4 {
        let mut model = random_model(&ModelShape::binary(2, 2, 2), &mut rng);
        make_perfect(&mut model, 0);
        make_perfect(&mut model, 1);
        out.push(Instance {
            name: format!("perfect-{i}"),
            model,
            structure: InformationStructure::delayed_sharing(2, 1),
            classical: true,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_models_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for num_states in 1..=4 {
            for members in 1..=2 {
                let shape = ModelShape::binary(num_states, members, 2);
                let mut model = random_model(&shape, &mut rng);
                assert!(validate_model(&model).is_empty());
                make_blind(&mut model, 0);
                assert!(validate_model(&model).is_empty());
            }
        }
    }

    #[test]
    fn toy_flip_probabilities() {
        let m = toy_model();
        assert_eq!(m.transition[0][0], vec![0.9, 0.1]);
        assert!((m.transition[0][3][1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn enumerable_instances_fit_the_default_budget() {
        let all = enumerable_instances(1);
        assert_eq!(all.len(), 20);
        for inst in &all {
            assert!(validate_model(&inst.model).is_empty(), "{}", inst.name);
            let count = crate::oracle::count_centralized(&inst.model, &inst.structure);
            assert!(count <= crate::oracle::DEFAULT_ENUMERATION_BUDGET, "{}: {count}", inst.name);
        }
    }
}
