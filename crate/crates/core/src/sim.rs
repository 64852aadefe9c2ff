//! Seeded Monte Carlo rollouts.
//!
//! Sample `i` draws from ChaCha8 seeded with `seed` on stream `i`, so every
//! sample has its own generator and the estimate is the same however the
//! samples are scheduled.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{InformationStructure, JointHistory, TeamModel, Trajectory};
use crate::numeric::mean_and_std_error;
use crate::oracle::{trajectory_cost, WeightedOutcome};
use crate::strategy::{Policy, StrategyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// The generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(probs)
        .expect("validated probability vector")
        .sample(rng)
}

/// One closed-loop run driven by `rng`.
pub fn rollout_with<R: Rng + ?Sized>(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
    rng: &mut R,
) -> Result<WeightedOutcome, StrategyError> {
    let joint = model.joint_actions();
    let observe = |x: usize, rng: &mut R| -> Vec<usize> {
        model
            .observation_kernels
            .iter()
            .map(|kernel| draw(&kernel[x], rng))
            .collect()
    };
    let mut x = draw(&model.initial_dist, rng);
    let mut states = vec![x];
    let mut history = JointHistory::initial(observe(x, rng));
    for _ in 0..model.horizon {
        let u = policy.joint_action(structure, &history)?;
        x = draw(model.transition_row(x, joint.flatten(&u)), rng);
        states.push(x);
        history = history.extended(&u, &observe(x, rng));
    }
    let trajectory = Trajectory {
        states,
        observations: history.observations,
        actions: history.actions,
    };
    let cost = trajectory_cost(model, &trajectory);
    Ok(WeightedOutcome {
        trajectory,
        probability: None,
        cost,
    })
}

/// One closed-loop run; the same seed always gives the same trajectory. This
/// is sample 0 of [`estimate_cost`] with the same seed.
pub fn rollout(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
    seed: u64,
) -> Result<WeightedOutcome, StrategyError> {
    rollout_with(model, structure, policy, &mut sample_rng(seed, 0))
}

/// Sample mean and standard error of the rollout cost.
pub fn estimate_cost(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
    config: SimConfig,
) -> Result<Estimate, StrategyError> {
    assert!(config.samples >= 1, "need at least one sample");
    let costs: Vec<f64> = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| rollout_with(model, structure, policy, &mut sample_rng(config.seed, i)).map(|o| o.cost))
        .collect::<Result<_, _>>()?;
    let (mean, std_error) = mean_and_std_error(&costs);
    Ok(Estimate {
        mean,
        std_error,
        samples: config.samples,
    })
}
