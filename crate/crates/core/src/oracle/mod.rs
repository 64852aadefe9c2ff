//! Ground truth by brute force. Nothing here uses the filters or the dynamic
//! programs; the probabilities are accumulated directly from the kernels.

mod enumerate;

pub use enumerate::{
    count_centralized, enumerate_centralized, enumerate_decentralized, Enumeration,
    DEFAULT_ENUMERATION_BUDGET,
};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::filter::Belief;
use crate::model::{HistoryView, InformationStructure, JointHistory, TeamModel, TeamViews, Trajectory};
use crate::strategy::{Policy, StrategyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("conditioning view has probability zero")]
    ZeroProbabilityView,
    #[error("{count} candidate strategies exceed the enumeration budget of {budget}")]
    BudgetExceeded { count: String, budget: u64 },
}

/// One trajectory of the closed-loop system with its probability and cost.
/// Sampled trajectories leave the probability unset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedOutcome {
    pub trajectory: Trajectory,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    pub cost: f64,
}

/// Cost of a trajectory: `Σ_{t<T} c_t(x_t, u_t) + c_T(x_T)`.
pub fn trajectory_cost(model: &TeamModel, traj: &Trajectory) -> f64 {
    let joint = model.joint_actions();
    let running: f64 = traj
        .actions
        .iter()
        .enumerate()
        .map(|(t, u)| model.stage_cost(t, traj.states[t], joint.flatten(u)))
        .sum();
    running + model.terminal_cost[traj.states[model.horizon]]
}

struct Walker<'a> {
    model: &'a TeamModel,
    structure: &'a InformationStructure,
    policy: &'a dyn Policy,
    joint_obs: Vec<Vec<usize>>,
}

impl Walker<'_> {
    fn new<'a>(model: &'a TeamModel, structure: &'a InformationStructure, policy: &'a dyn Policy) -> Walker<'a> {
        Walker {
            model,
            structure,
            policy,
            joint_obs: model.joint_observations().iter().collect(),
        }
    }

    fn obs_prob(&self, x: usize, y: &[usize]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(k, &yk)| self.model.observation_kernels[k][x][yk])
            .product()
    }

    /// Visits every positive-probability `(x_0..x_t, y_0..y_t, u_0..u_{t-1})`
    /// prefix that reaches `stop`, one state/observation branch at a time.
    fn walk(
        &self,
        stop: usize,
        visit: &mut dyn FnMut(&[usize], &JointHistory, f64),
    ) -> Result<(), StrategyError> {
        let mut states = Vec::new();
        for (x, &p0) in self.model.initial_dist.iter().enumerate() {
            if p0 == 0.0 {
                continue;
            }
            for y in &self.joint_obs {
                let p = p0 * self.obs_prob(x, y);
                if p > 0.0 {
                    states.push(x);
                    self.descend(stop, &mut states, &JointHistory::initial(y.clone()), p, visit)?;
                    states.pop();
                }
            }
        }
        Ok(())
    }

    fn descend(
        &self,
        stop: usize,
        states: &mut Vec<usize>,
        h: &JointHistory,
        p: f64,
        visit: &mut dyn FnMut(&[usize], &JointHistory, f64),
    ) -> Result<(), StrategyError> {
        let t = h.time();
        if t == stop {
            visit(states, h, p);
            return Ok(());
        }
        let u = self.policy.joint_action(self.structure, h)?;
        let ju = self.model.joint_actions().flatten(&u);
        let x = states[t];
        for (x_next, &q) in self.model.transition[x][ju].iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            for y in &self.joint_obs {
                let pr = p * q * self.obs_prob(x_next, y);
                if pr > 0.0 {
                    states.push(x_next);
                    self.descend(stop, states, &h.extended(&u, y), pr, visit)?;
                    states.pop();
                }
            }
        }
        Ok(())
    }
}

/// Every positive-probability trajectory under `policy`.
pub fn outcomes(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
) -> Result<Vec<WeightedOutcome>, OracleError> {
    let mut out = Vec::new();
    Walker::new(model, structure, policy).walk(model.horizon, &mut |states, h, p| {
        let trajectory = Trajectory {
            states: states.to_vec(),
            observations: h.observations.clone(),
            actions: h.actions.clone(),
        };
        let cost = trajectory_cost(model, &trajectory);
        out.push(WeightedOutcome {
            trajectory,
            probability: Some(p),
            cost,
        });
    })?;
    Ok(out)
}

/// The joint law of `X_t` and `H_t` for every reachable history at every
/// stage, as unnormalized weights `P(X_t = x, H_t = h)`.
pub fn history_weights(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
) -> Result<Vec<BTreeMap<JointHistory, Vec<f64>>>, OracleError> {
    let n = model.num_states();
    let joint_u = model.joint_actions();
    let joint_obs: Vec<Vec<usize>> = model.joint_observations().iter().collect();
    let mut stages = vec![BTreeMap::new()];
    for y in &joint_obs {
        let w: Vec<f64> = (0..n)
            .map(|x| model.initial_dist[x] * model.joint_obs_likelihood(x, y))
            .collect();
        if w.iter().any(|v| *v > 0.0) {
            stages[0].insert(JointHistory::initial(y.clone()), w);
        }
    }
    for t in 0..model.horizon {
        let mut next = BTreeMap::new();
        for (h, w) in &stages[t] {
            let u = policy.joint_action(structure, h)?;
            let ju = joint_u.flatten(&u);
            for y in &joint_obs {
                let mut w_next = vec![0.0; n];
                for (x, wx) in w.iter().enumerate() {
                    for (x2, q) in model.transition[x][ju].iter().enumerate() {
                        w_next[x2] += wx * q * model.joint_obs_likelihood(x2, y);
                    }
                }
                if w_next.iter().any(|v| *v > 0.0) {
                    next.insert(h.extended(&u, y), w_next);
                }
            }
        }
        stages.push(next);
    }
    Ok(stages)
}

fn expected_cost_from(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
    h: &JointHistory,
    w: &[f64],
    joint_obs: &[Vec<usize>],
) -> Result<f64, OracleError> {
    let t = h.time();
    if t == model.horizon {
        return Ok(w.iter().zip(&model.terminal_cost).map(|(a, c)| a * c).sum());
    }
    let u = policy.joint_action(structure, h)?;
    let ju = model.joint_actions().flatten(&u);
    let mut total: f64 = w
        .iter()
        .enumerate()
        .map(|(x, a)| a * model.stage_cost(t, x, ju))
        .sum();
    let n = model.num_states();
    for y in joint_obs {
        let mut w_next = vec![0.0; n];
        for (x, wx) in w.iter().enumerate() {
            if *wx == 0.0 {
                continue;
            }
            for (x2, q) in model.transition[x][ju].iter().enumerate() {
                w_next[x2] += wx * q * model.joint_obs_likelihood(x2, y);
            }
        }
        if w_next.iter().any(|v| *v > 0.0) {
            total += expected_cost_from(model, structure, policy, &h.extended(&u, y), &w_next, joint_obs)?;
        }
    }
    Ok(total)
}

/// `J(g)`: expected total cost of `policy`, by depth-first expansion of the
/// observation tree with the joint state weights carried along each branch.
pub fn exact_cost(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
) -> Result<f64, OracleError> {
    let n = model.num_states();
    let joint_obs: Vec<Vec<usize>> = model.joint_observations().iter().collect();
    let mut total = 0.0;
    for y in &joint_obs {
        let w: Vec<f64> = (0..n)
            .map(|x| model.initial_dist[x] * model.joint_obs_likelihood(x, y))
            .collect();
        if w.iter().any(|v| *v > 0.0) {
            total += expected_cost_from(model, structure, policy, &JointHistory::initial(y.clone()), &w, &joint_obs)?;
        }
    }
    Ok(total)
}

/// Expected cost from time `t` onward given `H_t = h`, when `policy` is
/// followed from `t` on. The actions recorded in `h` are taken as given.
pub fn exact_cost_to_go(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
    h: &JointHistory,
) -> Result<f64, OracleError> {
    let n = model.num_states();
    let joint_u = model.joint_actions();
    let mut w: Vec<f64> = (0..n)
        .map(|x| model.initial_dist[x] * model.joint_obs_likelihood(x, &h.observations[0]))
        .collect();
    for (s, u) in h.actions.iter().enumerate() {
        let ju = joint_u.flatten(u);
        let y = &h.observations[s + 1];
        let mut next = vec![0.0; n];
        for (x, wx) in w.iter().enumerate() {
            for (x2, q) in model.transition[x][ju].iter().enumerate() {
                next[x2] += wx * q * model.joint_obs_likelihood(x2, y);
            }
        }
        w = next;
    }
    let z: f64 = w.iter().sum();
    if z <= 0.0 {
        return Err(OracleError::ZeroProbabilityView);
    }
    let w: Vec<f64> = w.iter().map(|v| v / z).collect();
    let joint_obs: Vec<Vec<usize>> = model.joint_observations().iter().collect();
    expected_cost_from(model, structure, policy, h, &w, &joint_obs)
}

/// What the posterior is conditioned on.
#[derive(Clone, Copy, Debug)]
pub enum ConditioningView<'a> {
    Member(&'a HistoryView),
    Team(&'a TeamViews),
}

/// `P(X_t | view)` under `policy`, from the exact law of all trajectory
/// prefixes up to the view's time.
pub fn exact_posterior(
    model: &TeamModel,
    structure: &InformationStructure,
    policy: &dyn Policy,
    view: ConditioningView<'_>,
) -> Result<Belief, OracleError> {
    let t = match view {
        ConditioningView::Member(v) => v.time,
        ConditioningView::Team(v) => v.time,
    };
    let mut mass = vec![0.0; model.num_states()];
    Walker::new(model, structure, policy).walk(t, &mut |states, h, p| {
        let hit = match view {
            ConditioningView::Member(v) => h.member_view(structure, v.member) == *v,
            ConditioningView::Team(v) => h.team_views(structure) == *v,
        };
        if hit {
            mass[states[t]] += p;
        }
    })?;
    let z: f64 = mass.iter().sum();
    if z <= 0.0 {
        return Err(OracleError::ZeroProbabilityView);
    }
    Ok(Belief::new(mass.iter().map(|m| m / z).collect(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StageCost;
    use crate::random::toy_model;
    use crate::strategy::{ConstantStrategy, HashedStrategy};

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let g = HashedStrategy {
            seed: 1,
            action_counts: vec![2, 2],
            centralized: true,
        };
        let all = outcomes(&m, &s, &g).unwrap();
        let total: f64 = all.iter().map(|o| o.probability.unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = all.iter().map(|o| o.probability.unwrap() * o.cost).sum();
        assert!((mean - exact_cost(&m, &s, &g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_costs_cost_nothing() {
        let mut m = toy_model();
        m.stage_cost = StageCost::Stationary(vec![vec![0.0; 4]; 2]);
        m.terminal_cost = vec![0.0, 0.0];
        let s = InformationStructure::NoSharing;
        assert_eq!(exact_cost(&m, &s, &ConstantStrategy { actions: vec![1, 0] }).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_model_has_one_outcome() {
        let mut m = toy_model();
        m.initial_dist = vec![1.0, 0.0];
        m.observation_kernels = vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]; 2];
        m.transition = vec![vec![vec![0.0, 1.0]; 4], vec![vec![1.0, 0.0]; 4]];
        let s = InformationStructure::delayed_sharing(2, 1);
        let g = ConstantStrategy { actions: vec![1, 0] };
        let all = outcomes(&m, &s, &g).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].trajectory.states, vec![0, 1, 0]);
        // 0.5 at x=0, then 2.5 at x=1, ending in x=0.
        assert_eq!(exact_cost(&m, &s, &g).unwrap(), 3.0);
    }

    #[test]
    fn root_view_is_prior_corrected_by_first_observation() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let g = ConstantStrategy { actions: vec![0, 0] };
        let h = JointHistory::initial(vec![0, 0]);
        let post = exact_posterior(&m, &s, &g, ConditioningView::Team(&h.team_views(&s))).unwrap();
        assert!((post.probs[0] - 16.0 / 17.0).abs() < 1e-12);
    }

    #[test]
    fn cost_to_go_at_roots_averages_to_total_cost() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let g = HashedStrategy {
            seed: 5,
            action_counts: vec![2, 2],
            centralized: true,
        };
        let weights = history_weights(&m, &s, &g).unwrap();
        let mut total = 0.0;
        for (h, w) in &weights[0] {
            let p: f64 = w.iter().sum();
            total += p * exact_cost_to_go(&m, &s, &g, h).unwrap();
        }
        assert!((total - exact_cost(&m, &s, &g).unwrap()).abs() < 1e-12);
    }
}
