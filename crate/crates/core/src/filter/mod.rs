//! Exact information states.
//!
//! The team belief `Π_t` is propagated by a predict/correct filter that only
//! ever sees realized observation and decision values. A member's belief
//! `Π_t^k` additionally depends on the other members' strategies and is
//! computed from a joint conditional over states and full histories.

mod conditional;

pub use conditional::{member_belief, member_conditional, recombine, JointConditional, Particle};
pub(crate) use conditional::{advance, initial_particles, Measure};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{InformationStructure, JointHistory, ReconstructError, TeamModel, TeamViews};
use crate::strategy::StrategyError;

/// Tolerance on the total mass of a normalized belief.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub probs: Vec<f64>,
    pub time: usize,
}

impl Belief {
    pub fn new(probs: Vec<f64>, time: usize) -> Self {
        Self { probs, time }
    }

    pub fn delta(n: usize, x: usize, time: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Self { probs, time }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn scaled(&self, rho: f64) -> Self {
        Self::new(self.probs.iter().map(|p| p * rho).collect(), self.time)
    }

    pub fn is_normalized(&self) -> bool {
        self.probs.iter().all(|p| *p >= 0.0) && (self.mass() - 1.0).abs() <= NORM_TOL
    }

    /// `λ self + (1-λ) other`.
    pub fn mix(&self, other: &Belief, lambda: f64) -> Self {
        Self::new(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
            self.time,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("observation has probability zero at time {time}")]
    ZeroLikelihood { time: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("views do not determine the joint history: {0}")]
    IncompleteHistory(ReconstructError),
    #[error("views are inconsistent: {0}")]
    InconsistentViews(String),
    #[error("co-strategy undefined: {0}")]
    UndefinedCoStrategy(#[from] StrategyError),
}

fn check_joint(model: &TeamModel, parts: &[usize], what: &str) -> Result<usize, FilterError> {
    let space = if what == "action" {
        model.joint_actions()
    } else {
        model.joint_observations()
    };
    if !space.contains(parts) {
        return Err(FilterError::DimensionMismatch(format!(
            "joint {what} {parts:?} outside {:?}",
            space.radices()
        )));
    }
    Ok(space.flatten(parts))
}

fn check_belief(model: &TeamModel, belief: &Belief) -> Result<(), FilterError> {
    if belief.len() != model.num_states() {
        return Err(FilterError::DimensionMismatch(format!(
            "belief has {} entries, model has {} states",
            belief.len(),
            model.num_states()
        )));
    }
    Ok(())
}

/// `Σ_x p(x'|x,u) w(x)`; linear in `w`.
pub(crate) fn predict_weights(model: &TeamModel, weights: &[f64], ju: usize) -> Vec<f64> {
    let n = model.num_states();
    let mut out = vec![0.0; n];
    for (x, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (next, p) in out.iter_mut().zip(model.transition_row(x, ju)) {
            *next += p * w;
        }
    }
    out
}

/// `w(x) Π_k p(y^k|x)`; linear in `w`.
pub(crate) fn weigh_by_likelihood(model: &TeamModel, weights: &[f64], joint_obs: &[usize]) -> Vec<f64> {
    weights
        .iter()
        .enumerate()
        .map(|(x, w)| w * model.joint_obs_likelihood(x, joint_obs))
        .collect()
}

fn normalize(weights: Vec<f64>, time: usize) -> Result<Belief, FilterError> {
    let z: f64 = weights.iter().sum();
    if z <= 0.0 {
        return Err(FilterError::ZeroLikelihood { time });
    }
    Ok(Belief::new(weights.into_iter().map(|w| w / z).collect(), time))
}

/// One-step prediction `ψ_t`: the law of `X_{t+1}` before `Y_{t+1}` arrives.
pub fn predict(belief: &Belief, joint_action: &[usize], model: &TeamModel) -> Result<Belief, FilterError> {
    check_belief(model, belief)?;
    let ju = check_joint(model, joint_action, "action")?;
    Ok(Belief::new(predict_weights(model, &belief.probs, ju), belief.time + 1))
}

/// Bayes correction `φ_t` with every member's observation at once.
pub fn correct(belief: &Belief, joint_obs: &[usize], model: &TeamModel) -> Result<Belief, FilterError> {
    check_belief(model, belief)?;
    check_joint(model, joint_obs, "observation")?;
    normalize(weigh_by_likelihood(model, &belief.probs, joint_obs), belief.time)
}

/// `θ_t`: predict under `u_t`, then correct with `y_{t+1}`.
pub fn team_update(
    belief: &Belief,
    joint_action: &[usize],
    joint_obs: &[usize],
    model: &TeamModel,
) -> Result<Belief, FilterError> {
    correct(&predict(belief, joint_action, model)?, joint_obs, model)
}

/// Runs the team filter from the prior along a full joint history.
pub fn belief_along(model: &TeamModel, history: &JointHistory) -> Result<Belief, FilterError> {
    let prior = Belief::new(model.initial_dist.clone(), 0);
    let mut b = correct(&prior, &history.observations[0], model)?;
    for (u, y) in history.actions.iter().zip(&history.observations[1..]) {
        b = team_update(&b, u, y, model)?;
    }
    Ok(b)
}

/// `Π_t(Δ_t, Λ_t^{1:K})` from the team-level views.
pub fn team_belief_from_history(
    model: &TeamModel,
    structure: &InformationStructure,
    views: &TeamViews,
) -> Result<Belief, FilterError> {
    if views.private.len() != model.num_members {
        return Err(FilterError::DimensionMismatch(format!(
            "{} private views for {} members",
            views.private.len(),
            model.num_members
        )));
    }
    let history = views
        .reconstruct(model.num_members)
        .map_err(FilterError::IncompleteHistory)?;
    if history.team_views(structure) != *views {
        return Err(FilterError::InconsistentViews(
            "views were not cut by this information structure".into(),
        ));
    }
    belief_along(model, &history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::toy_model;

    fn close(a: &[f64], b: &[f64]) -> bool {
        crate::numeric::max_abs_diff(a, b) <= 1e-12
    }

    #[test]
    fn toy_predict() {
        let m = toy_model();
        let b = predict(&Belief::new(vec![0.6, 0.4], 0), &[1, 1], &m).unwrap();
        assert!(close(&b.probs, &[0.54, 0.46]));
        assert_eq!(b.time, 1);
    }

    #[test]
    fn toy_correct() {
        let m = toy_model();
        let b = correct(&Belief::new(vec![0.5, 0.5], 0), &[0, 0], &m).unwrap();
        assert!(close(&b.probs, &[16.0 / 17.0, 1.0 / 17.0]));
    }

    #[test]
    fn toy_team_update() {
        let m = toy_model();
        let b = team_update(&Belief::new(vec![0.6, 0.4], 0), &[1, 1], &[0, 0], &m).unwrap();
        // 0.54 * 0.64 and 0.46 * 0.04, normalized.
        let z = 0.3456 + 0.0184;
        assert!(close(&b.probs, &[0.3456 / z, 0.0184 / z]));
    }

    #[test]
    fn deterministic_transition_moves_delta() {
        let mut m = toy_model();
        m.transition[0][2] = vec![0.0, 1.0];
        let b = predict(&Belief::delta(2, 0, 0), &[1, 0], &m).unwrap();
        assert_eq!(b.probs, vec![0.0, 1.0]);
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let mut m = toy_model();
        m.observation_kernels[0] = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let e = correct(&Belief::delta(2, 0, 3), &[1, 0], &m).unwrap_err();
        assert_eq!(e, FilterError::ZeroLikelihood { time: 3 });
    }

    #[test]
    fn uninformative_sensor_leaves_belief_alone() {
        let mut m = toy_model();
        m.observation_kernels = vec![vec![vec![0.5, 0.5]; 2]; 2];
        let b = Belief::new(vec![0.3, 0.7], 0);
        assert!(close(&correct(&b, &[1, 0], &m).unwrap().probs, &b.probs));
    }

    #[test]
    fn dimension_checks() {
        let m = toy_model();
        assert!(matches!(
            predict(&Belief::new(vec![1.0], 0), &[0, 0], &m),
            Err(FilterError::DimensionMismatch(_))
        ));
        assert!(matches!(
            predict(&Belief::new(vec![1.0, 0.0], 0), &[0, 2], &m),
            Err(FilterError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn no_sharing_views_still_determine_the_history() {
        let m = toy_model();
        let h = JointHistory::initial(vec![0, 1]).extended(&[1, 0], &[1, 1]);
        let s = InformationStructure::NoSharing;
        let b = team_belief_from_history(&m, &s, &h.team_views(&s)).unwrap();
        assert_eq!(b, belief_along(&m, &h).unwrap());
    }

    #[test]
    fn truncated_views_are_incomplete() {
        let m = toy_model();
        let s = InformationStructure::NoSharing;
        let mut v = JointHistory::initial(vec![0, 1]).team_views(&s);
        v.private[1].clear();
        assert!(matches!(
            team_belief_from_history(&m, &s, &v),
            Err(FilterError::IncompleteHistory(_))
        ));
    }
}
