//! Backward dynamic programming over exact reachable information states.

mod compare;
mod manager;
mod member;

pub use compare::{
    compare_solutions, CompareOptions, ComparisonReport, DecentralizedOutcome, MemberComparison,
    NodeComparison,
};
pub use manager::{solve_manager, ManagerNode, ManagerSolution};
pub use member::{evaluate_member_value, solve_member, MemberNode, MemberSolution};

use thiserror::Error;

use crate::filter::{predict_weights, weigh_by_likelihood, Belief, FilterError};
use crate::model::{Kind, TeamModel};
use crate::oracle::OracleError;
use crate::strategy::StrategyError;

/// Default cap on the number of nodes in a reachable tree.
pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error(
        "the views cannot drive the team filter: member {member}'s {kind:?} data at time {time} is never available"
    )]
    IncompleteHistory {
        time: usize,
        member: usize,
        kind: Kind,
    },
    #[error("node budget of {budget} exceeded")]
    NodeBudgetExceeded { budget: usize },
    #[error("member {member} out of range")]
    UnknownMember { member: usize },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("co-strategy undefined: {0}")]
    UndefinedCoStrategy(#[from] StrategyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// One observation branch after a joint action: the joint observation, its
/// probability under the (possibly unnormalized) belief, and the normalized
/// posterior.
pub(crate) struct Branch {
    pub obs: Vec<usize>,
    pub probability: f64,
    pub posterior: Belief,
}

/// Positive-probability observation branches of `belief` under joint action
/// `ju`, in joint-observation order.
pub(crate) fn branches(model: &TeamModel, belief: &Belief, ju: usize) -> Vec<Branch> {
    let predicted = predict_weights(model, &belief.probs, ju);
    model
        .joint_observations()
        .iter()
        .filter_map(|obs| {
            let w = weigh_by_likelihood(model, &predicted, &obs);
            let probability: f64 = w.iter().sum();
            (probability > 0.0).then(|| Branch {
                posterior: Belief::new(w.iter().map(|v| v / probability).collect(), belief.time + 1),
                obs,
                probability,
            })
        })
        .collect()
}

/// Result of one Bellman backup.
#[derive(Clone, Debug, PartialEq)]
pub struct Backup {
    pub value: f64,
    /// Flat index of the minimizing joint action.
    pub argmin: usize,
    pub joint_action: Vec<usize>,
}

/// `min_u [ Σ_x c_t(x,u) b(x) + Σ_y Pr(y|b,u) V_{t+1}(θ(b,u,y)) ]`.
///
/// `value_next` receives the normalized posterior, the flat joint action and
/// the joint observation. The belief may be unnormalized: the stage term and
/// the branch probabilities are linear in it, so the value scales with it.
/// Ties go to the first joint action in flat order.
pub fn backup(
    mut value_next: impl FnMut(&Belief, usize, &[usize]) -> f64,
    belief: &Belief,
    t: usize,
    model: &TeamModel,
) -> Backup {
    let joint = model.joint_actions();
    let mut best: Option<(f64, usize)> = None;
    for ju in 0..joint.len() {
        let stage: f64 = belief
            .probs
            .iter()
            .enumerate()
            .map(|(x, b)| b * model.stage_cost(t, x, ju))
            .sum();
        let future: f64 = branches(model, belief, ju)
            .iter()
            .map(|br| br.probability * value_next(&br.posterior, ju, &br.obs))
            .sum();
        let q = stage + future;
        if best.is_none_or(|(v, _)| q < v) {
            best = Some((q, ju));
        }
    }
    let (value, argmin) = best.expect("joint action space is never empty");
    Backup {
        value,
        argmin,
        joint_action: joint.unflatten(argmin),
    }
}

/// `V_t(b)` by direct recursion, independent of any reachable tree.
pub fn evaluate_value(model: &TeamModel, t: usize, belief: &Belief) -> f64 {
    if t >= model.horizon {
        return model.expected_terminal_cost(&belief.probs);
    }
    backup(|post, _, _| evaluate_value(model, t + 1, post), belief, t, model).value
}

/// Optimal expected cost when `X_0` has law `prior`, before `Y_0` is seen:
/// `Σ_{y_0} Pr(y_0) V_0(Π_0(y_0))`.
pub fn evaluate_prior_value(model: &TeamModel, prior: &Belief) -> f64 {
    model
        .joint_observations()
        .iter()
        .map(|y| {
            let w = weigh_by_likelihood(model, &prior.probs, &y);
            let p: f64 = w.iter().sum();
            if p > 0.0 {
                let post = Belief::new(w.iter().map(|v| v / p).collect(), 0);
                p * evaluate_value(model, 0, &post)
            } else {
                0.0
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::toy_model;

    #[test]
    fn terminal_delta_reads_off_cost() {
        let m = toy_model();
        assert_eq!(evaluate_value(&m, 2, &Belief::delta(2, 0, 2)), 0.0);
        assert_eq!(evaluate_value(&m, 2, &Belief::delta(2, 1, 2)), 5.0);
        assert_eq!(evaluate_value(&m, 2, &Belief::new(vec![0.5, 0.5], 2)), 2.5);
    }

    #[test]
    fn zero_costs_give_zero_value() {
        let mut m = toy_model();
        m.stage_cost = crate::model::StageCost::Stationary(vec![vec![0.0; 4]; 2]);
        let b = backup(|_, _, _| 0.0, &Belief::new(vec![0.3, 0.7], 0), 0, &m);
        assert_eq!(b.value, 0.0);
        assert_eq!(b.argmin, 0);
    }

    #[test]
    fn one_step_value_is_brute_force_minimum() {
        let mut m = toy_model();
        m.horizon = 1;
        let b = Belief::new(vec![0.5, 0.5], 0);
        let brute = (0..4)
            .map(|ju| {
                let stage = 0.5 * m.stage_cost(0, 0, ju) + 0.5 * m.stage_cost(0, 1, ju);
                let next1 = 0.5 * m.transition[0][ju][1] + 0.5 * m.transition[1][ju][1];
                stage + 5.0 * next1
            })
            .fold(f64::INFINITY, f64::min);
        assert!((evaluate_value(&m, 0, &b) - brute).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_the_first_joint_action() {
        let mut m = toy_model();
        m.stage_cost = crate::model::StageCost::Stationary(vec![vec![1.0; 4]; 2]);
        let b = backup(|_, _, _| 0.0, &Belief::new(vec![0.5, 0.5], 0), 0, &m);
        assert_eq!((b.argmin, b.joint_action), (0, vec![0, 0]));
    }
}
