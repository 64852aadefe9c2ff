use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{backup, branches, DpError};
use crate::filter::{correct, Belief};
use crate::model::{InformationStructure, JointHistory, TeamModel};
use crate::strategy::SeparatedTeamStrategy;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManagerNode {
    pub belief: Belief,
    pub value: f64,
    /// Joint action chosen here; `None` at the horizon.
    pub action: Option<Vec<usize>>,
}

/// The manager's value function and separated strategy on the reachable
/// tree. Stage `t` maps every positive-probability joint history (under any
/// actions) to its node.
#[derive(Clone, Debug, PartialEq)]
pub struct ManagerSolution {
    pub stages: Vec<BTreeMap<JointHistory, ManagerNode>>,
    /// `Pr(y_0)` for every root history.
    pub roots: Vec<(JointHistory, f64)>,
    /// Optimal expected total cost, `Σ_{y_0} Pr(y_0) V_0`.
    pub root_value: f64,
}

impl ManagerSolution {
    pub fn node(&self, history: &JointHistory) -> Option<&ManagerNode> {
        self.stages.get(history.time())?.get(history)
    }

    pub fn node_count(&self) -> usize {
        self.stages.iter().map(BTreeMap::len).sum()
    }

    pub fn strategy(&self) -> SeparatedTeamStrategy {
        SeparatedTeamStrategy {
            nodes: self
                .stages
                .iter()
                .flatten()
                .filter_map(|(h, n)| Some((h.clone(), (n.belief.clone(), n.action.clone()?))))
                .collect(),
        }
    }
}

/// Builds the reachable-belief tree forward from the prior, then backs values
/// up from the horizon.
pub fn solve_manager(
    model: &TeamModel,
    structure: &InformationStructure,
    node_budget: usize,
) -> Result<ManagerSolution, DpError> {
    if let Some((time, member, kind)) = structure.first_uncovered(model.num_members, model.horizon) {
        return Err(DpError::IncompleteHistory { time, member, kind });
    }
    let horizon = model.horizon;
    let joint_u = model.joint_actions();
    let prior = Belief::new(model.initial_dist.clone(), 0);

    let mut roots = Vec::new();
    let mut stage0 = BTreeMap::new();
    for y in model.joint_observations().iter() {
        let p: f64 = (0..model.num_states())
            .map(|x| prior.probs[x] * model.joint_obs_likelihood(x, &y))
            .sum();
        if p > 0.0 {
            let h = JointHistory::initial(y.clone());
            let belief = correct(&prior, &y, model)?;
            roots.push((h.clone(), p));
            stage0.insert(h, belief);
        }
    }

    let mut count = stage0.len();
    let mut beliefs = vec![stage0];
    for t in 0..horizon {
        let mut next = BTreeMap::new();
        for (h, b) in &beliefs[t] {
            for ju in 0..joint_u.len() {
                let u = joint_u.unflatten(ju);
                for br in branches(model, b, ju) {
                    next.insert(h.extended(&u, &br.obs), br.posterior);
                }
            }
            if count + next.len() > node_budget {
                return Err(DpError::NodeBudgetExceeded {
                    budget: node_budget,
                });
            }
        }
        count += next.len();
        beliefs.push(next);
    }

    let mut stages: Vec<BTreeMap<JointHistory, ManagerNode>> = vec![BTreeMap::new(); horizon + 1];
    stages[horizon] = std::mem::take(&mut beliefs[horizon])
        .into_iter()
        .map(|(h, b)| {
            let value = model.expected_terminal_cost(&b.probs);
            (h, ManagerNode { belief: b, value, action: None })
        })
        .collect();
    for t in (0..horizon).rev() {
        let later = &stages[t + 1];
        let level: Vec<(JointHistory, Belief)> = std::mem::take(&mut beliefs[t]).into_iter().collect();
        let solved: Vec<(JointHistory, ManagerNode)> = level
            .into_par_iter()
            .map(|(h, b)| {
                let result = backup(
                    |_, ju, y| later[&h.extended(&joint_u.unflatten(ju), y)].value,
                    &b,
                    t,
                    model,
                );
                let node = ManagerNode {
                    belief: b,
                    value: result.value,
                    action: Some(result.joint_action),
                };
                (h, node)
            })
            .collect();
        stages[t] = solved.into_iter().collect();
    }

    let root_value = roots.iter().map(|(h, p)| p * stages[0][h].value).sum();
    Ok(ManagerSolution {
        stages,
        roots,
        root_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{evaluate_prior_value, DEFAULT_NODE_BUDGET};
    use crate::random::toy_model;

    #[test]
    fn root_value_matches_direct_recursion() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let sol = solve_manager(&m, &s, DEFAULT_NODE_BUDGET).unwrap();
        let direct = evaluate_prior_value(&m, &Belief::new(m.initial_dist.clone(), 0));
        assert!((sol.root_value - direct).abs() < 1e-12);
        // 4 roots, each with 4 actions and 4 observations per step.
        assert_eq!(sol.stages[1].len(), 64);
        assert_eq!(sol.stages[2].len(), 1024);
        assert!(sol.stages.iter().flat_map(|s| s.values()).all(|n| n.belief.is_normalized()));
    }

    #[test]
    fn single_state_single_member() {
        let m = TeamModel {
            num_members: 1,
            horizon: 1,
            states: vec!["s".into()],
            actions: vec![vec!["a".into(), "b".into(), "c".into()]],
            observations: vec![vec!["o".into()]],
            initial_dist: vec![1.0],
            transition: vec![vec![vec![1.0]; 3]],
            observation_kernels: vec![vec![vec![1.0]]],
            stage_cost: crate::model::StageCost::Stationary(vec![vec![3.0, 1.0, 2.0]]),
            terminal_cost: vec![4.0],
        };
        let s = InformationStructure::delayed_sharing(1, 1);
        let sol = solve_manager(&m, &s, 100).unwrap();
        assert_eq!(sol.root_value, 5.0);
        assert_eq!(sol.stages[0].values().next().unwrap().action, Some(vec![1]));
    }

    #[test]
    fn budget_is_enforced() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        assert_eq!(
            solve_manager(&m, &s, 100),
            Err(DpError::NodeBudgetExceeded { budget: 100 })
        );
    }
}
