use serde::Serialize;

use super::{solve_manager, solve_member, DpError, ManagerSolution};
use crate::model::{InformationStructure, JointHistory, TeamModel};
use crate::oracle::{enumerate_decentralized, exact_cost, history_weights, OracleError};
use crate::strategy::{Fallback, ProfileStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompareOptions {
    pub node_budget: usize,
    pub enumeration_budget: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            node_budget: super::DEFAULT_NODE_BUDGET,
            enumeration_budget: crate::oracle::DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

/// Manager versus member `k` at one manager node on the optimal path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeComparison {
    pub time: usize,
    pub member: usize,
    pub history: String,
    pub view: String,
    pub manager_action: usize,
    pub member_action: usize,
    pub agree: bool,
    pub manager_value: f64,
    pub member_value: f64,
    pub value_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberComparison {
    pub member: usize,
    pub member_nodes: usize,
    pub compared: usize,
    pub agreements: usize,
    pub max_value_difference: f64,
    /// Member `k`'s optimal cost against the manager-induced co-strategy.
    pub best_response_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DecentralizedOutcome {
    Solved { cost: f64, candidates: u64 },
    BudgetExceeded { detail: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub manager_value: f64,
    pub manager_nodes: usize,
    /// `J` of the manager's strategy, from the oracle.
    pub manager_cost: f64,
    /// `J` when every member plays its own member solution.
    pub member_profile_cost: f64,
    /// Reachable decisions where a member met a view missing from its table
    /// and fell back to its first action.
    pub member_profile_fallbacks: usize,
    pub decentralized: DecentralizedOutcome,
    pub all_agree: bool,
    pub members: Vec<MemberComparison>,
    pub nodes: Vec<NodeComparison>,
}

/// Histories reached with positive probability when the manager's strategy is
/// played, per stage below the horizon.
fn on_path(solution: &ManagerSolution) -> Vec<Vec<JointHistory>> {
    let horizon = solution.stages.len() - 1;
    let mut levels = vec![solution.roots.iter().map(|(h, _)| h.clone()).collect::<Vec<_>>()];
    for t in 0..horizon.saturating_sub(1) {
        let next = solution.stages[t + 1]
            .keys()
            .filter(|h| {
                let parent = JointHistory {
                    observations: h.observations[..=t].to_vec(),
                    actions: h.actions[..t].to_vec(),
                };
                levels[t].binary_search(&parent).is_ok()
                    && solution.stages[t][&parent].action.as_deref() == Some(h.actions[t].as_slice())
            })
            .cloned()
            .collect();
        levels.push(next);
    }
    levels
}

/// Runs the manager's program, then each member's program against the
/// manager-induced co-strategies, and reports where they agree together with
/// the costs of the manager strategy, of the profile of member solutions and
/// of the best decentralized table.
pub fn compare_solutions(
    model: &TeamModel,
    structure: &InformationStructure,
    options: CompareOptions,
) -> Result<ComparisonReport, DpError> {
    let manager = solve_manager(model, structure, options.node_budget)?;
    let team = manager.strategy();
    let manager_cost = exact_cost(model, structure, &team)?;
    let path = on_path(&manager);

    let mut members = Vec::new();
    let mut nodes = Vec::new();
    let mut solutions = Vec::new();
    for k in 0..model.num_members {
        let sol = solve_member(model, structure, k, &team, options.node_budget)?;
        let mut summary = MemberComparison {
            member: k,
            member_nodes: sol.node_count(),
            compared: 0,
            agreements: 0,
            max_value_difference: 0.0,
            best_response_value: sol.root_value,
        };
        for (t, level) in path.iter().enumerate() {
            for h in level {
                let m_node = &manager.stages[t][h];
                let view = h.member_view(structure, k);
                let node = sol
                    .node(&view)
                    .expect("a view on the manager's path is reachable for the member");
                let manager_action = m_node.action.as_ref().expect("below horizon")[k];
                let member_action = node.action.expect("below horizon");
                let diff = (node.value - m_node.value).abs();
                summary.compared += 1;
                summary.agreements += usize::from(manager_action == member_action);
                summary.max_value_difference = summary.max_value_difference.max(diff);
                nodes.push(NodeComparison {
                    time: t,
                    member: k,
                    history: h.canonical(),
                    view: view.canonical(),
                    manager_action,
                    member_action,
                    agree: manager_action == member_action,
                    manager_value: m_node.value,
                    member_value: node.value,
                    value_difference: diff,
                });
            }
        }
        members.push(summary);
        solutions.push(sol.strategy());
    }

    let profile = ProfileStrategy {
        members: solutions,
        fallback: Fallback::FirstAction,
    };
    let member_profile_cost = exact_cost(model, structure, &profile)?;
    let weights = history_weights(model, structure, &profile)?;
    let member_profile_fallbacks = weights[..model.horizon]
        .iter()
        .flat_map(|stage| stage.keys())
        .map(|h| {
            (0..model.num_members)
                .filter(|&k| profile.members[k].action(&h.member_view(structure, k)).is_none())
                .count()
        })
        .sum();

    let decentralized = match enumerate_decentralized(model, structure, options.enumeration_budget) {
        Ok(e) => DecentralizedOutcome::Solved {
            cost: e.cost,
            candidates: e.count,
        },
        Err(OracleError::BudgetExceeded { count, budget }) => DecentralizedOutcome::BudgetExceeded {
            detail: format!("{count} candidate tables, budget {budget}"),
        },
        Err(e) => return Err(e.into()),
    };

    Ok(ComparisonReport {
        manager_value: manager.root_value,
        manager_nodes: manager.node_count(),
        manager_cost,
        member_profile_cost,
        member_profile_fallbacks,
        decentralized,
        all_agree: nodes.iter().all(|n| n.agree),
        members,
        nodes,
    })
}
