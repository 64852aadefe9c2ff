//! Exhaustive search over history tables.
//!
//! Tables are only defined on histories (or views) that the table itself
//! reaches with positive probability; everything else falls back to the
//! first action, which cannot change the cost. Candidates are generated by
//! backtracking in a fixed order and the first strict minimum wins, so the
//! result does not depend on how the search is split across threads.
//!
//! The search runs on a compiled copy of the history tree: every history
//! reachable under some joint action gets an integer id, as does every
//! member view, and candidates are costed over flat arrays. The winner is
//! costed again with [`exact_cost`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::{exact_cost, OracleError};
use crate::model::{HistoryView, InformationStructure, JointHistory, JointSpace, TeamModel};
use crate::strategy::{CentralizedTable, DecentralizedTable, Fallback, Strategy};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

/// Partial searches handed to worker threads.
const TASKS: usize = 256;

/// Largest history tree the oracles will compile.
const MAX_TREE_NODES: usize = 5_000_000;

const UNSET: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    pub cost: f64,
    pub strategy: Strategy,
    /// Number of candidate tables examined.
    pub count: u64,
}

struct Node {
    time: usize,
    /// View id of each member.
    views: Vec<usize>,
    /// Per flat joint action: positive-probability children and the index
    /// of the joint observation leading to each.
    children: Vec<Vec<(usize, usize)>>,
}

struct Tree<'a> {
    model: &'a TeamModel,
    joint_u: JointSpace,
    /// `p(y | x)` indexed `[joint_obs][x]`.
    likelihood: Vec<Vec<f64>>,
    histories: Vec<JointHistory>,
    nodes: Vec<Node>,
    /// `(member, view)` per view id.
    views: Vec<(usize, HistoryView)>,
    /// Root node ids with the index of their joint observation.
    roots: Vec<(usize, usize)>,
}

/// Positive-probability successors of a state support under joint action
/// `ju`, as `(joint observation index, support)`.
fn successors(model: &TeamModel, likelihood: &[Vec<f64>], support: &[bool], ju: usize) -> Vec<(usize, Vec<bool>)> {
    let n = model.num_states();
    let reach: Vec<bool> = (0..n)
        .map(|x2| (0..n).any(|x| support[x] && model.transition[x][ju][x2] > 0.0))
        .collect();
    likelihood
        .iter()
        .enumerate()
        .filter_map(|(yi, l)| {
            let s: Vec<bool> = (0..n).map(|x2| reach[x2] && l[x2] > 0.0).collect();
            s.contains(&true).then_some((yi, s))
        })
        .collect()
}

impl<'a> Tree<'a> {
    fn build(model: &'a TeamModel, structure: &InformationStructure) -> Result<Self, OracleError> {
        let n = model.num_states();
        let joint_u = model.joint_actions();
        let joint_obs: Vec<Vec<usize>> = model.joint_observations().iter().collect();
        let likelihood: Vec<Vec<f64>> = joint_obs
            .iter()
            .map(|y| (0..n).map(|x| model.joint_obs_likelihood(x, y)).collect())
            .collect();
        let mut tree = Tree {
            model,
            joint_u,
            likelihood,
            histories: Vec::new(),
            nodes: Vec::new(),
            views: Vec::new(),
            roots: Vec::new(),
        };
        let mut view_ids: HashMap<(usize, HistoryView), usize> = HashMap::new();
        let mut queue: VecDeque<(usize, Vec<bool>)> = VecDeque::new();
        let mut add = |tree: &mut Tree, h: JointHistory, support: Vec<bool>, queue: &mut VecDeque<_>| {
            if tree.nodes.len() >= MAX_TREE_NODES {
                return Err(OracleError::BudgetExceeded {
                    count: format!("more than {MAX_TREE_NODES} histories"),
                    budget: MAX_TREE_NODES as u64,
                });
            }
            let views = (0..model.num_members)
                .map(|k| {
                    let key = (k, h.member_view(structure, k));
                    let next = view_ids.len();
                    *view_ids.entry(key.clone()).or_insert_with(|| {
                        tree.views.push(key);
                        next
                    })
                })
                .collect();
            let id = tree.nodes.len();
            tree.nodes.push(Node {
                time: h.time(),
                views,
                children: Vec::new(),
            });
            tree.histories.push(h);
            queue.push_back((id, support));
            Ok(id)
        };
        for (yi, y) in joint_obs.iter().enumerate() {
            let support: Vec<bool> = (0..n)
                .map(|x| model.initial_dist[x] > 0.0 && tree.likelihood[yi][x] > 0.0)
                .collect();
            if support.contains(&true) {
                let id = add(&mut tree, JointHistory::initial(y.clone()), support, &mut queue)?;
                tree.roots.push((id, yi));
            }
        }
        while let Some((id, support)) = queue.pop_front() {
            if tree.nodes[id].time == model.horizon {
                continue;
            }
            let mut children = Vec::with_capacity(tree.joint_u.len());
            for ju in 0..tree.joint_u.len() {
                let u = tree.joint_u.unflatten(ju);
                let mut row = Vec::new();
                for (yi, s) in successors(model, &tree.likelihood, &support, ju) {
                    let h = tree.histories[id].extended(&u, &joint_obs[yi]);
                    row.push((add(&mut tree, h, s, &mut queue)?, yi));
                }
                children.push(row);
            }
            tree.nodes[id].children = children;
        }
        Ok(tree)
    }

    /// Expected cost from `node` with unnormalized state weights `w`, when
    /// `action(node)` gives the flat joint action played there.
    fn cost_from(&self, node: usize, w: &[f64], action: &dyn Fn(usize) -> usize) -> f64 {
        let m = self.model;
        let t = self.nodes[node].time;
        if t == m.horizon {
            return m.expected_terminal_cost(w);
        }
        let ju = action(node);
        let n = w.len();
        let mut total: f64 = (0..n).map(|x| w[x] * m.stage_cost(t, x, ju)).sum();
        let mut predicted = vec![0.0; n];
        for (x, &wx) in w.iter().enumerate() {
            if wx != 0.0 {
                for (p, q) in predicted.iter_mut().zip(&m.transition[x][ju]) {
                    *p += wx * q;
                }
            }
        }
        let mut next = vec![0.0; n];
        for &(child, yi) in &self.nodes[node].children[ju] {
            for ((v, p), l) in next.iter_mut().zip(&predicted).zip(&self.likelihood[yi]) {
                *v = p * l;
            }
            total += self.cost_from(child, &next, action);
        }
        total
    }

    fn cost(&self, action: &dyn Fn(usize) -> usize) -> f64 {
        self.roots
            .iter()
            .map(|&(root, yi)| {
                let w: Vec<f64> = self
                    .model
                    .initial_dist
                    .iter()
                    .zip(&self.likelihood[yi])
                    .map(|(p, l)| p * l)
                    .collect();
                self.cost_from(root, &w, action)
            })
            .sum()
    }

    /// Number of centralized tables below `node`, saturating at `cap`.
    fn count_below(&self, node: usize, cap: u128) -> u128 {
        let children = &self.nodes[node].children;
        if children.is_empty() {
            return 1;
        }
        children
            .iter()
            .map(|row| {
                row.iter()
                    .fold(1u128, |acc, &(c, _)| acc.saturating_mul(self.count_below(c, cap)).min(cap))
            })
            .fold(0u128, |acc, v| acc.saturating_add(v).min(cap))
    }
}

/// Decisions still to be made, in breadth-first order over reachable
/// histories, plus the partial table.
#[derive(Clone)]
struct Search {
    centralized: bool,
    /// Flat joint action per node (centralized) or member action per view.
    table: Vec<u32>,
    pending: VecDeque<usize>,
    /// Member view awaiting a decision (decentralized).
    slot: Option<usize>,
}

impl Search {
    fn root(tree: &Tree, centralized: bool) -> Self {
        let len = if centralized { tree.nodes.len() } else { tree.views.len() };
        Self {
            centralized,
            table: vec![UNSET; len],
            pending: tree.roots.iter().map(|&(id, _)| id).collect(),
            slot: None,
        }
    }

    fn joint_action(&self, tree: &Tree, node: usize) -> usize {
        if self.centralized {
            self.table[node] as usize
        } else {
            let parts: Vec<usize> = tree.nodes[node].views.iter().map(|&v| self.table[v] as usize).collect();
            tree.joint_u.flatten(&parts)
        }
    }

    /// Number of options at the next open decision, expanding histories
    /// whose decision is already fixed; `None` once the table is complete.
    fn open(&mut self, tree: &Tree) -> Option<usize> {
        loop {
            let &node = self.pending.front()?;
            if self.centralized {
                return Some(tree.joint_u.len());
            }
            if let Some(&v) = tree.nodes[node].views.iter().find(|&&v| self.table[v] == UNSET) {
                self.slot = Some(v);
                return Some(tree.model.actions[tree.views[v].0].len());
            }
            self.pending.pop_front();
            let ju = self.joint_action(tree, node);
            self.push_children(tree, node, ju);
        }
    }

    fn push_children(&mut self, tree: &Tree, node: usize, ju: usize) {
        let horizon = tree.model.horizon;
        self.pending.extend(
            tree.nodes[node].children[ju]
                .iter()
                .map(|&(c, _)| c)
                .filter(|&c| tree.nodes[c].time < horizon),
        );
    }

    fn choose(&mut self, tree: &Tree, option: usize) {
        if self.centralized {
            let node = self.pending.pop_front().expect("open decision");
            self.table[node] = option as u32;
            self.push_children(tree, node, option);
        } else {
            let v = self.slot.take().expect("open decision");
            self.table[v] = option as u32;
        }
    }

    fn cost(&self, tree: &Tree) -> f64 {
        tree.cost(&|node| self.joint_action(tree, node))
    }

    fn strategy(&self, tree: &Tree) -> Strategy {
        if self.centralized {
            Strategy::Centralized(CentralizedTable {
                table: self
                    .table
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != UNSET)
                    .map(|(node, &a)| (tree.histories[node].clone(), tree.joint_u.unflatten(a as usize)))
                    .collect(),
                fallback: Fallback::FirstAction,
            })
        } else {
            let mut tables = vec![BTreeMap::new(); tree.model.num_members];
            for (v, &a) in self.table.iter().enumerate() {
                if a != UNSET {
                    let (k, view) = &tree.views[v];
                    tables[*k].insert(view.clone(), a as usize);
                }
            }
            Strategy::Decentralized(DecentralizedTable {
                tables,
                fallback: Fallback::FirstAction,
            })
        }
    }
}

/// Depth-first over all completions of `state`, in option order. `visit`
/// returns `false` to abort.
fn walk(tree: &Tree, mut state: Search, visit: &mut dyn FnMut(&Search) -> bool) -> bool {
    match state.open(tree) {
        None => visit(&state),
        Some(n) => {
            for option in 0..n {
                let mut next = state.clone();
                next.choose(tree, option);
                if !walk(tree, next, visit) {
                    return false;
                }
            }
            true
        }
    }
}

/// Breadth-first expansion into at least `TASKS` partial searches (or all
/// complete ones), preserving depth-first order.
fn split(tree: &Tree, root: Search) -> Vec<Search> {
    let mut frontier = vec![root];
    loop {
        let mut next = Vec::new();
        let mut progressed = false;
        for mut s in frontier {
            match s.open(tree) {
                None => next.push(s),
                Some(n) => {
                    progressed = true;
                    for option in 0..n {
                        let mut c = s.clone();
                        c.choose(tree, option);
                        next.push(c);
                    }
                }
            }
        }
        frontier = next;
        if !progressed || frontier.len() >= TASKS {
            return frontier;
        }
    }
}

/// Counts complete tables, giving up once the count passes `budget`.
fn count(tree: &Tree, root: Search, budget: u64) -> Option<u64> {
    let total = AtomicU64::new(0);
    split(tree, root).into_par_iter().for_each(|task| {
        walk(tree, task, &mut |_| total.fetch_add(1, Ordering::Relaxed) < budget);
    });
    let n = total.load(Ordering::Relaxed);
    (n <= budget).then_some(n)
}

fn minimize(tree: &Tree, structure: &InformationStructure, root: Search, count: u64) -> Result<Enumeration, OracleError> {
    let results: Vec<Option<(f64, Search)>> = split(tree, root)
        .into_par_iter()
        .map(|task| {
            let mut best: Option<(f64, Search)> = None;
            walk(tree, task, &mut |s| {
                let cost = s.cost(tree);
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, s.clone()));
                }
                true
            });
            best
        })
        .collect();
    let mut best: Option<(f64, Search)> = None;
    for (cost, s) in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, s));
        }
    }
    let (_, winner) = best.expect("at least one candidate");
    let strategy = winner.strategy(tree);
    Ok(Enumeration {
        cost: exact_cost(tree.model, structure, &strategy)?,
        strategy,
        count,
    })
}

/// Number of centralized tables over positive-probability histories,
/// saturating at `u64::MAX`.
pub fn count_centralized(model: &TeamModel, structure: &InformationStructure) -> u64 {
    let Ok(tree) = Tree::build(model, structure) else {
        return u64::MAX;
    };
    let cap = u128::from(u64::MAX);
    tree.roots
        .iter()
        .fold(1u128, |acc, &(r, _)| acc.saturating_mul(tree.count_below(r, cap)).min(cap)) as u64
}

/// Exhaustive minimum of `J` over maps from full joint histories to joint
/// actions.
pub fn enumerate_centralized(
    model: &TeamModel,
    structure: &InformationStructure,
    budget: u64,
) -> Result<Enumeration, OracleError> {
    let count = count_centralized(model, structure);
    if count > budget {
        return Err(OracleError::BudgetExceeded {
            count: if count == u64::MAX {
                format!("at least {count}")
            } else {
                count.to_string()
            },
            budget,
        });
    }
    let tree = Tree::build(model, structure)?;
    let root = Search::root(&tree, true);
    minimize(&tree, structure, root, count)
}

/// Exhaustive minimum of `J` over products of per-member maps from views
/// `(Δ_t, Λ_t^k)` to member actions.
pub fn enumerate_decentralized(
    model: &TeamModel,
    structure: &InformationStructure,
    budget: u64,
) -> Result<Enumeration, OracleError> {
    let tree = Tree::build(model, structure)?;
    let root = Search::root(&tree, false);
    let count = count(&tree, root.clone(), budget).ok_or_else(|| OracleError::BudgetExceeded {
        count: format!("more than {budget}"),
        budget,
    })?;
    minimize(&tree, structure, root, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StageCost;
    use crate::random::toy_model;
    use crate::strategy::Policy;

    fn one_step_toy() -> TeamModel {
        let mut m = toy_model();
        m.horizon = 1;
        m
    }

    #[test]
    fn counts_match_closed_form() {
        let m = one_step_toy();
        let s = InformationStructure::delayed_sharing(2, 1);
        // Four root histories, four joint actions each.
        assert_eq!(count_centralized(&m, &s), 256);
        let e = enumerate_decentralized(&m, &s, 1000).unwrap();
        // Each member maps its own first observation to an action.
        assert_eq!(e.count, 16);
    }

    #[test]
    fn single_action_has_one_strategy() {
        let mut m = one_step_toy();
        m.actions = vec![vec!["only".into()]; 2];
        m.transition = vec![vec![vec![0.9, 0.1]], vec![vec![0.1, 0.9]]];
        m.stage_cost = StageCost::Stationary(vec![vec![0.0], vec![2.0]]);
        let s = InformationStructure::NoSharing;
        let c = enumerate_centralized(&m, &s, 10).unwrap();
        let d = enumerate_decentralized(&m, &s, 10).unwrap();
        assert_eq!((c.count, d.count), (1, 1));
        // 0.5*2 + terminal 5 * (0.5*0.1 + 0.5*0.9)
        assert!((c.cost - 3.5).abs() < 1e-12);
        assert_eq!(c.cost, d.cost);
    }

    #[test]
    fn constant_shift_moves_cost_by_horizon() {
        let m = one_step_toy();
        let s = InformationStructure::delayed_sharing(2, 1);
        let base = enumerate_centralized(&m, &s, 1000).unwrap();
        let mut shifted = m.clone();
        if let StageCost::Stationary(c) = &mut shifted.stage_cost {
            c.iter_mut().flatten().for_each(|v| *v += 1.0);
        }
        let moved = enumerate_centralized(&shifted, &s, 1000).unwrap();
        assert!((moved.cost - base.cost - m.horizon as f64).abs() < 1e-12);
        assert_eq!(moved.strategy, base.strategy);
    }

    #[test]
    fn budget_is_checked_before_searching() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        assert!(matches!(
            enumerate_centralized(&m, &s, 1000),
            Err(OracleError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            enumerate_decentralized(&m, &s, 1000),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn decentralized_never_beats_centralized() {
        let m = one_step_toy();
        for s in [InformationStructure::NoSharing, InformationStructure::delayed_sharing(2, 1)] {
            let c = enumerate_centralized(&m, &s, 1000).unwrap();
            let d = enumerate_decentralized(&m, &s, 1000).unwrap();
            assert!(d.cost >= c.cost - 1e-12);
            let again = exact_cost(&m, &s, &d.strategy).unwrap();
            assert_eq!(again, d.cost);
            let h = JointHistory::initial(vec![0, 0]);
            assert!(d.strategy.joint_action(&s, &h).is_ok());
        }
    }
}
