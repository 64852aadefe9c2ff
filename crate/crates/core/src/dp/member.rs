use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::DpError;
use crate::filter::{advance, initial_particles, Belief, JointConditional, Measure};
use crate::model::{HistoryView, InformationStructure, JointHistory, TeamModel};
use crate::strategy::{MemberSeparatedStrategy, Policy};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberNode {
    /// `Π_t^k` at this view.
    pub belief: Belief,
    /// Probability of reaching the view when member `k` plays the actions it
    /// records and the others follow their strategies.
    pub mass: f64,
    pub value: f64,
    /// Member action chosen here; `None` at the horizon.
    pub action: Option<usize>,
    #[serde(skip)]
    pub(crate) measure: Measure,
    #[serde(skip)]
    children: Vec<Vec<HistoryView>>,
}

impl MemberNode {
    /// The joint conditional of state and full history given this view.
    pub fn conditional(&self, member: usize) -> JointConditional {
        JointConditional {
            time: self.belief.time,
            member,
            entries: self
                .measure
                .iter()
                .map(|((state, history), w)| crate::filter::Particle {
                    state: *state,
                    history: history.clone(),
                    weight: w / self.mass,
                })
                .collect(),
        }
    }
}

/// Member `k`'s best response to fixed co-strategies, over its reachable
/// views `(Δ_t, Λ_t^k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberSolution {
    pub member: usize,
    pub stages: Vec<BTreeMap<HistoryView, MemberNode>>,
    pub root_value: f64,
}

impl MemberSolution {
    pub fn node(&self, view: &HistoryView) -> Option<&MemberNode> {
        self.stages.get(view.time)?.get(view)
    }

    pub fn node_count(&self) -> usize {
        self.stages.iter().map(BTreeMap::len).sum()
    }

    pub fn strategy(&self) -> MemberSeparatedStrategy {
        MemberSeparatedStrategy {
            member: self.member,
            nodes: self
                .stages
                .iter()
                .flatten()
                .filter_map(|(v, n)| Some((v.clone(), (n.belief.clone(), n.action?))))
                .collect(),
        }
    }
}

fn group_by_view(structure: &InformationStructure, k: usize, measure: Measure) -> BTreeMap<HistoryView, Measure> {
    let mut groups: BTreeMap<HistoryView, Measure> = BTreeMap::new();
    for ((x, h), w) in measure {
        groups
            .entry(h.member_view(structure, k))
            .or_default()
            .insert((x, h), w);
    }
    groups
}

fn joint_index(
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    k: usize,
    a: usize,
    h: &JointHistory,
) -> Result<usize, DpError> {
    let u: Vec<usize> = (0..model.num_members)
        .map(|j| if j == k { Ok(a) } else { co.member_action(structure, j, h) })
        .collect::<Result<_, _>>()?;
    Ok(model.joint_actions().flatten(&u))
}

fn stage_cost(
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    k: usize,
    a: usize,
    t: usize,
    measure: &Measure,
) -> Result<f64, DpError> {
    let mut total = 0.0;
    for ((x, h), w) in measure {
        total += w * model.stage_cost(t, *x, joint_index(model, structure, co, k, a, h)?);
    }
    Ok(total)
}

fn terminal_cost(model: &TeamModel, measure: &Measure) -> f64 {
    measure
        .iter()
        .map(|((x, _), w)| w * model.terminal_cost[*x])
        .sum()
}

fn mass(measure: &Measure) -> f64 {
    measure.values().sum()
}

fn marginal(model: &TeamModel, measure: &Measure, t: usize) -> Belief {
    let m = mass(measure);
    let mut probs = vec![0.0; model.num_states()];
    for ((x, _), w) in measure {
        probs[*x] += w / m;
    }
    Belief::new(probs, t)
}

/// Solves member `k`'s dynamic program with every other member following
/// `co`. Nodes are keyed by the member's view; the expectation over states,
/// the others' actions and the next views is taken exactly from the joint
/// conditional carried at each node.
pub fn solve_member(
    model: &TeamModel,
    structure: &InformationStructure,
    k: usize,
    co: &dyn Policy,
    node_budget: usize,
) -> Result<MemberSolution, DpError> {
    if k >= model.num_members {
        return Err(DpError::UnknownMember { member: k });
    }
    let horizon = model.horizon;
    let own_actions = model.actions[k].len();
    let new_node = |measure: Measure, t: usize| MemberNode {
        belief: marginal(model, &measure, t),
        mass: mass(&measure),
        value: 0.0,
        action: None,
        measure,
        children: Vec::new(),
    };

    let mut stages: Vec<BTreeMap<HistoryView, MemberNode>> = vec![
        group_by_view(structure, k, initial_particles(model))
            .into_iter()
            .map(|(v, m)| (v, new_node(m, 0)))
            .collect(),
    ];
    let mut count = stages[0].len();
    for t in 0..horizon {
        let mut next: BTreeMap<HistoryView, MemberNode> = BTreeMap::new();
        for node in stages[t].values_mut() {
            for a in 0..own_actions {
                let stepped = advance(model, structure, co, Some((k, a)), &node.measure, |_| true)?;
                let groups = group_by_view(structure, k, stepped);
                node.children.push(groups.keys().cloned().collect());
                for (v, m) in groups {
                    // A view records the member's whole past, so it has one parent.
                    debug_assert!(!next.contains_key(&v));
                    next.insert(v, new_node(m, t + 1));
                }
            }
            if count + next.len() > node_budget {
                return Err(DpError::NodeBudgetExceeded {
                    budget: node_budget,
                });
            }
        }
        count += next.len();
        stages.push(next);
    }

    for node in stages[horizon].values_mut() {
        node.value = terminal_cost(model, &node.measure) / node.mass;
    }
    for t in (0..horizon).rev() {
        let (head, tail) = stages.split_at_mut(t + 1);
        let later = &tail[0];
        head[t].par_iter_mut().try_for_each(|(_, node)| -> Result<(), DpError> {
            let mut best: Option<(f64, usize)> = None;
            for a in 0..own_actions {
                let stage = stage_cost(model, structure, co, k, a, t, &node.measure)?;
                let future: f64 = node.children[a]
                    .iter()
                    .map(|v| {
                        let child = &later[v];
                        child.mass * child.value
                    })
                    .sum();
                let q = (stage + future) / node.mass;
                if best.is_none_or(|(v, _)| q < v) {
                    best = Some((q, a));
                }
            }
            let (value, a) = best.expect("member has at least one action");
            node.value = value;
            node.action = Some(a);
            Ok(())
        })?;
    }

    let root_value = stages[0].values().map(|n| n.mass * n.value).sum();
    Ok(MemberSolution {
        member: k,
        stages,
        root_value,
    })
}

/// Unnormalized value of a measure: the best expected cost from time `t`
/// over member `k`'s continuation strategies, weighted by the measure.
fn value_of_measure(
    model: &TeamModel,
    structure: &InformationStructure,
    k: usize,
    co: &dyn Policy,
    t: usize,
    measure: &Measure,
) -> Result<f64, DpError> {
    if t >= model.horizon {
        return Ok(terminal_cost(model, measure));
    }
    let mut best = f64::INFINITY;
    for a in 0..model.actions[k].len() {
        let mut q = stage_cost(model, structure, co, k, a, t, measure)?;
        let stepped = advance(model, structure, co, Some((k, a)), measure, |_| true)?;
        for group in group_by_view(structure, k, stepped).values() {
            q += value_of_measure(model, structure, k, co, t + 1, group)?;
        }
        best = best.min(q);
    }
    Ok(best)
}

/// Member `k`'s value at an arbitrary belief `π` over the node described by
/// `conditional`: the histories keep their conditional law given the state,
/// while the state law is replaced by `π`. The result is positively
/// homogeneous and concave in `π`. States without particles carry no mass.
pub fn evaluate_member_value(
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    conditional: &JointConditional,
    belief: &Belief,
) -> Result<f64, DpError> {
    let mut per_state = vec![0.0; model.num_states()];
    for p in &conditional.entries {
        per_state[p.state] += p.weight;
    }
    let measure: Measure = conditional
        .entries
        .iter()
        .map(|p| {
            let w = belief.probs[p.state] * p.weight / per_state[p.state];
            ((p.state, p.history.clone()), w)
        })
        .collect();
    value_of_measure(model, structure, conditional.member, co, conditional.time, &measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{solve_manager, DEFAULT_NODE_BUDGET};
    use crate::random::{random_model, toy_model, ModelShape};
    use crate::strategy::ConstantStrategy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_member_reproduces_manager() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_model(&ModelShape::binary(3, 1, 3), &mut rng);
        let s = InformationStructure::delayed_sharing(1, 1);
        let manager = solve_manager(&m, &s, DEFAULT_NODE_BUDGET).unwrap();
        let member = solve_member(&m, &s, 0, &ConstantStrategy { actions: vec![0] }, DEFAULT_NODE_BUDGET).unwrap();
        assert!((manager.root_value - member.root_value).abs() < 1e-12);
        for stage in &manager.stages {
            for (h, n) in stage {
                let v = member.node(&h.member_view(&s, 0)).unwrap();
                assert!((n.value - v.value).abs() < 1e-12);
                assert_eq!(n.action.as_ref().map(|u| u[0]), v.action);
            }
        }
    }

    #[test]
    fn node_values_match_measure_recursion() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let co = ConstantStrategy { actions: vec![0, 1] };
        let sol = solve_member(&m, &s, 0, &co, DEFAULT_NODE_BUDGET).unwrap();
        let masses: f64 = sol.stages[0].values().map(|n| n.mass).sum();
        assert!((masses - 1.0).abs() < 1e-12);
        for stage in &sol.stages {
            for n in stage.values() {
                let cond = n.conditional(0);
                let v = evaluate_member_value(&m, &s, &co, &cond, &n.belief).unwrap();
                assert!((v - n.value).abs() < 1e-12, "{v} vs {}", n.value);
            }
        }
    }
}
