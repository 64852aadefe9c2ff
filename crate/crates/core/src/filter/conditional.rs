use std::collections::BTreeMap;

use serde::Serialize;

use super::{Belief, FilterError};
use crate::model::{HistoryView, InformationStructure, JointHistory, TeamModel, TeamViews};
use crate::strategy::{Policy, StrategyError};

/// Unnormalized joint weights `P(X_t = x, H_t = h)` over states and full
/// joint histories, restricted to whatever the caller kept.
pub(crate) type Measure = BTreeMap<(usize, JointHistory), f64>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Particle {
    pub state: usize,
    pub history: JointHistory,
    pub weight: f64,
}

/// `p^{g^{-k}}(X_t, H_t | Δ_t, Λ_t^k)`: the state together with the full joint
/// history (and so every other member's private data), given member `k`'s
/// view. Weights sum to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointConditional {
    pub time: usize,
    pub member: usize,
    pub entries: Vec<Particle>,
}

impl JointConditional {
    /// Marginal over states, i.e. `Π_t^k`.
    pub fn state_marginal(&self, num_states: usize) -> Belief {
        let mut probs = vec![0.0; num_states];
        for p in &self.entries {
            probs[p.state] += p.weight;
        }
        Belief::new(probs, self.time)
    }
}

/// Every `(x_0, h_0)` with positive weight `π(x_0) Π_k p(y_0^k|x_0)`.
pub(crate) fn initial_particles(model: &TeamModel) -> Measure {
    let mut out = Measure::new();
    for (x, &p) in model.initial_dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for y in model.joint_observations().iter() {
            let w = p * model.joint_obs_likelihood(x, &y);
            if w > 0.0 {
                out.insert((x, JointHistory::initial(y)), w);
            }
        }
    }
    out
}

/// Pushes a measure one step forward. Member `own.0` plays `own.1`; everyone
/// else follows `co` on the full history. Successor histories failing `keep`
/// are dropped.
pub(crate) fn advance(
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    own: Option<(usize, usize)>,
    measure: &Measure,
    keep: impl Fn(&JointHistory) -> bool,
) -> Result<Measure, StrategyError> {
    let joint_u = model.joint_actions();
    let joint_y: Vec<Vec<usize>> = model.joint_observations().iter().collect();
    let mut out = Measure::new();
    for ((x, h), &w) in measure {
        let u: Vec<usize> = (0..model.num_members)
            .map(|j| match own {
                Some((k, a)) if k == j => Ok(a),
                _ => co.member_action(structure, j, h),
            })
            .collect::<Result<_, _>>()?;
        let row = model.transition_row(*x, joint_u.flatten(&u));
        for y in &joint_y {
            let next = h.extended(&u, y);
            if !keep(&next) {
                continue;
            }
            for (x_next, q) in row.iter().enumerate() {
                let wt = w * q * model.joint_obs_likelihood(x_next, y);
                if wt > 0.0 {
                    *out.entry((x_next, next.clone())).or_insert(0.0) += wt;
                }
            }
        }
    }
    Ok(out)
}

/// Conditions the joint law of states and histories on member `k`'s view,
/// with the other members following `co`. Member `k`'s own decisions enter as
/// the realized values recorded in the view.
pub fn member_conditional(
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    view: &HistoryView,
) -> Result<JointConditional, FilterError> {
    let k = view.member;
    if k >= model.num_members {
        return Err(FilterError::DimensionMismatch(format!(
            "member {k} out of range"
        )));
    }
    let mut measure = initial_particles(model);
    measure.retain(|(_, h), _| h.agrees_with(view));
    for s in 0..view.time {
        let a = view.own_action(s).ok_or_else(|| {
            FilterError::InconsistentViews(format!("view lacks member {k}'s decision at time {s}"))
        })?;
        if a >= model.actions[k].len() {
            return Err(FilterError::DimensionMismatch(format!(
                "action {a} out of range for member {k}"
            )));
        }
        measure = advance(model, structure, co, Some((k, a)), &measure, |h| {
            h.agrees_with(view)
        })?;
    }
    measure.retain(|(_, h), _| h.member_view(structure, k) == *view);
    let total: f64 = measure.values().sum();
    if total <= 0.0 {
        return Err(FilterError::ZeroLikelihood { time: view.time });
    }
    Ok(JointConditional {
        time: view.time,
        member: k,
        entries: measure
            .into_iter()
            .map(|((state, history), w)| Particle {
                state,
                history,
                weight: w / total,
            })
            .collect(),
    })
}

/// `Π_t^k = p^{g^{-k}}(X_t | Δ_t, Λ_t^k)`.
pub fn member_belief(
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    view: &HistoryView,
) -> Result<Belief, FilterError> {
    Ok(member_conditional(model, structure, co, view)?.state_marginal(model.num_states()))
}

/// `ϑ^k`: turns member `k`'s belief into the team belief once the other
/// members' private data `Λ^{-k}` is revealed, by weighting each state with
/// `p^{g^{-k}}(Λ^{-k} | x, Δ, Λ^k)`.
pub fn recombine(
    member_belief: &Belief,
    model: &TeamModel,
    structure: &InformationStructure,
    co: &dyn Policy,
    full: &TeamViews,
    member: usize,
) -> Result<Belief, FilterError> {
    let n = model.num_states();
    if member_belief.len() != n {
        return Err(FilterError::DimensionMismatch(format!(
            "belief has {} entries, model has {n} states",
            member_belief.len()
        )));
    }
    if full.private.len() != model.num_members {
        return Err(FilterError::DimensionMismatch(format!(
            "{} private views for {} members",
            full.private.len(),
            model.num_members
        )));
    }
    let cond = member_conditional(model, structure, co, &full.member(member))?;
    let mut total = vec![0.0; n];
    let mut matching = vec![0.0; n];
    for p in &cond.entries {
        total[p.state] += p.weight;
        let agrees = (0..model.num_members)
            .filter(|&j| j != member)
            .all(|j| p.history.member_view(structure, j).private == full.private[j]);
        if agrees {
            matching[p.state] += p.weight;
        }
    }
    let weights: Vec<f64> = (0..n)
        .map(|x| {
            if total[x] > 0.0 {
                member_belief.probs[x] * matching[x] / total[x]
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    if z <= 0.0 {
        return Err(FilterError::InconsistentViews(
            "other members' private data has probability zero given member's view".into(),
        ));
    }
    Ok(Belief::new(weights.into_iter().map(|w| w / z).collect(), full.time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::team_belief_from_history;
    use crate::random::toy_model;
    use crate::strategy::{ConstantStrategy, HashedStrategy};

    #[test]
    fn single_member_matches_team_filter() {
        let mut m = toy_model();
        m.num_members = 1;
        m.actions.truncate(1);
        m.observations.truncate(1);
        m.observation_kernels.truncate(1);
        for row in &mut m.transition {
            row.truncate(2);
        }
        if let crate::model::StageCost::Stationary(c) = &mut m.stage_cost {
            c.iter_mut().for_each(|r| r.truncate(2));
        }
        assert!(crate::validate_model(&m).is_empty());
        let s = InformationStructure::delayed_sharing(1, 1);
        let h = JointHistory::initial(vec![1]).extended(&[1], &[0]).extended(&[0], &[0]);
        let none = ConstantStrategy { actions: vec![0] };
        let mb = member_belief(&m, &s, &none, &h.member_view(&s, 0)).unwrap();
        let tb = team_belief_from_history(&m, &s, &h.team_views(&s)).unwrap();
        assert!(crate::numeric::max_abs_diff(&mb.probs, &tb.probs) < 1e-12);
        let again = recombine(&mb, &m, &s, &none, &h.team_views(&s), 0).unwrap();
        assert!(crate::numeric::max_abs_diff(&again.probs, &mb.probs) < 1e-12);
    }

    #[test]
    fn recombination_recovers_team_belief_and_ignores_scale() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let co = HashedStrategy {
            seed: 4,
            action_counts: vec![2, 2],
            centralized: false,
        };
        let u0 = vec![1, co.member_action(&s, 1, &JointHistory::initial(vec![0, 1])).unwrap()];
        let h = JointHistory::initial(vec![0, 1]).extended(&u0, &[1, 1]);
        let full = h.team_views(&s);
        let mb = member_belief(&m, &s, &co, &full.member(0)).unwrap();
        let team = team_belief_from_history(&m, &s, &full).unwrap();
        for rho in [1.0, 0.25, 9.0] {
            let r = recombine(&mb.scaled(rho), &m, &s, &co, &full, 0).unwrap();
            assert!(crate::numeric::max_abs_diff(&r.probs, &team.probs) < 1e-12);
        }
    }

    #[test]
    fn view_impossible_under_co_strategy() {
        let m = toy_model();
        let s = InformationStructure::delayed_sharing(2, 1);
        let co = ConstantStrategy { actions: vec![0, 0] };
        // Member 1 is recorded as having acted, which the co-strategy never does.
        let h = JointHistory::initial(vec![0, 0]).extended(&[0, 1], &[0, 0]);
        let e = member_belief(&m, &s, &co, &h.member_view(&s, 0)).unwrap_err();
        assert_eq!(e, FilterError::ZeroLikelihood { time: 1 });
    }
}
