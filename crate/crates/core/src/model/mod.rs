//! Finite team models: dynamics, per-member observation kernels and costs.
//!
//! States, actions and observations are finite ordered sets addressed by
//! index. Joint actions (and joint observations) are flattened row-major in
//! member order, so member 0 is the most significant digit.

mod structure;
mod views;

pub use structure::{InformationStructure, Window};
pub use views::{
    extract_views, CommonItem, HistoryView, JointHistory, Kind, PrivateItem, ReconstructError,
    TeamViews, Trajectory, ViewError, Viewer, Views,
};

use serde::{Deserialize, Serialize};

/// Tolerance used when checking that a probability vector sums to one.
pub const PROB_TOL: f64 = 1e-12;

/// Stage cost `c_t(x, u)`, either shared by every stage or given per stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageCost {
    /// Indexed `[x][joint_u]`.
    Stationary(Vec<Vec<f64>>),
    /// Indexed `[t][x][joint_u]`.
    TimeVarying(Vec<Vec<Vec<f64>>>),
}

impl StageCost {
    pub fn get(&self, t: usize, x: usize, ju: usize) -> f64 {
        match self {
            StageCost::Stationary(c) => c[x][ju],
            StageCost::TimeVarying(c) => c[t][x][ju],
        }
    }

    fn stage(&self, t: usize) -> Option<&Vec<Vec<f64>>> {
        match self {
            StageCost::Stationary(c) => Some(c),
            StageCost::TimeVarying(c) => c.get(t),
        }
    }
}

/// A finite sequential team decision problem.
///
/// The primitive noises never appear: the model is given directly by the
/// kernels they induce. All sets are time invariant; costs may depend on `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamModel {
    pub num_members: usize,
    pub horizon: usize,
    pub states: Vec<String>,
    pub actions: Vec<Vec<String>>,
    pub observations: Vec<Vec<String>>,
    pub initial_dist: Vec<f64>,
    /// `p(x' | x, u)` indexed `[x][joint_u][x']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `p(y^k | x)` indexed `[k][x][y]`.
    pub observation_kernels: Vec<Vec<Vec<f64>>>,
    pub stage_cost: StageCost,
    pub terminal_cost: Vec<f64>,
}

impl TeamModel {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.actions.iter().map(Vec::len).collect()
    }

    pub fn observation_counts(&self) -> Vec<usize> {
        self.observations.iter().map(Vec::len).collect()
    }

    pub fn joint_actions(&self) -> JointSpace {
        JointSpace::new(self.action_counts())
    }

    pub fn joint_observations(&self) -> JointSpace {
        JointSpace::new(self.observation_counts())
    }

    pub fn transition_row(&self, x: usize, ju: usize) -> &[f64] {
        &self.transition[x][ju]
    }

    pub fn stage_cost(&self, t: usize, x: usize, ju: usize) -> f64 {
        self.stage_cost.get(t, x, ju)
    }

    /// `prod_k p(y^k | x)`; the members' sensor noises are independent.
    pub fn joint_obs_likelihood(&self, x: usize, joint_obs: &[usize]) -> f64 {
        joint_obs
            .iter()
            .zip(&self.observation_kernels)
            .map(|(&y, kernel)| kernel[x][y])
            .product()
    }

    /// Expected terminal cost under a (possibly unnormalized) state weighting.
    pub fn expected_terminal_cost(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&self.terminal_cost)
            .map(|(w, c)| w * c)
            .sum()
    }
}

/// Mixed-radix index space for joint actions or joint observations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSpace {
    radices: Vec<usize>,
    len: usize,
}

impl JointSpace {
    pub fn new(radices: Vec<usize>) -> Self {
        let len = radices.iter().product();
        Self { radices, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Row-major flattening: the last member varies fastest.
    pub fn flatten(&self, parts: &[usize]) -> usize {
        debug_assert_eq!(parts.len(), self.radices.len());
        parts
            .iter()
            .zip(&self.radices)
            .fold(0, |acc, (&p, &r)| acc * r + p)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut parts = vec![0; self.radices.len()];
        for (slot, &r) in parts.iter_mut().zip(&self.radices).rev() {
            *slot = flat % r;
            flat /= r;
        }
        parts
    }

    pub fn contains(&self, parts: &[usize]) -> bool {
        parts.len() == self.radices.len() && parts.iter().zip(&self.radices).all(|(p, r)| p < r)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len).map(|i| self.unflatten(i))
    }
}

/// One invariant violation, with a path to the offending field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub(crate) fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn check_distribution(path: &str, probs: &[f64], len: usize, out: &mut Vec<Violation>) {
    if probs.len() != len {
        out.push(Violation::new(
            path,
            format!("expected {len} entries, found {}", probs.len()),
        ));
        return;
    }
    if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
        out.push(Violation::new(
            format!("{path}[{i}]"),
            format!("probability {} is negative or not finite", probs[i]),
        ));
        return;
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        out.push(Violation::new(path, format!("sums to {total}, not 1")));
    }
}

/// Checks every model invariant. Costs carry no sign constraint.
pub fn validate_model(model: &TeamModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = model.num_members;
    let n = model.num_states();

    if k == 0 {
        out.push(Violation::new("num_members", "must be at least 1"));
    }
    if model.horizon == 0 {
        out.push(Violation::new("horizon", "must be at least 1"));
    }
    if n == 0 {
        out.push(Violation::new("states", "state set is empty"));
    }
    for (field, len) in [
        ("actions", model.actions.len()),
        ("observations", model.observations.len()),
        ("observation_kernels", model.observation_kernels.len()),
    ] {
        if len != k {
            out.push(Violation::new(
                field,
                format!("expected one entry per member ({k}), found {len}"),
            ));
        }
    }
    for (i, a) in model.actions.iter().enumerate() {
        if a.is_empty() {
            out.push(Violation::new(format!("actions[{i}]"), "action set is empty"));
        }
    }
    for (i, o) in model.observations.iter().enumerate() {
        if o.is_empty() {
            out.push(Violation::new(
                format!("observations[{i}]"),
                "observation set is empty",
            ));
        }
    }
    if !out.is_empty() {
        // Shapes below depend on the set sizes being sane.
        return out;
    }

    check_distribution("initial_dist", &model.initial_dist, n, &mut out);

    let joint = model.joint_actions();
    if model.transition.len() != n {
        out.push(Violation::new(
            "transition",
            format!("expected {n} rows, found {}", model.transition.len()),
        ));
    } else {
        for (x, by_action) in model.transition.iter().enumerate() {
            if by_action.len() != joint.len() {
                out.push(Violation::new(
                    format!("transition[{x}]"),
                    format!(
                        "expected {} joint actions, found {}",
                        joint.len(),
                        by_action.len()
                    ),
                ));
                continue;
            }
            for (ju, row) in by_action.iter().enumerate() {
                let path = format!("transition[{x}][{ju}]");
                check_distribution(&path, row, n, &mut out);
            }
        }
    }

    for (member, kernel) in model.observation_kernels.iter().enumerate() {
        let m = model.observations[member].len();
        if kernel.len() != n {
            out.push(Violation::new(
                format!("observation_kernels[{member}]"),
                format!("expected {n} rows, found {}", kernel.len()),
            ));
            continue;
        }
        for (x, row) in kernel.iter().enumerate() {
            check_distribution(
                &format!("observation_kernels[{member}][{x}]"),
                row,
                m,
                &mut out,
            );
        }
    }

    if let StageCost::TimeVarying(c) = &model.stage_cost {
        if c.len() != model.horizon {
            out.push(Violation::new(
                "stage_cost",
                format!("expected {} stages, found {}", model.horizon, c.len()),
            ));
        }
    }
    for t in 0..model.horizon {
        let Some(stage) = model.stage_cost.stage(t) else {
            continue;
        };
        let prefix = match model.stage_cost {
            StageCost::Stationary(_) => "stage_cost".to_string(),
            StageCost::TimeVarying(_) => format!("stage_cost[{t}]"),
        };
        if stage.len() != n {
            out.push(Violation::new(
                prefix,
                format!("expected {n} rows, found {}", stage.len()),
            ));
            continue;
        }
        for (x, row) in stage.iter().enumerate() {
            if row.len() != joint.len() {
                out.push(Violation::new(
                    format!("{prefix}[{x}]"),
                    format!("expected {} joint actions, found {}", joint.len(), row.len()),
                ));
            } else if let Some(ju) = row.iter().position(|c| !c.is_finite()) {
                out.push(Violation::new(format!("{prefix}[{x}][{ju}]"), "cost is not finite"));
            }
        }
        if matches!(model.stage_cost, StageCost::Stationary(_)) {
            break;
        }
    }

    if model.terminal_cost.len() != n {
        out.push(Violation::new(
            "terminal_cost",
            format!("expected {n} entries, found {}", model.terminal_cost.len()),
        ));
    } else if let Some(x) = model.terminal_cost.iter().position(|c| !c.is_finite()) {
        out.push(Violation::new(format!("terminal_cost[{x}]"), "cost is not finite"));
    }
    out
}
