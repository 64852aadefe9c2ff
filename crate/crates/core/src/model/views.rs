use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::InformationStructure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Obs,
    Act,
}

impl Kind {
    fn tag(self) -> char {
        match self {
            Kind::Obs => 'y',
            Kind::Act => 'u',
        }
    }
}

/// One datum of the common information: member `member`'s observation or
/// decision at `time`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CommonItem {
    pub time: usize,
    pub member: usize,
    pub kind: Kind,
    pub value: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrivateItem {
    pub time: usize,
    pub kind: Kind,
    pub value: usize,
}

/// What member `member` knows at `time`: the common data `Δ_t` and its own
/// private data `Λ_t^k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HistoryView {
    pub time: usize,
    pub member: usize,
    pub common: Vec<CommonItem>,
    pub private: Vec<PrivateItem>,
}

/// The team-level view: `Δ_t` together with every member's `Λ_t^k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TeamViews {
    pub time: usize,
    pub common: Vec<CommonItem>,
    pub private: Vec<Vec<PrivateItem>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Viewer {
    Member(usize),
    Team,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Views {
    Member(HistoryView),
    Team(TeamViews),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewError {
    #[error("member {member} out of range (team has {num_members} members)")]
    UnknownMember { member: usize, num_members: usize },
    #[error("time {t} out of range (horizon {horizon})")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("trajectory is malformed: {0}")]
    MalformedTrajectory(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("views do not determine member {member}'s {kind:?} at time {time}")]
    Incomplete {
        time: usize,
        member: usize,
        kind: Kind,
    },
    #[error("views disagree on member {member}'s {kind:?} at time {time}")]
    Conflict {
        time: usize,
        member: usize,
        kind: Kind,
    },
}

/// Everything the team has seen and done through time `t`: observations at
/// `0..=t` and decisions at `0..t`, each indexed `[time][member]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointHistory {
    pub observations: Vec<Vec<usize>>,
    pub actions: Vec<Vec<usize>>,
}

impl JointHistory {
    pub fn initial(joint_obs: Vec<usize>) -> Self {
        Self {
            observations: vec![joint_obs],
            actions: Vec::new(),
        }
    }

    pub fn time(&self) -> usize {
        self.observations.len() - 1
    }

    pub fn num_members(&self) -> usize {
        self.observations[0].len()
    }

    /// The history one step later, after the team plays `joint_action` and
    /// then observes `joint_obs`.
    pub fn extended(&self, joint_action: &[usize], joint_obs: &[usize]) -> Self {
        let mut next = self.clone();
        next.actions.push(joint_action.to_vec());
        next.observations.push(joint_obs.to_vec());
        next
    }

    fn value(&self, kind: Kind, time: usize, member: usize) -> usize {
        match kind {
            Kind::Obs => self.observations[time][member],
            Kind::Act => self.actions[time][member],
        }
    }

    fn common_items(&self, structure: &InformationStructure) -> Vec<CommonItem> {
        let t = self.time();
        let mut keyed = Vec::new();
        for j in 0..self.num_members() {
            let w = structure.common_window(t, j);
            for (kind, range) in [(Kind::Obs, w.obs), (Kind::Act, w.act)] {
                for s in range {
                    let release = structure
                        .release_time(j, s)
                        .expect("structure with common data has release times");
                    let item = CommonItem {
                        time: s,
                        member: j,
                        kind,
                        value: self.value(kind, s, j),
                    };
                    keyed.push(((release, j, s, kind), item));
                }
            }
        }
        keyed.sort_by_key(|(key, _)| *key);
        keyed.into_iter().map(|(_, item)| item).collect()
    }

    fn private_items(&self, structure: &InformationStructure, k: usize) -> Vec<PrivateItem> {
        let t = self.time();
        let w = structure.private_window(t, k);
        let mut items: Vec<PrivateItem> = w
            .obs
            .map(|s| PrivateItem {
                time: s,
                kind: Kind::Obs,
                value: self.observations[s][k],
            })
            .chain(w.act.map(|s| PrivateItem {
                time: s,
                kind: Kind::Act,
                value: self.actions[s][k],
            }))
            .collect();
        items.sort();
        items
    }

    pub fn member_view(&self, structure: &InformationStructure, k: usize) -> HistoryView {
        HistoryView {
            time: self.time(),
            member: k,
            common: self.common_items(structure),
            private: self.private_items(structure, k),
        }
    }

    pub fn team_views(&self, structure: &InformationStructure) -> TeamViews {
        TeamViews {
            time: self.time(),
            common: self.common_items(structure),
            private: (0..self.num_members())
                .map(|k| self.private_items(structure, k))
                .collect(),
        }
    }

    /// Whether the history is compatible with every datum of `view` that
    /// falls inside its time span. Later data is ignored.
    pub fn agrees_with(&self, view: &HistoryView) -> bool {
        let t = self.time();
        let matches = |kind: Kind, time: usize, member: usize, value: usize| match kind {
            Kind::Obs if time <= t => self.observations[time].get(member) == Some(&value),
            Kind::Act if time < t => self.actions[time].get(member) == Some(&value),
            _ => true,
        };
        view.common
            .iter()
            .all(|c| matches(c.kind, c.time, c.member, c.value))
            && view
                .private
                .iter()
                .all(|p| matches(p.kind, p.time, view.member, p.value))
    }

    /// Stable text key, e.g. `y0=0.1|u0=1.0|y1=0.0`.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (t, y) in self.observations.iter().enumerate() {
            if t > 0 {
                let u = &self.actions[t - 1];
                let _ = write!(out, "|u{}={}", t - 1, join(u));
                out.push('|');
            }
            let _ = write!(out, "y{t}={}", join(y));
        }
        out
    }
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(".")
}

impl HistoryView {
    /// The member's own decision at time `s`, wherever the view holds it.
    pub fn own_action(&self, s: usize) -> Option<usize> {
        self.private
            .iter()
            .find(|p| p.kind == Kind::Act && p.time == s)
            .map(|p| p.value)
            .or_else(|| {
                self.common
                    .iter()
                    .find(|c| c.kind == Kind::Act && c.time == s && c.member == self.member)
                    .map(|c| c.value)
            })
    }

    /// Stable text key, e.g. `t2 k0 c[0:y0=1,1:y0=0] p[y1=1,u1=0,y2=1]`.
    pub fn canonical(&self) -> String {
        let common: Vec<String> = self
            .common
            .iter()
            .map(|c| format!("{}:{}{}={}", c.member, c.kind.tag(), c.time, c.value))
            .collect();
        let private: Vec<String> = self
            .private
            .iter()
            .map(|p| format!("{}{}={}", p.kind.tag(), p.time, p.value))
            .collect();
        format!(
            "t{} k{} c[{}] p[{}]",
            self.time,
            self.member,
            common.join(","),
            private.join(",")
        )
    }
}

impl TeamViews {
    /// Recovers the joint history the views were cut from, provided they
    /// determine it and do not contradict each other.
    pub fn reconstruct(&self, num_members: usize) -> Result<JointHistory, ReconstructError> {
        let t = self.time;
        let mut obs: Vec<Vec<Option<usize>>> = vec![vec![None; num_members]; t + 1];
        let mut act: Vec<Vec<Option<usize>>> = vec![vec![None; num_members]; t];
        let mut place = |kind: Kind, time: usize, member: usize, value: usize| {
            let conflict = ReconstructError::Conflict { time, member, kind };
            let slot = match kind {
                Kind::Obs => obs.get_mut(time),
                Kind::Act => act.get_mut(time),
            }
            .and_then(|row| row.get_mut(member))
            .ok_or(conflict.clone())?;
            match slot {
                Some(v) if *v != value => Err(conflict),
                _ => {
                    *slot = Some(value);
                    Ok(())
                }
            }
        };
        for c in &self.common {
            place(c.kind, c.time, c.member, c.value)?;
        }
        for (k, items) in self.private.iter().enumerate() {
            for p in items {
                place(p.kind, p.time, k, p.value)?;
            }
        }
        let fill = |rows: Vec<Vec<Option<usize>>>, kind: Kind| {
            rows.into_iter()
                .enumerate()
                .map(|(time, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(member, v)| {
                            v.ok_or(ReconstructError::Incomplete { time, member, kind })
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(JointHistory {
            observations: fill(obs, Kind::Obs)?,
            actions: fill(act, Kind::Act)?,
        })
    }

    pub fn member(&self, k: usize) -> HistoryView {
        HistoryView {
            time: self.time,
            member: k,
            common: self.common.clone(),
            private: self.private[k].clone(),
        }
    }
}

/// A realized run: states `x_0..x_T`, observations `y_0..y_T` and decisions
/// `u_0..u_{T-1}`, each indexed `[time][member]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub observations: Vec<Vec<usize>>,
    pub actions: Vec<Vec<usize>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// The joint history through time `t`.
    pub fn history(&self, t: usize) -> JointHistory {
        JointHistory {
            observations: self.observations[..=t].to_vec(),
            actions: self.actions[..t].to_vec(),
        }
    }
}

/// Cuts the view of `viewer` at time `t` out of a realized trajectory.
pub fn extract_views(
    structure: &InformationStructure,
    traj: &Trajectory,
    t: usize,
    viewer: Viewer,
) -> Result<Views, ViewError> {
    let horizon = traj.horizon();
    if traj.observations.len() != horizon + 1 || traj.states.len() != horizon + 1 {
        return Err(ViewError::MalformedTrajectory(format!(
            "{} decision stages need {} states and observation stages, found {} and {}",
            horizon,
            horizon + 1,
            traj.states.len(),
            traj.observations.len()
        )));
    }
    let num_members = traj.observations[0].len();
    if traj
        .observations
        .iter()
        .chain(&traj.actions)
        .any(|row| row.len() != num_members)
    {
        return Err(ViewError::MalformedTrajectory(
            "every stage must carry one entry per member".into(),
        ));
    }
    if t > horizon {
        return Err(ViewError::TimeOutOfRange { t, horizon });
    }
    let history = traj.history(t);
    match viewer {
        Viewer::Member(k) if k >= num_members => Err(ViewError::UnknownMember {
            member: k,
            num_members,
        }),
        Viewer::Member(k) => Ok(Views::Member(history.member_view(structure, k))),
        Viewer::Team => Ok(Views::Team(history.team_views(structure))),
    }
}
