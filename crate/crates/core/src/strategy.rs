//! Control strategies. Every strategy answers "what does member `k` do after
//! joint history `h`", but decentralized strategies only ever look at the
//! part of `h` that member `k` is allowed to see.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::filter::Belief;
use crate::model::{HistoryView, InformationStructure, JointHistory};
use crate::numeric::stable_hash;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("strategy has no action for member {member} at {key}")]
    Undefined { member: usize, key: String },
}

pub trait Policy: Sync {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError>;

    fn joint_action(
        &self,
        structure: &InformationStructure,
        history: &JointHistory,
    ) -> Result<Vec<usize>, StrategyError> {
        (0..history.num_members())
            .map(|k| self.member_action(structure, k, history))
            .collect()
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError> {
        (**self).member_action(structure, member, history)
    }
}

/// What a table does with a key it has no entry for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    Fail,
    /// Play the first action. Used for histories of probability zero, which
    /// never affect the cost.
    FirstAction,
}

/// Every member plays a fixed action at every stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstantStrategy {
    pub actions: Vec<usize>,
}

impl Policy for ConstantStrategy {
    fn member_action(&self, _: &InformationStructure, member: usize, _: &JointHistory) -> Result<usize, StrategyError> {
        Ok(self.actions[member])
    }
}

/// A pseudo-random history table defined everywhere: the action is a hash of
/// the seed and the key. With `centralized` the key is the full joint history,
/// otherwise it is the member's own view, which makes it an admissible
/// decentralized strategy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HashedStrategy {
    pub seed: u64,
    pub action_counts: Vec<usize>,
    pub centralized: bool,
}

impl Policy for HashedStrategy {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError> {
        let key = if self.centralized {
            format!("{member}/{}", history.canonical())
        } else {
            history.member_view(structure, member).canonical()
        };
        let h = stable_hash(self.seed, key.as_bytes());
        Ok((h % self.action_counts[member] as u64) as usize)
    }
}

/// Full joint history → joint action.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralizedTable {
    pub table: BTreeMap<JointHistory, Vec<usize>>,
    pub fallback: Fallback,
}

impl Policy for CentralizedTable {
    fn member_action(&self, _: &InformationStructure, member: usize, history: &JointHistory) -> Result<usize, StrategyError> {
        match (self.table.get(history), self.fallback) {
            (Some(u), _) => Ok(u[member]),
            (None, Fallback::FirstAction) => Ok(0),
            (None, Fallback::Fail) => Err(StrategyError::Undefined {
                member,
                key: history.canonical(),
            }),
        }
    }
}

/// One table per member, keyed by that member's view `(Δ_t, Λ_t^k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecentralizedTable {
    pub tables: Vec<BTreeMap<HistoryView, usize>>,
    pub fallback: Fallback,
}

impl Policy for DecentralizedTable {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError> {
        let view = history.member_view(structure, member);
        match (self.tables[member].get(&view), self.fallback) {
            (Some(&u), _) => Ok(u),
            (None, Fallback::FirstAction) => Ok(0),
            (None, Fallback::Fail) => Err(StrategyError::Undefined {
                member,
                key: view.canonical(),
            }),
        }
    }
}

/// A separated team strategy: each reachable node carries its team belief
/// and the joint action chosen there.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatedTeamStrategy {
    pub nodes: BTreeMap<JointHistory, (Belief, Vec<usize>)>,
}

impl Policy for SeparatedTeamStrategy {
    fn member_action(&self, _: &InformationStructure, member: usize, history: &JointHistory) -> Result<usize, StrategyError> {
        self.nodes
            .get(history)
            .map(|(_, u)| u[member])
            .ok_or_else(|| StrategyError::Undefined {
                member,
                key: history.canonical(),
            })
    }
}

/// A separated strategy for a single member: each of its reachable views
/// carries its member belief and the action chosen there.
#[derive(Clone, Debug, PartialEq)]
pub struct MemberSeparatedStrategy {
    pub member: usize,
    pub nodes: BTreeMap<HistoryView, (Belief, usize)>,
}

impl MemberSeparatedStrategy {
    pub fn action(&self, view: &HistoryView) -> Option<usize> {
        self.nodes.get(view).map(|(_, u)| *u)
    }
}

/// Each member follows its own separated strategy. Views outside a member's
/// table fall back as configured.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileStrategy {
    pub members: Vec<MemberSeparatedStrategy>,
    pub fallback: Fallback,
}

impl Policy for ProfileStrategy {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError> {
        let view = history.member_view(structure, member);
        match (self.members[member].action(&view), self.fallback) {
            (Some(u), _) => Ok(u),
            (None, Fallback::FirstAction) => Ok(0),
            (None, Fallback::Fail) => Err(StrategyError::Undefined {
                member,
                key: view.canonical(),
            }),
        }
    }
}

/// Member `k`'s own strategy `g^k` spliced into a profile for everyone else.
pub struct Override<'a> {
    pub member: usize,
    pub own: &'a dyn Policy,
    pub others: &'a dyn Policy,
}

impl Policy for Override<'_> {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError> {
        if member == self.member {
            self.own.member_action(structure, member, history)
        } else {
            self.others.member_action(structure, member, history)
        }
    }
}

/// The strategy forms the solvers and oracles produce.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    SeparatedTeam(SeparatedTeamStrategy),
    MemberSeparated(MemberSeparatedStrategy),
    Centralized(CentralizedTable),
    Decentralized(DecentralizedTable),
}

impl Policy for Strategy {
    fn member_action(
        &self,
        structure: &InformationStructure,
        member: usize,
        history: &JointHistory,
    ) -> Result<usize, StrategyError> {
        match self {
            Strategy::SeparatedTeam(s) => s.member_action(structure, member, history),
            Strategy::MemberSeparated(s) => {
                let view = history.member_view(structure, member);
                match (member == s.member).then(|| s.action(&view)).flatten() {
                    Some(u) => Ok(u),
                    None => Err(StrategyError::Undefined {
                        member,
                        key: view.canonical(),
                    }),
                }
            }
            Strategy::Centralized(s) => s.member_action(structure, member, history),
            Strategy::Decentralized(s) => s.member_action(structure, member, history),
        }
    }
}

/// One row of a serialized strategy: a canonical key and what is played there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyEntry {
    pub key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub belief: Option<Vec<f64>>,
    pub action: Vec<usize>,
}

impl Strategy {
    pub fn kind(&self) -> &'static str {
        match self {
            Strategy::SeparatedTeam(_) => "separated_team",
            Strategy::MemberSeparated(_) => "member_separated",
            Strategy::Centralized(_) | Strategy::Decentralized(_) => "history_table",
        }
    }

    /// Rows in key order, ready for a report.
    pub fn entries(&self) -> Vec<StrategyEntry> {
        match self {
            Strategy::SeparatedTeam(s) => s
                .nodes
                .iter()
                .map(|(h, (b, u))| StrategyEntry {
                    key: h.canonical(),
                    member: None,
                    belief: Some(b.probs.clone()),
                    action: u.clone(),
                })
                .collect(),
            Strategy::MemberSeparated(s) => s
                .nodes
                .iter()
                .map(|(v, (b, u))| StrategyEntry {
                    key: v.canonical(),
                    member: Some(s.member),
                    belief: Some(b.probs.clone()),
                    action: vec![*u],
                })
                .collect(),
            Strategy::Centralized(s) => s
                .table
                .iter()
                .map(|(h, u)| StrategyEntry {
                    key: h.canonical(),
                    member: None,
                    belief: None,
                    action: u.clone(),
                })
                .collect(),
            Strategy::Decentralized(s) => s
                .tables
                .iter()
                .enumerate()
                .flat_map(|(k, t)| {
                    t.iter().map(move |(v, u)| StrategyEntry {
                        key: v.canonical(),
                        member: Some(k),
                        belief: None,
                        action: vec![*u],
                    })
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decentralized_hash_only_sees_the_view() {
        let s = InformationStructure::delayed_sharing(2, 1);
        let g = HashedStrategy {
            seed: 9,
            action_counts: vec![2, 2],
            centralized: false,
        };
        // Member 0 cannot see member 1's latest observation.
        let a = JointHistory::initial(vec![0, 0]).extended(&[1, 1], &[1, 0]);
        let b = JointHistory::initial(vec![0, 0]).extended(&[1, 1], &[1, 1]);
        assert_eq!(
            g.member_action(&s, 0, &a).unwrap(),
            g.member_action(&s, 0, &b).unwrap()
        );
    }

    #[test]
    fn tables_respect_fallback() {
        let s = InformationStructure::NoSharing;
        let h = JointHistory::initial(vec![1]);
        let mut t = CentralizedTable {
            table: BTreeMap::new(),
            fallback: Fallback::Fail,
        };
        assert!(t.member_action(&s, 0, &h).is_err());
        t.fallback = Fallback::FirstAction;
        assert_eq!(t.member_action(&s, 0, &h), Ok(0));
        t.table.insert(h.clone(), vec![1]);
        assert_eq!(t.joint_action(&s, &h), Ok(vec![1]));
    }
}
