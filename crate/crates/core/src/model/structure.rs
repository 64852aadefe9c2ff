use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Violation;

/// Who knows what and when.
///
/// Each variant splits the data available to member `k` at time `t` into the
/// common part shared by the whole team and the part known only to `k`. Delays
/// are per member: member `j`'s data becomes common `delays[j]` steps late.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum InformationStructure {
    /// Observations and decisions of every member are shared after a delay.
    DelayedSharing { delays: Vec<usize> },
    /// Everything up to the last multiple of `period` is shared.
    PeriodicSharing { period: usize },
    /// Only observations are shared (after a delay); own decisions are recalled.
    DelayedObservation { delays: Vec<usize> },
    /// Only decisions are shared (after a delay); own observations are recalled.
    DelayedControl { delays: Vec<usize> },
    /// Nothing is shared.
    NoSharing,
}

/// Inclusive-exclusive time windows of the data a viewer holds for one
/// member: observations at `obs` and decisions at `act`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub obs: Range<usize>,
    pub act: Range<usize>,
}

impl Window {
    const EMPTY: Window = Window { obs: 0..0, act: 0..0 };
}

/// `0..=t-n`, empty when `t < n`.
fn shared_upto(t: usize, n: usize) -> Range<usize> {
    0..(t + 1).saturating_sub(n)
}

impl InformationStructure {
    /// Symmetric n-step delayed sharing.
    pub fn delayed_sharing(num_members: usize, n: usize) -> Self {
        Self::DelayedSharing {
            delays: vec![n; num_members],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DelayedSharing { .. } => "delayed_sharing",
            Self::PeriodicSharing { .. } => "periodic_sharing",
            Self::DelayedObservation { .. } => "delayed_observation",
            Self::DelayedControl { .. } => "delayed_control",
            Self::NoSharing => "no_sharing",
        }
    }

    fn delay(&self, member: usize) -> usize {
        match self {
            Self::DelayedSharing { delays }
            | Self::DelayedObservation { delays }
            | Self::DelayedControl { delays } => delays[member],
            _ => unreachable!("delay queried on a variant without delays"),
        }
    }

    /// Last time covered by the common data under periodic sharing. The
    /// first block `t <= period` shares nothing.
    fn periodic_boundary(period: usize, t: usize) -> Option<usize> {
        (t > period).then(|| ((t - 1) / period) * period)
    }

    /// Member `j`'s data in the common information `Δ_t`.
    pub fn common_window(&self, t: usize, j: usize) -> Window {
        match self {
            Self::DelayedSharing { .. } => {
                let r = shared_upto(t, self.delay(j));
                Window {
                    obs: r.clone(),
                    act: r,
                }
            }
            Self::PeriodicSharing { period } => match Self::periodic_boundary(*period, t) {
                Some(b) => Window {
                    obs: 0..b + 1,
                    act: 0..b + 1,
                },
                None => Window::EMPTY,
            },
            Self::DelayedObservation { .. } => Window {
                obs: shared_upto(t, self.delay(j)),
                act: 0..0,
            },
            Self::DelayedControl { .. } => Window {
                obs: 0..0,
                act: shared_upto(t, self.delay(j)),
            },
            Self::NoSharing => Window::EMPTY,
        }
    }

    /// Member `k`'s private data `Λ_t^k`.
    pub fn private_window(&self, t: usize, k: usize) -> Window {
        match self {
            Self::DelayedSharing { .. } => {
                let start = (t + 1).saturating_sub(self.delay(k));
                Window {
                    obs: start..t + 1,
                    act: start..t,
                }
            }
            Self::PeriodicSharing { period } => {
                let start = Self::periodic_boundary(*period, t).map_or(0, |b| b + 1);
                Window {
                    obs: start..t + 1,
                    act: start..t,
                }
            }
            Self::DelayedObservation { .. } => Window {
                obs: (t + 1).saturating_sub(self.delay(k))..t + 1,
                act: 0..t,
            },
            Self::DelayedControl { .. } => Window {
                obs: 0..t + 1,
                act: (t + 1).saturating_sub(self.delay(k))..t,
            },
            Self::NoSharing => Window {
                obs: 0..t + 1,
                act: 0..t,
            },
        }
    }

    /// First time at which member `j`'s datum from time `s` is common, if ever.
    /// Common data is listed in release order so that it only ever grows at
    /// the end.
    pub(crate) fn release_time(&self, j: usize, s: usize) -> Option<usize> {
        match self {
            Self::DelayedSharing { .. }
            | Self::DelayedObservation { .. }
            | Self::DelayedControl { .. } => Some(s + self.delay(j)),
            Self::PeriodicSharing { period } => {
                let blocks = s.div_ceil(*period).max(1);
                Some(blocks * period + 1)
            }
            Self::NoSharing => None,
        }
    }

    /// Whether the common data together with every member's private data
    /// determines all observations `0..=t` and decisions `0..t` for each
    /// `t <= horizon`. Returns the first uncovered datum otherwise.
    pub fn first_uncovered(
        &self,
        num_members: usize,
        horizon: usize,
    ) -> Option<(usize, usize, super::Kind)> {
        use super::Kind;
        for t in 0..=horizon {
            for j in 0..num_members {
                let c = self.common_window(t, j);
                let p = self.private_window(t, j);
                for s in 0..=t {
                    if !c.obs.contains(&s) && !p.obs.contains(&s) {
                        return Some((t, j, Kind::Obs));
                    }
                    if s < t && !c.act.contains(&s) && !p.act.contains(&s) {
                        return Some((t, j, Kind::Act));
                    }
                }
            }
        }
        None
    }

    pub fn validate(&self, num_members: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            Self::DelayedSharing { delays }
            | Self::DelayedObservation { delays }
            | Self::DelayedControl { delays } => {
                if delays.len() != num_members {
                    out.push(Violation::new(
                        "information_structure.delays",
                        format!(
                            "expected one delay per member ({num_members}), found {}",
                            delays.len()
                        ),
                    ));
                }
                for (i, d) in delays.iter().enumerate() {
                    if *d == 0 {
                        out.push(Violation::new(
                            format!("information_structure.delays[{i}]"),
                            "delay must be at least 1",
                        ));
                    }
                }
            }
            Self::PeriodicSharing { period } => {
                if *period == 0 {
                    out.push(Violation::new(
                        "information_structure.period",
                        "period must be at least 1",
                    ));
                }
            }
            Self::NoSharing => {}
        }
        out
    }
}
