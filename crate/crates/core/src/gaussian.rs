//! Two-member linear-Gaussian team with two-step delayed sharing.
//!
//! The initial state `(X_0^1, X_0^2)` is a zero-mean Gaussian pair with unit
//! variances and covariance `c`. Member 2 acts once at time 2 knowing only
//! `X_0^2`; member 1 acts once at time 3 knowing `S = X_0^1 + X_0^2` and
//! `X_0^2`. The terminal state is `S - U_2^2 - U_3^1` and the cost is
//! `½ E[(S - U_2^2 - U_3^1)² + (U_3^1)²]`. Linear strategies
//! `U_2^2 = a X_0^2`, `U_3^1 = b S + d X_0^2` are optimal, so everything
//! reduces to second moments of `(S, X_0^2)`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::mean_and_std_error;
use crate::sim::{sample_rng, Estimate, SimConfig};

/// Samples drawn from each generator stream by [`mc_verify`].
pub const BLOCK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("covariance {0} must lie strictly between -1 and 1")]
    InvalidCovariance(f64),
    #[error("grid axis {axis} is invalid: {reason}")]
    InvalidAxis { axis: &'static str, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianInstance {
    pub covariance: f64,
}

impl GaussianInstance {
    pub fn new(covariance: f64) -> Result<Self, GaussianError> {
        if covariance.is_finite() && covariance.abs() < 1.0 {
            Ok(Self { covariance })
        } else {
            Err(GaussianError::InvalidCovariance(covariance))
        }
    }

    pub fn var_s(&self) -> f64 {
        2.0 + 2.0 * self.covariance
    }

    pub fn cov_s_x2(&self) -> f64 {
        1.0 + self.covariance
    }

    pub fn var_x2(&self) -> f64 {
        1.0
    }
}

/// `U_2^2 = a X_0^2`, `U_3^1 = b (X_0^1 + X_0^2) + d X_0^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearStrategy {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

/// Exact expected cost of a linear strategy.
pub fn cost(inst: &GaussianInstance, g: &LinearStrategy) -> f64 {
    let (vs, c, vx) = (inst.var_s(), inst.cov_s_x2(), inst.var_x2());
    // Terminal error (1-b) S - (a+d) X and control b S + d X.
    let (alpha, beta) = (1.0 - g.b, g.a + g.d);
    let terminal = alpha * alpha * vs - 2.0 * alpha * beta * c + beta * beta * vx;
    let control = g.b * g.b * vs + 2.0 * g.b * g.d * c + g.d * g.d * vx;
    0.5 * (terminal + control)
}

/// Optimal strategy and cost: `a = 1 + c`, `b = ½`, `d = -a/2`,
/// `J* = (1 - c²)/4`.
pub fn closed_form(inst: &GaussianInstance) -> (LinearStrategy, f64) {
    let a = 1.0 + inst.covariance;
    let g = LinearStrategy {
        a,
        b: 0.5,
        d: -a / 2.0,
    };
    (g, (1.0 - inst.covariance * inst.covariance) / 4.0)
}

/// Evenly spaced points `start, start + step, ...` up to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn check(&self, axis: &'static str) -> Result<(), GaussianError> {
        let bad = |reason: &str| {
            Err(GaussianError::InvalidAxis {
                axis,
                reason: reason.to_string(),
            })
        };
        if ![self.start, self.stop, self.step].iter().all(|v| v.is_finite()) {
            return bad("values must be finite");
        }
        if self.stop < self.start {
            return bad("range is empty");
        }
        if self.step <= 0.0 && self.stop > self.start {
            return bad("step must be positive");
        }
        Ok(())
    }

    fn points_checked(&self, axis: &'static str) -> Result<Vec<f64>, GaussianError> {
        self.check(axis)?;
        if self.stop == self.start {
            return Ok(vec![self.start]);
        }
        Ok(self.points())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub a: Axis,
    pub b: Axis,
    pub d: Axis,
}

impl Grid {
    /// `[lo, hi]` in every coordinate with a common step.
    pub fn cube(lo: f64, hi: f64, step: f64) -> Self {
        let axis = Axis {
            start: lo,
            stop: hi,
            step,
        };
        Self {
            a: axis,
            b: axis,
            d: axis,
        }
    }
}

/// Exhaustive search of the exact cost over a grid; the first minimum in
/// `(a, b, d)` order wins.
pub fn linear_search(inst: &GaussianInstance, grid: &Grid) -> Result<(LinearStrategy, f64), GaussianError> {
    let a_pts = grid.a.points_checked("a")?;
    let b_pts = grid.b.points_checked("b")?;
    let d_pts = grid.d.points_checked("d")?;
    let best_per_a: Vec<(LinearStrategy, f64)> = a_pts
        .par_iter()
        .map(|&a| {
            let mut best: Option<(LinearStrategy, f64)> = None;
            for &b in &b_pts {
                for &d in &d_pts {
                    let g = LinearStrategy { a, b, d };
                    let j = cost(inst, &g);
                    if best.is_none_or(|(_, v)| j < v) {
                        best = Some((g, j));
                    }
                }
            }
            best.expect("axes are non-empty")
        })
        .collect();
    let mut best = best_per_a[0];
    for cand in &best_per_a[1..] {
        if cand.1 < best.1 {
            best = *cand;
        }
    }
    Ok(best)
}

/// Monte Carlo estimate of the cost of `g`. Block `i` of [`BLOCK`] samples
/// uses generator stream `i`.
pub fn mc_verify(inst: &GaussianInstance, g: &LinearStrategy, config: SimConfig) -> Estimate {
    assert!(config.samples >= 1, "need at least one sample");
    let c = inst.covariance;
    let s = (1.0 - c * c).sqrt();
    let blocks = config.samples.div_ceil(BLOCK);
    let costs: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = sample_rng(config.seed, i as u64);
            let n = BLOCK.min(config.samples - i * BLOCK);
            (0..n)
                .map(|_| {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    let x2 = z2;
                    let x1 = c * z2 + s * z1;
                    let sum = x1 + x2;
                    let u2 = g.a * x2;
                    let u3 = g.b * sum + g.d * x2;
                    let terminal = sum - u2 - u3;
                    0.5 * (terminal * terminal + u3 * u3)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&costs);
    Estimate {
        mean,
        std_error,
        samples: config.samples,
    }
}

/// One step of the backward derivation with its numbers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkthroughStep {
    pub stage: usize,
    pub statement: String,
    pub values: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Walkthrough {
    pub steps: Vec<WalkthroughStep>,
    pub strategy: LinearStrategy,
    pub cost: f64,
}

/// The two-stage backward recursion carried out numerically.
///
/// Stage 3 is a scalar quadratic in `U_3^1` with unit weights on the terminal
/// error and on the control; stage 2 is then a mean-square estimation problem
/// for `S` given `X_0^2`.
pub fn dp_walkthrough(inst: &GaussianInstance) -> Walkthrough {
    let (q, r) = (1.0, 1.0);
    let gain = q / (q + r);
    let weight = 0.5 * q * r / (q + r);
    let (vs, c, vx) = (inst.var_s(), inst.cov_s_x2(), inst.var_x2());
    let a = c / vx;
    let b = gain;
    let d = -gain * a;
    let residual = vs - c * c / vx;
    let total = weight * residual;
    let steps = vec![
        WalkthroughStep {
            stage: 3,
            statement: "U_3^1 minimizes 1/2 [(S - U_2^2 - u)^2 + u^2] given (S, U_2^2): u = gain * (S - U_2^2)"
                .into(),
            values: vec![("gain".into(), gain)],
        },
        WalkthroughStep {
            stage: 3,
            statement: "V_3 = weight * E[(S - U_2^2)^2 | S, U_2^2]".into(),
            values: vec![("weight".into(), weight)],
        },
        WalkthroughStep {
            stage: 2,
            statement: "U_2^2 minimizes E[(S - U_2^2)^2 | X_0^2]: U_2^2 = E[S | X_0^2] = (Cov(S, X_0^2) / Var(X_0^2)) X_0^2"
                .into(),
            values: vec![
                ("cov_s_x2".into(), c),
                ("var_x2".into(), vx),
                ("a".into(), a),
            ],
        },
        WalkthroughStep {
            stage: 3,
            statement: "substituting U_2^2 = a X_0^2: U_3^1 = gain * S - gain * a * X_0^2 = b S + d X_0^2".into(),
            values: vec![("b".into(), b), ("d".into(), d)],
        },
        WalkthroughStep {
            stage: 2,
            statement: "V_2 = weight * (Var(S) - Cov(S, X_0^2)^2 / Var(X_0^2))".into(),
            values: vec![
                ("var_s".into(), vs),
                ("residual_variance".into(), residual),
                ("cost".into(), total),
            ],
        },
    ];
    Walkthrough {
        steps,
        strategy: LinearStrategy { a, b, d },
        cost: total,
    }
}

/// Cost along `U_2^2 = a X_0^2` with `(b, d)` frozen at the optimum, and
/// with `(b, d)` re-optimized for each `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Section {
    pub a: f64,
    pub j_fixed_bd: f64,
    pub j_best_bd: f64,
}

pub fn j_sections(inst: &GaussianInstance, a_values: &[f64]) -> Vec<Section> {
    let (opt, _) = closed_form(inst);
    let (vs, c, vx) = (inst.var_s(), inst.cov_s_x2(), inst.var_x2());
    a_values
        .iter()
        .map(|&a| Section {
            a,
            j_fixed_bd: cost(inst, &LinearStrategy { a, ..opt }),
            j_best_bd: 0.25 * (vs - 2.0 * a * c + a * a * vx),
        })
        .collect()
}
