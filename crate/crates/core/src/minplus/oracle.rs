//! Brute-force evaluation of the (min,plus) operations from their inf/sup
//! definitions over a discretized time grid.
//!
//! Nothing here uses the closed forms; the module exists to certify them.
//! The left-over is reported as its non-negative closure, since service
//! curves live in the non-negative functions.

use thiserror::Error;

use crate::curve::{RateLatency, TokenBucket};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid too coarse: step {step}, horizon {horizon} ({reason})")]
    TooCoarse {
        step: f64,
        horizon: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveOp {
    Convolve(RateLatency, RateLatency),
    Deconvolve(TokenBucket, RateLatency),
    Leftover(RateLatency, TokenBucket),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest deviation from the exact operation that the grid can cause,
    /// in value units.
    pub resolution: f64,
}

impl Grid {
    pub fn new(step: f64, horizon: f64) -> Result<Grid, OracleError> {
        if !(step > 0.0) || !(horizon >= step) || horizon / step > 1e7 {
            return Err(OracleError::TooCoarse {
                step,
                horizon,
                reason: "need 0 < step <= horizon and at most 1e7 points".into(),
            });
        }
        Ok(Grid { step, horizon })
    }

    /// Default grid for a set of operands: horizon = 4·(max L + max B /
    /// min(R − r)) and step = horizon / 1000. Without a positive residual
    /// rate the burst term is dropped.
    pub fn for_operands(arrivals: &[TokenBucket], services: &[RateLatency]) -> Grid {
        let max_l = services.iter().map(|s| s.latency).fold(0.0, f64::max);
        let max_b = arrivals.iter().map(|a| a.burst).fold(0.0, f64::max);
        let max_r = arrivals.iter().map(|a| a.rate).fold(0.0, f64::max);
        let min_gap = services
            .iter()
            .map(|s| s.rate - max_r)
            .fold(f64::INFINITY, f64::min);
        let burst_term = if min_gap > 0.0 && min_gap.is_finite() {
            max_b / min_gap
        } else {
            0.0
        };
        let mut horizon = 4.0 * (max_l + burst_term);
        if !(horizon > 0.0) {
            horizon = 1.0;
        }
        Grid {
            step: 1e-3 * horizon,
            horizon,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = (self.horizon / self.step).floor() as usize;
        (0..=n).map(|i| i as f64 * self.step).collect()
    }

    /// `{0, Δ, 2Δ, …} ∩ [0, t]` followed by `t` itself.
    fn up_to(&self, t: f64) -> impl Iterator<Item = f64> + '_ {
        let n = (t / self.step).floor().max(0.0) as usize;
        (0..=n).map(move |i| i as f64 * self.step).chain(std::iter::once(t))
    }
}

/// `inf_{0≤u≤t} β₁(t−u) + β₂(u)`.
pub fn sampled_convolution(b1: &RateLatency, b2: &RateLatency, t: f64, grid: &Grid) -> f64 {
    grid.up_to(t)
        .map(|u| b1.eval(t - u) + b2.eval(u))
        .fold(f64::INFINITY, f64::min)
}

/// `sup_{u≥0} α(t+u) − β(u)`, with `u` truncated to the grid horizon.
pub fn sampled_deconvolution(
    a: &TokenBucket,
    b: &RateLatency,
    t: f64,
    grid: &Grid,
) -> Result<f64, OracleError> {
    if b.latency > grid.horizon {
        return Err(OracleError::TooCoarse {
            step: grid.step,
            horizon: grid.horizon,
            reason: format!("latency {} beyond horizon", b.latency),
        });
    }
    Ok(grid
        .up_to(grid.horizon)
        .map(|u| a.eval(t + u) - b.eval(u))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `[sup_{0≤u≤t} β(u) − α(u)]⁺`.
pub fn sampled_leftover(b: &RateLatency, a: &TokenBucket, t: f64, grid: &Grid) -> f64 {
    grid.up_to(t)
        .map(|u| b.eval(u) - a.eval(u))
        .fold(0.0, f64::max)
}

/// First grid point `d` with `(α ⊘ β)(−d) ≤ 0`, i.e.
/// `sup_{v≥0} α(v) − β(d+v) ≤ 0`.
pub fn sampled_delay(a: &TokenBucket, b: &RateLatency, grid: &Grid) -> Result<f64, OracleError> {
    let points = grid.points();
    for &d in &points {
        let worst = points
            .iter()
            .map(|&v| a.eval(v) - b.eval(d + v))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst <= 0.0 {
            return Ok(d);
        }
    }
    Err(OracleError::TooCoarse {
        step: grid.step,
        horizon: grid.horizon,
        reason: "no grid point bounds the delay".into(),
    })
}

/// Samples one operation on every grid point.
pub fn sample_oracle(op: &CurveOp, grid: &Grid) -> Result<SampledFunction, OracleError> {
    let times = grid.points();
    let (values, slope) = match op {
        CurveOp::Convolve(b1, b2) => (
            times
                .iter()
                .map(|&t| sampled_convolution(b1, b2, t, grid))
                .collect::<Vec<_>>(),
            b1.rate.max(b2.rate),
        ),
        CurveOp::Deconvolve(a, b) => (
            times
                .iter()
                .map(|&t| sampled_deconvolution(a, b, t, grid))
                .collect::<Result<Vec<_>, _>>()?,
            a.rate.max(b.rate),
        ),
        CurveOp::Leftover(b, a) => {
            // running maximum of β − α, clamped at zero
            let mut best = 0.0f64;
            let vals = times
                .iter()
                .map(|&t| {
                    best = best.max(b.eval(t) - a.eval(t));
                    best
                })
                .collect();
            (vals, b.rate.max(a.rate))
        }
    };
    Ok(SampledFunction {
        times,
        values,
        resolution: slope * grid.step,
    })
}
