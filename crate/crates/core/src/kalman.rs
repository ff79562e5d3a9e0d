// SPDX-License-Identifier: Apache-2.0

//! Scalar Kalman filter for one boundary depth.
//!
//! ```text
//! predict:  x- = f x          p- = f p f + q
//! update:   K  = p- h / (h p- h + r)
//!           x  = x- + K (z - h x-)
//!           p  = (1 - K h) p-
//! ```
//!
//! With `f = h = 1` the gain sequence depends only on `q`, `r` and `p0`,
//! never on the observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::BoundaryObservation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub f: f64,
    pub h: f64,
    pub q: f64,
    pub r: f64,
    pub p0: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            f: 1.0,
            h: 1.0,
            q: 1e-5,
            r: 1.0,
            p0: 1.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        let finite_nonzero = |v: f64| v.is_finite() && v != 0.0;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !finite_nonzero(self.f) || !finite_nonzero(self.h) {
            return Err(Error::InvalidParam("f and h must be finite and nonzero".into()));
        }
        if !positive(self.q) || !positive(self.r) || !positive(self.p0) {
            return Err(Error::InvalidParam("q, r and p0 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub x_hat: f64,
    pub p: f64,
    pub last_gain: f64,
    pub steps: u64,
}

impl KalmanState {
    pub fn init(first_observation: f64, params: &FilterParams) -> Result<Self> {
        if !first_observation.is_finite() {
            return Err(Error::NonFinite("initial observation"));
        }
        Ok(Self {
            x_hat: first_observation,
            p: params.p0,
            last_gain: 0.0,
            steps: 0,
        })
    }

    pub fn predict(self, params: &FilterParams) -> Self {
        Self {
            x_hat: params.f * self.x_hat,
            p: params.f * self.p * params.f + params.q,
            ..self
        }
    }

    /// Measurement update of a predicted state.
    pub fn update(self, z: f64, params: &FilterParams) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::NonFinite("observation"));
        }
        let h = params.h;
        let gain = self.p * h / (h * self.p * h + params.r);
        Ok(Self {
            x_hat: self.x_hat + gain * (z - h * self.x_hat),
            p: (1.0 - gain * h) * self.p,
            last_gain: gain,
            steps: self.steps,
        })
    }

    /// Predict, then update if the observation is valid. Dropouts only widen
    /// the covariance. The returned estimate is the posterior `x_hat`.
    pub fn step(self, obs: &BoundaryObservation, params: &FilterParams) -> (Self, f64) {
        let prior = self.predict(params);
        let mut next = match obs.depth() {
            Some(z) if z.is_finite() => prior.update(z, params).unwrap_or(prior),
            _ => prior,
        };
        next.steps += 1;
        (next, next.x_hat)
    }
}

/// Fixed point of the prior-covariance recursion and the gain it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub p_prior: f64,
    pub gain: f64,
    pub iterations: usize,
}

/// Iterates `p- <- f (1 - K h) p- f + q` from `f p0 f + q` until successive
/// priors differ by less than `tol`.
pub fn steady_state(params: &FilterParams, tol: f64, max_iter: usize) -> Result<SteadyState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("tol must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParam("max_iter must be positive".into()));
    }
    let FilterParams { f, h, q, r, p0 } = *params;
    let gain_of = |p_prior: f64| p_prior * h / (h * p_prior * h + r);
    let mut p_prior = f * p0 * f + q;
    for i in 1..=max_iter {
        let k = gain_of(p_prior);
        let next = f * ((1.0 - k * h) * p_prior) * f + q;
        if !next.is_finite() {
            break;
        }
        let delta = (next - p_prior).abs();
        p_prior = next;
        if delta < tol {
            return Ok(SteadyState {
                p_prior,
                gain: gain_of(p_prior),
                iterations: i,
            });
        }
    }
    Err(Error::NoConvergence(max_iter))
}
