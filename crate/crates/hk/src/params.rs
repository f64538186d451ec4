//! Shared parameter bundle and agent state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::wrap_position;

/// Parameters shared by the agent simulator and the mean-field solver.
///
/// `n` is the agent count, `r` the confidence radius, `sigma` the noise
/// magnitude, `l` the domain circumference (1 unless overridden), `seed` the
/// reproducibility seed and `h` the agent-simulation time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub r: f64,
    pub sigma: f64,
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_l() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    1
}
fn default_h() -> f64 {
    1e-2
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n: 100,
            r: 0.1,
            sigma: 0.05,
            l: 1.0,
            seed: 1,
            h: 1e-2,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n < 1 {
            return Err(ParamError::AgentCount);
        }
        if !(self.r > 0.0 && self.r <= self.l / 2.0) {
            return Err(ParamError::Radius {
                r: self.r,
                l: self.l,
            });
        }
        if !(self.sigma >= 0.0) {
            return Err(ParamError::Noise(self.sigma));
        }
        if !(self.h > 0.0) {
            return Err(ParamError::TimeStep(self.h));
        }
        if !(self.l > 0.0) {
            return Err(ParamError::DomainLength(self.l));
        }
        Ok(())
    }

    /// Dimensionless noise ratio `sigma^2 / (4 R^3)`.
    pub fn gamma(&self) -> f64 {
        self.sigma * self.sigma / (4.0 * self.r.powi(3))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("agent count must be at least 1")]
    AgentCount,
    #[error("confidence radius r={r} must satisfy 0 < r <= L/2 (L={l})")]
    Radius { r: f64, l: f64 },
    #[error("noise magnitude must be nonnegative, got {0}")]
    Noise(f64),
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
    #[error("domain length must be positive, got {0}")]
    DomainLength(f64),
}

/// Positions of the `N` agents on `[0, L)` plus the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub positions: Vec<f64>,
    pub t: f64,
}

impl AgentState {
    /// Build a state, normalizing every position into `[0, L)`.
    pub fn new(positions: Vec<f64>, t: f64, l: f64) -> Self {
        let positions = positions.into_iter().map(|x| wrap_position(x, l)).collect();
        AgentState { positions, t }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}
