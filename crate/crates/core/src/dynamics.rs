//! Discrete two-state epidemic model.
//!
//! ```text
//! f(k+1)     = (1 + delta(k)) f(k)
//! delta(k+1) = (1 + a) delta(k) + u
//! ```
//!
//! `f` is the daily death signal and `delta` its effective growth rate; `a`
//! and `u` are shared by all regions, `(f0, delta0)` are per region.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("parameter a = {0} must exceed -1")]
    BadRate(f64),
    #[error("initial value f0 = {0} must be positive")]
    NonPositiveF0(f64),
    #[error("non-finite input {0}")]
    NonFiniteInput(f64),
    #[error("trajectory became non-finite at step {step}")]
    NonFinite { step: usize },
}

/// Shared parameters: `a` (1/day) and `u` (1/day²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub a: f64,
    pub u: f64,
}

impl GlobalParams {
    pub fn new(a: f64, u: f64) -> Result<Self, DynamicsError> {
        let p = Self { a, u };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for v in [self.a, self.u] {
            if !v.is_finite() {
                return Err(DynamicsError::NonFiniteInput(v));
            }
        }
        if self.a <= -1.0 {
            return Err(DynamicsError::BadRate(self.a));
        }
        Ok(())
    }

    /// Limit `-u / a` of `delta` when `a` is in `(-1, 0)`.
    pub fn delta_limit(&self) -> f64 {
        -self.u / self.a
    }
}

/// Per-region initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionInit {
    pub f0: f64,
    pub delta0: f64,
}

impl RegionInit {
    pub fn new(f0: f64, delta0: f64) -> Result<Self, DynamicsError> {
        let init = Self { f0, delta0 };
        init.validate()?;
        Ok(init)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for v in [self.f0, self.delta0] {
            if !v.is_finite() {
                return Err(DynamicsError::NonFiniteInput(v));
            }
        }
        if self.f0 <= 0.0 {
            return Err(DynamicsError::NonPositiveF0(self.f0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub f: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Runs the recursion for `steps` steps; the trajectory holds `steps + 1` states.
pub fn simulate(params: &GlobalParams, init: &RegionInit, steps: usize) -> Result<Trajectory, DynamicsError> {
    params.validate()?;
    init.validate()?;
    let mut f = Vec::with_capacity(steps + 1);
    let mut delta = Vec::with_capacity(steps + 1);
    let (mut fk, mut dk) = (init.f0, init.delta0);
    f.push(fk);
    delta.push(dk);
    let growth = 1.0 + params.a;
    for step in 1..=steps {
        fk *= 1.0 + dk;
        dk = growth * dk + params.u;
        if !fk.is_finite() || !dk.is_finite() {
            return Err(DynamicsError::NonFinite { step });
        }
        f.push(fk);
        delta.push(dk);
    }
    Ok(Trajectory { f, delta })
}

/// `delta(k)` from the analytic solution of its linear recursion.
pub fn delta_closed_form(params: &GlobalParams, delta0: f64, k: u32) -> f64 {
    if k == 0 {
        return delta0;
    }
    if params.a == 0.0 {
        return delta0 + f64::from(k) * params.u;
    }
    // (1+a)^k delta0 + u((1+a)^k - 1)/a, written around (1+a)^k - 1 so that
    // small |a| does not cancel.
    let growth_m1 = (f64::from(k) * params.a.ln_1p()).exp_m1();
    delta0 + growth_m1 * (delta0 + params.u / params.a)
}

/// First step at which `delta` turns negative, i.e. the step where `f`
/// peaks, or `None` if that does not happen within `max_steps`.
pub fn peak_step(params: &GlobalParams, init: &RegionInit, max_steps: usize) -> Option<usize> {
    let growth = 1.0 + params.a;
    let mut dk = init.delta0;
    for k in 0..=max_steps {
        if dk < 0.0 {
            return Some(k);
        }
        dk = growth * dk + params.u;
    }
    None
}
