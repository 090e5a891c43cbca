//! Parameter tuples for the two-time kernels and for the conditional law.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Arguments (x1, x2, tau1, tau2, h1, h2) of the two-time series.
///
/// Level 1 is the point (x1, tau1) with height h1; level 2 carries the increments, so the
/// second space-time point is (x1 + x2, tau1 + tau2) with height h1 + h2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub x1: f64,
    pub x2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl KernelParams {
    pub fn new(x1: f64, x2: f64, tau1: f64, tau2: f64, h1: f64, h2: f64) -> Result<Self> {
        let p = Self { x1, x2, tau1, tau2, h1, h2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.x1, self.x2, self.tau1, self.tau2, self.h1, self.h2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("kernel parameters must be finite"));
        }
        if !(self.tau1 > 0.0 && self.tau2 > 0.0) {
            return Err(invalid(format!(
                "tau1 and tau2 must be positive, got {} and {}",
                self.tau1, self.tau2
            )));
        }
        Ok(())
    }

    /// (x, tau, h) of the requested level.
    pub fn level(&self, level: u8) -> (f64, f64, f64) {
        match level {
            1 => (self.x1, self.tau1, self.h1),
            _ => (self.x2, self.tau2, self.h2),
        }
    }

    /// Same parameters with the level-1 height shifted by `d1` and the level-2 height by `d2`.
    pub fn shifted(&self, d1: f64, d2: f64) -> Self {
        Self { h1: self.h1 + d1, h2: self.h2 + d2, ..*self }
    }
}

/// Arguments (x, x', tau, tau', h, h') of the conditional law
/// P(H(x + x', tau + tau') - H(x', tau') >= h | H(x', tau') = h').
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalParams {
    pub x: f64,
    pub xp: f64,
    pub tau: f64,
    pub taup: f64,
    pub h: f64,
    pub hp: f64,
}

impl ConditionalParams {
    pub fn new(x: f64, xp: f64, tau: f64, taup: f64, h: f64, hp: f64) -> Result<Self> {
        let p = Self { x, xp, tau, taup, h, hp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.x, self.xp, self.tau, self.taup, self.h, self.hp];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("conditional parameters must be finite"));
        }
        if !(self.tau > 0.0 && self.taup > 0.0) {
            return Err(invalid(format!(
                "tau and tau' must be positive, got {} and {}",
                self.tau, self.taup
            )));
        }
        Ok(())
    }

    /// h* = (h' + x'^2 / tau') / tau'.
    pub fn h_star(&self) -> f64 {
        (self.hp + self.xp * self.xp / self.taup) / self.taup
    }

    /// h~ = (h + x^2 / tau) / tau.
    pub fn h_tilde(&self) -> f64 {
        (self.h + self.x * self.x / self.tau) / self.tau
    }

    /// The two-time parameters with level 1 at (x', tau', h') and level 2 at (x, tau, h).
    pub fn kernel(&self) -> KernelParams {
        KernelParams {
            x1: self.xp,
            x2: self.x,
            tau1: self.taup,
            tau2: self.tau,
            h1: self.hp,
            h2: self.h,
        }
    }

    pub fn with_hp(&self, hp: f64) -> Self {
        Self { hp, ..*self }
    }
}
