//! Purcell enhancement and spontaneous-emission coupling fraction.

use core::f64::consts::PI;

use crate::error::{domain, Result};

/// Whether the fundamental cavity mode is polarisation degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeDegeneracy {
    /// Circular pillar: two degenerate polarisation modes.
    #[default]
    Degenerate,
    /// Elliptical pillar: the emitter couples to a single mode, `F_p / 2`.
    NonDegenerate,
}

/// `F_p = 3 Q / (4 pi^2 V)`, with `V` in units of `(lambda/n)^3`.
pub fn purcell_factor(q_total: f64, mode_volume: f64) -> Result<f64> {
    if !(q_total > 0.0 && q_total.is_finite()) || !(mode_volume > 0.0 && mode_volume.is_finite()) {
        return Err(domain("Purcell factor needs finite Q > 0 and V > 0"));
    }
    Ok(3.0 * q_total / (4.0 * PI * PI * mode_volume))
}

/// `beta = F / (F + gamma)`, where `F` is `F_p` or `F_p / 2`.
pub fn beta(purcell: f64, gamma: f64, degeneracy: ModeDegeneracy) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain("leaky-mode rate gamma must be positive"));
    }
    if !(purcell >= 0.0 && purcell.is_finite()) {
        return Err(domain("Purcell factor must be finite and >= 0"));
    }
    let f = match degeneracy {
        ModeDegeneracy::Degenerate => purcell,
        ModeDegeneracy::NonDegenerate => 0.5 * purcell,
    };
    // Rounding can reach 1 when F >> gamma; beta stays strictly below it.
    Ok((f / (f + gamma)).min(1.0 - 0.5 * f64::EPSILON))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterCoupling {
    pub purcell_factor: f64,
    pub gamma: f64,
    /// Bulk radiative lifetime in ns; cancels in `beta` and the efficiency.
    pub tau0_ns: f64,
    pub beta: f64,
    pub degeneracy: ModeDegeneracy,
}

impl EmitterCoupling {
    pub fn new(purcell: f64, gamma: f64, tau0_ns: f64, degeneracy: ModeDegeneracy) -> Result<Self> {
        if !(tau0_ns > 0.0) {
            return Err(domain("tau0 must be positive"));
        }
        Ok(Self {
            purcell_factor: purcell,
            gamma,
            tau0_ns,
            beta: beta(purcell, gamma, degeneracy)?,
            degeneracy,
        })
    }

    /// Spontaneous-emission rate into the cavity mode, in 1/ns.
    pub fn mode_rate(&self) -> f64 {
        let f = match self.degeneracy {
            ModeDegeneracy::Degenerate => self.purcell_factor,
            ModeDegeneracy::NonDegenerate => 0.5 * self.purcell_factor,
        };
        f / self.tau0_ns
    }

    /// Total spontaneous-emission rate, in 1/ns.
    pub fn total_rate(&self) -> f64 {
        self.mode_rate() + self.gamma / self.tau0_ns
    }
}
