//! Model and truncation parameters shared by the operator builders.

use crate::error::{Error, Result};

/// Physical couplings and truncation knobs for one model instance.
///
/// `m_grid == 1` freezes the gauge zero mode at `a = 0` (no derivative term);
/// a dynamical zero mode needs at least three grid points for the second
/// difference stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Circle circumference `L`.
    pub l: f64,
    /// Gauge coupling `e`.
    pub coupling_e: f64,
    /// Gauge zero mode value `a` entering the regularized charges.
    pub a: f64,
    /// Mode window half-width: modes `n` with `|n| <= n_cut` are kept.
    pub n_cut: i32,
    /// Cap on the total particle number (fermions + antifermions).
    pub max_particles: u32,
    /// Number of grid points for the gauge zero mode.
    pub m_grid: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) || !self.l.is_finite() {
            return Err(Error::InvalidParams(format!("L must be positive, got {}", self.l)));
        }
        if !(self.coupling_e >= 0.0) || !self.coupling_e.is_finite() {
            return Err(Error::InvalidParams(format!(
                "coupling e must be nonnegative, got {}",
                self.coupling_e
            )));
        }
        if !self.a.is_finite() {
            return Err(Error::InvalidParams(format!("zero mode a must be finite, got {}", self.a)));
        }
        if self.n_cut < 1 {
            return Err(Error::InvalidParams(format!("n_cut must be >= 1, got {}", self.n_cut)));
        }
        if self.n_cut > 30 {
            return Err(Error::InvalidParams(format!(
                "n_cut must fit a 64-bit occupation word, got {}",
                self.n_cut
            )));
        }
        if self.m_grid == 0 {
            return Err(Error::InvalidParams("m_grid must be >= 1".into()));
        }
        Ok(())
    }

    /// Momentum unit `2 pi / L`.
    pub fn k_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.l
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            l: 2.0 * std::f64::consts::PI,
            coupling_e: 1.0,
            a: 0.0,
            n_cut: 3,
            max_particles: 4,
            m_grid: 8,
        }
    }
}
