//! Scheme parameters: step size, horizon, level quantization, margins.

use crate::error::{Result, SchemeError};
use crate::grid::Grid;
use crate::nonlinearity::Nonlinearity;

/// Which extreme minimizer drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizerChoice {
    Minimal,
    Maximal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    /// Time step h.
    pub h: f64,
    /// Horizon T.
    pub t_end: f64,
    /// Number of quantized levels for the level-set lifting.
    pub level_count: usize,
    /// Width of the outer margin band, in cells.
    pub margin: usize,
    pub choice: MinimizerChoice,
}

impl SchemeParams {
    pub fn new(
        h: f64,
        t_end: f64,
        level_count: usize,
        margin: usize,
        choice: MinimizerChoice,
    ) -> Result<SchemeParams> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(SchemeError::InvalidParameter(format!("scheme.h must be > 0, got {h}")));
        }
        if !(t_end >= h) {
            return Err(SchemeError::InvalidParameter(format!(
                "scheme.t_end must be >= h, got {t_end} < {h}"
            )));
        }
        if level_count < 2 {
            return Err(SchemeError::InvalidParameter(format!(
                "scheme.level_count must be >= 2, got {level_count}"
            )));
        }
        if margin < 2 {
            return Err(SchemeError::InvalidParameter(format!(
                "scheme.margin must be >= 2, got {margin}"
            )));
        }
        Ok(SchemeParams { h, t_end, level_count, margin, choice })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }

    /// Margin consistency: the band must absorb the per-step confinement
    /// growth `b*h` when the outward speed limit b is finite.
    pub fn check_confinement(&self, grid: &Grid, n: &Nonlinearity) -> Result<()> {
        if n.b.is_finite() && self.margin as f64 * grid.dx <= n.b * self.h {
            return Err(SchemeError::InvalidParameter(format!(
                "scheme.margin: margin*dx = {} must exceed b*h = {}",
                self.margin as f64 * grid.dx,
                n.b * self.h
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SchemeParams::new(0.0, 1.0, 8, 4, MinimizerChoice::Minimal).is_err());
        assert!(SchemeParams::new(0.1, 0.05, 8, 4, MinimizerChoice::Minimal).is_err());
        assert!(SchemeParams::new(0.1, 1.0, 1, 4, MinimizerChoice::Minimal).is_err());
        assert!(SchemeParams::new(0.1, 1.0, 8, 1, MinimizerChoice::Minimal).is_err());
        let p = SchemeParams::new(0.1, 1.0, 8, 4, MinimizerChoice::Minimal).unwrap();
        assert_eq!(p.steps(), 10);
    }

    #[test]
    fn confinement_check() {
        let g = Grid::new(16, 16, 0.1, [0.0, 0.0]).unwrap();
        let p = SchemeParams::new(0.3, 1.0, 8, 2, MinimizerChoice::Minimal).unwrap();
        let n = Nonlinearity::clamp(1.0).unwrap();
        // margin*dx = 0.2 <= b*h = 0.3
        assert!(p.check_confinement(&g, &n).is_err());
        assert!(p.check_confinement(&g, &Nonlinearity::identity()).is_ok());
    }
}
