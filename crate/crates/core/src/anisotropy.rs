//! Anisotropies (mobilities) and their polar norms.
//!
//! An anisotropy is an even, convex, positively 1-homogeneous norm-like map
//! with ellipticity `(1/c_psi)|p| <= psi(p) <= c_psi|p|`. Distances are always
//! measured in the polar norm `psi_polar(v) = sup { xi.v : psi(xi) <= 1 }`.

use crate::error::{Result, SchemeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnisotropyKind {
    Euclidean,
    MaxNorm,
    /// `psi(p) = hypot(wx*p0, wy*p1)` with positive diagonal weights.
    WeightedEuclidean { wx: f64, wy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anisotropy {
    pub kind: AnisotropyKind,
    /// Tightest ellipticity constant for this kind.
    pub c_psi: f64,
}

impl Anisotropy {
    pub fn euclidean() -> Anisotropy {
        Anisotropy { kind: AnisotropyKind::Euclidean, c_psi: 1.0 }
    }

    pub fn max_norm() -> Anisotropy {
        Anisotropy { kind: AnisotropyKind::MaxNorm, c_psi: std::f64::consts::SQRT_2 }
    }

    pub fn weighted_euclidean(wx: f64, wy: f64) -> Result<Anisotropy> {
        if !(wx > 0.0 && wy > 0.0) || !wx.is_finite() || !wy.is_finite() {
            return Err(SchemeError::InvalidParameter(format!(
                "anisotropy weights must be positive, got ({wx}, {wy})"
            )));
        }
        let c = wx.max(wy).max(1.0 / wx).max(1.0 / wy);
        Ok(Anisotropy { kind: AnisotropyKind::WeightedEuclidean { wx, wy }, c_psi: c })
    }

    /// psi(p).
    pub fn psi(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            AnisotropyKind::Euclidean => (p[0] * p[0] + p[1] * p[1]).sqrt(),
            AnisotropyKind::MaxNorm => p[0].abs().max(p[1].abs()),
            AnisotropyKind::WeightedEuclidean { wx, wy } => {
                let (a, b) = (wx * p[0], wy * p[1]);
                (a * a + b * b).sqrt()
            }
        }
    }

    /// The polar norm psi_polar(v); closed forms for every supported kind.
    pub fn polar(&self, v: [f64; 2]) -> f64 {
        match self.kind {
            AnisotropyKind::Euclidean => (v[0] * v[0] + v[1] * v[1]).sqrt(),
            AnisotropyKind::MaxNorm => v[0].abs() + v[1].abs(),
            AnisotropyKind::WeightedEuclidean { wx, wy } => {
                let (a, b) = (v[0] / wx, v[1] / wy);
                (a * a + b * b).sqrt()
            }
        }
    }

    /// Polar norm of a lattice offset scaled by `dx`. Inputs are integers so
    /// the result is bit-identical under lattice shifts.
    #[inline]
    pub fn polar_offset(&self, ox: i64, oy: i64, dx: f64) -> f64 {
        self.polar([ox as f64 * dx, oy as f64 * dx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        let e = Anisotropy::euclidean();
        assert_eq!(e.psi([3.0, 4.0]), 5.0);
        let m = Anisotropy::max_norm();
        assert_eq!(m.psi([3.0, 4.0]), 4.0);
        assert_eq!(e.psi([0.0, 0.0]), 0.0);
        assert_eq!(m.psi([0.0, 0.0]), 0.0);
        let w = Anisotropy::weighted_euclidean(2.0, 0.5).unwrap();
        assert_eq!(w.psi([0.0, 0.0]), 0.0);
    }

    #[test]
    fn polar_examples() {
        let e = Anisotropy::euclidean();
        assert_eq!(e.polar([3.0, 4.0]), 5.0);
        let m = Anisotropy::max_norm();
        assert_eq!(m.polar([3.0, 4.0]), 7.0);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(Anisotropy::weighted_euclidean(0.0, 1.0).is_err());
        assert!(Anisotropy::weighted_euclidean(1.0, -2.0).is_err());
    }

    #[test]
    fn c_psi_is_tight_enough() {
        let w = Anisotropy::weighted_euclidean(2.0, 0.5).unwrap();
        assert_eq!(w.c_psi, 2.0);
        for &p in &[[1.0, 0.0], [0.0, 1.0], [0.6, -0.8], [-3.0, 4.0]] {
            let n = (p[0] as f64).hypot(p[1]);
            let v = w.psi(p);
            assert!(v <= w.c_psi * n + 1e-12);
            assert!(v >= n / w.c_psi - 1e-12);
        }
    }
}
