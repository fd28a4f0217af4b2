//! The speed law G, its inverse selection g, and the forcing term.
//!
//! G is continuous, non-decreasing, G(0) = 0, with saturation limits
//! `a = -lim_{s->-inf} G` and `b = lim_{s->+inf} G`. The selection g of the
//! set-valued inverse is extended to `-inf` for `s <= -a` and `+inf` for
//! `s >= b`; those infinities are legitimate values that the ATW step turns
//! into hard constraints. `g(0) = 0` always.

use crate::error::{Result, SchemeError};

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    /// G(s) = s.
    Identity,
    /// G(s) = clamp(s, -m, m); the truncated speed commonly used for MCF.
    Clamp { m: f64 },
    /// G(s) = sign(s)|s|^gamma.
    Power { gamma: f64 },
    /// G(s) = min(s, 0); a purely shrinking evolution.
    NegativePart,
    /// Piecewise-linear monotone G through the given (x, y) breakpoints,
    /// extended by constants outside the table.
    PiecewiseMonotone { table: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    /// `a = -lim_{s->-inf} G(s)` in [0, +inf].
    pub a: f64,
    /// `b = lim_{s->+inf} G(s)` in [0, +inf].
    pub b: f64,
}

impl Nonlinearity {
    pub fn identity() -> Nonlinearity {
        Nonlinearity { kind: NonlinearityKind::Identity, a: f64::INFINITY, b: f64::INFINITY }
    }

    pub fn clamp(m: f64) -> Result<Nonlinearity> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(SchemeError::InvalidParameter(format!("clamp.m must be > 0, got {m}")));
        }
        Ok(Nonlinearity { kind: NonlinearityKind::Clamp { m }, a: m, b: m })
    }

    pub fn power(gamma: f64) -> Result<Nonlinearity> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(SchemeError::InvalidParameter(format!(
                "power.gamma must be > 0, got {gamma}"
            )));
        }
        Ok(Nonlinearity {
            kind: NonlinearityKind::Power { gamma },
            a: f64::INFINITY,
            b: f64::INFINITY,
        })
    }

    pub fn negative_part() -> Nonlinearity {
        Nonlinearity { kind: NonlinearityKind::NegativePart, a: f64::INFINITY, b: 0.0 }
    }

    pub fn piecewise(table: Vec<(f64, f64)>) -> Result<Nonlinearity> {
        if table.len() < 2 {
            return Err(SchemeError::InvalidParameter(
                "piecewise table needs at least 2 points".into(),
            ));
        }
        for w in table.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(SchemeError::InvalidParameter(
                    "piecewise table x-values must be strictly increasing".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(SchemeError::InvalidParameter(
                    "piecewise table y-values must be non-decreasing".into(),
                ));
            }
        }
        let g0 = piecewise_value(&table, 0.0);
        if g0.abs() > 1e-12 {
            return Err(SchemeError::InvalidParameter(format!(
                "piecewise table must satisfy G(0) = 0, got {g0}"
            )));
        }
        let a = -table.first().unwrap().1;
        let b = table.last().unwrap().1;
        Ok(Nonlinearity { kind: NonlinearityKind::PiecewiseMonotone { table }, a, b })
    }

    /// G(s). Accepts +-inf and maps them to the saturation limits.
    pub fn speed(&self, s: f64) -> f64 {
        if s == f64::INFINITY {
            return self.b;
        }
        if s == f64::NEG_INFINITY {
            return -self.a;
        }
        match &self.kind {
            NonlinearityKind::Identity => s,
            NonlinearityKind::Clamp { m } => s.clamp(-m, *m),
            NonlinearityKind::Power { gamma } => s.signum() * s.abs().powf(*gamma),
            NonlinearityKind::NegativePart => s.min(0.0),
            NonlinearityKind::PiecewiseMonotone { table } => piecewise_value(table, s),
        }
    }

    /// The inverse selection g(s), with g(0) = 0, `-inf` for s <= -a and
    /// `+inf` for s >= b. Strictly increasing where finite; on plateaus of G
    /// it picks the midpoint of the preimage interval.
    pub fn inverse(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        if s <= -self.a {
            return f64::NEG_INFINITY;
        }
        if s >= self.b {
            return f64::INFINITY;
        }
        match &self.kind {
            NonlinearityKind::Identity => s,
            NonlinearityKind::Clamp { .. } => s,
            NonlinearityKind::Power { gamma } => s.signum() * s.abs().powf(1.0 / *gamma),
            NonlinearityKind::NegativePart => s, // only reached for s < 0
            NonlinearityKind::PiecewiseMonotone { table } => piecewise_inverse_midpoint(table, s),
        }
    }

    /// g truncated from below, `g(s) v (-n)`.
    pub fn inverse_truncated(&self, s: f64, n: f64) -> f64 {
        self.inverse(s).max(-n)
    }

    /// The mirrored selection `g~(s) = -g(-s)` used by the complement-phase
    /// duality; its saturation limits swap (`a~ = b`, `b~ = a`).
    pub fn inverse_mirrored(&self, s: f64) -> f64 {
        -self.inverse(-s)
    }

    /// `G~(s) = -G(-s)`, the speed law of the complement phase.
    pub fn speed_mirrored(&self, s: f64) -> f64 {
        -self.speed(-s)
    }
}

fn piecewise_value(table: &[(f64, f64)], s: f64) -> f64 {
    let (x0, y0) = table[0];
    let (xn, yn) = *table.last().unwrap();
    if s <= x0 {
        return y0;
    }
    if s >= xn {
        return yn;
    }
    for w in table.windows(2) {
        let (xa, ya) = w[0];
        let (xb, yb) = w[1];
        if s <= xb {
            let t = (s - xa) / (xb - xa);
            return ya + t * (yb - ya);
        }
    }
    yn
}

/// Midpoint of the preimage interval G^{-1}(s) for s strictly inside (y0, yn).
fn piecewise_inverse_midpoint(table: &[(f64, f64)], s: f64) -> f64 {
    // smallest x with G(x) >= s
    let mut lo = table.last().unwrap().0;
    for w in table.windows(2) {
        let (xa, ya) = w[0];
        let (xb, yb) = w[1];
        if s <= ya {
            lo = xa;
            break;
        }
        if s <= yb {
            lo = if yb > ya { xa + (s - ya) / (yb - ya) * (xb - xa) } else { xb };
            break;
        }
    }
    // largest x with G(x) <= s
    let mut hi = table.first().unwrap().0;
    for w in table.windows(2).rev() {
        let (xa, ya) = w[0];
        let (xb, yb) = w[1];
        if s >= yb {
            hi = xb;
            break;
        }
        if s >= ya {
            hi = if yb > ya { xa + (s - ya) / (yb - ya) * (xb - xa) } else { xa };
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Time-dependent forcing, constant in space and bounded.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Constant(f64),
    /// Piecewise-linear curve through (times, values); constant outside.
    SampledCurve { times: Vec<f64>, values: Vec<f64> },
}

impl Forcing {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Forcing> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(SchemeError::InvalidParameter(
                "forcing curve needs matching times/values with >= 2 samples".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SchemeError::InvalidParameter(
                "forcing curve times must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SchemeError::InvalidParameter("forcing values must be finite".into()));
        }
        Ok(Forcing::SampledCurve { times, values })
    }

    /// sup |f|.
    pub fn bound(&self) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => c.abs(),
            Forcing::SampledCurve { values, .. } => {
                values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }
    }

    /// f(t), with constant extension outside the sample range.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => *c,
            Forcing::SampledCurve { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                if t >= *times.last().unwrap() {
                    return *values.last().unwrap();
                }
                let k = times.partition_point(|&x| x <= t) - 1;
                let (t0, t1) = (times[k], times[k + 1]);
                let w = (t - t0) / (t1 - t0);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// The step-averaged coefficient `(1/h) * integral of f over [kh, (k+1)h]`.
    /// Exact for Zero/Constant; for curves, trapezoid refined until successive
    /// refinements differ by less than 1e-10 * bound.
    pub fn step_average(&self, k: usize, h: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => *c,
            Forcing::SampledCurve { .. } => {
                let t0 = k as f64 * h;
                let t1 = (k + 1) as f64 * h;
                let tol = 1e-10 * self.bound().max(1e-300);
                let mut n = 8usize;
                let mut prev = self.trapezoid(t0, t1, n);
                loop {
                    n *= 2;
                    let cur = self.trapezoid(t0, t1, n);
                    if (cur - prev).abs() < tol || n >= 1 << 22 {
                        return cur / h;
                    }
                    prev = cur;
                }
            }
        }
    }

    fn trapezoid(&self, t0: f64, t1: f64, n: usize) -> f64 {
        let dt = (t1 - t0) / n as f64;
        let mut sum = 0.5 * (self.value(t0) + self.value(t1));
        for i in 1..n {
            sum += self.value(t0 + i as f64 * dt);
        }
        sum * dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_examples() {
        assert_eq!(Nonlinearity::identity().inverse(1.5), 1.5);
        let c = Nonlinearity::clamp(2.0).unwrap();
        assert_eq!(c.inverse(2.0), f64::INFINITY);
        assert_eq!(c.inverse(-2.0), f64::NEG_INFINITY);
        assert_eq!(c.inverse(1.25), 1.25);
        let p = Nonlinearity::power(3.0).unwrap();
        assert!((p.inverse(8.0) - 2.0).abs() < 1e-12);
        assert_eq!(p.inverse(0.0), 0.0);
    }

    #[test]
    fn negative_part_limits() {
        let n = Nonlinearity::negative_part();
        assert_eq!(n.a, f64::INFINITY);
        assert_eq!(n.b, 0.0);
        assert_eq!(n.inverse(0.5), f64::INFINITY);
        assert_eq!(n.inverse(0.0), 0.0);
        assert_eq!(n.inverse(-0.5), -0.5);
    }

    #[test]
    fn piecewise_plateau_midpoint() {
        // G = 0 on [-1, 1], slope 1 outside.
        let n = Nonlinearity::piecewise(vec![(-3.0, -2.0), (-1.0, 0.0), (1.0, 0.0), (3.0, 2.0)])
            .unwrap();
        assert_eq!(n.inverse(0.0), 0.0);
        assert!((n.inverse(1.0) - 2.0).abs() < 1e-12);
        assert!((n.inverse(-1.0) + 2.0).abs() < 1e-12);
        assert_eq!(n.a, 2.0);
        assert_eq!(n.b, 2.0);
        assert_eq!(n.inverse(2.0), f64::INFINITY);
    }

    #[test]
    fn mirrored_selection() {
        let n = Nonlinearity::negative_part();
        // g~(s) = -g(-s): shrinking becomes growing under complement duality.
        assert_eq!(n.inverse_mirrored(-0.5), f64::NEG_INFINITY);
        assert_eq!(n.inverse_mirrored(0.5), 0.5);
        assert_eq!(n.inverse_mirrored(0.0), 0.0);
    }

    #[test]
    fn forcing_examples() {
        assert_eq!(Forcing::Constant(0.7).step_average(3, 0.2), 0.7);
        assert_eq!(Forcing::Zero.step_average(0, 1.0), 0.0);
        // f(t) = t on [0, 1]
        let f = Forcing::sampled(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!((f.step_average(0, 0.1) - 0.05).abs() < 1e-10);
        assert!((f.value(0.25) - 0.25).abs() < 1e-15);
    }
}
