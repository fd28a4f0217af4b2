//! Independent ground truth: closed-form ball laws, the barrier ODE, the
//! finite-difference reference solver, and geometric measurements.
//!
//! None of this shares code with the variational solver; it exists so every
//! quantitative claim about the scheme can be checked against a second route.

use crate::error::{Result, SchemeError};
use crate::field::LevelFunction;
use crate::grid::{CellSet, Grid};
use crate::nonlinearity::{Forcing, Nonlinearity, NonlinearityKind};
use crate::perimeter::PerimeterModel;

/// Radius law of an isotropic classical ball: `dr/dt = G(-1/r + f(t))`,
/// closed forms when available, adaptive RK4 otherwise. Returns 0 at and
/// after extinction.
pub fn exact_ball_radius(n: &Nonlinearity, f: &Forcing, r0: f64, t: f64) -> Result<f64> {
    if !(r0 > 0.0) || t < 0.0 {
        return Err(SchemeError::InvalidParameter("exact_ball_radius needs r0 > 0, t >= 0".into()));
    }
    if t == 0.0 {
        return Ok(r0);
    }
    if matches!(f, Forcing::Zero) {
        match n.kind {
            NonlinearityKind::Identity => {
                let v = r0 * r0 - 2.0 * t;
                return Ok(if v > 0.0 { v.sqrt() } else { 0.0 });
            }
            NonlinearityKind::Power { gamma } => {
                let p = 1.0 + gamma;
                let v = r0.powf(p) - p * t;
                return Ok(if v > 0.0 { v.powf(1.0 / p) } else { 0.0 });
            }
            _ => {}
        }
    }
    ball_radius_rk4(n, f, r0, t)
}

/// The RK4 route for the ball law, always integrating; used to cross-check
/// the closed forms.
pub fn ball_radius_rk4(n: &Nonlinearity, f: &Forcing, r0: f64, t: f64) -> Result<f64> {
    if !(r0 > 0.0) || t < 0.0 {
        return Err(SchemeError::InvalidParameter("ball_radius_rk4 needs r0 > 0, t >= 0".into()));
    }
    let rhs = |time: f64, r: f64| n.speed(-1.0 / r + f.value(time));
    Ok(integrate_radius(&rhs, r0, t))
}

/// RK4 with step halving until two refinements agree to 1e-8; radii at or
/// below a small floor count as extinct (the ODE is singular there).
fn integrate_radius(rhs: &dyn Fn(f64, f64) -> f64, r0: f64, t: f64) -> f64 {
    const FLOOR: f64 = 1e-7;
    let run = |steps: usize| -> f64 {
        let dt = t / steps as f64;
        let mut r = r0;
        let mut time = 0.0;
        for _ in 0..steps {
            if r <= FLOOR {
                return 0.0;
            }
            let k1 = rhs(time, r);
            let k2 = rhs(time + 0.5 * dt, (r + 0.5 * dt * k1).max(FLOOR));
            let k3 = rhs(time + 0.5 * dt, (r + 0.5 * dt * k2).max(FLOOR));
            let k4 = rhs(time + dt, (r + dt * k3).max(FLOOR));
            r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            time += dt;
            if !r.is_finite() || r <= FLOOR {
                return 0.0;
            }
        }
        r
    };
    let mut steps = 64usize;
    let mut prev = run(steps);
    loop {
        steps *= 2;
        let cur = run(steps);
        if (cur - prev).abs() < 1e-8 || steps >= 1 << 22 {
            return cur;
        }
        prev = cur;
    }
}

/// Everything the barrier ODE needs.
pub struct BarrierModel<'a> {
    pub perimeter: &'a PerimeterModel,
    pub nonlinearity: &'a Nonlinearity,
    /// sup |f|.
    pub forcing_bound: f64,
    pub c_psi: f64,
}

impl BarrierModel<'_> {
    /// `kappa_hat(r) = min{ -1, (1/c_psi) G(-cbar(r) - sup|f|) }`.
    pub fn kappa_hat(&self, r: f64) -> Result<f64> {
        let (cbar, _) = self.perimeter.ball_envelope(r)?;
        Ok((-1.0f64).min(self.nonlinearity.speed(-cbar - self.forcing_bound) / self.c_psi))
    }
}

/// Lower-barrier radius: for `a < inf` the linear law `max(r0 - a t, 0)`,
/// otherwise the integrated kappa-hat ODE (0 past extinction).
pub fn barrier_radius(bm: &BarrierModel, r0: f64, t: f64) -> Result<f64> {
    if !(r0 > 0.0) || t < 0.0 {
        return Err(SchemeError::InvalidParameter("barrier_radius needs r0 > 0, t >= 0".into()));
    }
    let a = bm.nonlinearity.a;
    if a.is_finite() {
        return Ok((r0 - a * t).max(0.0));
    }
    if t == 0.0 {
        return Ok(r0);
    }
    // kappa_hat <= -1 so extinction happens by t = r0
    if t >= r0 {
        return Ok(0.0);
    }
    let rhs = |_time: f64, r: f64| bm.kappa_hat(r).unwrap_or(-1.0);
    Ok(integrate_radius(&rhs, r0, t))
}

/// First time the barrier radius reaches zero, by bisection to 1e-6.
pub fn extinction_time(bm: &BarrierModel, r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(SchemeError::InvalidParameter("extinction_time needs r0 > 0".into()));
    }
    let a = bm.nonlinearity.a;
    if a.is_finite() {
        return Ok(r0 / a);
    }
    let mut lo = 0.0f64;
    let mut hi = r0; // kappa_hat <= -1
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if barrier_radius(bm, r0, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// State of the finite-difference reference solver.
#[derive(Debug, Clone)]
pub struct FdState {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub epsilon_reg: f64,
    pub time: f64,
}

impl FdState {
    pub fn superlevel(&self, s: f64) -> CellSet {
        CellSet::from_fn(self.grid, |ix, iy| self.values[self.grid.index(ix, iy)] >= s)
    }
}

/// Explicit reference scheme for the isotropic classical flow:
/// `u_t = |grad u|_eps * G(div(grad u / |grad u|_eps) + f(t))`, central
/// differences, `eps = dx`, margin cells pinned at the floor value. The time
/// step obeys `dt <= 0.2 dx^2 / max slope of G` over the curvature range seen,
/// halving on a range blow-up and erroring below 1e-12.
pub fn fd_reference_evolve(
    u0: &LevelFunction,
    n: &Nonlinearity,
    f: &Forcing,
    snapshot_times: &[f64],
) -> Result<Vec<FdState>> {
    match n.kind {
        NonlinearityKind::Identity | NonlinearityKind::Clamp { .. } => {}
        NonlinearityKind::Power { gamma } if gamma >= 1.0 => {}
        _ => {
            return Err(SchemeError::InvalidParameter(
                "FD reference needs G Lipschitz on the curvature range (identity, clamp, power gamma >= 1)"
                    .into(),
            ));
        }
    }
    if snapshot_times.is_empty() || snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SchemeError::InvalidParameter(
            "snapshot times must be nonempty and increasing".into(),
        ));
    }
    let grid = *u0.grid();
    let eps = grid.dx;
    let lo_guard = u0.floor_value - 0.1 * (u0.ceil_value - u0.floor_value);
    let hi_guard = u0.ceil_value + 0.1 * (u0.ceil_value - u0.floor_value);

    let mut u = u0.values().to_vec();
    let mut time = 0.0f64;
    let mut out = Vec::new();
    let mut next_snap = 0usize;
    let mut dt_scale = 1.0f64;
    while next_snap < snapshot_times.len() {
        if time >= snapshot_times[next_snap] - 1e-14 {
            out.push(FdState { grid, values: u.clone(), epsilon_reg: eps, time });
            next_snap += 1;
            continue;
        }
        let (speed, max_arg) = fd_speed(&grid, &u, eps, n, f.value(time));
        let slope = g_slope_bound(n, max_arg);
        let mut dt = 0.2 * grid.dx * grid.dx / slope.max(1e-12) * dt_scale;
        dt = dt.min(snapshot_times[next_snap] - time);
        if dt < 1e-12 {
            return Err(SchemeError::TimeStepUnderflow);
        }
        let mut trial = u.clone();
        let mut ok = true;
        for iy in 2..grid.ny - 2 {
            for ix in 2..grid.nx - 2 {
                let idx = grid.index(ix, iy);
                let v = u[idx] + dt * speed[idx];
                if !v.is_finite() || v < lo_guard || v > hi_guard {
                    ok = false;
                }
                trial[idx] = v;
            }
        }
        if !ok {
            dt_scale *= 0.5;
            if dt_scale < 1e-10 {
                return Err(SchemeError::TimeStepUnderflow);
            }
            continue;
        }
        u = trial;
        time += dt;
    }
    Ok(out)
}

/// Central-difference speed field and the largest |curvature + f| seen.
fn fd_speed(grid: &Grid, u: &[f64], eps: f64, n: &Nonlinearity, fval: f64) -> (Vec<f64>, f64) {
    let dx = grid.dx;
    let mut speed = vec![0.0; grid.len()];
    let mut max_arg = 0.0f64;
    for iy in 2..grid.ny - 2 {
        for ix in 2..grid.nx - 2 {
            let at = |jx: usize, jy: usize| u[grid.index(jx, jy)];
            let ux = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * dx);
            let uy = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * dx);
            let uxx = (at(ix + 1, iy) - 2.0 * at(ix, iy) + at(ix - 1, iy)) / (dx * dx);
            let uyy = (at(ix, iy + 1) - 2.0 * at(ix, iy) + at(ix, iy - 1)) / (dx * dx);
            let uxy = (at(ix + 1, iy + 1) - at(ix + 1, iy - 1) - at(ix - 1, iy + 1)
                + at(ix - 1, iy - 1))
                / (4.0 * dx * dx);
            let g2 = ux * ux + uy * uy + eps * eps;
            let div = (uxx * (uy * uy + eps * eps) - 2.0 * ux * uy * uxy
                + uyy * (ux * ux + eps * eps))
                / (g2 * g2.sqrt());
            let arg = div + fval;
            max_arg = max_arg.max(arg.abs());
            speed[grid.index(ix, iy)] = g2.sqrt() * n.speed(arg);
        }
    }
    (speed, max_arg)
}

fn g_slope_bound(n: &Nonlinearity, max_arg: f64) -> f64 {
    match n.kind {
        NonlinearityKind::Identity | NonlinearityKind::Clamp { .. } => 1.0,
        NonlinearityKind::Power { gamma } => {
            if gamma >= 1.0 {
                gamma * max_arg.max(1e-6).powf(gamma - 1.0)
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

/// Equivalent-area radius and boundary anisometry of a set.
#[derive(Debug, Clone, Copy)]
pub struct RadiusMeasurement {
    pub equivalent_radius: f64,
    /// max/min boundary-to-centroid distance ratio (1 for degenerate sets).
    pub anisometry: f64,
}

pub fn measure_radius(set: &CellSet) -> Result<RadiusMeasurement> {
    if set.is_empty() {
        return Err(SchemeError::EmptySet);
    }
    let grid = set.grid();
    let area = set.count() as f64 * grid.dx * grid.dx;
    let equivalent_radius = (area / std::f64::consts::PI).sqrt();
    let c = set.centroid().expect("nonempty");
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for (ix, iy) in set.boundary_cells() {
        let p = grid.world(ix, iy);
        let d = (p[0] - c[0]).hypot(p[1] - c[1]);
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    let anisometry = if dmax <= 0.25 * grid.dx || !dmin.is_finite() || dmin <= 0.25 * grid.dx {
        1.0
    } else {
        dmax / dmin
    };
    Ok(RadiusMeasurement { equivalent_radius, anisometry })
}

/// A sampled radius-versus-time curve.
#[derive(Debug, Clone)]
pub struct BallFlow {
    pub r0: f64,
    pub samples: Vec<(f64, f64)>,
}

impl BallFlow {
    pub fn exact(n: &Nonlinearity, f: &Forcing, r0: f64, times: &[f64]) -> Result<BallFlow> {
        let samples = times
            .iter()
            .map(|&t| exact_ball_radius(n, f, r0, t).map(|r| (t, r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BallFlow { r0, samples })
    }

    pub fn barrier(bm: &BarrierModel, r0: f64, times: &[f64]) -> Result<BallFlow> {
        let samples = times
            .iter()
            .map(|&t| barrier_radius(bm, r0, t).map(|r| (t, r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BallFlow { r0, samples })
    }
}
