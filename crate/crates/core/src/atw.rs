//! One minimizing-movements step, solved exactly.
//!
//! The step functional is `J(F) + sum_{i in F} (g(sd(x_i)/h) - f_k) dx^2`,
//! the cell form of the perimeter-plus-dissipation energy, with the forcing
//! bucketed per step index. It is submodular with nonnegative pairwise
//! weights, so a single max-flow/min-cut minimizes it exactly; the minimal
//! and maximal minimizers are the two extreme elements of the lattice of
//! minimum cuts, read off residual reachability.
//!
//! Energies are scaled by 2^40 and rounded to integer capacities. A cell
//! whose |unary| strictly exceeds its total incident pairwise capacity has
//! the same label in every minimizer, so such cells (including the cells
//! forced by g = +-inf) are contracted into the terminals; this keeps the
//! flow graph banded around the interface without changing the argmin
//! lattice. Reported energies are re-evaluated in f64 on the returned sets.
//!
//! Unbounded phases run through complement duality: the stored compact
//! complement evolves under the mirrored selection `g~(s) = -g(-s)` and
//! forcing `-f`, with minimal and maximal swapped.

use crate::anisotropy::Anisotropy;
use crate::distance::{signed_distance_capped, DistanceField};
use crate::error::{Result, SchemeError};
use crate::grid::{CellSet, Grid, Phase};
use crate::maxflow::{FlowGraph, FlowStats};
use crate::nonlinearity::{Forcing, Nonlinearity};
use crate::params::MinimizerChoice;
use crate::perimeter::PerimeterModel;

/// Fixed-point scale for capacities.
pub const CAP_SCALE: f64 = (1u64 << 40) as f64;
/// Safety margin (in scaled units) between a dominant unary and the incident
/// pairwise total, covering rounding.
const DOMINANCE_MARGIN: i64 = 1 << 12;

/// The models one step needs.
#[derive(Debug, Clone, Copy)]
pub struct StepModels<'a> {
    pub perimeter: &'a PerimeterModel,
    pub nonlinearity: &'a Nonlinearity,
    pub anisotropy: &'a Anisotropy,
}

/// The per-step forcing coefficient `f([t/h] h)`, computed from the step
/// index (never from floating t).
pub fn step_forcing(f: &Forcing, step_index: usize, h: f64) -> f64 {
    f.step_average(step_index, h)
}

/// The discrete step energy: perimeter model plus a per-cell coefficient of
/// the indicator, with +-inf tracked as forced sets.
#[derive(Debug, Clone)]
pub struct StepEnergy {
    pub grid: Grid,
    pub perimeter: PerimeterModel,
    /// Coefficient of chi_F per cell, `(g(sd/h) - f_k) dx^2`; +-inf allowed.
    pub unary: Vec<f64>,
    pub forced_in: CellSet,
    pub forced_out: CellSet,
}

impl StepEnergy {
    pub fn from_unary(grid: Grid, perimeter: PerimeterModel, unary: Vec<f64>) -> Result<StepEnergy> {
        if unary.len() != grid.len() {
            return Err(SchemeError::InvalidParameter("unary length != grid size".into()));
        }
        if unary.iter().any(|u| u.is_nan()) {
            return Err(SchemeError::InvalidParameter("unary contains NaN".into()));
        }
        let forced_in = CellSet::from_fn(grid, |ix, iy| {
            unary[grid.index(ix, iy)] == f64::NEG_INFINITY
        });
        let forced_out =
            CellSet::from_fn(grid, |ix, iy| unary[grid.index(ix, iy)] == f64::INFINITY);
        Ok(StepEnergy { grid, perimeter, unary, forced_in, forced_out })
    }

    /// f64 energy of a candidate set; contributions of forced cells are
    /// omitted (they are common to every feasible set).
    pub fn evaluate(&self, set: &CellSet) -> f64 {
        let mut e = self.perimeter.energy(set);
        for (ix, iy) in set.iter_cells() {
            let u = self.unary[self.grid.index(ix, iy)];
            if u.is_finite() {
                e += u;
            }
        }
        e
    }
}

/// Both extreme minimizers of a step energy.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub minimal: CellSet,
    pub maximal: CellSet,
    /// Optimal value, re-evaluated in f64 on the minimal minimizer.
    pub energy: f64,
    pub stats: FlowStats,
}

/// Build the unary field `g(sd/h) dx^2 - f_k dx^2` for the given phase. For
/// `BoundedComplement` the stored set is the compact complement and the dual
/// energy uses `g~(s) = -g(-s)` and `-f_k`.
pub fn build_step_energy(
    set: &CellSet,
    phase: Phase,
    models: &StepModels,
    fk: f64,
    h: f64,
) -> Result<StepEnergy> {
    step_energy_capped(set, phase, models, fk, h, f64::INFINITY)
}

/// As `build_step_energy`, but signed distances may be capped: beyond the cap
/// every unary is strictly dominant either way, so minimizers are unchanged.
fn step_energy_capped(
    set: &CellSet,
    phase: Phase,
    models: &StepModels,
    fk: f64,
    h: f64,
    sd_cap: f64,
) -> Result<StepEnergy> {
    if !(h > 0.0) {
        return Err(SchemeError::InvalidParameter(format!("step h must be > 0, got {h}")));
    }
    let grid = *set.grid();
    if (models.perimeter.dx() - grid.dx).abs() > 1e-15 {
        return Err(SchemeError::InvalidParameter(
            "perimeter model dx does not match the grid".into(),
        ));
    }
    let sd = signed_distance_capped(set, models.anisotropy, sd_cap)?;
    let n = models.nonlinearity;
    let dx2 = grid.dx * grid.dx;
    let mirrored = phase == Phase::BoundedComplement;
    let f_eff = if mirrored { -fk } else { fk };
    let mut unary = vec![0.0; grid.len()];
    for idx in 0..grid.len() {
        let s = sd.values()[idx] / h;
        let g = if mirrored { n.inverse_mirrored(s) } else { n.inverse(s) };
        unary[idx] = if g.is_finite() { (g - f_eff) * dx2 } else { g };
    }
    StepEnergy::from_unary(grid, models.perimeter.clone(), unary)
}

struct Quantized {
    /// Pairwise capacities per weight-table entry (same order as the table).
    qw: Vec<i64>,
    /// Per-cell label: 0 band, +1 decided in, -1 decided out.
    decided: Vec<i8>,
    /// Quantized unary for band cells.
    q_unary: Vec<i64>,
}

fn quantize(se: &StepEnergy) -> Result<Quantized> {
    if !se.forced_in.intersection(&se.forced_out).is_empty() {
        return Err(SchemeError::InfeasibleConstraints);
    }
    let grid = se.grid;
    let weights = se.perimeter.weights();
    let qw: Vec<i64> =
        weights.iter().map(|&(_, w)| (w * grid.dx * CAP_SCALE).round() as i64).collect();
    let w_total: i64 = qw.iter().sum();
    let clamp_f = (w_total + DOMINANCE_MARGIN) as f64;
    let reach = weights
        .iter()
        .map(|&((ox, oy), _)| ox.unsigned_abs().max(oy.unsigned_abs()) as usize)
        .max()
        .unwrap_or(0);
    let mut decided = vec![0i8; grid.len()];
    let mut q_unary = vec![0i64; grid.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let idx = grid.index(ix, iy);
            // incident pairwise total (border cells have fewer neighbors)
            let interior = ix >= reach
                && iy >= reach
                && ix + reach < grid.nx
                && iy + reach < grid.ny;
            let w_local: i64 = if interior {
                w_total
            } else {
                let mut w = 0i64;
                for (k, &((ox, oy), _)) in weights.iter().enumerate() {
                    if grid.in_bounds(ix as i64 + ox, iy as i64 + oy) {
                        w += qw[k];
                    }
                }
                w
            };
            let u = se.unary[idx];
            let q = (u * CAP_SCALE).clamp(-clamp_f, clamp_f).round() as i64;
            if q > w_local {
                decided[idx] = -1;
            } else if q < -w_local {
                decided[idx] = 1;
            } else {
                q_unary[idx] = q;
            }
        }
    }
    Ok(Quantized { qw, decided, q_unary })
}

/// Minimize the step energy exactly; returns the minimal and maximal
/// minimizers and the optimal value.
pub fn minimize_step(se: &StepEnergy) -> Result<StepResult> {
    let grid = se.grid;
    let q = quantize(se)?;
    let weights = se.perimeter.weights();

    // band cell ids
    let mut node_of = vec![u32::MAX; grid.len()];
    let mut cells_of_node = Vec::new();
    for idx in 0..grid.len() {
        if q.decided[idx] == 0 {
            node_of[idx] = cells_of_node.len() as u32;
            cells_of_node.push(idx);
        }
    }
    let mut graph = FlowGraph::new(cells_of_node.len());
    graph.reserve_pairs(cells_of_node.len() * weights.len() / 2 + 1);
    for (node, &idx) in cells_of_node.iter().enumerate() {
        let (ix, iy) = grid.coords(idx);
        graph.add_terminal(node, -q.q_unary[idx]);
        for (k, &((ox, oy), _)) in weights.iter().enumerate() {
            let jx = ix as i64 + ox;
            let jy = iy as i64 + oy;
            if !grid.in_bounds(jx, jy) || qw_is_zero(&q.qw, k) {
                continue;
            }
            let jdx = grid.index(jx as usize, jy as usize);
            match q.decided[jdx] {
                0 => {
                    // each unordered band pair once, from its lexicographically
                    // smaller offset endpoint
                    if ox > 0 || (ox == 0 && oy > 0) {
                        graph.add_pair(node, node_of[jdx] as usize, q.qw[k]);
                    }
                }
                1 => graph.add_terminal(node, q.qw[k]),
                _ => graph.add_terminal(node, -q.qw[k]),
            }
        }
    }
    graph.solve();
    let lo = graph.min_cut_source_side();
    let hi = graph.min_cut_sink_side_complement();

    let mut minimal = CellSet::empty(grid);
    let mut maximal = CellSet::empty(grid);
    for idx in 0..grid.len() {
        let (ix, iy) = grid.coords(idx);
        match q.decided[idx] {
            1 => {
                minimal.insert(ix, iy);
                maximal.insert(ix, iy);
            }
            0 => {
                let node = node_of[idx] as usize;
                if lo[node] {
                    minimal.insert(ix, iy);
                }
                if hi[node] {
                    maximal.insert(ix, iy);
                }
            }
            _ => {}
        }
    }
    debug_assert!(minimal.is_subset_of(&maximal));
    let energy = se.evaluate(&minimal);
    Ok(StepResult { minimal, maximal, energy, stats: graph.stats() })
}

#[inline]
fn qw_is_zero(qw: &[i64], k: usize) -> bool {
    qw[k] == 0
}

/// CSV dump of the quantized flow instance (for external solver cross-checks):
/// rows are `kind,from,to,cap` with node ids being cell indices, `S`, `T`.
pub fn graph_csv(se: &StepEnergy) -> Result<String> {
    let grid = se.grid;
    let q = quantize(se)?;
    let weights = se.perimeter.weights();
    let mut out = String::from("kind,from,to,cap\n");
    for idx in 0..grid.len() {
        match q.decided[idx] {
            1 => out.push_str(&format!("forced,S,{idx},inf\n")),
            -1 => out.push_str(&format!("forced,{idx},T,inf\n")),
            _ => {
                let u = q.q_unary[idx];
                if u > 0 {
                    out.push_str(&format!("terminal,{idx},T,{u}\n"));
                } else if u < 0 {
                    out.push_str(&format!("terminal,S,{idx},{}\n", -u));
                }
            }
        }
    }
    for idx in 0..grid.len() {
        if q.decided[idx] != 0 {
            continue;
        }
        let (ix, iy) = grid.coords(idx);
        for (k, &((ox, oy), _)) in weights.iter().enumerate() {
            if !(ox > 0 || (ox == 0 && oy > 0)) || q.qw[k] == 0 {
                continue;
            }
            let jx = ix as i64 + ox;
            let jy = iy as i64 + oy;
            if grid.in_bounds(jx, jy) {
                let jdx = grid.index(jx as usize, jy as usize);
                if q.decided[jdx] == 0 {
                    out.push_str(&format!("pair,{idx},{jdx},{}\n", q.qw[k]));
                }
            }
        }
    }
    Ok(out)
}

/// Sound signed-distance cap: beyond it the unary is guaranteed dominant.
fn decide_cap(models: &StepModels, grid: &Grid, fk: f64, h: f64, mirrored: bool) -> f64 {
    let qw_total: i64 = models
        .perimeter
        .weights()
        .iter()
        .map(|&(_, w)| (w * grid.dx * CAP_SCALE).round() as i64)
        .sum();
    let dx2 = grid.dx * grid.dx;
    let g_dec = ((qw_total + 2 * DOMINANCE_MARGIN) as f64 / CAP_SCALE) / dx2 + fk.abs() + 1.0;
    let n = models.nonlinearity;
    let g_at = |s: f64| if mirrored { n.inverse_mirrored(s) } else { n.inverse(s) };
    let (sat_lo, sat_hi) =
        if mirrored { (n.b, n.a) } else { (n.a, n.b) }; // g = -inf at -sat_lo, +inf at +sat_hi
    // outward: smallest s with g(s) >= g_dec (or s >= sat_hi)
    let out = smallest_dominant(|s| g_at(s) >= g_dec, sat_hi);
    // inward: smallest s with g(-s) <= -g_dec (or s >= sat_lo)
    let inw = smallest_dominant(|s| g_at(-s) <= -g_dec, sat_lo);
    let diam = (grid.nx as f64 + grid.ny as f64) * grid.dx * 4.0;
    (out.max(inw) * h + 2.0 * grid.dx).min(diam)
}

fn smallest_dominant(dominant: impl Fn(f64) -> bool, saturation: f64) -> f64 {
    if saturation.is_finite() {
        return saturation;
    }
    let mut s = 1e-6;
    while !dominant(s) && s < 1e18 {
        s *= 2.0;
    }
    s
}

/// One ATW step `T^{+-}_{h,t}`. Empty and full stored sets are fixed points.
/// `BoundedComplement` phases evolve the stored complement under the mirrored
/// selection and negated forcing, with the minimizer choice swapped, per the
/// duality `T^{+-} E = (T~^{-+} E^c)^c`.
pub fn atw_step(
    set: &CellSet,
    phase: Phase,
    models: &StepModels,
    fk: f64,
    h: f64,
    choice: MinimizerChoice,
    margin: usize,
) -> Result<CellSet> {
    let res = atw_step_both(set, phase, models, fk, h, margin)?;
    Ok(match effective_choice(choice, phase) {
        MinimizerChoice::Minimal => res.minimal,
        MinimizerChoice::Maximal => res.maximal,
    })
}

/// The choice actually used on the stored representation (swapped for
/// complement phases).
pub fn effective_choice(choice: MinimizerChoice, phase: Phase) -> MinimizerChoice {
    match (phase, choice) {
        (Phase::BoundedSet, c) => c,
        (Phase::BoundedComplement, MinimizerChoice::Minimal) => MinimizerChoice::Maximal,
        (Phase::BoundedComplement, MinimizerChoice::Maximal) => MinimizerChoice::Minimal,
    }
}

/// Both extremes of one ATW step on the stored representation, margin-checked.
pub fn atw_step_both(
    set: &CellSet,
    phase: Phase,
    models: &StepModels,
    fk: f64,
    h: f64,
    margin: usize,
) -> Result<StepResult> {
    if set.is_empty() || set.is_full() {
        return Ok(StepResult {
            minimal: set.clone(),
            maximal: set.clone(),
            energy: 0.0,
            stats: FlowStats::default(),
        });
    }
    let grid = set.grid();
    let mirrored = phase == Phase::BoundedComplement;
    let cap = decide_cap(models, grid, fk, h, mirrored);
    let se = step_energy_capped(set, phase, models, fk, h, cap)?;
    let res = minimize_step(&se)?;
    for out in [&res.minimal, &res.maximal] {
        if out.touches_margin(margin) {
            return Err(SchemeError::MarginBreach { step: 0, level: None });
        }
    }
    Ok(res)
}

/// The truncation chain of the approximation corollary: minimal minimizers
/// with `g v (-n)` in place of g, for each n in `n_list`. Needs a = +inf.
pub fn truncation_sequence(
    set: &CellSet,
    models: &StepModels,
    fk: f64,
    h: f64,
    n_list: &[f64],
) -> Result<Vec<CellSet>> {
    if models.nonlinearity.a.is_finite() {
        return Err(SchemeError::InvalidParameter(
            "truncation chain needs a = +inf (unbounded-below g)".into(),
        ));
    }
    let grid = *set.grid();
    let sd = crate::distance::signed_distance(set, models.anisotropy)?;
    let dx2 = grid.dx * grid.dx;
    let mut chain = Vec::with_capacity(n_list.len());
    for &nv in n_list {
        let unary = build_truncated_unary(&sd, models.nonlinearity, fk, h, dx2, nv);
        let se = StepEnergy::from_unary(grid, models.perimeter.clone(), unary)?;
        chain.push(minimize_step(&se)?.minimal);
    }
    Ok(chain)
}

fn build_truncated_unary(
    sd: &DistanceField,
    n: &Nonlinearity,
    fk: f64,
    h: f64,
    dx2: f64,
    level: f64,
) -> Vec<f64> {
    sd.values()
        .iter()
        .map(|&d| {
            let g = n.inverse_truncated(d / h, level);
            if g.is_finite() {
                (g - fk) * dx2
            } else {
                g
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::Anisotropy;
    use crate::perimeter::CroftonNeighborhood;

    #[test]
    fn all_penalized_gives_empty() {
        let grid = Grid::new(6, 6, 1.0, [0.0, 0.0]).unwrap();
        let j = PerimeterModel::crofton(CroftonNeighborhood::N8, grid.dx).unwrap();
        let se = StepEnergy::from_unary(grid, j, vec![1.0; grid.len()]).unwrap();
        let res = minimize_step(&se).unwrap();
        assert!(res.minimal.is_empty());
        assert!(res.maximal.is_empty());
        assert_eq!(res.energy, 0.0);
    }

    #[test]
    fn forced_cells_are_respected() {
        let grid = Grid::new(6, 6, 1.0, [0.0, 0.0]).unwrap();
        let j = PerimeterModel::crofton(CroftonNeighborhood::N8, grid.dx).unwrap();
        let mut unary = vec![1.0; grid.len()];
        unary[grid.index(2, 2)] = f64::NEG_INFINITY;
        unary[grid.index(4, 4)] = f64::INFINITY;
        let se = StepEnergy::from_unary(grid, j, unary).unwrap();
        assert_eq!(se.forced_in.count(), 1);
        assert_eq!(se.forced_out.count(), 1);
        let res = minimize_step(&se).unwrap();
        assert!(res.minimal.contains(2, 2));
        assert!(res.maximal.contains(2, 2));
        assert!(!res.maximal.contains(4, 4));
    }

    #[test]
    fn infeasible_forcing_is_an_error() {
        let grid = Grid::new(6, 6, 1.0, [0.0, 0.0]).unwrap();
        let j = PerimeterModel::crofton(CroftonNeighborhood::N8, grid.dx).unwrap();
        let mut se = StepEnergy::from_unary(grid, j, vec![0.0; grid.len()]).unwrap();
        se.forced_in.insert(3, 3);
        se.forced_out.insert(3, 3);
        assert_eq!(minimize_step(&se).unwrap_err(), SchemeError::InfeasibleConstraints);
    }

    #[test]
    fn identity_unary_has_no_forced_cells() {
        let grid = Grid::new(24, 24, 0.1, [0.0, 0.0]).unwrap();
        let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
        let n = Nonlinearity::identity();
        let a = Anisotropy::euclidean();
        let set = CellSet::disk(grid, grid.world(12, 12), 5.0 * grid.dx);
        let m = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
        let h = 0.05;
        let se = build_step_energy(&set, Phase::BoundedSet, &m, 0.0, h).unwrap();
        assert!(se.forced_in.is_empty());
        assert!(se.forced_out.is_empty());
        let sd = crate::distance::signed_distance(&set, &a).unwrap();
        for idx in 0..grid.len() {
            let expect = sd.values()[idx] / h * grid.dx * grid.dx;
            assert!((se.unary[idx] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn clamp_forces_the_confinement_bands() {
        let grid = Grid::new(24, 24, 0.1, [0.0, 0.0]).unwrap();
        let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
        let n = Nonlinearity::clamp(2.0).unwrap();
        let a = Anisotropy::euclidean();
        let set = CellSet::disk(grid, grid.world(12, 12), 4.3 * grid.dx);
        let m = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
        let h = 0.07;
        let se = build_step_energy(&set, Phase::BoundedSet, &m, 0.0, h).unwrap();
        let sd = crate::distance::signed_distance(&set, &a).unwrap();
        for idx in 0..grid.len() {
            let (ix, iy) = grid.coords(idx);
            let d = sd.values()[idx];
            assert_eq!(se.forced_in.contains(ix as i64, iy as i64), d <= -2.0 * h);
            assert_eq!(se.forced_out.contains(ix as i64, iy as i64), d >= 2.0 * h);
        }
        // confinement is structural on the result
        let res = minimize_step(&se).unwrap();
        let inner = crate::distance::level_band(&sd, -2.0 * h);
        let outer = crate::distance::level_band(&sd, 2.0 * h);
        assert!(inner.is_subset_of(&res.minimal));
        assert!(res.maximal.is_subset_of(&outer));
    }

    #[test]
    fn trivial_sets_are_fixed_points() {
        let grid = Grid::new(8, 8, 1.0, [0.0, 0.0]).unwrap();
        let j = PerimeterModel::crofton(CroftonNeighborhood::N8, grid.dx).unwrap();
        let n = Nonlinearity::identity();
        let a = Anisotropy::euclidean();
        let m = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
        let empty = CellSet::empty(grid);
        let full = CellSet::full(grid);
        for phase in [Phase::BoundedSet, Phase::BoundedComplement] {
            let r = atw_step(&empty, phase, &m, 0.5, 0.1, MinimizerChoice::Minimal, 2).unwrap();
            assert!(r.is_empty());
            let r = atw_step(&full, phase, &m, -0.5, 0.1, MinimizerChoice::Maximal, 2).unwrap();
            assert!(r.is_full());
        }
    }
}
