//! Level-set lifting: evolve every superlevel set of a function by the ATW
//! step and reconstruct the function as the supremum of attained levels.
//!
//! The weak comparison principle makes evolved superlevel sets stay nested,
//! so reconstruction is well defined; nesting is asserted, never repaired.
//! Because the minimal minimizer is monotone in the input set, the stack set
//! at any level after k lifts equals the k-fold set evolution of the initial
//! superlevel set, exactly - that identity is what the tests pin down.

use crate::atw::{atw_step_both, step_forcing, StepModels};
use crate::distance::signed_distance;
use crate::error::{Result, SchemeError};
use crate::field::LevelFunction;
use crate::grid::{CellSet, Grid, Phase};
use crate::nonlinearity::Forcing;
use crate::params::{MinimizerChoice, SchemeParams};

/// Superlevel sets of a function at quantized levels, nested decreasing.
#[derive(Debug, Clone)]
pub struct LevelStack {
    pub floor_value: f64,
    pub ceil_value: f64,
    /// Strictly increasing levels in (floor, ceil].
    pub levels: Vec<f64>,
    /// sets[k] = {u >= levels[k]}; nested: sets[k+1] subset of sets[k].
    pub sets: Vec<CellSet>,
}

/// Quantize into `level_count` uniform levels over (floor, ceil].
pub fn decompose(u: &LevelFunction, level_count: usize) -> Result<LevelStack> {
    if level_count < 2 {
        return Err(SchemeError::InvalidParameter("level_count must be >= 2".into()));
    }
    let gap = (u.ceil_value - u.floor_value) / level_count as f64;
    let levels: Vec<f64> =
        (1..=level_count).map(|k| u.floor_value + k as f64 * gap).collect();
    let sets = levels.iter().map(|&s| u.superlevel(s)).collect();
    Ok(LevelStack { floor_value: u.floor_value, ceil_value: u.ceil_value, levels, sets })
}

impl LevelStack {
    /// u(x) = max{ level : x in set } with floor_value as default.
    pub fn reconstruct(&self, grid: Grid) -> LevelFunction {
        let mut values = vec![self.floor_value; grid.len()];
        for (s, set) in self.levels.iter().zip(&self.sets) {
            for (ix, iy) in set.iter_cells() {
                values[grid.index(ix, iy)] = *s;
            }
        }
        // sets are nested so the last write per cell is the max attained level
        LevelFunction::new(grid, values, self.floor_value, self.ceil_value, 0)
            .expect("reconstruction stays within [floor, ceil]")
    }
}

/// One lifted step `T_{h,t} u`: evolve every stack set, assert nesting,
/// reconstruct. `fk` is the step-bucketed forcing coefficient.
pub fn lift_step(
    u: &LevelFunction,
    models: &StepModels,
    fk: f64,
    h: f64,
    level_count: usize,
    choice: MinimizerChoice,
    margin: usize,
) -> Result<LevelFunction> {
    lift_step_memo(u, models, fk, h, level_count, choice, margin, &mut StepMemo::default())
}

/// Cross-step cache of solved (set, forcing) instances. The solver is
/// deterministic, so replaying an identical instance is exact; hits are
/// verified by full set equality, never by hash alone.
#[derive(Default)]
struct StepMemo {
    map: std::collections::HashMap<(u64, u64), Vec<(CellSet, CellSet)>>,
}

impl StepMemo {
    fn lookup(&self, set: &CellSet, fk: f64) -> Option<&CellSet> {
        let key = (set.fingerprint(), fk.to_bits());
        self.map.get(&key)?.iter().find(|(input, _)| input == set).map(|(_, out)| out)
    }

    fn insert(&mut self, set: &CellSet, fk: f64, out: CellSet) {
        let key = (set.fingerprint(), fk.to_bits());
        self.map.entry(key).or_default().push((set.clone(), out));
    }
}

#[allow(clippy::too_many_arguments)]
fn lift_step_memo(
    u: &LevelFunction,
    models: &StepModels,
    fk: f64,
    h: f64,
    level_count: usize,
    choice: MinimizerChoice,
    margin: usize,
    memo: &mut StepMemo,
) -> Result<LevelFunction> {
    let stack = decompose(u, level_count)?;
    let evolved = evolve_stack(&stack, models, fk, h, choice, margin, memo)?;
    Ok(evolved.reconstruct(*u.grid()))
}

/// Worker count for the per-level solves of one lifted step, from
/// MMFLOW_THREADS (set by the CLI's --threads), default 1.
pub fn configured_threads() -> usize {
    std::env::var("MMFLOW_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

#[allow(clippy::too_many_arguments)]
fn evolve_stack(
    stack: &LevelStack,
    models: &StepModels,
    fk: f64,
    h: f64,
    choice: MinimizerChoice,
    margin: usize,
    memo: &mut StepMemo,
) -> Result<LevelStack> {
    // resolve memo hits and equal-duplicate levels first; the remaining
    // distinct instances are independent and may run on worker threads
    let n = stack.sets.len();
    let mut sets: Vec<Option<CellSet>> = vec![None; n];
    let mut jobs: Vec<(usize, &CellSet)> = Vec::new();
    for (k, set) in stack.sets.iter().enumerate() {
        if let Some(hit) = memo.lookup(set, fk) {
            sets[k] = Some(hit.clone());
        } else {
            jobs.push((k, set));
        }
    }
    // dedupe: solve each distinct pending set once
    let mut distinct: Vec<(usize, &CellSet)> = Vec::new();
    for &(k, set) in &jobs {
        if !distinct.iter().any(|(_, s)| *s == set) {
            distinct.push((k, set));
        }
    }
    let threads = configured_threads().min(distinct.len().max(1));
    let solve_one = |k: usize, set: &CellSet| -> Result<CellSet> {
        let res = atw_step_both(set, Phase::BoundedSet, models, fk, h, margin).map_err(|e| {
            match e {
                SchemeError::MarginBreach { step, .. } => {
                    SchemeError::MarginBreach { step, level: Some(k) }
                }
                other => other,
            }
        })?;
        Ok(match choice {
            MinimizerChoice::Minimal => res.minimal,
            MinimizerChoice::Maximal => res.maximal,
        })
    };
    let mut solved: Vec<(usize, Result<CellSet>)> = Vec::with_capacity(distinct.len());
    if threads <= 1 {
        for &(k, set) in &distinct {
            solved.push((k, solve_one(k, set)));
        }
    } else {
        let results: Vec<std::sync::Mutex<Vec<(usize, Result<CellSet>)>>> =
            (0..threads).map(|_| std::sync::Mutex::new(Vec::new())).collect();
        std::thread::scope(|scope| {
            for (w, chunk) in distinct.chunks(distinct.len().div_ceil(threads)).enumerate() {
                let slot = &results[w];
                let solve_one = &solve_one;
                scope.spawn(move || {
                    let mut local = Vec::with_capacity(chunk.len());
                    for &(k, set) in chunk {
                        local.push((k, solve_one(k, set)));
                    }
                    *slot.lock().unwrap() = local;
                });
            }
        });
        for slot in results {
            solved.extend(slot.into_inner().unwrap());
        }
        solved.sort_by_key(|(k, _)| *k);
    }
    // surface the lowest-level error deterministically
    for (_, r) in &solved {
        if let Err(e) = r {
            return Err(e.clone());
        }
    }
    for (k, r) in solved {
        let out = r.expect("errors handled above");
        memo.insert(&stack.sets[k], fk, out.clone());
        sets[k] = Some(out);
    }
    // fill duplicates from the memo and assemble in level order
    let mut assembled: Vec<CellSet> = Vec::with_capacity(n);
    for (k, slot) in sets.into_iter().enumerate() {
        let out = match slot {
            Some(s) => s,
            None => memo
                .lookup(&stack.sets[k], fk)
                .expect("duplicate level solved by its representative")
                .clone(),
        };
        if let Some(prev) = assembled.last() {
            if !out.is_subset_of(prev) {
                return Err(SchemeError::NestingViolation { step: 0, level: k });
            }
        }
        assembled.push(out);
    }
    Ok(LevelStack {
        floor_value: stack.floor_value,
        ceil_value: stack.ceil_value,
        levels: stack.levels.clone(),
        sets: assembled,
    })
}

/// A recorded function evolution.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<LevelFunction>,
    /// Per step, the max over levels of the Hausdorff displacement of the
    /// level set (levels that are empty or full on both sides are skipped).
    pub per_step_displacement: Vec<f64>,
}

/// Iterate the lifted step from `u0` to the horizon.
pub fn evolve(
    u0: &LevelFunction,
    models: &StepModels,
    forcing: &Forcing,
    params: &SchemeParams,
) -> Result<EvolutionRecord> {
    let steps = params.steps();
    let mut times = vec![0.0];
    let mut snapshots = vec![u0.clone()];
    let mut displacement = Vec::with_capacity(steps);
    let mut current = u0.clone();
    let mut memo = StepMemo::default();
    for k in 0..steps {
        let fk = step_forcing(forcing, k, params.h);
        let next = lift_step_memo(
            &current,
            models,
            fk,
            params.h,
            params.level_count,
            params.choice,
            params.margin,
            &mut memo,
        )
        .map_err(|e| match e {
            SchemeError::MarginBreach { level, .. } => {
                SchemeError::MarginBreach { step: k, level }
            }
            SchemeError::NestingViolation { level, .. } => {
                SchemeError::NestingViolation { step: k, level }
            }
            other => other,
        })?;
        displacement.push(stack_displacement(&current, &next, params.level_count)?);
        times.push((k + 1) as f64 * params.h);
        snapshots.push(next.clone());
        current = next;
    }
    Ok(EvolutionRecord { times, snapshots, per_step_displacement: displacement })
}

fn stack_displacement(a: &LevelFunction, b: &LevelFunction, level_count: usize) -> Result<f64> {
    let sa = decompose(a, level_count)?;
    let sb = decompose(b, level_count)?;
    let mut worst = 0.0f64;
    for (x, y) in sa.sets.iter().zip(&sb.sets) {
        if (x.is_empty() && y.is_empty()) || (x.is_full() && y.is_full()) {
            continue;
        }
        worst = worst.max(hausdorff_distance(x, y));
    }
    Ok(worst)
}

/// Euclidean Hausdorff distance between two cell sets (infinity if exactly
/// one is empty). Ring search from each symmetric-difference cell.
pub fn hausdorff_distance(a: &CellSet, b: &CellSet) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn directed_hausdorff(a: &CellSet, b: &CellSet) -> f64 {
    let grid = a.grid();
    let mut worst = 0.0f64;
    for (ix, iy) in a.difference(b).iter_cells() {
        worst = worst.max(dist_to_set(grid, b, ix as i64, iy as i64));
    }
    worst
}

fn dist_to_set(grid: &Grid, set: &CellSet, x: i64, y: i64) -> f64 {
    let max_r = grid.nx.max(grid.ny) as i64 + 1;
    let mut best = f64::INFINITY;
    let mut r = 1i64;
    while r <= max_r {
        // square ring at Chebyshev radius r
        for (cx, cy) in ring(x, y, r) {
            if set.contains(cx, cy) {
                let d = (((cx - x) * (cx - x) + (cy - y) * (cy - y)) as f64).sqrt() * grid.dx;
                if d < best {
                    best = d;
                }
            }
        }
        if best.is_finite() && (r as f64) * grid.dx >= best {
            break;
        }
        r += 1;
    }
    best
}

fn ring(x: i64, y: i64, r: i64) -> impl Iterator<Item = (i64, i64)> {
    let top = (-r..=r).map(move |o| (x + o, y - r));
    let bottom = (-r..=r).map(move |o| (x + o, y + r));
    let left = (-r + 1..r).map(move |o| (x - r, y + o));
    let right = (-r + 1..r).map(move |o| (x + r, y + o));
    top.chain(bottom).chain(left).chain(right)
}

/// Spatial-modulus preservation report: for level pairs s < s', the evolved
/// s'-superlevel must keep the separation from the s-sublevel that it had at
/// time zero, up to discretization.
#[derive(Debug, Clone)]
pub struct ModulusReport {
    /// Worst shortfall against the initial separation, in cells.
    pub worst_violation_cells: f64,
    pub pairs_checked: usize,
}

pub fn modulus_check(
    u0: &LevelFunction,
    record: &EvolutionRecord,
    level_count: usize,
) -> Result<ModulusReport> {
    let stack0 = decompose(u0, level_count)?;
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    // initial separations per pair (i < j)
    let mut sep0 = vec![vec![f64::INFINITY; level_count]; level_count];
    for i in 0..level_count {
        for j in (i + 1)..level_count {
            sep0[i][j] = separation(&stack0.sets[j], &stack0.sets[i]);
        }
    }
    for snap in &record.snapshots {
        let stack = decompose(snap, level_count)?;
        for i in 0..level_count {
            for j in (i + 1)..level_count {
                if !sep0[i][j].is_finite() {
                    continue;
                }
                let now = separation(&stack.sets[j], &stack.sets[i]);
                if now.is_finite() {
                    pairs += 1;
                    let grid = snap.grid();
                    worst = worst.max((sep0[i][j] - now) / grid.dx);
                }
            }
        }
    }
    Ok(ModulusReport { worst_violation_cells: worst, pairs_checked: pairs })
}

/// Min Euclidean distance from cells of `inner` to cells outside `outer`
/// (infinity when inner is empty or outer is full).
fn separation(inner: &CellSet, outer: &CellSet) -> f64 {
    if inner.is_empty() || outer.is_full() {
        return f64::INFINITY;
    }
    let grid = inner.grid();
    let outside = outer.complement();
    let mut best = f64::INFINITY;
    for (ix, iy) in inner.boundary_cells() {
        let d = dist_to_set(grid, &outside, ix as i64, iy as i64);
        if d < best {
            best = d;
        }
    }
    // interior cells cannot be closer to the outside than boundary cells
    best
}

/// Run the evolution at several step sizes and report, per h, the sup over
/// the coarsest-grid sample times of the cellwise gap to the finest run.
pub fn h_refinement_study(
    u0: &LevelFunction,
    models: &StepModels,
    forcing: &Forcing,
    h_list: &[f64],
    t_end: f64,
    level_count: usize,
    choice: MinimizerChoice,
    margin: usize,
) -> Result<Vec<(f64, f64)>> {
    if h_list.len() < 3 {
        return Err(SchemeError::InvalidParameter("h_list needs >= 3 entries".into()));
    }
    for w in h_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(SchemeError::InvalidParameter("h_list must be decreasing".into()));
        }
    }
    for &h in h_list {
        let ratio = t_end / h;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(SchemeError::InvalidParameter(format!("h {h} does not divide T {t_end}")));
        }
    }
    let mut records = Vec::new();
    for &h in h_list {
        let params = SchemeParams::new(h, t_end, level_count, margin, choice)?;
        records.push(evolve(u0, models, forcing, &params)?);
    }
    let finest = records.last().unwrap();
    let h_max = h_list[0];
    let samples = (t_end / h_max).round() as usize;
    let mut out = Vec::new();
    for (r, &h) in records.iter().zip(h_list) {
        let mut gap = 0.0f64;
        for m in 0..=samples {
            let t = m as f64 * h_max;
            let idx = (t / h).round() as usize;
            let idx_f = (t / h_list[h_list.len() - 1]).round() as usize;
            gap = gap.max(r.snapshots[idx].sup_distance(&finest.snapshots[idx_f]));
        }
        out.push((h, gap));
    }
    Ok(out)
}

/// Evolve a single set (set-tracking mode, no lifting), recording each state.
pub fn evolve_set(
    e0: &CellSet,
    phase: Phase,
    models: &StepModels,
    forcing: &Forcing,
    params: &SchemeParams,
) -> Result<Vec<CellSet>> {
    let mut states = vec![e0.clone()];
    let mut current = e0.clone();
    for k in 0..params.steps() {
        let fk = step_forcing(forcing, k, params.h);
        let res = atw_step_both(&current, phase, models, fk, params.h, params.margin)
            .map_err(|e| match e {
                SchemeError::MarginBreach { level, .. } => SchemeError::MarginBreach { step: k, level },
                other => other,
            })?;
        current = match crate::atw::effective_choice(params.choice, phase) {
            MinimizerChoice::Minimal => res.minimal,
            MinimizerChoice::Maximal => res.maximal,
        };
        states.push(current.clone());
    }
    Ok(states)
}

/// One signed-distance band extraction helper shared by callers that build
/// initial conditions from sets.
pub fn distance_cone(
    set: &CellSet,
    aniso: &crate::anisotropy::Anisotropy,
    floor_value: f64,
    ceil_value: f64,
    margin: usize,
) -> Result<LevelFunction> {
    let grid = *set.grid();
    let sd = signed_distance(set, aniso)?;
    let mut values = vec![floor_value; grid.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            if grid.in_margin(ix, iy, margin) {
                continue;
            }
            values[grid.index(ix, iy)] =
                (-sd.value(ix, iy)).clamp(floor_value, ceil_value);
        }
    }
    LevelFunction::new(grid, values, floor_value, ceil_value, margin)
}
