//! The verification suite: one check per acceptance target, runnable from the
//! CLI (`mmflow verify`) and from the integration tests.
//!
//! Flow-based checks read the cached outcome of their preset run; property
//! checks (exhaustive oracle, comparison principles, operator laws, perimeter
//! properties) are implemented here directly with seeded randomness.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mmflow_core::atw::{atw_step, atw_step_both, minimize_step, StepEnergy, StepModels, CAP_SCALE};
use mmflow_core::levelset::{decompose, lift_step};
use mmflow_core::{
    Anisotropy, CellSet, CroftonNeighborhood, Grid, LevelFunction, MinimizerChoice,
    Nonlinearity, PerimeterModel, Phase,
};

use crate::config::{RunConfig, SuiteConfig, SuiteKind};
use crate::presets::preset;
use crate::runner::{fd_radius_drift, run, RunOutcome};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionResult {
    fn new(id: &'static str, name: &'static str) -> CriterionResult {
        CriterionResult { id, name, passed: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.details.push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, detail));
        self.passed &= ok;
    }

    pub fn summary(&self) -> String {
        format!(
            "criterion {:<3} {:<44} {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// All criteria in suite order; the two marked `-literal` document the
/// lattice-pinning incompatibility of the nominal benchmark step size and are
/// expected to fail (their resolved twins pass).
pub const CRITERIA: &[&str] = &[
    "1", "2", "2R", "3", "4", "5", "6", "7", "8", "9", "10", "11", "11R", "12", "12R", "13",
];

fn cached_outcome(preset_name: &str) -> Arc<Result<RunOutcome, String>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Result<RunOutcome, String>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(preset_name) {
        return hit.clone();
    }
    let outcome = Arc::new(match preset(preset_name) {
        Ok(RunConfig::Flow(cfg)) => run(&cfg, None),
        Ok(RunConfig::Suite(_)) => Err(format!("preset `{preset_name}` is a property suite")),
        Err(e) => Err(e),
    });
    cache.lock().unwrap().insert(preset_name.to_string(), outcome.clone());
    outcome
}

fn flow_criterion(
    id: &'static str,
    name: &'static str,
    preset_name: &str,
    wanted_checks: &[&str],
) -> CriterionResult {
    let mut res = CriterionResult::new(id, name);
    match &*cached_outcome(preset_name) {
        Err(e) => res.check(false, format!("{preset_name}: {e}")),
        Ok(outcome) => {
            for want in wanted_checks {
                match outcome.report.checks().iter().find(|c| c.name == *want) {
                    None => res.check(false, format!("{preset_name}: check `{want}` missing")),
                    Some(c) => res.check(
                        c.passed,
                        format!(
                            "{preset_name}: {} = {:.6} (tolerance {:.6})",
                            c.name, c.worst, c.tolerance
                        ),
                    ),
                }
            }
        }
    }
    res
}

pub fn run_criterion(id: &str) -> CriterionResult {
    match id {
        "1" => criterion_exhaustive(),
        "2" => flow_criterion(
            "2",
            "shrinking disk tracks sqrt(r0^2-2t) [nominal h]",
            "shrink-disk-identity",
            &["radius-vs-exact-cells", "anisometry"],
        ),
        "2R" => flow_criterion(
            "2R",
            "shrinking disk tracks sqrt(r0^2-2t) [resolved h]",
            "shrink-disk-identity-resolved",
            &["radius-vs-exact-cells", "anisometry"],
        ),
        "3" => flow_criterion(
            "3",
            "power flow tracks (r0^(4/3)-(4/3)t)^(3/4)",
            "shrink-disk-power",
            &["radius-vs-exact-cells"],
        ),
        "4" => flow_criterion(
            "4",
            "clamp displacement bound, 200 steps",
            "clamp-speed-bound",
            &["per-step-displacement"],
        ),
        "5" => flow_criterion(
            "5",
            "purely shrinking superlevel chains",
            "purely-shrinking",
            &["monotone-shrink"],
        ),
        "6" => criterion_comparison(),
        "7" => criterion_operator_laws(),
        "8" => flow_criterion(
            "8",
            "set/function commutation, 64 levels x 20 steps",
            "level-set-commutation",
            &["set-function-commutation"],
        ),
        "9" => criterion_equilibrium(),
        "10" => criterion_barrier(),
        "11" => flow_criterion(
            "11",
            "variational/FD cross-validation [nominal h]",
            "shrink-disk-identity",
            &["fd-hausdorff-cells"],
        ),
        "11R" => flow_criterion(
            "11R",
            "variational/FD cross-validation [resolved h]",
            "shrink-disk-identity-resolved",
            &["fd-hausdorff-cells"],
        ),
        "12" => flow_criterion(
            "12",
            "h-refinement gaps nonincreasing [nominal ladder]",
            "h-refinement",
            &["refinement-gaps-nonincreasing"],
        ),
        "12R" => flow_criterion(
            "12R",
            "h-refinement gaps nonincreasing [resolved ladder]",
            "h-refinement-resolved",
            &["refinement-gaps-nonincreasing"],
        ),
        "13" => criterion_perimeter_props(),
        other => {
            let mut res = CriterionResult::new("?", "unknown criterion");
            res.check(false, format!("unknown criterion id `{other}`"));
            res
        }
    }
}

pub fn run_suite(ids: &[&str]) -> Vec<CriterionResult> {
    ids.iter().map(|id| run_criterion(id)).collect()
}

// ---------------------------------------------------------------------------
// property criteria

fn suite_config(preset_name: &str) -> SuiteConfig {
    let mut cfg = match preset(preset_name) {
        Ok(RunConfig::Suite(s)) => s,
        _ => panic!("preset `{preset_name}` must be a property suite"),
    };
    // --seed propagates through the environment for reproducing a report
    if let Some(seed) = std::env::var("MMFLOW_SEED").ok().and_then(|v| v.parse().ok()) {
        cfg.seed = seed;
    }
    cfg
}

fn criterion_exhaustive() -> CriterionResult {
    let cfg = suite_config("mincut-exhaustive");
    let mut res = CriterionResult::new("1", "exact solver vs exhaustive enumeration");
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut set_mismatches = 0usize;
    let mut energy_worst = 0.0f64;
    for trial in 0..cfg.count.max(1) {
        let grid = if trial % 3 == 0 {
            Grid::new(4, 5, 1.0, [0.0, 0.0]).unwrap()
        } else {
            Grid::new(4, 4, 0.5, [0.0, 0.0]).unwrap()
        };
        let j = PerimeterModel::crofton(CroftonNeighborhood::N8, grid.dx).unwrap();
        let unary: Vec<f64> = (0..grid.len())
            .map(|_| {
                if rng.random_bool(0.08) {
                    if rng.random_bool(0.5) {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    rng.random_range(-3.0..3.0)
                }
            })
            .collect();
        let se = match StepEnergy::from_unary(grid, j, unary) {
            Ok(se) => se,
            Err(_) => continue,
        };
        if !se.forced_in.intersection(&se.forced_out).is_empty() {
            continue;
        }
        let got = minimize_step(&se).unwrap();
        let (inter, union, best_f) = enumerate(&se);
        if got.minimal != inter || got.maximal != union {
            set_mismatches += 1;
        }
        energy_worst = energy_worst.max((got.energy - best_f).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    res.check(set_mismatches == 0, format!("extreme minimizers exact on {} instances ({} mismatches)", cfg.count, set_mismatches));
    res.check(energy_worst <= 1e-9, format!("optimal energy within 1e-9 (worst {energy_worst:.3e})"));
    res.check(elapsed < 30.0, format!("runtime {elapsed:.1}s < 30s"));
    res
}

/// Exhaustive minimizer structure via Gray-code deltas: returns the
/// intersection and union of the argmin set and the float minimum.
fn enumerate(se: &StepEnergy) -> (CellSet, CellSet, f64) {
    let grid = se.grid;
    let n = grid.len();
    assert!(n <= 20);
    let weights = se.perimeter.weights();
    let qw: Vec<i64> =
        weights.iter().map(|&(_, w)| (w * grid.dx * CAP_SCALE).round() as i64).collect();
    let w_total: i64 = qw.iter().sum();
    let clamp = (w_total + (1 << 12)) as f64;
    let mut q_unary = vec![0i64; n];
    let mut forced = vec![0i8; n];
    for idx in 0..n {
        let u = se.unary[idx];
        q_unary[idx] = (u * CAP_SCALE).clamp(-clamp, clamp).round() as i64;
        forced[idx] = if u == f64::NEG_INFINITY {
            1
        } else if u == f64::INFINITY {
            -1
        } else {
            0
        };
    }
    let mut nbrs: Vec<Vec<(usize, i64, f64)>> = vec![Vec::new(); n];
    for idx in 0..n {
        let (ix, iy) = grid.coords(idx);
        for (k, &((ox, oy), w)) in weights.iter().enumerate() {
            let jx = ix as i64 + ox;
            let jy = iy as i64 + oy;
            if grid.in_bounds(jx, jy) {
                nbrs[idx].push((grid.index(jx as usize, jy as usize), qw[k], w * grid.dx));
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| forced[i] == 0).collect();
    let base: u32 = (0..n).filter(|&i| forced[i] == 1).map(|i| 1u32 << i).sum();
    let mut mask = base;
    let mut ei: i64 = 0;
    let mut ef: f64 = 0.0;
    for idx in 0..n {
        if mask >> idx & 1 == 1 {
            ei += q_unary[idx];
            if se.unary[idx].is_finite() {
                ef += se.unary[idx];
            }
            for &(j, q, wf) in &nbrs[idx] {
                if mask >> j & 1 == 0 {
                    ei += q;
                    ef += wf;
                }
            }
        }
    }
    let mut best_i = ei;
    let mut best_f = ef;
    let mut inter = mask;
    let mut union = mask;
    for k in 1u64..(1u64 << free.len()) {
        let c = free[k.trailing_zeros() as usize];
        let joined = mask >> c & 1 == 0;
        let sign: i64 = if joined { 1 } else { -1 };
        ei += sign * q_unary[c];
        if se.unary[c].is_finite() {
            ef += sign as f64 * se.unary[c];
        }
        for &(j, q, wf) in &nbrs[c] {
            let j_in = mask >> j & 1 == 1;
            let x_old = !joined;
            let d = ((x_old == j_in) as i64) - ((x_old != j_in) as i64);
            ei += d * q;
            ef += d as f64 * wf;
        }
        mask ^= 1 << c;
        if ei < best_i {
            best_i = ei;
            inter = mask;
            union = mask;
        } else if ei == best_i {
            inter &= mask;
            union |= mask;
        }
        if ef < best_f {
            best_f = ef;
        }
    }
    let to_set = |m: u32| CellSet::from_fn(grid, |ix, iy| m >> grid.index(ix, iy) & 1 == 1);
    (to_set(inter), to_set(union), best_f)
}

fn random_blob(grid: Grid, rng: &mut StdRng, margin: usize) -> CellSet {
    let cx = rng.random_range(margin + 4..grid.nx - margin - 4);
    let cy = rng.random_range(margin + 4..grid.ny - margin - 4);
    let r = rng.random_range(2.0..5.0);
    let mut set = CellSet::disk(grid, grid.world(cx, cy), r * grid.dx);
    for _ in 0..rng.random_range(0..24) {
        let ix = rng.random_range(margin + 1..grid.nx - margin - 1);
        let iy = rng.random_range(margin + 1..grid.ny - margin - 1);
        let near = set.contains(ix as i64 + 1, iy as i64)
            || set.contains(ix as i64 - 1, iy as i64)
            || set.contains(ix as i64, iy as i64 + 1)
            || set.contains(ix as i64, iy as i64 - 1);
        if near {
            set.insert(ix, iy);
        }
    }
    set
}

fn grow(set: &CellSet, rng: &mut StdRng, margin: usize) -> CellSet {
    let grid = *set.grid();
    let mut big = set.clone();
    for (ix, iy) in set.iter_cells().collect::<Vec<_>>() {
        for (ox, oy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)] {
            let nx = ix as i64 + ox;
            let ny = iy as i64 + oy;
            if grid.in_bounds(nx, ny)
                && !grid.in_margin(nx as usize, ny as usize, margin)
                && rng.random_bool(0.6)
            {
                big.insert(nx as usize, ny as usize);
            }
        }
    }
    if rng.random_bool(0.4) {
        big = big.union(&random_blob(grid, rng, margin));
    }
    big
}

fn criterion_comparison() -> CriterionResult {
    let cfg = suite_config("comparison-principle");
    let mut res = CriterionResult::new("6", "comparison principles preserve inclusion");
    let grid = Grid::new(40, 40, 0.25, [0.0, 0.0]).unwrap();
    let margin = 3usize;
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let kinds: Vec<(&str, Nonlinearity)> = vec![
        ("identity", Nonlinearity::identity()),
        ("clamp", Nonlinearity::clamp(2.0).unwrap()),
        ("power", Nonlinearity::power(1.0 / 3.0).unwrap()),
    ];
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    for (label, n) in &kinds {
        let models = StepModels { perimeter: &j, nonlinearity: n, anisotropy: &a };
        let mut bad_bounded = 0usize;
        let mut bad_complement = 0usize;
        let mut bad_mixed = 0usize;
        for _ in 0..cfg.count {
            let e1 = random_blob(grid, &mut rng, margin);
            let e2 = grow(&e1, &mut rng, margin);
            let fk = rng.random_range(-0.5..0.5);
            let h = 0.02;
            // bounded phase
            let r1 = atw_step_both(&e1, Phase::BoundedSet, &models, fk, h, 2).unwrap();
            let r2 = atw_step_both(&e2, Phase::BoundedSet, &models, fk, h, 2).unwrap();
            if !r1.minimal.is_subset_of(&r2.minimal) || !r1.maximal.is_subset_of(&r2.maximal) {
                bad_bounded += 1;
            }
            // complement phase: storing complements swaps the inclusion
            let k1 = e2.clone(); // bigger stored complement = smaller phase set
            let k2 = e1.clone();
            let c1 = atw_step_both(&k1, Phase::BoundedComplement, &models, fk, h, 2).unwrap();
            let c2 = atw_step_both(&k2, Phase::BoundedComplement, &models, fk, h, 2).unwrap();
            // phase sets nest iff stored complements nest the other way
            if !c2.minimal.is_subset_of(&c1.minimal) || !c2.maximal.is_subset_of(&c1.maximal) {
                bad_complement += 1;
            }
            // bounded set inside an unbounded phase with a far-away hole
            let hole = CellSet::disk(
                grid,
                grid.world(rng.random_range(28..34), rng.random_range(28..34)),
                rng.random_range(1.5..3.0) * grid.dx,
            );
            if e1.intersection(&hole).is_empty() {
                for choice in [MinimizerChoice::Minimal, MinimizerChoice::Maximal] {
                    let t1 = atw_step(&e1, Phase::BoundedSet, &models, fk, h, choice, 2).unwrap();
                    let hole_new =
                        atw_step(&hole, Phase::BoundedComplement, &models, fk, h, choice, 2)
                            .unwrap();
                    if !t1.intersection(&hole_new).is_empty() {
                        bad_mixed += 1;
                    }
                }
            }
        }
        res.check(
            bad_bounded == 0,
            format!("{label}: bounded-phase inclusion exact on {} pairs", cfg.count),
        );
        res.check(
            bad_complement == 0,
            format!("{label}: complement-phase inclusion exact on {} pairs", cfg.count),
        );
        res.check(
            bad_mixed == 0,
            format!("{label}: bounded-vs-unbounded inclusion exact"),
        );
    }
    res
}

fn quantized_field(grid: Grid, levels: usize, salt: f64) -> LevelFunction {
    let raw = LevelFunction::from_fn(grid, 0.0, 1.0, 3, |x, y| {
        let mut v: f64 = 0.0;
        for (bx, by, r, a) in
            [(0.28, 0.38, 0.24, 0.9), (0.58, 0.52, 0.2, 0.7), (0.42, 0.66, 0.28, 0.55)]
        {
            let d = (x - bx).hypot(y - by);
            if d < r {
                v += a * (1.0 - d / r);
            }
        }
        v * (0.8 + 0.4 * ((x * 31.0 + y * 83.0 + salt).sin().abs()))
    })
    .unwrap();
    decompose(&raw, levels).unwrap().reconstruct(grid)
}

fn criterion_operator_laws() -> CriterionResult {
    let cfg = suite_config("operator-laws");
    let mut res = CriterionResult::new("7", "lift monotone, constant-commuting, shift-equivariant");
    let grid = Grid::new(40, 40, 1.0 / 32.0, [0.0, 0.0]).unwrap();
    let margin = 3usize;
    let levels = 8usize;
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let n = Nonlinearity::identity();
    let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let h = 0.01;
    let gap = 1.0 / levels as f64;
    let mut bad_monotone = 0usize;
    let mut bad_constant = 0usize;
    let mut bad_shift = 0usize;
    for trial in 0..cfg.count {
        let u = quantized_field(grid, levels, trial as f64 * 0.77);
        // monotone pair
        let x0 = rng.random_range(5..20);
        let y0 = rng.random_range(5..20);
        let mut vals = u.values().to_vec();
        for iy in y0..(y0 + 10).min(grid.ny - margin) {
            for ix in x0..(x0 + 10).min(grid.nx - margin) {
                if !grid.in_margin(ix, iy, margin) {
                    let idx = grid.index(ix, iy);
                    vals[idx] = (vals[idx] + 2.0 * gap).min(1.0);
                }
            }
        }
        let v = LevelFunction::new(grid, vals, 0.0, 1.0, margin).unwrap();
        let lu = lift_step(&u, &models, 0.0, h, levels, MinimizerChoice::Minimal, margin).unwrap();
        let lv = lift_step(&v, &models, 0.0, h, levels, MinimizerChoice::Minimal, margin).unwrap();
        if lu.values().iter().zip(lv.values()).any(|(a, b)| a > b) {
            bad_monotone += 1;
        }
        // level-aligned constant
        let c = 0.25;
        let lc = lift_step(
            &u.plus_constant(c),
            &models,
            0.1,
            h,
            levels,
            MinimizerChoice::Minimal,
            margin,
        )
        .unwrap();
        let lu2 = lift_step(&u, &models, 0.1, h, levels, MinimizerChoice::Minimal, margin).unwrap();
        if lu2.values().iter().zip(lc.values()).any(|(a, b)| a + c != *b) {
            bad_constant += 1;
        }
        // lattice shift (keep the support interior first)
        let mut interior = vec![0.0; grid.len()];
        for iy in 8..28 {
            for ix in 8..28 {
                interior[grid.index(ix, iy)] = u.value(ix, iy);
            }
        }
        let ui = LevelFunction::new(grid, interior, 0.0, 1.0, margin).unwrap();
        let v_shift = (rng.random_range(-3..4), rng.random_range(-3..4));
        let ls = lift_step(
            &ui.shifted(v_shift),
            &models,
            0.0,
            h,
            levels,
            MinimizerChoice::Minimal,
            margin,
        )
        .unwrap();
        let lsi = lift_step(&ui, &models, 0.0, h, levels, MinimizerChoice::Minimal, margin)
            .unwrap()
            .shifted(v_shift);
        if lsi.values() != ls.values() {
            bad_shift += 1;
        }
    }
    res.check(bad_monotone == 0, format!("monotone on {} pairs", cfg.count));
    res.check(bad_constant == 0, format!("commutes with constants on {} pairs", cfg.count));
    res.check(bad_shift == 0, format!("shift-equivariant on {} pairs", cfg.count));
    res
}

fn criterion_equilibrium() -> CriterionResult {
    let mut res = flow_criterion(
        "9",
        "forced equilibrium disk holds still",
        "forcing-equilibrium",
        &["radius-vs-exact-cells"],
    );
    res.id = "9";
    match preset("forcing-equilibrium") {
        Ok(RunConfig::Flow(cfg)) => match fd_radius_drift(&cfg, 10) {
            Ok(worst) => res.check(worst <= 2.0, format!("FD reference drift {worst:.3} <= 2 cells")),
            Err(e) => res.check(false, format!("FD reference: {e}")),
        },
        _ => res.check(false, "forcing-equilibrium preset missing"),
    }
    res
}

fn criterion_barrier() -> CriterionResult {
    let mut res = CriterionResult::new("10", "barrier containment (classical and fractional)");
    for name in ["shrink-disk-identity", "shrink-disk-identity-resolved", "fractional-barrier"] {
        match &*cached_outcome(name) {
            Err(e) => res.check(false, format!("{name}: {e}")),
            Ok(outcome) => match outcome.report.checks().iter().find(|c| c.name == "barrier-containment-cells") {
                None => res.check(false, format!("{name}: barrier check missing")),
                Some(c) => res.check(
                    c.passed,
                    format!("{name}: barrier gap {:.3} <= {:.1} cells", c.worst, c.tolerance),
                ),
            },
        }
    }
    res
}

fn criterion_perimeter_props() -> CriterionResult {
    let cfg = suite_config("perimeter-properties");
    let mut res = CriterionResult::new("13", "perimeters submodular and translation invariant");
    let grid = Grid::new(40, 40, 0.25, [0.0, 0.0]).unwrap();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    for (label, j) in [
        ("crofton16", PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap()),
        ("fractional", PerimeterModel::fractional(0.5, 4, grid.dx).unwrap()),
    ] {
        // shifts must keep the set at least the interaction reach away from
        // the window edge, or pairs fall off the grid
        let reach = 4usize;
        let hull = 3i64;
        let margin = reach + hull as usize;
        let mut bad_sub = 0usize;
        let mut bad_shift = 0usize;
        for _ in 0..cfg.count {
            let e = random_blob(grid, &mut rng, margin);
            let f = random_blob(grid, &mut rng, margin);
            if !j.submodularity_check(&e, &f) {
                bad_sub += 1;
            }
            let v = (rng.random_range(-hull..=hull), rng.random_range(-hull..=hull));
            let shifted = e.shifted(v);
            if shifted.count() == e.count() && j.energy(&shifted) != j.energy(&e) {
                bad_shift += 1;
            }
        }
        res.check(bad_sub == 0, format!("{label}: submodular on {} random pairs", cfg.count));
        res.check(
            bad_shift == 0,
            format!("{label}: translation invariant on {} random shifts", cfg.count),
        );
    }
    res
}

/// Direct property-suite execution for `mmflow run` on suite configs.
pub fn run_suite_config(cfg: &SuiteConfig) -> CriterionResult {
    match cfg.kind {
        SuiteKind::Exhaustive => criterion_exhaustive(),
        SuiteKind::Comparison => criterion_comparison(),
        SuiteKind::OperatorLaws => criterion_operator_laws(),
        SuiteKind::PerimeterProps => criterion_perimeter_props(),
    }
}

/// The quick smoke suite: the cheap property criteria only.
pub fn quick_ids() -> Vec<&'static str> {
    vec!["1", "6", "7", "13"]
}
