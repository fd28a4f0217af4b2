//! Execute one flow configuration: evolve, write artifacts, check invariants.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mmflow_core::atw::{build_step_energy, graph_csv, step_forcing, StepModels};
use mmflow_core::distance::signed_distance;
use mmflow_core::levelset::{decompose, evolve, evolve_set, h_refinement_study, hausdorff_distance};
use mmflow_core::oracles::{
    barrier_radius, exact_ball_radius, fd_reference_evolve, measure_radius, BarrierModel,
};
use mmflow_core::{CellSet, LevelFunction, Phase};

use crate::artifacts::{function_pgm, read_pgm_as_set, set_pgm, write_file, Csv};
use crate::config::{FlowConfig, InitialSpec, RunMode};
use crate::report::Report;

pub struct RunOutcome {
    pub report: Report,
    pub passed: bool,
    /// (t, measured, exact, barrier) when a radius curve was recorded.
    pub radius_series: Vec<(f64, f64, f64, f64)>,
    /// (t, hausdorff in cells) for the FD cross-check when enabled.
    pub fd_series: Vec<(f64, f64)>,
    /// refinement gaps (h, sup gap) in refinement mode.
    pub refinement_gaps: Vec<(f64, f64)>,
}

pub fn build_initial_set(cfg: &FlowConfig) -> Result<CellSet, String> {
    let grid = cfg.grid;
    let set = match &cfg.initial {
        InitialSpec::Disk { cx, cy, r } => CellSet::disk(grid, [*cx, *cy], *r),
        InitialSpec::Rectangle { x0, y0, x1, y1 } => CellSet::from_fn(grid, |ix, iy| {
            let p = grid.world(ix, iy);
            p[0] >= *x0 && p[0] <= *x1 && p[1] >= *y0 && p[1] <= *y1
        }),
        InitialSpec::Union { disks } => {
            let mut set = CellSet::empty(grid);
            for (cx, cy, r) in disks {
                set = set.union(&CellSet::disk(grid, [*cx, *cy], *r));
            }
            set
        }
        InitialSpec::Cone { cx, cy, r, .. } => CellSet::disk(grid, [*cx, *cy], *r),
        InitialSpec::Raster { path, threshold } => {
            let bytes = std::fs::read(path).map_err(|e| format!("initial.path: {e}"))?;
            read_pgm_as_set(&bytes, grid, *threshold).map_err(|e| format!("initial.path: {e}"))?
        }
    };
    if set.touches_margin(cfg.margin) {
        return Err("initial condition touches the margin band".into());
    }
    Ok(set)
}

pub fn build_initial_function(cfg: &FlowConfig) -> Result<LevelFunction, String> {
    match &cfg.initial {
        InitialSpec::Cone { cx, cy, r, floor, ceil } => {
            LevelFunction::disk_cone(cfg.grid, [*cx, *cy], *r, *floor, *ceil, cfg.margin)
                .map_err(|e| e.to_string())
        }
        _ => {
            // lift a set initial condition to its signed-distance cone
            let set = build_initial_set(cfg)?;
            let m = measure_radius(&set).map_err(|e| e.to_string())?;
            let reach = m.equivalent_radius;
            mmflow_core::levelset::distance_cone(
                &set,
                &cfg.anisotropy,
                -reach,
                reach,
                cfg.margin,
            )
            .map_err(|e| e.to_string())
        }
    }
}

fn initial_radius(cfg: &FlowConfig) -> Option<(f64, [f64; 2])> {
    match &cfg.initial {
        InitialSpec::Disk { cx, cy, r } | InitialSpec::Cone { cx, cy, r, .. } => {
            Some((*r, [*cx, *cy]))
        }
        _ => None,
    }
}

pub fn run(cfg: &FlowConfig, out_dir: Option<&Path>) -> Result<RunOutcome, String> {
    let start = Instant::now();
    let mut report = Report::new();
    report.section(0, "run");
    report.kv(1, "mode", match cfg.mode {
        RunMode::Set => "set",
        RunMode::Function => "function",
        RunMode::Refinement => "refinement",
    });
    describe_config(cfg, &mut report);

    let mut outcome = match cfg.mode {
        RunMode::Set => run_set_mode(cfg, out_dir, report)?,
        RunMode::Function => run_function_mode(cfg, out_dir, report)?,
        RunMode::Refinement => run_refinement_mode(cfg, report)?,
    };

    if let Some(dir) = out_dir {
        if cfg.outputs.dump_weights {
            write_file(&dir.join("weights.csv"), cfg.perimeter.weights_csv().as_bytes())
                .map_err(|e| e.to_string())?;
        }
        let rendered = outcome.report.render(Some(start.elapsed().as_secs_f64()));
        write_file(&dir.join("report.txt"), rendered.as_bytes()).map_err(|e| e.to_string())?;
    }
    outcome.passed = outcome.report.all_passed();
    Ok(outcome)
}

fn describe_config(cfg: &FlowConfig, report: &mut Report) {
    report.section(1, "config");
    report.kv(2, "grid", format!("{}x{} dx={}", cfg.grid.nx, cfg.grid.ny, cfg.grid.dx));
    report.kv(2, "margin", cfg.margin);
    report.kv(2, "perimeter", format!("{:?}", cfg.perimeter.kind));
    report.kv(2, "anisotropy", format!("{:?} (c_psi {})", cfg.anisotropy.kind, cfg.anisotropy.c_psi));
    report.kv(2, "nonlinearity", format!("{:?} (a {}, b {})", cfg.nonlinearity.kind, cfg.nonlinearity.a, cfg.nonlinearity.b));
    report.kv(2, "forcing", format!("{:?}", cfg.forcing));
    report.kv(
        2,
        "scheme",
        format!(
            "h={} t_end={} levels={} choice={:?}",
            cfg.scheme.h, cfg.scheme.t_end, cfg.scheme.level_count, cfg.scheme.choice
        ),
    );
}

fn frame_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("frame_{k:04}.pgm"))
}

fn run_set_mode(
    cfg: &FlowConfig,
    out_dir: Option<&Path>,
    mut report: Report,
) -> Result<RunOutcome, String> {
    let e0 = build_initial_set(cfg)?;
    let models = StepModels {
        perimeter: &cfg.perimeter,
        nonlinearity: &cfg.nonlinearity,
        anisotropy: &cfg.anisotropy,
    };
    let states = evolve_set(&e0, Phase::BoundedSet, &models, &cfg.forcing, &cfg.scheme)
        .map_err(|e| e.to_string())?;
    let grid = cfg.grid;
    let dx = grid.dx;

    // optional instance dumps
    if let (Some(dir), Some(k)) = (out_dir, cfg.outputs.dump_graph_step) {
        if k < states.len() {
            let fk = step_forcing(&cfg.forcing, k, cfg.scheme.h);
            let se = build_step_energy(&states[k], Phase::BoundedSet, &models, fk, cfg.scheme.h)
                .map_err(|e| e.to_string())?;
            let csv = graph_csv(&se).map_err(|e| e.to_string())?;
            write_file(&dir.join(format!("graph_{k:04}.csv")), csv.as_bytes())
                .map_err(|e| e.to_string())?;
        }
    }
    if let (Some(dir), Some(k)) = (out_dir, cfg.outputs.dump_distance_step) {
        if k < states.len() && !states[k].is_empty() && !states[k].is_full() {
            let sd = signed_distance(&states[k], &cfg.anisotropy).map_err(|e| e.to_string())?;
            write_file(&dir.join(format!("distance_{k:04}.csv")), sd.to_csv().as_bytes())
                .map_err(|e| e.to_string())?;
        }
    }

    // radius curve
    let mut radius_series = Vec::new();
    let barrier_model = BarrierModel {
        perimeter: &cfg.perimeter,
        nonlinearity: &cfg.nonlinearity,
        forcing_bound: cfg.forcing.bound(),
        c_psi: cfg.anisotropy.c_psi,
    };
    let r0 = initial_radius(cfg);
    let mut worst_radius_err = 0.0f64;
    let mut worst_aniso = 1.0f64;
    let mut worst_barrier_gap = f64::NEG_INFINITY;
    if cfg.outputs.radius_curve {
        if let Some((r0, _)) = r0 {
            for (k, state) in states.iter().enumerate() {
                let t = k as f64 * cfg.scheme.h;
                let (measured, aniso) = match measure_radius(state) {
                    Ok(m) => (m.equivalent_radius, m.anisometry),
                    Err(_) => (0.0, 1.0),
                };
                let exact = exact_ball_radius(&cfg.nonlinearity, &cfg.forcing, r0, t)
                    .map_err(|e| e.to_string())?;
                let barrier = if cfg.checks.barrier {
                    barrier_radius(&barrier_model, r0, t).map_err(|e| e.to_string())?
                } else {
                    f64::NAN
                };
                radius_series.push((t, measured, exact, barrier));
                worst_radius_err = worst_radius_err.max((measured - exact).abs() / dx);
                worst_aniso = worst_aniso.max(aniso);
                if cfg.checks.barrier {
                    worst_barrier_gap = worst_barrier_gap.max((barrier - measured) / dx);
                }
            }
        }
    }

    // displacement series
    let mut displacements = Vec::new();
    for w in states.windows(2) {
        displacements.push(hausdorff_distance(&w[0], &w[1]));
    }

    // artifacts
    if let Some(dir) = out_dir {
        if cfg.outputs.frame_stride > 0 {
            for (k, s) in states.iter().enumerate() {
                if k % cfg.outputs.frame_stride == 0 || k + 1 == states.len() {
                    write_file(&frame_path(dir, k), &set_pgm(s)).map_err(|e| e.to_string())?;
                }
            }
        }
        if !radius_series.is_empty() {
            let mut csv = Csv::new(&["t", "r_measured", "r_exact", "r_barrier"]);
            for &(t, m, e, b) in &radius_series {
                csv.row(&[t, m, e, b]);
            }
            write_file(&dir.join("radius.csv"), &csv.to_bytes()).map_err(|e| e.to_string())?;
        }
        let mut csv = Csv::new(&["step", "hausdorff"]);
        for (k, d) in displacements.iter().enumerate() {
            csv.row(&[(k + 1) as f64, *d]);
        }
        write_file(&dir.join("displacement.csv"), &csv.to_bytes()).map_err(|e| e.to_string())?;
    }

    // checks
    report.section(0, "series");
    report.kv(1, "steps", states.len() - 1);
    report.kv(1, "final_cells", states.last().unwrap().count());
    if cfg.checks.exact_curve && !radius_series.is_empty() {
        report.check(
            "radius-vs-exact-cells",
            worst_radius_err,
            cfg.checks.radius_tolerance_cells,
            "max |equivalent radius - closed-form radius| over all steps, in cells",
        );
        if cfg.checks.anisometry_max.is_finite() {
            report.check(
                "anisometry",
                worst_aniso,
                cfg.checks.anisometry_max,
                "max boundary-radius ratio over all steps",
            );
        }
    }
    if cfg.checks.barrier && !radius_series.is_empty() {
        report.check(
            "barrier-containment-cells",
            worst_barrier_gap,
            cfg.checks.barrier_tolerance_cells,
            "max (barrier radius - measured radius) over output times, in cells",
        );
    }
    if cfg.checks.monotone_shrink {
        let monotone = states.windows(2).all(|w| w[1].is_subset_of(&w[0]));
        report.check_bool("monotone-shrink", monotone, "each state contained in the previous");
    }
    if cfg.checks.displacement_bound {
        let b = cfg.nonlinearity.b;
        if b.is_finite() {
            let bound = cfg.anisotropy.c_psi * b * cfg.scheme.h + 2.0 * dx;
            let worst = displacements.iter().cloned().fold(0.0f64, f64::max);
            report.check(
                "per-step-displacement",
                worst,
                bound,
                "max Hausdorff step displacement vs c_psi*b*h + 2dx",
            );
        } else {
            report.kv(1, "displacement-bound", "skipped (unbounded speed law)");
        }
    }

    // FD cross-check
    let mut fd_series = Vec::new();
    if cfg.checks.fd_crosscheck {
        if let Some((r0, center)) = r0 {
            let extent = 0.5 * (grid.nx.min(grid.ny) as f64) * dx;
            let u0 = LevelFunction::disk_cone(
                grid,
                center,
                r0,
                -(0.8 * extent - r0).max(0.2 * r0),
                r0,
                cfg.margin,
            )
            .map_err(|e| e.to_string())?;
            let times: Vec<f64> =
                (1..states.len()).map(|k| k as f64 * cfg.scheme.h).collect();
            let snaps = fd_reference_evolve(&u0, &cfg.nonlinearity, &cfg.forcing, &times)
                .map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            fd_series.push((0.0, 0.0));
            for (snap, state) in snaps.iter().zip(states.iter().skip(1)) {
                let fd_set = snap.superlevel(0.0);
                let d = hausdorff_distance(&fd_set, state) / dx;
                worst = worst.max(d);
                fd_series.push((snap.time, d));
            }
            report.check(
                "fd-hausdorff-cells",
                worst,
                cfg.checks.fd_tolerance_cells,
                "max Hausdorff distance between the variational set and the FD zero level",
            );
            if let Some(dir) = out_dir {
                let mut csv = Csv::new(&["t", "hausdorff_cells"]);
                for &(t, d) in &fd_series {
                    csv.row(&[t, d]);
                }
                write_file(&dir.join("fd_hausdorff.csv"), &csv.to_bytes())
                    .map_err(|e| e.to_string())?;
            }
        } else {
            report.kv(1, "fd-crosscheck", "skipped (needs a disk initial condition)");
        }
    }

    Ok(RunOutcome { report, passed: false, radius_series, fd_series, refinement_gaps: Vec::new() })
}

fn run_function_mode(
    cfg: &FlowConfig,
    out_dir: Option<&Path>,
    mut report: Report,
) -> Result<RunOutcome, String> {
    let u0 = build_initial_function(cfg)?;
    let models = StepModels {
        perimeter: &cfg.perimeter,
        nonlinearity: &cfg.nonlinearity,
        anisotropy: &cfg.anisotropy,
    };
    let record = evolve(&u0, &models, &cfg.forcing, &cfg.scheme).map_err(|e| e.to_string())?;

    if let Some(dir) = out_dir {
        if cfg.outputs.frame_stride > 0 {
            for (k, snap) in record.snapshots.iter().enumerate() {
                if k % cfg.outputs.frame_stride == 0 || k + 1 == record.snapshots.len() {
                    let (bytes, sidecar) = function_pgm(snap);
                    write_file(&frame_path(dir, k), &bytes).map_err(|e| e.to_string())?;
                    write_file(&dir.join(format!("frame_{k:04}.txt")), sidecar.as_bytes())
                        .map_err(|e| e.to_string())?;
                }
            }
        }
        let mut csv = Csv::new(&["step", "max_level_hausdorff"]);
        for (k, d) in record.per_step_displacement.iter().enumerate() {
            csv.row(&[(k + 1) as f64, *d]);
        }
        write_file(&dir.join("displacement.csv"), &csv.to_bytes()).map_err(|e| e.to_string())?;
    }

    report.section(0, "series");
    report.kv(1, "steps", record.snapshots.len() - 1);

    if cfg.checks.monotone_shrink {
        let mut ok = true;
        let mut prev = decompose(&record.snapshots[0], cfg.scheme.level_count)
            .map_err(|e| e.to_string())?;
        for snap in &record.snapshots[1..] {
            let cur = decompose(snap, cfg.scheme.level_count).map_err(|e| e.to_string())?;
            if !cur.sets.iter().zip(&prev.sets).all(|(a, b)| a.is_subset_of(b)) {
                ok = false;
            }
            prev = cur;
        }
        report.check_bool(
            "monotone-shrink",
            ok,
            "every superlevel chain nonincreasing over time",
        );
    }

    if cfg.checks.displacement_bound {
        let b = cfg.nonlinearity.b;
        if b.is_finite() {
            let bound = cfg.anisotropy.c_psi * b * cfg.scheme.h + 2.0 * cfg.grid.dx;
            let worst = record.per_step_displacement.iter().cloned().fold(0.0f64, f64::max);
            report.check(
                "per-step-displacement",
                worst,
                bound,
                "max per-level Hausdorff step displacement vs c_psi*b*h + 2dx",
            );
        }
    }

    if cfg.checks.commutation_steps > 0 {
        let steps = cfg.checks.commutation_steps.min(record.snapshots.len() - 1);
        let stack0 =
            decompose(&record.snapshots[0], cfg.scheme.level_count).map_err(|e| e.to_string())?;
        let sub_params = mmflow_core::SchemeParams::new(
            cfg.scheme.h,
            steps as f64 * cfg.scheme.h,
            cfg.scheme.level_count,
            cfg.scheme.margin,
            cfg.scheme.choice,
        )
        .map_err(|e| e.to_string())?;
        let mut mismatches = 0usize;
        for (i, level) in stack0.levels.iter().enumerate() {
            let states =
                evolve_set(&stack0.sets[i], Phase::BoundedSet, &models, &cfg.forcing, &sub_params)
                    .map_err(|e| e.to_string())?;
            for (k, state) in states.iter().enumerate() {
                if record.snapshots[k].superlevel(*level) != *state {
                    mismatches += 1;
                }
            }
        }
        report.check(
            "set-function-commutation",
            mismatches as f64,
            0.0,
            "levels*steps with the set evolution differing from the function superlevel",
        );
    }

    Ok(RunOutcome {
        report,
        passed: false,
        radius_series: Vec::new(),
        fd_series: Vec::new(),
        refinement_gaps: Vec::new(),
    })
}

fn run_refinement_mode(cfg: &FlowConfig, mut report: Report) -> Result<RunOutcome, String> {
    let u0 = build_initial_function(cfg)?;
    let models = StepModels {
        perimeter: &cfg.perimeter,
        nonlinearity: &cfg.nonlinearity,
        anisotropy: &cfg.anisotropy,
    };
    let gaps = h_refinement_study(
        &u0,
        &models,
        &cfg.forcing,
        &cfg.h_list,
        cfg.scheme.t_end,
        cfg.scheme.level_count,
        cfg.scheme.choice,
        cfg.scheme.margin,
    )
    .map_err(|e| e.to_string())?;
    report.section(0, "refinement");
    for &(h, gap) in &gaps {
        report.kv(1, &format!("gap_h_{h}"), crate::artifacts::fmt_f64(gap));
    }
    let worst_increase = gaps
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    report.check(
        "refinement-gaps-nonincreasing",
        worst_increase.max(0.0),
        1e-12,
        "max increase of the sup-norm gap to the finest run along decreasing h",
    );
    Ok(RunOutcome {
        report,
        passed: false,
        radius_series: Vec::new(),
        fd_series: Vec::new(),
        refinement_gaps: gaps,
    })
}

/// Run the FD reference on the config's disk and report the worst drift of
/// its zero-level equivalent radius from the initial radius, in cells.
pub fn fd_radius_drift(cfg: &FlowConfig, samples: usize) -> Result<f64, String> {
    let (r0, center) = initial_radius(cfg).ok_or("needs a disk initial condition")?;
    let grid = cfg.grid;
    let extent = 0.5 * (grid.nx.min(grid.ny) as f64) * grid.dx;
    let u0 = LevelFunction::disk_cone(
        grid,
        center,
        r0,
        -(0.8 * extent - r0).max(0.2 * r0),
        r0,
        cfg.margin,
    )
    .map_err(|e| e.to_string())?;
    let times: Vec<f64> =
        (1..=samples).map(|k| k as f64 * cfg.scheme.t_end / samples as f64).collect();
    let snaps = fd_reference_evolve(&u0, &cfg.nonlinearity, &cfg.forcing, &times)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for snap in &snaps {
        let m = measure_radius(&snap.superlevel(0.0)).map_err(|e| e.to_string())?;
        worst = worst.max((m.equivalent_radius - r0).abs() / grid.dx);
    }
    Ok(worst)
}
