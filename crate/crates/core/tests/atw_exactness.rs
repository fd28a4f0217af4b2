//! The exact-solver contract: minimize_step against exhaustive enumeration,
//! the comparison principles, duality, translation equivariance, truncation.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mmflow_core::anisotropy::Anisotropy;
use mmflow_core::atw::{
    atw_step, atw_step_both, build_step_energy, minimize_step, truncation_sequence, StepEnergy,
    StepModels, CAP_SCALE,
};
use mmflow_core::grid::{CellSet, Grid};
use mmflow_core::nonlinearity::Nonlinearity;
use mmflow_core::params::MinimizerChoice;
use mmflow_core::perimeter::{CroftonNeighborhood, PerimeterModel};
use mmflow_core::Phase::{BoundedComplement, BoundedSet};

/// Exhaustive minimizer structure over all subsets honoring forced cells,
/// via Gray-code incremental energy updates. Returns (min int energy,
/// intersection of argmins, union of argmins, min f64 energy).
fn enumerate_minimizers(se: &StepEnergy) -> (i64, CellSet, CellSet, f64) {
    let grid = se.grid;
    let n = grid.len();
    assert!(n <= 20, "enumeration oracle limited to 2^20 subsets");
    let weights = se.perimeter.weights();
    let qw: Vec<i64> =
        weights.iter().map(|&(_, w)| (w * grid.dx * CAP_SCALE).round() as i64).collect();
    // per-cell incident totals and clamped integer unaries (the quantized
    // problem statement; the minimization path is what differs from the solver)
    let mut q_unary = vec![0i64; n];
    let mut forced = vec![0i8; n];
    let w_total: i64 = qw.iter().sum();
    for idx in 0..n {
        let (ix, iy) = grid.coords(idx);
        let mut w_local = 0i64;
        for (k, &((ox, oy), _)) in weights.iter().enumerate() {
            if grid.in_bounds(ix as i64 + ox, iy as i64 + oy) {
                w_local += qw[k];
            }
        }
        let u = se.unary[idx];
        let clamp = (w_total + (1 << 12)) as f64;
        let q = (u * CAP_SCALE).clamp(-clamp, clamp).round() as i64;
        q_unary[idx] = q;
        if u == f64::NEG_INFINITY {
            forced[idx] = 1;
        } else if u == f64::INFINITY {
            forced[idx] = -1;
        }
        let _ = w_local;
    }
    let free: Vec<usize> = (0..n).filter(|&i| forced[i] == 0).collect();
    let base: u32 = (0..n).filter(|&i| forced[i] == 1).map(|i| 1u32 << i).sum();

    // neighbor lists with integer and float weights
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
    let energy_of = |mask: u32| -> (i64, f64) {
        let mut ei = 0i64;
        let mut ef = 0.0f64;
        for idx in 0..n {
            if mask >> idx & 1 == 1 {
                ei += q_unary[idx];
                if se.unary[idx].is_finite() {
                    ef += se.unary[idx];
                }
                for &(j, qwk, wf) in &nbrs[idx] {
                    if mask >> j & 1 == 0 {
                        ei += qwk;
                        ef += wf;
                    }
                }
            }
        }
        (ei, ef)
    };

    let mut mask = base;
    let (mut ei, mut ef) = energy_of(mask);
    let mut best_i = ei;
    let mut best_f = ef;
    let mut inter = mask;
    let mut union = mask;
    let total = 1u64 << free.len();
    for k in 1..total {
        let flip_free = k.trailing_zeros() as usize;
        let c = free[flip_free];
        let joined = mask >> c & 1 == 0;
        let sign: i64 = if joined { 1 } else { -1 };
        ei += sign * q_unary[c];
        if se.unary[c].is_finite() {
            ef += sign as f64 * se.unary[c];
        }
        // pairwise deltas: flipping c toggles the cut state of (c,j); the
        // symmetric table entry (j,c) is handled by the same neighbor list
        for &(j, qwk, wf) in &nbrs[c] {
            let j_in = mask >> j & 1 == 1;
            let x_c_old = !joined;
            let d = ((x_c_old == j_in) as i64) - ((x_c_old != j_in) as i64);
            ei += d * qwk;
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
    let to_set = |m: u32| {
        CellSet::from_fn(grid, |ix, iy| m >> grid.index(ix, iy) & 1 == 1)
    };
    (best_i, to_set(inter), to_set(union), best_f)
}

fn random_step_energy(grid: Grid, rng: &mut StdRng, with_forced: bool) -> StepEnergy {
    let j = PerimeterModel::crofton(CroftonNeighborhood::N8, grid.dx).unwrap();
    let unary: Vec<f64> = (0..grid.len())
        .map(|_| {
            if with_forced && rng.random_bool(0.1) {
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
    StepEnergy::from_unary(grid, j, unary).unwrap()
}

#[test]
fn exhaustive_oracle_agreement() {
    let mut rng = StdRng::seed_from_u64(0xA7);
    for trial in 0..60 {
        let grid = if trial % 3 == 0 {
            Grid::new(4, 5, 1.0, [0.0, 0.0]).unwrap()
        } else {
            Grid::new(4, 4, 0.5, [0.0, 0.0]).unwrap()
        };
        let se = random_step_energy(grid, &mut rng, trial % 2 == 1);
        let res = match minimize_step(&se) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let (_, inter, union, best_f) = enumerate_minimizers(&se);
        assert_eq!(res.minimal, inter, "trial {trial}: minimal != intersection of argmins");
        assert_eq!(res.maximal, union, "trial {trial}: maximal != union of argmins");
        assert!(
            (res.energy - best_f).abs() <= 1e-9,
            "trial {trial}: energy {} vs brute force {best_f}",
            res.energy
        );
        assert!((se.evaluate(&res.maximal) - res.energy).abs() <= 1e-9);
        assert!(res.minimal.is_subset_of(&res.maximal));
    }
}

fn random_blob(grid: Grid, rng: &mut StdRng, margin: usize) -> CellSet {
    let cx = rng.random_range(margin + 4..grid.nx - margin - 4);
    let cy = rng.random_range(margin + 4..grid.ny - margin - 4);
    let r = rng.random_range(2.0..5.0);
    let mut set = CellSet::disk(grid, grid.world(cx, cy), r * grid.dx);
    for _ in 0..rng.random_range(0..20) {
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
    // sometimes add a second component
    if rng.random_bool(0.4) {
        let extra = random_blob(grid, rng, margin);
        big = big.union(&extra);
    }
    big
}

#[test]
fn comparison_principle_preserves_inclusion() {
    let grid = Grid::new(40, 40, 0.25, [0.0, 0.0]).unwrap();
    let margin = 3usize;
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let mut rng = StdRng::seed_from_u64(0xBEEF);
    let kinds = [
        Nonlinearity::identity(),
        Nonlinearity::clamp(2.0).unwrap(),
        Nonlinearity::power(1.0 / 3.0).unwrap(),
    ];
    for n in &kinds {
        let models = StepModels { perimeter: &j, nonlinearity: n, anisotropy: &a };
        for trial in 0..25 {
            let e1 = random_blob(grid, &mut rng, margin);
            let e2 = grow(&e1, &mut rng, margin);
            assert!(e1.is_subset_of(&e2));
            let fk = rng.random_range(-0.5..0.5);
            let h = 0.02;
            let r1 = atw_step_both(&e1, BoundedSet, &models, fk, h, 2).unwrap();
            let r2 = atw_step_both(&e2, BoundedSet, &models, fk, h, 2).unwrap();
            assert!(
                r1.minimal.is_subset_of(&r2.minimal),
                "minimal inclusion failed, kind {:?} trial {trial}",
                n.kind
            );
            assert!(
                r1.maximal.is_subset_of(&r2.maximal),
                "maximal inclusion failed, kind {:?} trial {trial}",
                n.kind
            );
        }
    }
}

#[test]
fn dissipation_comparison_orders_minimizers() {
    // g1(s) = s versus g2 with g2 >= g1 pointwise: g2(s) = 2s above 0, s/2 below.
    // G2 is the piecewise-linear inverse: slope 2 below zero, slope 1/2 above.
    let g2_nonlin = Nonlinearity::piecewise(vec![(-4.0, -8.0), (0.0, 0.0), (8.0, 4.0)]).unwrap();
    let g1_nonlin = Nonlinearity::identity();
    let grid = Grid::new(32, 32, 0.25, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let mut rng = StdRng::seed_from_u64(0xD1);
    for _ in 0..20 {
        let e = random_blob(grid, &mut rng, 3);
        let h = 0.05;
        let m1 = StepModels { perimeter: &j, nonlinearity: &g1_nonlin, anisotropy: &a };
        let m2 = StepModels { perimeter: &j, nonlinearity: &g2_nonlin, anisotropy: &a };
        let r1 = atw_step_both(&e, BoundedSet, &m1, 0.0, h, 2).unwrap();
        let r2 = atw_step_both(&e, BoundedSet, &m2, 0.0, h, 2).unwrap();
        assert!(r2.minimal.is_subset_of(&r1.minimal));
        assert!(r2.maximal.is_subset_of(&r1.maximal));
    }
}

#[test]
fn bounded_vs_unbounded_comparison() {
    // compact E1 inside an unbounded E2 (stored as its compact complement K2,
    // disjoint from E1): T E1 stays inside T E2, i.e. misses the new K2.
    let grid = Grid::new(36, 36, 0.25, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let mut rng = StdRng::seed_from_u64(0xC0);
    for n in [Nonlinearity::identity(), Nonlinearity::clamp(1.5).unwrap()] {
        let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
        for _ in 0..15 {
            let e1 = CellSet::disk(
                grid,
                grid.world(rng.random_range(8..14), rng.random_range(8..14)),
                rng.random_range(1.5..3.5) * grid.dx,
            );
            let k2 = CellSet::disk(
                grid,
                grid.world(rng.random_range(22..28), rng.random_range(22..28)),
                rng.random_range(1.5..4.0) * grid.dx,
            );
            if !e1.intersection(&k2).is_empty() {
                continue;
            }
            let h = 0.02;
            let fk = rng.random_range(-0.3..0.3);
            for choice in [MinimizerChoice::Minimal, MinimizerChoice::Maximal] {
                let t1 = atw_step(&e1, BoundedSet, &models, fk, h, choice, 2).unwrap();
                let k2_new =
                    atw_step(&k2, BoundedComplement, &models, fk, h, choice, 2).unwrap();
                assert!(
                    t1.intersection(&k2_new).is_empty(),
                    "bounded result leaked into the complement phase hole"
                );
            }
        }
    }
}

#[test]
fn translation_equivariance_is_bitwise() {
    let grid = Grid::new(40, 40, 0.2, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let n = Nonlinearity::identity();
    let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
    let mut rng = StdRng::seed_from_u64(0xE4);
    for _ in 0..10 {
        let e = random_blob(grid, &mut rng, 8);
        let v = (rng.random_range(-3..4), rng.random_range(-3..4));
        let shifted = e.shifted(v);
        if shifted.count() != e.count() {
            continue;
        }
        let h = 0.03;
        let r = atw_step(&e, BoundedSet, &models, 0.2, h, MinimizerChoice::Minimal, 2).unwrap();
        let rs =
            atw_step(&shifted, BoundedSet, &models, 0.2, h, MinimizerChoice::Minimal, 2).unwrap();
        assert_eq!(r.shifted(v), rs);
    }
}

#[test]
fn atw_step_equals_public_composition() {
    let grid = Grid::new(28, 28, 0.2, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    for n in [Nonlinearity::identity(), Nonlinearity::clamp(2.0).unwrap()] {
        let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
        let e = CellSet::disk(grid, grid.world(14, 14), 6.3 * grid.dx);
        let h = 0.04;
        let fk = 0.1;
        let se = build_step_energy(&e, BoundedSet, &models, fk, h).unwrap();
        let direct = minimize_step(&se).unwrap();
        let banded = atw_step_both(&e, BoundedSet, &models, fk, h, 2).unwrap();
        assert_eq!(direct.minimal, banded.minimal);
        assert_eq!(direct.maximal, banded.maximal);
        assert!((direct.energy - banded.energy).abs() <= 1e-9);
    }
}

#[test]
fn negative_part_is_purely_shrinking() {
    let grid = Grid::new(32, 32, 0.25, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let n = Nonlinearity::negative_part();
    let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
    let mut rng = StdRng::seed_from_u64(0xF2);
    let mut e = random_blob(grid, &mut rng, 3);
    for _ in 0..10 {
        let next = atw_step(&e, BoundedSet, &models, 0.0, 0.05, MinimizerChoice::Minimal, 2)
            .unwrap();
        assert!(next.is_subset_of(&e), "negative-part step grew the set");
        e = next;
        if e.is_empty() {
            break;
        }
    }
}

#[test]
fn truncation_chain_is_monotone_and_converges() {
    let grid = Grid::new(28, 28, 0.25, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let n = Nonlinearity::identity();
    let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
    let e = CellSet::disk(grid, grid.world(14, 14), 5.4 * grid.dx);
    let h = 0.05;
    let fk = 0.0;
    let levels = [0.5, 2.0, 8.0, 1e4, 1e9];
    let chain = truncation_sequence(&e, &models, fk, h, &levels).unwrap();
    for w in chain.windows(2) {
        assert!(w[0].is_subset_of(&w[1]), "truncation chain not nested");
    }
    let full = atw_step_both(&e, BoundedSet, &models, fk, h, 2).unwrap();
    assert_eq!(*chain.last().unwrap(), full.minimal);
    // beyond max|sd|/h the truncation is inactive: last two entries agree
    assert_eq!(chain[3], chain[4]);
    // clamp kinds reject the chain (a finite)
    let nc = Nonlinearity::clamp(1.0).unwrap();
    let mc = StepModels { perimeter: &j, nonlinearity: &nc, anisotropy: &a };
    assert!(truncation_sequence(&e, &mc, fk, h, &levels).is_err());
}

#[test]
fn complement_disk_hole_shrinks_like_a_disk() {
    // the hole's boundary has curvature -1/r seen from the unbounded phase, so
    // the hole shrinks by the same law as a disk; one step moves it inward
    let grid = Grid::new(48, 48, 0.1, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let a = Anisotropy::euclidean();
    let n = Nonlinearity::identity();
    let models = StepModels { perimeter: &j, nonlinearity: &n, anisotropy: &a };
    let hole = CellSet::disk(grid, grid.world(24, 24), 12.0 * grid.dx);
    let h = 0.05;
    let new_hole =
        atw_step(&hole, BoundedComplement, &models, 0.0, h, MinimizerChoice::Minimal, 2).unwrap();
    assert!(new_hole.is_subset_of(&hole));
    assert!(new_hole.count() < hole.count());
    assert!(!new_hole.is_empty());
}
