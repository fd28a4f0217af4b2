//! Metrication accuracy of the Crofton perimeters against exact geometry.

use mmflow_core::grid::{CellSet, Grid};
use mmflow_core::perimeter::{CroftonNeighborhood, PerimeterModel};

/// Perimeter energy per unit length of a digitized straight interface with
/// primitive integer normal (p, q). Cut pairs of a rational-direction
/// interface tile periodically along the tangent with period p^2 + q^2 in the
/// integer tangent coordinate q*ix - p*iy, so counting pairs whose inside cell
/// falls in an integer number of periods is free of window end effects.
fn directional_length_ratio(j: &PerimeterModel, n: usize, p: i64, q: i64) -> f64 {
    let grid = Grid::new(n, n, 1.0, [0.0, 0.0]).unwrap();
    let c = (n / 2) as i64;
    let set = CellSet::from_fn(grid, |ix, iy| p * (ix as i64 - c) + q * (iy as i64 - c) <= 0);
    let period = p * p + q * q;
    let periods = (n as i64 / 2 - 8) / period; // keep the window away from grid edges
    assert!(periods >= 4);
    let tau_lo = -periods / 2 * period;
    let tau_hi = tau_lo + periods * period;
    let mut energy = 0.0;
    for &((ox, oy), w) in j.weights() {
        for (ix, iy) in set.iter_cells() {
            let tau = q * (ix as i64 - c) - p * (iy as i64 - c);
            if tau < tau_lo || tau >= tau_hi {
                continue;
            }
            let jx = ix as i64 + ox;
            let jy = iy as i64 + oy;
            if grid.in_bounds(jx, jy) && !set.contains(jx, jy) {
                energy += w;
            }
        }
    }
    let length = periods as f64 * ((period as f64).sqrt());
    energy / length
}

#[test]
fn crofton16_exact_in_stencil_directions() {
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, 1.0).unwrap();
    for (p, q) in [(1i64, 0i64), (0, 1), (1, 1), (1, 2), (2, 1), (2, -1)] {
        let ratio = directional_length_ratio(&j, 240, p, q);
        assert!(
            (ratio - 1.0).abs() <= 0.01,
            "direction ({p},{q}): ratio {ratio} off by more than 1%"
        );
    }
}

#[test]
fn crofton8_within_three_percent_in_stencil_directions() {
    let j = PerimeterModel::crofton(CroftonNeighborhood::N8, 1.0).unwrap();
    for (p, q) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
        let ratio = directional_length_ratio(&j, 240, p, q);
        assert!(
            (ratio - 1.0).abs() <= 0.03,
            "direction ({p},{q}): ratio {ratio} off by more than 3%"
        );
    }
}

#[test]
fn rectangle_perimeter_within_one_percent() {
    // corners cost O(1) energy each, so the rectangle must be large enough
    // for the 1% asymptotic tolerance
    let grid = Grid::new(400, 300, 0.02, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let (a, b) = (360usize, 252usize);
    let set = CellSet::from_fn(grid, |ix, iy| {
        (20..20 + a).contains(&ix) && (24..24 + b).contains(&iy)
    });
    let exact = 2.0 * (a as f64 + b as f64) * grid.dx;
    let e = j.energy(&set);
    assert!(
        (e - exact).abs() / exact <= 0.01,
        "rectangle: energy {e}, exact {exact}, rel err {}",
        (e - exact).abs() / exact
    );
}

#[test]
fn disk_perimeter_within_1p5_percent() {
    let grid = Grid::new(100, 100, 0.01, [0.0, 0.0]).unwrap();
    let j = PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap();
    let r_cells = 40.0;
    let set = CellSet::disk(grid, grid.world(50, 50), r_cells * grid.dx);
    let exact = 2.0 * std::f64::consts::PI * r_cells * grid.dx;
    let e = j.energy(&set);
    assert!(
        (e - exact).abs() / exact <= 0.015,
        "disk: energy {e}, exact {exact}, rel err {}",
        (e - exact).abs() / exact
    );
}

#[test]
fn translation_invariance_exact() {
    let grid = Grid::new(48, 48, 0.5, [0.0, 0.0]).unwrap();
    for j in [
        PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap(),
        PerimeterModel::fractional(0.5, 4, grid.dx).unwrap(),
    ] {
        let set = CellSet::disk(grid, grid.world(16, 16), 5.2 * grid.dx);
        let base = j.energy(&set);
        for v in [(1i64, 0i64), (3, 7), (11, -2), (0, 9)] {
            let shifted = set.shifted(v);
            assert_eq!(shifted.count(), set.count(), "shift {v:?} fell off the grid");
            assert_eq!(j.energy(&shifted), base, "shift {v:?} changed the energy");
        }
    }
}

#[test]
fn complement_symmetry_exact() {
    let grid = Grid::new(40, 40, 0.25, [0.0, 0.0]).unwrap();
    for j in [
        PerimeterModel::crofton(CroftonNeighborhood::N16, grid.dx).unwrap(),
        PerimeterModel::fractional(0.35, 5, grid.dx).unwrap(),
    ] {
        let set = CellSet::disk(grid, grid.world(20, 18), 6.3 * grid.dx);
        assert_eq!(j.energy(&set), j.energy(&set.complement()));
    }
}
