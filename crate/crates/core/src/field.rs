//! Grid scalar fields whose superlevel sets drive the level-set scheme.

use crate::error::{Result, SchemeError};
use crate::grid::{CellSet, Grid};

/// A scalar field on the grid, constant (= `floor_value`) on the outer margin
/// band and taking values in `[floor_value, ceil_value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFunction {
    grid: Grid,
    values: Vec<f64>,
    pub floor_value: f64,
    pub ceil_value: f64,
}

impl LevelFunction {
    pub fn new(
        grid: Grid,
        values: Vec<f64>,
        floor_value: f64,
        ceil_value: f64,
        margin: usize,
    ) -> Result<LevelFunction> {
        if values.len() != grid.len() {
            return Err(SchemeError::InvalidParameter(format!(
                "level function has {} values for a {}-cell grid",
                values.len(),
                grid.len()
            )));
        }
        if !(ceil_value > floor_value) {
            return Err(SchemeError::InvalidParameter(
                "level function needs ceil_value > floor_value".into(),
            ));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !(v >= floor_value && v <= ceil_value) {
                return Err(SchemeError::InvalidParameter(format!(
                    "level function value {v} at cell {idx} outside [{floor_value}, {ceil_value}]"
                )));
            }
            let (ix, iy) = grid.coords(idx);
            if grid.in_margin(ix, iy, margin) && v != floor_value {
                return Err(SchemeError::InvalidParameter(format!(
                    "level function must equal floor_value on the margin band (cell {ix},{iy})"
                )));
            }
        }
        Ok(LevelFunction { grid, values, floor_value, ceil_value })
    }

    /// Build from a closure, clamping to `[floor, ceil]`; the margin band is
    /// forced to `floor`.
    pub fn from_fn(
        grid: Grid,
        floor_value: f64,
        ceil_value: f64,
        margin: usize,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<LevelFunction> {
        let mut values = vec![floor_value; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if grid.in_margin(ix, iy, margin) {
                    continue;
                }
                let p = grid.world(ix, iy);
                values[grid.index(ix, iy)] = f(p[0], p[1]).clamp(floor_value, ceil_value);
            }
        }
        LevelFunction::new(grid, values, floor_value, ceil_value, margin)
    }

    /// The capped signed-distance cone of a disk: `-hypot(x-c) + r`, so the
    /// zero superlevel set is the disk.
    pub fn disk_cone(
        grid: Grid,
        center: [f64; 2],
        r: f64,
        floor_value: f64,
        ceil_value: f64,
        margin: usize,
    ) -> Result<LevelFunction> {
        LevelFunction::from_fn(grid, floor_value, ceil_value, margin, |x, y| {
            r - (x - center[0]).hypot(y - center[1])
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// The superlevel set {u >= s}.
    pub fn superlevel(&self, s: f64) -> CellSet {
        CellSet::from_fn(self.grid, |ix, iy| self.values[self.grid.index(ix, iy)] >= s)
    }

    /// Cellwise sup-norm distance to another field on the same grid.
    pub fn sup_distance(&self, other: &LevelFunction) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Shift by a lattice vector; cells shifted in from outside take `floor_value`.
    pub fn shifted(&self, v: (i64, i64)) -> LevelFunction {
        let mut values = vec![self.floor_value; self.grid.len()];
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let sx = ix as i64 - v.0;
                let sy = iy as i64 - v.1;
                if self.grid.in_bounds(sx, sy) {
                    values[self.grid.index(ix, iy)] =
                        self.values[self.grid.index(sx as usize, sy as usize)];
                }
            }
        }
        LevelFunction {
            grid: self.grid,
            values,
            floor_value: self.floor_value,
            ceil_value: self.ceil_value,
        }
    }

    /// Add a constant, shifting floor and ceil along with the values.
    pub fn plus_constant(&self, c: f64) -> LevelFunction {
        LevelFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
            floor_value: self.floor_value + c,
            ceil_value: self.ceil_value + c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_range_and_margin() {
        let g = Grid::new(8, 8, 0.25, [0.0, 0.0]).unwrap();
        let mut vals = vec![0.0; g.len()];
        vals[g.index(4, 4)] = 1.0;
        assert!(LevelFunction::new(g, vals.clone(), 0.0, 1.0, 2).is_ok());
        vals[g.index(0, 0)] = 0.5;
        assert!(LevelFunction::new(g, vals.clone(), 0.0, 1.0, 2).is_err());
        vals[g.index(0, 0)] = 0.0;
        vals[g.index(4, 4)] = 2.0;
        assert!(LevelFunction::new(g, vals, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn superlevels_nest() {
        let g = Grid::new(16, 16, 0.1, [0.0, 0.0]).unwrap();
        let u = LevelFunction::disk_cone(g, [0.8, 0.8], 0.4, -0.2, 0.4, 2).unwrap();
        let a = u.superlevel(0.1);
        let b = u.superlevel(0.0);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_empty());
    }
}
