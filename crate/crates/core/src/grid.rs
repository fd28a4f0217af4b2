//! The finite lattice and subsets of its cells.
//!
//! Every set in the scheme lives here as one bit per cell. Cells are addressed
//! by `(ix, iy)` with `ix` the fast (row-major) coordinate; the world position
//! of cell `(i, j)` is `origin + (i*dx, j*dx)`. Displacements between cells are
//! always formed from the integer offset scaled by `dx`, never by subtracting
//! world coordinates, so geometric quantities are bit-identical under lattice
//! shifts.

use crate::error::{Result, SchemeError};

/// A uniform 2D cell lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, origin: [f64; 2]) -> Result<Grid> {
        if nx < 4 || ny < 4 {
            return Err(SchemeError::InvalidParameter(format!(
                "grid.nx/ny must be >= 4, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(SchemeError::InvalidParameter(format!("grid.dx must be > 0, got {dx}")));
        }
        Ok(Grid { nx, ny, dx, origin })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.nx && (iy as usize) < self.ny
    }

    /// World coordinate of a cell center.
    #[inline]
    pub fn world(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.origin[0] + ix as f64 * self.dx, self.origin[1] + iy as f64 * self.dx]
    }

    /// Whether the cell lies in the outer band of the given width.
    #[inline]
    pub fn in_margin(&self, ix: usize, iy: usize, margin: usize) -> bool {
        ix < margin || iy < margin || ix >= self.nx - margin || iy >= self.ny - margin
    }
}

/// A subset of grid cells, stored as a bitmap.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    grid: Grid,
    words: Vec<u64>,
    count: usize,
}

impl CellSet {
    pub fn empty(grid: Grid) -> CellSet {
        let nwords = (grid.len() + 63) / 64;
        CellSet { grid, words: vec![0; nwords], count: 0 }
    }

    pub fn full(grid: Grid) -> CellSet {
        let mut s = CellSet::empty(grid);
        for w in s.words.iter_mut() {
            *w = !0u64;
        }
        s.mask_tail();
        s.count = grid.len();
        s
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> bool) -> CellSet {
        let mut s = CellSet::empty(grid);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if f(ix, iy) {
                    s.insert(ix, iy);
                }
            }
        }
        s
    }

    /// Digitized disk: cells whose centers lie within `r` (world units) of `center`.
    pub fn disk(grid: Grid, center: [f64; 2], r: f64) -> CellSet {
        CellSet::from_fn(grid, |ix, iy| {
            let p = grid.world(ix, iy);
            let dxv = p[0] - center[0];
            let dyv = p[1] - center[1];
            dxv * dxv + dyv * dyv <= r * r
        })
    }

    fn mask_tail(&mut self) {
        let n = self.grid.len();
        let rem = n % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn contains_idx(&self, idx: usize) -> bool {
        (self.words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    /// Membership test tolerant of out-of-grid coordinates (they are never members).
    #[inline]
    pub fn contains(&self, ix: i64, iy: i64) -> bool {
        self.grid.in_bounds(ix, iy) && self.contains_idx(self.grid.index(ix as usize, iy as usize))
    }

    pub fn insert(&mut self, ix: usize, iy: usize) {
        let idx = self.grid.index(ix, iy);
        let w = &mut self.words[idx >> 6];
        let bit = 1u64 << (idx & 63);
        if *w & bit == 0 {
            *w |= bit;
            self.count += 1;
        }
    }

    pub fn remove(&mut self, ix: usize, iy: usize) {
        let idx = self.grid.index(ix, iy);
        let w = &mut self.words[idx >> 6];
        let bit = 1u64 << (idx & 63);
        if *w & bit != 0 {
            *w &= !bit;
            self.count -= 1;
        }
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.count == self.grid.len()
    }

    pub fn complement(&self) -> CellSet {
        let mut s = self.clone();
        for w in s.words.iter_mut() {
            *w = !*w;
        }
        s.mask_tail();
        s.count = self.grid.len() - self.count;
        s
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        debug_assert_eq!(self.grid, other.grid);
        let mut s = self.clone();
        for (w, o) in s.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
        s.recount();
        s
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        debug_assert_eq!(self.grid, other.grid);
        let mut s = self.clone();
        for (w, o) in s.words.iter_mut().zip(&other.words) {
            *w &= o;
        }
        s.recount();
        s
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        debug_assert_eq!(self.grid, other.grid);
        let mut s = self.clone();
        for (w, o) in s.words.iter_mut().zip(&other.words) {
            *w &= !o;
        }
        s.recount();
        s
    }

    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        debug_assert_eq!(self.grid, other.grid);
        self.words.iter().zip(&other.words).all(|(w, o)| w & !o == 0)
    }

    fn recount(&mut self) {
        self.count = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    /// Iterate member cells in row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let grid = self.grid;
        (0..grid.len()).filter(move |&i| self.contains_idx(i)).map(move |i| grid.coords(i))
    }

    /// Cells of the set with at least one 8-neighbor outside the set
    /// (out-of-grid does not count as outside; the grid edge is not an interface).
    pub fn boundary_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (ix, iy) in self.iter_cells() {
            let (x, y) = (ix as i64, iy as i64);
            let mut on_boundary = false;
            for oy in -1..=1i64 {
                for ox in -1..=1i64 {
                    if ox == 0 && oy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x + ox, y + oy);
                    if self.grid.in_bounds(nx, ny) && !self.contains(nx, ny) {
                        on_boundary = true;
                    }
                }
            }
            if on_boundary {
                out.push((ix, iy));
            }
        }
        out
    }

    /// Whether any member cell lies in the outer margin band.
    pub fn touches_margin(&self, margin: usize) -> bool {
        self.iter_cells().any(|(ix, iy)| self.grid.in_margin(ix, iy, margin))
    }

    /// Translate by a lattice vector; cells shifted off the grid are dropped.
    pub fn shifted(&self, v: (i64, i64)) -> CellSet {
        let mut s = CellSet::empty(self.grid);
        for (ix, iy) in self.iter_cells() {
            let nx = ix as i64 + v.0;
            let ny = iy as i64 + v.1;
            if self.grid.in_bounds(nx, ny) {
                s.insert(nx as usize, ny as usize);
            }
        }
        s
    }

    /// Centroid of the member cell centers, in world coordinates.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        if self.is_empty() {
            return None;
        }
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (ix, iy) in self.iter_cells() {
            sx += ix as f64;
            sy += iy as f64;
        }
        let n = self.count as f64;
        Some([
            self.grid.origin[0] + sx / n * self.grid.dx,
            self.grid.origin[1] + sy / n * self.grid.dx,
        ])
    }

    /// Cheap content fingerprint (FNV-1a over the bitmap), used as an identity tag.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for &w in &self.words {
            h ^= w;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= (self.grid.nx as u64) << 32 | self.grid.ny as u64;
        h.wrapping_mul(0x100000001b3)
    }
}

/// Which of the two phase classes a stored set describes. `BoundedComplement`
/// phases store the (compact) complement; the actual set is everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    BoundedSet,
    BoundedComplement,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(8, 6, 0.5, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn grid_rejects_bad_params() {
        assert!(Grid::new(3, 8, 0.5, [0.0, 0.0]).is_err());
        assert!(Grid::new(8, 8, 0.0, [0.0, 0.0]).is_err());
        assert!(Grid::new(8, 8, -1.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn set_ops_and_counters() {
        let g = grid();
        let mut a = CellSet::empty(g);
        a.insert(1, 1);
        a.insert(2, 1);
        assert_eq!(a.count(), 2);
        a.insert(2, 1);
        assert_eq!(a.count(), 2);
        let b = a.complement();
        assert_eq!(b.count(), g.len() - 2);
        assert!(a.intersection(&b).is_empty());
        assert!(a.union(&b).is_full());
        assert!(a.is_subset_of(&a.union(&b)));
        a.remove(1, 1);
        assert_eq!(a.count(), 1);
    }

    #[test]
    fn boundary_and_margin() {
        let g = grid();
        let s = CellSet::from_fn(g, |ix, iy| (2..5).contains(&ix) && (2..4).contains(&iy));
        let b = s.boundary_cells();
        // a 3x2 block is all boundary
        assert_eq!(b.len(), 6);
        assert!(!s.touches_margin(2));
        assert!(s.touches_margin(3));
    }

    #[test]
    fn shift_roundtrip() {
        let g = grid();
        let s = CellSet::from_fn(g, |ix, iy| ix == 3 && iy == 2);
        let t = s.shifted((2, 1)).shifted((-2, -1));
        assert_eq!(s, t);
    }
}
