//! Deterministic on-disk artifacts: binary PGM frames and CSV curves.

use std::io::Write;
use std::path::Path;

use mmflow_core::{CellSet, Grid, LevelFunction};

/// Fixed 17-significant-digit rendering; guarantees byte-identical reruns and
/// round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)
}

fn pgm_bytes(grid: &Grid, data: impl Fn(usize, usize) -> u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.len() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", grid.nx, grid.ny).as_bytes());
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            out.push(data(ix, iy));
        }
    }
    out
}

/// Binary PGM of a set: 255 inside, 0 outside.
pub fn set_pgm(set: &CellSet) -> Vec<u8> {
    pgm_bytes(set.grid(), |ix, iy| if set.contains(ix as i64, iy as i64) { 255 } else { 0 })
}

/// Binary PGM of a level function, rescaled linearly from [floor, ceil] to
/// [0, 255]. The sidecar records the scaling.
pub fn function_pgm(u: &LevelFunction) -> (Vec<u8>, String) {
    let grid = *u.grid();
    let span = u.ceil_value - u.floor_value;
    let bytes = pgm_bytes(&grid, |ix, iy| {
        let v = (u.value(ix, iy) - u.floor_value) / span;
        (v * 255.0).round().clamp(0.0, 255.0) as u8
    });
    let sidecar = format!(
        "floor_value: {}\nceil_value: {}\n",
        fmt_f64(u.floor_value),
        fmt_f64(u.ceil_value)
    );
    (bytes, sidecar)
}

/// Parse a binary (P5) PGM into a set of cells at or above a threshold.
pub fn read_pgm_as_set(bytes: &[u8], grid_hint: Grid, threshold: u8) -> Result<CellSet, String> {
    let mut header_fields = Vec::new();
    let mut pos = 0usize;
    // P5, width, height, maxval, then a single whitespace byte before data
    while header_fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        header_fields.push(&bytes[start..pos]);
    }
    pos += 1;
    if header_fields.len() != 4 || header_fields[0] != b"P5" {
        return Err("not a binary P5 PGM".into());
    }
    let parse = |field: &[u8]| -> Result<usize, String> {
        std::str::from_utf8(field)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| "bad PGM header field".to_string())
    };
    let w = parse(header_fields[1])?;
    let h = parse(header_fields[2])?;
    if w != grid_hint.nx || h != grid_hint.ny {
        return Err(format!(
            "PGM is {w}x{h} but the grid is {}x{}",
            grid_hint.nx, grid_hint.ny
        ));
    }
    if bytes.len() < pos + w * h {
        return Err("PGM data truncated".into());
    }
    Ok(CellSet::from_fn(grid_hint, |ix, iy| bytes[pos + iy * w + ix] >= threshold))
}

/// A CSV table with a header row.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out.into_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_roundtrip() {
        let grid = Grid::new(12, 9, 0.5, [0.0, 0.0]).unwrap();
        let set = CellSet::disk(grid, grid.world(6, 4), 1.4);
        let bytes = set_pgm(&set);
        let back = read_pgm_as_set(&bytes, grid, 128).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn csv_is_stable() {
        let mut csv = Csv::new(&["t", "r"]);
        csv.row(&[0.1, 0.35]);
        let a = csv.to_bytes();
        let mut csv2 = Csv::new(&["t", "r"]);
        csv2.row(&[0.1, 0.35]);
        assert_eq!(a, csv2.to_bytes());
        assert!(String::from_utf8(a).unwrap().starts_with("t,r\n"));
    }
}
