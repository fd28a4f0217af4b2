//! The machine-readable run report: a plain-text tree of `key: value` lines
//! with two-space indentation. Every acceptance-relevant number carries its
//! tolerance and a PASS/FAIL verdict.

use crate::artifacts::fmt_f64;

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(usize, String)>,
    checks: Vec<CheckLine>,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn kv(&mut self, depth: usize, key: &str, value: impl std::fmt::Display) {
        self.lines.push((depth, format!("{key}: {value}")));
    }

    pub fn section(&mut self, depth: usize, key: &str) {
        self.lines.push((depth, format!("{key}:")));
    }

    /// Record a check: `worst <= tolerance` must hold for a PASS.
    pub fn check(&mut self, name: &str, worst: f64, tolerance: f64, note: &str) -> bool {
        let passed = worst <= tolerance;
        self.checks.push(CheckLine {
            name: name.to_string(),
            worst,
            tolerance,
            passed,
            note: note.to_string(),
        });
        passed
    }

    /// Record a boolean check (tolerance zero, worst 0 or 1).
    pub fn check_bool(&mut self, name: &str, ok: bool, note: &str) -> bool {
        self.checks.push(CheckLine {
            name: name.to_string(),
            worst: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
            note: note.to_string(),
        });
        ok
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn checks(&self) -> &[CheckLine] {
        &self.checks
    }

    /// Render the tree; `timing_seconds` lands in a clearly separated subtree
    /// excluded from the byte-determinism contract.
    pub fn render(&self, timing_seconds: Option<f64>) -> String {
        let mut out = String::new();
        for (depth, line) in &self.lines {
            for _ in 0..*depth {
                out.push_str("  ");
            }
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("checks:\n");
        for c in &self.checks {
            out.push_str(&format!("  {}:\n", c.name));
            out.push_str(&format!("    worst: {}\n", fmt_f64(c.worst)));
            out.push_str(&format!("    tolerance: {}\n", fmt_f64(c.tolerance)));
            if !c.note.is_empty() {
                out.push_str(&format!("    note: {}\n", c.note));
            }
            out.push_str(&format!(
                "    verdict: {}\n",
                if c.passed { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "verdict: {}\n",
            if self.all_passed() { "PASS" } else { "FAIL" }
        ));
        if let Some(t) = timing_seconds {
            out.push_str("timing:\n");
            out.push_str(&format!("  wall_seconds: {t:.3}\n"));
        }
        out
    }
}
