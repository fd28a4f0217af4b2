//! Run-configuration parsing: an INI-style key/value format with sections.
//!
//! `parse_config` returns either a validated configuration or the full list
//! of problems, each naming the offending `section.key`.

use std::collections::BTreeMap;
use std::fmt;

use mmflow_core::{
    Anisotropy, CroftonNeighborhood, Forcing, Grid, MinimizerChoice, Nonlinearity,
    PerimeterModel, SchemeParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Set,
    Function,
    Refinement,
}

#[derive(Debug, Clone)]
pub enum InitialSpec {
    /// Disk in world coordinates.
    Disk { cx: f64, cy: f64, r: f64 },
    /// Axis-aligned rectangle in world coordinates.
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// Union of disks.
    Union { disks: Vec<(f64, f64, f64)> },
    /// Signed-distance cone of a disk (function modes).
    Cone { cx: f64, cy: f64, r: f64, floor: f64, ceil: f64 },
    /// Raster PGM (P5): cells with value >= threshold are inside.
    Raster { path: String, threshold: u8 },
}

#[derive(Debug, Clone)]
pub struct OutputSpec {
    pub frame_stride: usize,
    pub radius_curve: bool,
    pub dump_weights: bool,
    pub dump_distance_step: Option<usize>,
    pub dump_graph_step: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct CheckSpec {
    pub exact_curve: bool,
    pub radius_tolerance_cells: f64,
    pub anisometry_max: f64,
    pub barrier: bool,
    pub barrier_tolerance_cells: f64,
    pub fd_crosscheck: bool,
    pub fd_tolerance_cells: f64,
    pub displacement_bound: bool,
    pub monotone_shrink: bool,
    pub commutation_steps: usize,
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub grid: Grid,
    pub margin: usize,
    pub perimeter: PerimeterModel,
    pub anisotropy: Anisotropy,
    pub nonlinearity: Nonlinearity,
    pub forcing: Forcing,
    pub scheme: SchemeParams,
    pub mode: RunMode,
    pub h_list: Vec<f64>,
    pub initial: InitialSpec,
    pub outputs: OutputSpec,
    pub checks: CheckSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    /// minimize_step against exhaustive enumeration on tiny grids.
    Exhaustive,
    /// comparison principles across nested pairs and phases.
    Comparison,
    /// monotonicity, constant commutation, shift equivariance of the lift.
    OperatorLaws,
    /// submodularity and translation invariance of both perimeter models.
    PerimeterProps,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub kind: SuiteKind,
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub enum RunConfig {
    Flow(Box<FlowConfig>),
    Suite(SuiteConfig),
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn lex(text: &str) -> Result<Sections, Vec<ConfigError>> {
    let mut sections: Sections = BTreeMap::new();
    let mut current = String::new();
    let mut errors = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                if current.is_empty() {
                    errors.push(ConfigError {
                        key: format!("line {}", lineno + 1),
                        message: "key/value before any [section]".into(),
                    });
                } else {
                    sections
                        .entry(current.clone())
                        .or_default()
                        .insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            None => errors.push(ConfigError {
                key: format!("line {}", lineno + 1),
                message: format!("expected `key = value`, got `{line}`"),
            }),
        }
    }
    if errors.is_empty() {
        Ok(sections)
    } else {
        Err(errors)
    }
}

/// Typed accessor that records consumption so unknown keys can be reported.
struct Reader<'a> {
    sections: &'a Sections,
    used: BTreeMap<String, Vec<String>>,
    errors: Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn new(sections: &'a Sections) -> Reader<'a> {
        Reader { sections, used: BTreeMap::new(), errors: Vec::new() }
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<&'a str> {
        self.used.entry(section.to_string()).or_default().push(key.to_string());
        self.sections.get(section).and_then(|s| s.get(key)).map(|s| s.as_str())
    }

    fn err(&mut self, section: &str, key: &str, message: impl Into<String>) {
        self.errors.push(ConfigError { key: format!("{section}.{key}"), message: message.into() });
    }

    fn f64_opt(&mut self, section: &str, key: &str) -> Option<f64> {
        let raw = self.raw(section, key)?;
        match raw.parse::<f64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(section, key, format!("not a number: `{raw}`"));
                None
            }
        }
    }

    fn f64_req(&mut self, section: &str, key: &str) -> Option<f64> {
        if self.sections.get(section).map(|s| s.contains_key(key)) != Some(true) {
            self.err(section, key, "missing required value");
            return None;
        }
        self.f64_opt(section, key)
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> f64 {
        self.f64_opt(section, key).unwrap_or(default)
    }

    fn usize_or(&mut self, section: &str, key: &str, default: usize) -> usize {
        match self.raw(section, key) {
            None => default,
            Some(raw) => match raw.parse::<usize>() {
                Ok(v) => v,
                Err(_) => {
                    self.err(section, key, format!("not a nonnegative integer: `{raw}`"));
                    default
                }
            },
        }
    }

    fn u64_or(&mut self, section: &str, key: &str, default: u64) -> u64 {
        match self.raw(section, key) {
            None => default,
            Some(raw) => match raw.parse::<u64>() {
                Ok(v) => v,
                Err(_) => {
                    self.err(section, key, format!("not an integer: `{raw}`"));
                    default
                }
            },
        }
    }

    fn bool_or(&mut self, section: &str, key: &str, default: bool) -> bool {
        match self.raw(section, key) {
            None => default,
            Some("true") => true,
            Some("false") => false,
            Some(raw) => {
                let msg = format!("expected true/false, got `{raw}`");
                self.err(section, key, msg);
                default
            }
        }
    }

    fn string_or(&mut self, section: &str, key: &str, default: &str) -> String {
        self.raw(section, key).unwrap_or(default).to_string()
    }

    fn f64_list(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let raw = self.raw(section, key)?;
        let mut out = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.err(section, key, format!("bad list entry `{}`", part.trim()));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn finish(mut self, allowed: &[(&str, &[&str])]) -> Vec<ConfigError> {
        for (section, keys) in self.sections {
            match allowed.iter().find(|(s, _)| s == section) {
                None => self.errors.push(ConfigError {
                    key: section.clone(),
                    message: "unknown section".into(),
                }),
                Some((_, allowed_keys)) => {
                    for key in keys.keys() {
                        if !allowed_keys.contains(&key.as_str()) {
                            self.errors.push(ConfigError {
                                key: format!("{section}.{key}"),
                                message: "unknown key".into(),
                            });
                        }
                    }
                }
            }
        }
        self.errors
    }
}

const FLOW_SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["nx", "ny", "dx", "origin_x", "origin_y", "margin"]),
    ("perimeter", &["kind", "s", "cutoff"]),
    ("anisotropy", &["kind", "wx", "wy"]),
    ("nonlinearity", &["kind", "m", "gamma", "table"]),
    ("forcing", &["kind", "value", "times", "values"]),
    ("scheme", &["h", "t_end", "levels", "minimizer", "mode", "h_list"]),
    ("initial", &["kind", "cx", "cy", "r", "x0", "y0", "x1", "y1", "disks", "path", "threshold", "floor", "ceil"]),
    (
        "outputs",
        &["frame_stride", "radius_curve", "dump_weights", "dump_distance_step", "dump_graph_step"],
    ),
    (
        "checks",
        &[
            "exact_curve",
            "radius_tolerance_cells",
            "anisometry_max",
            "barrier",
            "barrier_tolerance_cells",
            "fd_crosscheck",
            "fd_tolerance_cells",
            "displacement_bound",
            "monotone_shrink",
            "commutation_steps",
        ],
    ),
];

const SUITE_SECTIONS: &[(&str, &[&str])] = &[("suite", &["kind", "seed", "count"])];

pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let sections = lex(text)?;
    if sections.contains_key("suite") {
        return parse_suite(&sections);
    }
    parse_flow(&sections)
}

fn parse_suite(sections: &Sections) -> Result<RunConfig, Vec<ConfigError>> {
    let mut r = Reader::new(sections);
    let kind = match r.string_or("suite", "kind", "").as_str() {
        "exhaustive" => Some(SuiteKind::Exhaustive),
        "comparison" => Some(SuiteKind::Comparison),
        "operator-laws" => Some(SuiteKind::OperatorLaws),
        "perimeter-props" => Some(SuiteKind::PerimeterProps),
        other => {
            r.err("suite", "kind", format!("unknown suite kind `{other}`"));
            None
        }
    };
    let seed = r.u64_or("suite", "seed", 0xC0FFEE);
    let count = r.usize_or("suite", "count", 0);
    let errors = r.finish(SUITE_SECTIONS);
    match (kind, errors.is_empty()) {
        (Some(kind), true) => Ok(RunConfig::Suite(SuiteConfig { kind, seed, count })),
        (_, _) => Err(if errors.is_empty() {
            vec![ConfigError { key: "suite.kind".into(), message: "invalid".into() }]
        } else {
            errors
        }),
    }
}

fn parse_flow(sections: &Sections) -> Result<RunConfig, Vec<ConfigError>> {
    let mut r = Reader::new(sections);
    for required in ["grid", "scheme", "initial"] {
        if !sections.contains_key(required) {
            r.errors.push(ConfigError {
                key: required.to_string(),
                message: "missing required section".into(),
            });
        }
    }

    let nx = r.usize_or("grid", "nx", 0);
    let ny = r.usize_or("grid", "ny", 0);
    let dx = r.f64_req("grid", "dx").unwrap_or(0.0);
    let ox = r.f64_or("grid", "origin_x", 0.0);
    let oy = r.f64_or("grid", "origin_y", 0.0);
    let margin = r.usize_or("grid", "margin", 8);
    let grid = match Grid::new(nx, ny, dx, [ox, oy]) {
        Ok(g) => Some(g),
        Err(e) => {
            r.err("grid", "nx", e.to_string());
            None
        }
    };

    let perimeter = match r.string_or("perimeter", "kind", "crofton16").as_str() {
        "crofton8" => PerimeterModel::crofton(CroftonNeighborhood::N8, dx).ok(),
        "crofton16" => PerimeterModel::crofton(CroftonNeighborhood::N16, dx).ok(),
        "fractional" => {
            let s = r.f64_req("perimeter", "s").unwrap_or(0.5);
            let cutoff = r.usize_or("perimeter", "cutoff", 8);
            match PerimeterModel::fractional(s, cutoff, dx) {
                Ok(j) => Some(j),
                Err(e) => {
                    r.err("perimeter", "s", e.to_string());
                    None
                }
            }
        }
        other => {
            r.err("perimeter", "kind", format!("unknown perimeter kind `{other}`"));
            None
        }
    };

    let anisotropy = match r.string_or("anisotropy", "kind", "euclidean").as_str() {
        "euclidean" => Some(Anisotropy::euclidean()),
        "maxnorm" => Some(Anisotropy::max_norm()),
        "weighted" => {
            let wx = r.f64_req("anisotropy", "wx").unwrap_or(1.0);
            let wy = r.f64_req("anisotropy", "wy").unwrap_or(1.0);
            match Anisotropy::weighted_euclidean(wx, wy) {
                Ok(a) => Some(a),
                Err(e) => {
                    r.err("anisotropy", "wx", e.to_string());
                    None
                }
            }
        }
        other => {
            r.err("anisotropy", "kind", format!("unknown anisotropy kind `{other}`"));
            None
        }
    };

    let nonlinearity = match r.string_or("nonlinearity", "kind", "identity").as_str() {
        "identity" => Some(Nonlinearity::identity()),
        "clamp" => match r.f64_req("nonlinearity", "m") {
            Some(m) => match Nonlinearity::clamp(m) {
                Ok(n) => Some(n),
                Err(e) => {
                    r.err("nonlinearity", "m", e.to_string());
                    None
                }
            },
            None => None,
        },
        "power" => match r.f64_req("nonlinearity", "gamma") {
            Some(g) => match Nonlinearity::power(g) {
                Ok(n) => Some(n),
                Err(e) => {
                    r.err("nonlinearity", "gamma", e.to_string());
                    None
                }
            },
            None => None,
        },
        "negative_part" => Some(Nonlinearity::negative_part()),
        "piecewise" => {
            let raw = r.raw("nonlinearity", "table").map(str::to_string);
            match raw {
                None => {
                    r.err("nonlinearity", "table", "missing required value");
                    None
                }
                Some(raw) => {
                    let mut table = Vec::new();
                    let mut ok = true;
                    for part in raw.split(',') {
                        match part.trim().split_once(':').map(|(a, b)| {
                            (a.trim().parse::<f64>(), b.trim().parse::<f64>())
                        }) {
                            Some((Ok(x), Ok(y))) => table.push((x, y)),
                            _ => {
                                r.err(
                                    "nonlinearity",
                                    "table",
                                    format!("bad entry `{}` (want x:y)", part.trim()),
                                );
                                ok = false;
                            }
                        }
                    }
                    if ok {
                        match Nonlinearity::piecewise(table) {
                            Ok(n) => Some(n),
                            Err(e) => {
                                r.err("nonlinearity", "table", e.to_string());
                                None
                            }
                        }
                    } else {
                        None
                    }
                }
            }
        }
        other => {
            r.err("nonlinearity", "kind", format!("unknown nonlinearity kind `{other}`"));
            None
        }
    };

    let forcing = match r.string_or("forcing", "kind", "zero").as_str() {
        "zero" => Some(Forcing::Zero),
        "constant" => r.f64_req("forcing", "value").map(Forcing::Constant),
        "curve" => {
            let times = r.f64_list("forcing", "times");
            let values = r.f64_list("forcing", "values");
            match (times, values) {
                (Some(t), Some(v)) => match Forcing::sampled(t, v) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        r.err("forcing", "times", e.to_string());
                        None
                    }
                },
                _ => {
                    r.err("forcing", "times", "curve forcing needs times and values");
                    None
                }
            }
        }
        other => {
            r.err("forcing", "kind", format!("unknown forcing kind `{other}`"));
            None
        }
    };

    let h = r.f64_req("scheme", "h").unwrap_or(0.0);
    let t_end = r.f64_req("scheme", "t_end").unwrap_or(0.0);
    let levels = r.usize_or("scheme", "levels", 64);
    let minimizer = match r.string_or("scheme", "minimizer", "minimal").as_str() {
        "minimal" => Some(MinimizerChoice::Minimal),
        "maximal" => Some(MinimizerChoice::Maximal),
        other => {
            r.err("scheme", "minimizer", format!("expected minimal|maximal, got `{other}`"));
            None
        }
    };
    let mode = match r.string_or("scheme", "mode", "").as_str() {
        "set" => Some(RunMode::Set),
        "function" => Some(RunMode::Function),
        "refinement" => Some(RunMode::Refinement),
        "" => None, // derived from the initial condition below
        other => {
            r.err("scheme", "mode", format!("expected set|function|refinement, got `{other}`"));
            None
        }
    };
    let h_list = r.f64_list("scheme", "h_list").unwrap_or_default();

    let scheme = match SchemeParams::new(
        h,
        t_end,
        levels,
        margin,
        minimizer.unwrap_or(MinimizerChoice::Minimal),
    ) {
        Ok(p) => Some(p),
        Err(e) => {
            r.err("scheme", "h", e.to_string());
            None
        }
    };

    let initial = match r.string_or("initial", "kind", "").as_str() {
        "disk" => {
            let cx = r.f64_req("initial", "cx").unwrap_or(0.0);
            let cy = r.f64_req("initial", "cy").unwrap_or(0.0);
            let rad = r.f64_req("initial", "r").unwrap_or(0.0);
            Some(InitialSpec::Disk { cx, cy, r: rad })
        }
        "rectangle" => {
            let x0 = r.f64_req("initial", "x0").unwrap_or(0.0);
            let y0 = r.f64_req("initial", "y0").unwrap_or(0.0);
            let x1 = r.f64_req("initial", "x1").unwrap_or(0.0);
            let y1 = r.f64_req("initial", "y1").unwrap_or(0.0);
            Some(InitialSpec::Rectangle { x0, y0, x1, y1 })
        }
        "union" => {
            let raw = r.raw("initial", "disks").map(str::to_string);
            match raw {
                None => {
                    r.err("initial", "disks", "missing required value");
                    None
                }
                Some(raw) => {
                    let mut disks = Vec::new();
                    let mut ok = true;
                    for part in raw.split(',') {
                        let fields: Vec<_> = part.trim().split(':').collect();
                        let parsed: Option<Vec<f64>> =
                            fields.iter().map(|f| f.trim().parse().ok()).collect();
                        match parsed {
                            Some(v) if v.len() == 3 => disks.push((v[0], v[1], v[2])),
                            _ => {
                                r.err(
                                    "initial",
                                    "disks",
                                    format!("bad entry `{}` (want cx:cy:r)", part.trim()),
                                );
                                ok = false;
                            }
                        }
                    }
                    if ok {
                        Some(InitialSpec::Union { disks })
                    } else {
                        None
                    }
                }
            }
        }
        "cone" => {
            let cx = r.f64_req("initial", "cx").unwrap_or(0.0);
            let cy = r.f64_req("initial", "cy").unwrap_or(0.0);
            let rad = r.f64_req("initial", "r").unwrap_or(0.0);
            let floor = r.f64_or("initial", "floor", -rad / 2.0);
            let ceil = r.f64_or("initial", "ceil", rad);
            Some(InitialSpec::Cone { cx, cy, r: rad, floor, ceil })
        }
        "raster" => {
            let path = r.raw("initial", "path").map(str::to_string);
            let threshold = r.usize_or("initial", "threshold", 128).min(255) as u8;
            match path {
                Some(p) => Some(InitialSpec::Raster { path: p, threshold }),
                None => {
                    r.err("initial", "path", "missing required value");
                    None
                }
            }
        }
        "" => {
            r.err("initial", "kind", "missing required value");
            None
        }
        other => {
            r.err("initial", "kind", format!("unknown initial kind `{other}`"));
            None
        }
    };

    let mode = mode.unwrap_or(match initial {
        Some(InitialSpec::Cone { .. }) | Some(InitialSpec::Raster { .. }) => RunMode::Function,
        _ => RunMode::Set,
    });
    if mode == RunMode::Refinement {
        if h_list.len() < 3 {
            r.err("scheme", "h_list", "refinement mode needs a decreasing list of >= 3 step sizes");
        }
    } else if !h_list.is_empty() {
        r.err("scheme", "h_list", "h_list is only valid in refinement mode");
    }

    let outputs = OutputSpec {
        frame_stride: r.usize_or("outputs", "frame_stride", 0),
        radius_curve: r.bool_or("outputs", "radius_curve", true),
        dump_weights: r.bool_or("outputs", "dump_weights", true),
        dump_distance_step: match r.raw("outputs", "dump_distance_step") {
            None => None,
            Some(raw) => raw.parse::<usize>().ok(),
        },
        dump_graph_step: match r.raw("outputs", "dump_graph_step") {
            None => None,
            Some(raw) => raw.parse::<usize>().ok(),
        },
    };

    let checks = CheckSpec {
        exact_curve: r.bool_or("checks", "exact_curve", false),
        radius_tolerance_cells: r.f64_or("checks", "radius_tolerance_cells", 3.0),
        anisometry_max: r.f64_or("checks", "anisometry_max", f64::INFINITY),
        barrier: r.bool_or("checks", "barrier", false),
        barrier_tolerance_cells: r.f64_or("checks", "barrier_tolerance_cells", 2.0),
        fd_crosscheck: r.bool_or("checks", "fd_crosscheck", false),
        fd_tolerance_cells: r.f64_or("checks", "fd_tolerance_cells", 4.0),
        displacement_bound: r.bool_or("checks", "displacement_bound", false),
        monotone_shrink: r.bool_or("checks", "monotone_shrink", false),
        commutation_steps: r.usize_or("checks", "commutation_steps", 0),
    };

    // margin consistency at parse time: the band must absorb b*h growth
    if let (Some(g), Some(n), Some(p)) = (&grid, &nonlinearity, &scheme) {
        if let Err(e) = p.check_confinement(g, n) {
            r.err("scheme", "margin", e.to_string());
        }
    }

    let errors = r.finish(FLOW_SECTIONS);
    if !errors.is_empty() {
        return Err(errors);
    }
    let (grid, perimeter, anisotropy, nonlinearity, forcing, scheme, initial) = (
        grid.unwrap(),
        perimeter.unwrap(),
        anisotropy.unwrap(),
        nonlinearity.unwrap(),
        forcing.unwrap(),
        scheme.unwrap(),
        initial.unwrap(),
    );
    Ok(RunConfig::Flow(Box::new(FlowConfig {
        grid,
        margin,
        perimeter,
        anisotropy,
        nonlinearity,
        forcing,
        scheme,
        mode,
        h_list,
        initial,
        outputs,
        checks,
    })))
}
