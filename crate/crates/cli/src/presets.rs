//! The preset registry: the exact configurations the verification suite runs,
//! embedded from versioned files.

use crate::config::{parse_config, RunConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("mincut-exhaustive", include_str!("../presets/mincut-exhaustive.cfg")),
    ("shrink-disk-identity", include_str!("../presets/shrink-disk-identity.cfg")),
    (
        "shrink-disk-identity-resolved",
        include_str!("../presets/shrink-disk-identity-resolved.cfg"),
    ),
    ("shrink-disk-power", include_str!("../presets/shrink-disk-power.cfg")),
    ("clamp-speed-bound", include_str!("../presets/clamp-speed-bound.cfg")),
    ("purely-shrinking", include_str!("../presets/purely-shrinking.cfg")),
    ("comparison-principle", include_str!("../presets/comparison-principle.cfg")),
    ("operator-laws", include_str!("../presets/operator-laws.cfg")),
    ("level-set-commutation", include_str!("../presets/level-set-commutation.cfg")),
    ("forcing-equilibrium", include_str!("../presets/forcing-equilibrium.cfg")),
    ("fractional-barrier", include_str!("../presets/fractional-barrier.cfg")),
    ("h-refinement", include_str!("../presets/h-refinement.cfg")),
    ("h-refinement-resolved", include_str!("../presets/h-refinement-resolved.cfg")),
    ("perimeter-properties", include_str!("../presets/perimeter-properties.cfg")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<RunConfig, String> {
    let text = preset_text(name).ok_or_else(|| {
        format!("unknown preset `{name}`; known: {}", preset_names().join(", "))
    })?;
    parse_config(text).map_err(|errs| {
        let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        format!("preset `{name}` failed to parse: {}", msgs.join("; "))
    })
}
