//! Experiment presets shipped as JSON files under `presets/`.

use std::path::Path;

use super::config::RunConfig;
use crate::error::{Error, Result};

/// Prefix that selects a built-in preset instead of a file path.
pub const PRESET_PREFIX: &str = "preset:";

const PRESETS: &[(&str, &str)] = &[
    ("siso_example", include_str!("../../presets/siso_example.json")),
    (
        "siso_example_forgetting",
        include_str!("../../presets/siso_example_forgetting.json"),
    ),
    ("siso_multisine", include_str!("../../presets/siso_multisine.json")),
    ("mimo_example_rich", include_str!("../../presets/mimo_example_rich.json")),
    ("mimo_example_nonrich", include_str!("../../presets/mimo_example_nonrich.json")),
    ("mimo_stable_rich", include_str!("../../presets/mimo_stable_rich.json")),
    ("mimo_stable_nonrich", include_str!("../../presets/mimo_stable_nonrich.json")),
];

/// Preset names in a fixed order.
pub fn list() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Raw JSON text of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn get(name: &str) -> Result<RunConfig> {
    let text = source(name).ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    RunConfig::from_json(text)
}

/// Loads `preset:<name>` or a JSON file path.
pub fn load(spec: &str) -> Result<RunConfig> {
    match spec.strip_prefix(PRESET_PREFIX) {
        Some(name) => get(name),
        None => RunConfig::from_path(Path::new(spec)),
    }
}
