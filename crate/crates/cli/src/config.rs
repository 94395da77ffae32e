use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    CatWigner,
    QbmDecoherence,
    TwoSlit,
    HistoriesCheck,
    TomographyPipeline,
    Recurrence,
    MeasurementChain,
    Halo,
}

impl Scenario {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("realistic", include_str!("../../../presets/realistic.json")),
    ("fast-test", include_str!("../../../presets/fast-test.json")),
    ("qbm-scaling", include_str!("../../../presets/qbm-scaling.json")),
    ("cat-wigner", include_str!("../../../presets/cat-wigner.json")),
    ("two-slit", include_str!("../../../presets/two-slit.json")),
    ("histories-check", include_str!("../../../presets/histories-check.json")),
    ("tomography-pipeline", include_str!("../../../presets/tomography-pipeline.json")),
    ("recurrence", include_str!("../../../presets/recurrence.json")),
    ("measurement-chain", include_str!("../../../presets/measurement-chain.json")),
    ("halo", include_str!("../../../presets/halo.json")),
];

pub enum ConfigSource {
    File(PathBuf),
    Preset(String),
    Defaults,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<Scenario>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: Map<String, Value>,
}

#[derive(Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub params: Map<String, Value>,
}

fn load(source: &ConfigSource) -> Result<ConfigFile, CliError> {
    let (label, text) = match source {
        ConfigSource::Defaults => return Ok(ConfigFile { scenario: None, seed: None, output_dir: None, params: Map::new() }),
        ConfigSource::Preset(name) => {
            let text = PRESETS.iter().find(|(n, _)| n == name).map(|(_, t)| t.to_string()).ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Validation(format!("unknown preset {name:?} (available: {})", names.join(", ")))
            })?;
            (format!("preset {name}"), text)
        }
        ConfigSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
            (path.display().to_string(), text)
        }
    };
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{label}: {e}")))
}

/// Sets `params[a][b]…` for a dotted key; the value is parsed as JSON when
/// possible and kept as a string otherwise.
fn set_override(params: &mut Map<String, Value>, key: &str, raw: &str) -> Result<(), CliError> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut target = params;
    for part in parts {
        let entry = target.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        target = entry
            .as_object_mut()
            .ok_or_else(|| CliError::Validation(format!("--{key}: {part} is not an object")))?;
    }
    target.insert(last.to_string(), value);
    Ok(())
}

pub fn resolve(source: &ConfigSource, scenario: Option<Scenario>, overrides: &[(String, String)]) -> Result<Resolved, CliError> {
    let file = load(source)?;
    let scenario = match (scenario, file.scenario) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Validation(format!("config is for scenario {}, not {}", b.name(), a.name())));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::Validation("config does not name a scenario; pass --scenario".into())),
    };
    let mut params = file.params;
    for (key, raw) in overrides {
        set_override(&mut params, key, raw)?;
    }
    Ok(Resolved { scenario, seed: file.seed, output_dir: file.output_dir, params })
}

/// Seed from `DECOLAB_SEED`, or 0 when unset.
pub fn env_seed() -> Result<u64, CliError> {
    match std::env::var("DECOLAB_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Validation(format!("DECOLAB_SEED={s:?} is not an integer"))),
        Err(_) => Ok(0),
    }
}
