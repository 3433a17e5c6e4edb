//! TOML run configuration. Every field is optional; command-line flags
//! take precedence over the file.

use std::path::{Path, PathBuf};

use ipsdual::kernel::KernelSpec;
use serde::Deserialize;

use crate::CliError;

/// A rational written either as an integer or as a `"num/den"` string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RationalText {
    Int(i64),
    Text(String),
}

impl RationalText {
    pub fn text(&self) -> String {
        match self {
            RationalText::Int(n) => n.to_string(),
            RationalText::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemSection,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub tables: TablesSection,
    #[serde(default, rename = "verify-duality")]
    pub verify_duality: DualitySection,
    #[serde(default, rename = "verify-intertwining")]
    pub verify_intertwining: IntertwiningSection,
    #[serde(default, rename = "verify-continuum")]
    pub verify_continuum: ContinuumSection,
    #[serde(default, rename = "stationary-check")]
    pub stationary: StationarySection,
    #[serde(default)]
    pub characterize: CharacterizeSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default, rename = "scaling-check")]
    pub scaling: ScalingSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: Option<String>,
    pub alpha: Option<RationalText>,
    pub gamma: Option<RationalText>,
    pub sigma: Option<RationalText>,
    pub beta: Option<RationalText>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub name: Option<String>,
    pub a: Option<RationalText>,
    pub b: Option<RationalText>,
    pub lambda: Option<RationalText>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesSection {
    pub kmax: Option<usize>,
    pub nmax: Option<usize>,
    pub z: Option<Vec<RationalText>>,
    pub v: Option<Vec<RationalText>>,
    pub lambda: Option<Vec<RationalText>>,
    pub order: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualitySection {
    pub mode: Option<String>,
    pub max_dual_total: Option<usize>,
    pub max_entry: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntertwiningSection {
    pub max_total: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumSection {
    pub c: Option<RationalText>,
    pub order: Option<u32>,
    pub family: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    pub lambda: Option<RationalText>,
    pub max_total: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterizeSection {
    pub mode: Option<String>,
    pub u: Option<Vec<RationalText>>,
    pub v: Option<Vec<RationalText>>,
    pub cap: Option<usize>,
    pub size: Option<usize>,
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub t: Option<f64>,
    pub eta: Option<Vec<usize>>,
    pub xi: Option<Vec<usize>>,
    pub z: Option<Vec<RationalText>>,
    pub samples: Option<usize>,
    pub dt: Option<f64>,
    pub record_every: Option<f64>,
    pub z_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub gamma: Option<RationalText>,
    pub exponents: Option<Vec<u32>>,
    pub point: Option<Vec<RationalText>>,
    pub ns: Option<Vec<u64>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
