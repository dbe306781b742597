use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationRecord, CalibrationSpec};
use crate::config::RunConfig;
use crate::error::CliError;

/// Configuration plus the calibration grid and, once searched, its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetFile {
    pub name: String,
    pub description: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<CalibrationRecord>,
}

impl PresetFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let file: PresetFile = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
        file.config.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preset serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Open scheme, resonant drive.
    Fig2,
    /// Open scheme, detuned intermediate level.
    Fig3,
    /// Closed scheme with engineered loss channel.
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2, Preset::Fig3, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    fn source(self) -> &'static str {
        match self {
            Preset::Fig2 => include_str!("../presets/fig2.json"),
            Preset::Fig3 => include_str!("../presets/fig3.json"),
            Preset::Fig4 => include_str!("../presets/fig4.json"),
        }
    }

    pub fn file(self) -> PresetFile {
        PresetFile::from_json(self.source()).expect("bundled presets are valid")
    }

    pub fn config(self) -> RunConfig {
        self.file().config
    }
}
