use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rfs_core::geometry::{self, EnsembleGeometry};
use rfs_core::{AtomRates, IntegratorSettings, PulseSchedule, SchemeConfig, SimulationConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mcwf,
    Master,
}

/// Replacements for the decay rates of |e> derived from the scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_eg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_es: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryMode {
    /// Every pair shifted by `blockade_factor * w_max`.
    Uniform { blockade_factor: f64 },
    /// Random positions in a cube, one configuration per atom number drawn
    /// from `seed + N`. Shifts above `shift_cap_factor * w_max` are clamped.
    Sampled {
        box_side: f64,
        min_separation: f64,
        c6: f64,
        shift_cap_factor: f64,
        seed: u64,
    },
}

/// A complete, serializable description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: SchemeConfig,
    pub gamma_re: f64,
    pub gamma_r: f64,
    #[serde(default)]
    pub rate_overrides: RateOverrides,
    pub schedule: PulseSchedule,
    pub geometry: GeometryMode,
    /// Initial atom numbers to simulate.
    pub atoms: Vec<usize>,
    pub trajectories: usize,
    pub base_seed: u64,
    pub mode: Mode,
    /// Number of output intervals over the protocol.
    pub output_intervals: usize,
    pub mean_atoms: f64,
    pub pruning: bool,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        // Summaries and preset files wrap the configuration.
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") => {
                map.remove("config").expect("checked")
            }
            v => v,
        };
        let config: RunConfig = serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: String| Err(CliError::Config(format!("at `{field}`: {why}")));
        if self.atoms.is_empty() {
            return bad("atoms", "at least one atom number required".into());
        }
        if self.atoms.contains(&0) {
            return bad("atoms", "atom numbers must be >= 1".into());
        }
        if self.trajectories == 0 && self.mode == Mode::Mcwf {
            return bad("trajectories", "must be >= 1".into());
        }
        if self.output_intervals == 0 {
            return bad("output_intervals", "must be >= 1".into());
        }
        if self.mean_atoms.is_nan() || self.mean_atoms <= 0.0 {
            return bad("mean_atoms", "must be > 0".into());
        }
        match self.geometry {
            GeometryMode::Uniform { blockade_factor }
                if blockade_factor.is_nan() || blockade_factor < 0.0 =>
            {
                return bad("geometry.blockade_factor", "must be >= 0".into())
            }
            GeometryMode::Sampled {
                shift_cap_factor, ..
            } if shift_cap_factor.is_nan() || shift_cap_factor <= 0.0 => {
                return bad("geometry.shift_cap_factor", "must be > 0".into())
            }
            _ => {}
        }
        self.rates()
            .map_err(|e| CliError::Config(format!("rates: {e}")))?;
        self.schedule
            .validate()
            .map_err(|e| CliError::Config(format!("at `schedule`: {e}")))?;
        Ok(())
    }

    pub fn rates(&self) -> rfs_core::Result<AtomRates> {
        let mut rates = self.scheme.rates(self.gamma_re, self.gamma_r)?;
        if let Some(v) = self.rate_overrides.gamma_eg {
            rates.gamma_eg = v;
        }
        if let Some(v) = self.rate_overrides.gamma_es {
            rates.gamma_es = v;
        }
        rates.validate()?;
        Ok(rates)
    }

    /// Largest two-photon linewidth reached by the schedule.
    pub fn max_linewidth(&self) -> rfs_core::Result<f64> {
        self.schedule.max_linewidth(self.rates()?.gamma_e_total())
    }

    pub fn geometry_for(&self, n_atoms: usize) -> rfs_core::Result<EnsembleGeometry> {
        let w_max = self.max_linewidth()?;
        match self.geometry {
            GeometryMode::Uniform { blockade_factor } => {
                geometry::uniform_blockade_geometry(n_atoms, blockade_factor * w_max)
            }
            GeometryMode::Sampled {
                box_side,
                min_separation,
                c6,
                shift_cap_factor,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n_atoms as u64));
                geometry::sample_positions(n_atoms, box_side, min_separation, c6, &mut rng)?
                    .with_shift_cap(shift_cap_factor * w_max)
            }
        }
    }

    pub fn simulation(&self, n_atoms: usize) -> rfs_core::Result<SimulationConfig> {
        Ok(SimulationConfig {
            rates: self.rates()?,
            schedule: self.schedule,
            geometry: self.geometry_for(n_atoms)?,
            output_times: rfs_core::uniform_grid(
                self.schedule.total_duration,
                self.output_intervals,
            ),
            integrator: self.integrator,
            pruning: self.pruning,
            initial_levels: None,
        })
    }
}

/// Parses `A..B` or `A..=B` (both inclusive) into the list of atom numbers.
pub fn parse_sweep(spec: &str) -> Result<Vec<usize>, CliError> {
    let err = || CliError::Config(format!("sweep `{spec}` is not of the form A..B"));
    let (a, b) = spec.split_once("..").ok_or_else(err)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: usize = a.trim().parse().map_err(|_| err())?;
    let b: usize = b.trim().parse().map_err(|_| err())?;
    if a == 0 || b < a {
        return Err(err());
    }
    Ok((a..=b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_sweep("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_sweep("2..=3").unwrap(), vec![2, 3]);
        assert!(parse_sweep("4..1").is_err());
        assert!(parse_sweep("0..3").is_err());
        assert!(parse_sweep("3").is_err());
    }

    #[test]
    fn presets_round_trip() {
        for preset in Preset::ALL {
            let cfg = preset.config();
            let back = RunConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        let mut value: serde_json::Value =
            serde_json::from_str(&Preset::Fig2.config().to_json()).unwrap();
        value["schedule"]["t_rise"] = serde_json::Value::String("slow".into());
        let err = RunConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("schedule.t_rise"), "{err}");

        let mut value: serde_json::Value =
            serde_json::from_str(&Preset::Fig2.config().to_json()).unwrap();
        value["atoms"] = serde_json::json!([]);
        let err = RunConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("atoms"), "{err}");
    }

    #[test]
    fn wrapped_config_is_accepted() {
        let cfg = Preset::Fig4.config();
        let wrapped = serde_json::json!({ "config": cfg, "other": 1 });
        assert_eq!(RunConfig::from_json(&wrapped.to_string()).unwrap(), cfg);
    }

    #[test]
    fn sampled_geometry_is_blockaded_and_capped() {
        let mut cfg = Preset::Fig2.config();
        cfg.geometry = GeometryMode::Sampled {
            box_side: 2.0,
            min_separation: 0.2,
            c6: rfs_core::geometry::DEFAULT_C6,
            shift_cap_factor: 20.0,
            seed: 9,
        };
        let w = cfg.max_linewidth().unwrap();
        let g = cfg.geometry_for(5).unwrap();
        assert_eq!(g, cfg.geometry_for(5).unwrap());
        for (_, _, s) in g.pairs() {
            assert!(s >= 10.0 * w && s <= 20.0 * w, "{s}");
        }
    }
}
