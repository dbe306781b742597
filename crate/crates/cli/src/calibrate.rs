//! Coarse grid search over pulse parameters, maximising the probability that
//! exactly one atom survives.

use serde::{Deserialize, Serialize};

use rfs_core::run_ensemble;

use crate::config::RunConfig;
use crate::error::CliError;

/// A calibration counts as successful when the best point lies this close
/// to the target.
pub const CALIBRATION_TOLERANCE: f64 = 0.1;

/// Largest number of grid axes.
pub const MAX_AXES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    OmegaGePeak,
    OmegaEr,
    TRise,
    TFall,
    DeltaE,
}

impl Parameter {
    /// Sets the parameter. Changing a ramp duration shifts the end of the
    /// protocol so the interval after the probe pulse stays the same.
    pub fn apply(self, config: &mut RunConfig, value: f64) {
        let s = &mut config.schedule;
        let tail = s.total_duration - s.t_end_ge();
        match self {
            Parameter::OmegaGePeak => s.omega_ge_peak = value,
            Parameter::OmegaEr => s.omega_er_level = value,
            Parameter::TRise => s.t_rise = value,
            Parameter::TFall => s.t_fall = value,
            Parameter::DeltaE => s.delta_e_level = value,
        }
        s.total_duration = s.t_end_ge() + tail;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Parameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub target_p1: f64,
    pub atoms: usize,
    pub trajectories: usize,
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub parameter: Parameter,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub point: Vec<Setting>,
    /// `None` when the point is not a valid schedule.
    pub p1: Option<f64>,
    pub p1_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub target_p1: f64,
    pub atoms: usize,
    pub trajectories: usize,
    pub base_seed: u64,
    pub entries: Vec<SearchEntry>,
    pub best: Vec<Setting>,
    pub best_p1: f64,
    pub reached_target: bool,
}

impl CalibrationSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.axes.len() > MAX_AXES {
            return Err(CliError::Config(format!(
                "at `calibration.axes`: at most {MAX_AXES} axes, got {}",
                self.axes.len()
            )));
        }
        if let Some(a) = self.axes.iter().find(|a| a.values.is_empty()) {
            return Err(CliError::Config(format!(
                "at `calibration.axes`: no values for {:?}",
                a.parameter
            )));
        }
        if self.atoms == 0 || self.trajectories == 0 {
            return Err(CliError::Config(
                "at `calibration`: atoms and trajectories must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// All grid points, the last axis varying fastest.
    pub fn points(&self) -> Vec<Vec<Setting>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&value| {
                        let mut q = p.clone();
                        q.push(Setting {
                            parameter: axis.parameter,
                            value,
                        });
                        q
                    })
                })
                .collect();
        }
        points
    }
}

pub fn apply_point(config: &RunConfig, point: &[Setting]) -> RunConfig {
    let mut c = config.clone();
    for s in point {
        s.parameter.apply(&mut c, s.value);
    }
    c
}

/// Runs the grid search. Returns the configuration at the best point and
/// the search record; whether the target was reached is recorded, not
/// raised.
pub fn calibrate(
    config: &RunConfig,
    spec: &CalibrationSpec,
) -> Result<(RunConfig, CalibrationRecord), CliError> {
    spec.validate()?;
    let mut entries = Vec::new();
    let mut best: Option<(f64, Vec<Setting>)> = None;
    for point in spec.points() {
        let candidate = apply_point(config, &point);
        let sim = candidate
            .validate()
            .and_then(|_| Ok(candidate.simulation(spec.atoms)?));
        let sim = match sim {
            Ok(sim) => sim,
            Err(e) => {
                entries.push(SearchEntry {
                    point,
                    p1: None,
                    p1_stderr: None,
                    rejected: Some(e.to_string()),
                });
                continue;
            }
        };
        let (result, _) = run_ensemble(&sim, spec.trajectories, config.base_seed, false)?;
        let p1 = result.survival.probabilities[1];
        log::info!("calibration point {point:?}: P_{}(1) = {p1:.3}", spec.atoms);
        if best.as_ref().is_none_or(|(b, _)| p1 > *b) {
            best = Some((p1, point.clone()));
        }
        entries.push(SearchEntry {
            point,
            p1: Some(p1),
            p1_stderr: Some(result.survival.std_errors[1]),
            rejected: None,
        });
    }
    let (best_p1, best_point) =
        best.ok_or_else(|| CliError::Config("calibration grid contains no valid schedule".into()))?;
    let record = CalibrationRecord {
        target_p1: spec.target_p1,
        atoms: spec.atoms,
        trajectories: spec.trajectories,
        base_seed: config.base_seed,
        entries,
        best: best_point.clone(),
        best_p1,
        reached_target: (best_p1 - spec.target_p1).abs() <= CALIBRATION_TOLERANCE,
    };
    Ok((apply_point(config, &best_point), record))
}
