//! Command-line runner: loads a configuration or preset, applies flag
//! overrides, and runs, calibrates or sweeps the filtering simulation.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use calibrate::{calibrate, CalibrationRecord, CalibrationSpec};
pub use config::{GeometryMode, Mode, RunConfig};
pub use error::CliError;
pub use experiment::{run_experiment, write_experiment, Experiment, Summary};
pub use presets::{Preset, PresetFile};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "RFS_WORKERS";

#[derive(Debug, Clone, Parser)]
#[command(
    name = "rfs",
    version,
    about = "Single-atom filtering by Rydberg blockade"
)]
pub struct Cli {
    /// Configuration file: a run config, a preset file or an emitted summary.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    pub config: Option<PathBuf>,

    /// Bundled scenario.
    #[arg(long, value_parser = ["fig2", "fig3", "fig4"])]
    pub preset: Option<String>,

    /// Simulate a single initial atom number.
    #[arg(long, conflicts_with = "sweep")]
    pub atoms: Option<usize>,

    /// Inclusive range of initial atom numbers, `A..B`.
    #[arg(long, value_name = "A..B")]
    pub sweep: Option<String>,

    #[arg(long, value_name = "M")]
    pub trajectories: Option<usize>,

    /// Base seed; trajectory k uses seed + k.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,

    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Run the grid search of the preset instead of the experiment.
    #[arg(long)]
    pub calibrate: bool,

    /// Log progress to stderr.
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Mcwf,
    Master,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mcwf => Mode::Mcwf,
            ModeArg::Master => Mode::Master,
        }
    }
}

/// What a finished invocation produced.
#[derive(Debug)]
pub enum Outcome {
    Experiment {
        out_dir: PathBuf,
        summary: Box<Summary>,
    },
    Calibration {
        preset_path: PathBuf,
        record: Box<CalibrationRecord>,
    },
}

/// Configuration plus, for preset files, the calibration grid.
#[derive(Debug, Clone)]
pub struct Input {
    pub name: String,
    pub config: RunConfig,
    pub calibration: Option<CalibrationSpec>,
}

impl Input {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if value.get("calibration").is_some() {
            let file = PresetFile::from_json(&text)?;
            return Ok(Self {
                name: file.name,
                config: file.config,
                calibration: file.calibration,
            });
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".into());
        Ok(Self {
            name,
            config: RunConfig::from_json(&text)?,
            calibration: None,
        })
    }

    pub fn from_preset(preset: Preset) -> Self {
        let file = preset.file();
        Self {
            name: file.name,
            config: file.config,
            calibration: file.calibration,
        }
    }
}

/// Applies the command-line overrides, returning them as `key=value`
/// strings for the summary.
pub fn apply_overrides(cli: &Cli, config: &mut RunConfig) -> Result<Vec<String>, CliError> {
    let mut applied = Vec::new();
    if let Some(n) = cli.atoms {
        config.atoms = vec![n];
        applied.push(format!("atoms={n}"));
    }
    if let Some(sweep) = &cli.sweep {
        config.atoms = config::parse_sweep(sweep)?;
        applied.push(format!("sweep={sweep}"));
    }
    if let Some(m) = cli.trajectories {
        config.trajectories = m;
        applied.push(format!("trajectories={m}"));
    }
    if let Some(s) = cli.seed {
        config.base_seed = s;
        applied.push(format!("seed={s}"));
    }
    if let Some(mode) = cli.mode {
        config.mode = mode.into();
        applied.push(format!(
            "mode={}",
            if config.mode == Mode::Mcwf {
                "mcwf"
            } else {
                "master"
            }
        ));
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
        applied.push(format!("out={}", out.display()));
    }
    config.validate()?;
    Ok(applied)
}

/// Worker count from [`WORKERS_ENV`], `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{WORKERS_ENV}={v} is not a positive integer"
            ))),
        },
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let input = match (&cli.config, &cli.preset) {
        (Some(path), _) => Input::load(path)?,
        (None, Some(name)) => {
            let preset = Preset::from_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
            Input::from_preset(preset)
        }
        (None, None) => {
            return Err(CliError::Config(
                "either --config or --preset is required".into(),
            ))
        }
    };
    let mut config = input.config;
    let overrides = apply_overrides(cli, &mut config)?;

    if cli.calibrate {
        let spec = input.calibration.ok_or_else(|| {
            CliError::Config("--calibrate needs a preset with a `calibration` section".into())
        })?;
        let (best, record) = calibrate::calibrate(&config, &spec)?;
        let file = PresetFile {
            name: input.name.clone(),
            description: format!("{} calibrated", input.name),
            config: best,
            calibration: Some(spec),
            search: Some(record.clone()),
        };
        let dir = &config.out_dir;
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        let path = dir.join(format!("preset_{}.json", input.name));
        std::fs::write(&path, file.to_json() + "\n").map_err(|e| output_error(&path, e))?;
        if !record.reached_target {
            return Err(CliError::CalibrationFailed {
                atoms: record.atoms,
                best: record.best_p1,
                target: record.target_p1,
                tolerance: calibrate::CALIBRATION_TOLERANCE,
            });
        }
        return Ok(Outcome::Calibration {
            preset_path: path,
            record: Box::new(record),
        });
    }

    let experiment = run_experiment(&config, &overrides)?;
    write_experiment(&experiment, &config.out_dir)?;
    Ok(Outcome::Experiment {
        out_dir: config.out_dir.clone(),
        summary: Box::new(experiment.summary),
    })
}

fn output_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Output {
        path: path.display().to_string(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("rfs").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_and_are_echoed() {
        let cli = parse(&[
            "--preset",
            "fig2",
            "--atoms",
            "3",
            "--trajectories",
            "7",
            "--seed",
            "9",
            "--mode",
            "master",
        ]);
        let mut cfg = Preset::Fig2.config();
        let applied = apply_overrides(&cli, &mut cfg).unwrap();
        assert_eq!(cfg.atoms, vec![3]);
        assert_eq!(cfg.trajectories, 7);
        assert_eq!(cfg.base_seed, 9);
        assert_eq!(cfg.mode, Mode::Master);
        assert_eq!(
            applied,
            vec!["atoms=3", "trajectories=7", "seed=9", "mode=master"]
        );
    }

    #[test]
    fn sweep_override() {
        let cli = parse(&["--preset", "fig4", "--sweep", "2..4"]);
        let mut cfg = Preset::Fig4.config();
        apply_overrides(&cli, &mut cfg).unwrap();
        assert_eq!(cfg.atoms, vec![2, 3, 4]);
    }

    #[test]
    fn source_is_required_and_exclusive() {
        assert!(Cli::try_parse_from(["rfs"]).is_err());
        assert!(Cli::try_parse_from(["rfs", "--preset", "fig2", "--config", "x.json"]).is_err());
        assert!(Cli::try_parse_from(["rfs", "--preset", "fig9"]).is_err());
        assert!(Cli::try_parse_from([
            "rfs", "--preset", "fig2", "--atoms", "2", "--sweep", "1..3"
        ])
        .is_err());
    }

    #[test]
    fn bad_override_is_config_error() {
        let cli = parse(&["--preset", "fig2", "--trajectories", "0"]);
        let mut cfg = Preset::Fig2.config();
        let err = apply_overrides(&cli, &mut cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
