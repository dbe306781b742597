//! Runs a configured experiment and writes the time series and summary.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rfs_core::observables::assemble_sweep;
use rfs_core::{
    integrate_lindblad, poisson_average, run_ensemble, AtomRates, EnsembleResult, PoissonAverage,
    SurvivalDistribution,
};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

/// Grid size for the adiabaticity scan reported in the summary.
const MARGIN_SCAN_POINTS: usize = 1000;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub rates: AtomRates,
    /// Largest two-photon linewidth over the schedule.
    pub max_linewidth: f64,
    /// Largest adiabaticity margin over the schedule, absent when the
    /// dark state is undefined somewhere on the grid.
    pub max_adiabaticity_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRange {
    pub first: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_atoms: usize,
    pub mode: Mode,
    /// Absent for density-matrix runs.
    pub seeds: Option<SeedRange>,
    pub min_pair_shift: Option<f64>,
    pub max_pair_shift: f64,
    pub survival: SurvivalDistribution,
    pub final_mean_trapped: f64,
    pub final_mean_trapped_stderr: f64,
    pub max_double_rydberg: f64,
    pub total_jumps: usize,
    pub timeseries: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub software: Software,
    pub config: RunConfig,
    /// Command-line overrides applied on top of the configuration file.
    pub overrides: Vec<String>,
    pub derived: Derived,
    pub runs: Vec<RunSummary>,
    /// Present when the atom numbers cover `1..=N_max` without gaps.
    pub poisson: Option<PoissonAverage>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("summary: {e}")))
    }
}

pub struct Experiment {
    pub summary: Summary,
    pub results: Vec<EnsembleResult>,
}

pub fn timeseries_name(n_atoms: usize) -> String {
    format!("timeseries_N{n_atoms}.csv")
}

/// Simulates every configured atom number. Nothing is written.
pub fn run_experiment(config: &RunConfig, overrides: &[String]) -> Result<Experiment, CliError> {
    config.validate()?;
    let rates = config.rates()?;
    let derived = Derived {
        rates,
        max_linewidth: config.max_linewidth()?,
        max_adiabaticity_margin: config
            .schedule
            .max_adiabaticity_margin(MARGIN_SCAN_POINTS)
            .ok(),
    };

    let mut results = Vec::with_capacity(config.atoms.len());
    let mut runs = Vec::with_capacity(config.atoms.len());
    for &n in &config.atoms {
        let sim = config.simulation(n)?;
        log::info!("N = {n}: {:?} run", config.mode);
        let (result, seeds) = match config.mode {
            Mode::Mcwf => {
                let (r, _) = run_ensemble(&sim, config.trajectories, config.base_seed, false)?;
                let seeds = SeedRange {
                    first: config.base_seed,
                    count: config.trajectories,
                };
                (r, Some(seeds))
            }
            Mode::Master => (integrate_lindblad(&sim)?, None),
        };
        log::info!("N = {n}: P_N = {:?}", result.survival.probabilities);
        let last = result.times.len() - 1;
        runs.push(RunSummary {
            n_atoms: n,
            mode: config.mode,
            seeds,
            min_pair_shift: sim.geometry.min_pair_shift(),
            max_pair_shift: sim.geometry.max_pair_shift(),
            survival: result.survival.clone(),
            final_mean_trapped: result.mean_trapped[last],
            final_mean_trapped_stderr: result.mean_trapped_stderr[last],
            max_double_rydberg: result.double_rydberg.iter().copied().fold(0.0, f64::max),
            total_jumps: result.total_jumps,
            timeseries: timeseries_name(n),
        });
        results.push(result);
    }

    let poisson = if covers_from_one(&config.atoms) {
        let per_n = assemble_sweep(results.iter().map(|r| r.survival.clone()).collect())?;
        Some(poisson_average(&per_n, config.mean_atoms)?)
    } else {
        None
    };

    Ok(Experiment {
        summary: Summary {
            software: Software::current(),
            config: config.clone(),
            overrides: overrides.to_vec(),
            derived,
            runs,
            poisson,
        },
        results,
    })
}

fn covers_from_one(atoms: &[usize]) -> bool {
    let mut sorted = atoms.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len() == atoms.len() && sorted.iter().enumerate().all(|(i, &n)| n == i + 1)
}

fn output_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Output {
        path: path.display().to_string(),
        source,
    }
}

/// Writes one CSV per atom number and the summary into `dir`.
pub fn write_experiment(experiment: &Experiment, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    for result in &experiment.results {
        let path = dir.join(timeseries_name(result.n_atoms));
        write_timeseries(result, &path)?;
    }
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, experiment.summary.to_json()).map_err(|e| output_error(&path, e))
}

pub fn write_timeseries(result: &EnsembleResult, path: &Path) -> Result<(), CliError> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => output_error(path, io),
        other => output_error(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record([
        "t",
        "mean_n",
        "pop_g",
        "pop_s",
        "pop_e",
        "pop_r",
        "double_rydberg",
        "stderr_mean_n",
    ])
    .map_err(to_err)?;
    for (k, &t) in result.times.iter().enumerate() {
        let p = result.populations[k];
        let row = [
            t,
            result.mean_trapped[k],
            p[0],
            p[1],
            p[2],
            p[3],
            result.double_rydberg[k],
            result.mean_trapped_stderr[k],
        ];
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(to_err)?;
    }
    w.flush().map_err(|e| output_error(path, e))
}
