use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Prepared, Sample, SimulationConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::observables::SurvivalDistribution;

/// Trajectory-averaged observables with standard errors of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub n_atoms: usize,
    /// Number of trajectories, 0 for a density-matrix run.
    pub trajectories: usize,
    pub times: Vec<f64>,
    pub mean_trapped: Vec<f64>,
    pub mean_trapped_stderr: Vec<f64>,
    /// Atom-averaged `[g, s, e, r]` per output time.
    pub populations: Vec<[f64; 4]>,
    pub populations_stderr: Vec<[f64; 4]>,
    pub double_rydberg: Vec<f64>,
    pub double_rydberg_stderr: Vec<f64>,
    pub survival: SurvivalDistribution,
    pub total_jumps: usize,
}

/// Running sums of a scalar over trajectories.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// Mean and standard error (sample deviation over `sqrt(m)`, zero for a
    /// single trajectory).
    fn finish(self, m: usize) -> (f64, f64) {
        let mf = m as f64;
        let mean = self.sum / mf;
        if m < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0);
        (mean, (var / mf).sqrt())
    }
}

impl EnsembleResult {
    /// Averages `records`, taken in the given order.
    pub fn from_records(n_atoms: usize, records: &[TrajectoryRecord]) -> Result<Self> {
        let m = records.len();
        if m == 0 {
            return Err(Error::Input("no trajectories to average".into()));
        }
        let times: Vec<f64> = records[0].samples.iter().map(|s| s.t).collect();
        let n_t = times.len();
        let mut mean_n = vec![Moments::default(); n_t];
        let mut pops = vec![[Moments::default(); 4]; n_t];
        let mut pairs = vec![Moments::default(); n_t];
        let mut survival = vec![Moments::default(); n_atoms + 1];
        let mut total_jumps = 0;
        for rec in records {
            if rec.samples.len() != n_t || rec.final_survival.len() != n_atoms + 1 {
                return Err(Error::Input(format!(
                    "trajectory {} has a different shape",
                    rec.seed
                )));
            }
            for (k, s) in rec.samples.iter().enumerate() {
                let Sample {
                    mean_trapped,
                    populations,
                    double_rydberg,
                    ..
                } = s;
                mean_n[k].push(*mean_trapped);
                for (acc, v) in pops[k].iter_mut().zip(populations) {
                    acc.push(*v);
                }
                pairs[k].push(*double_rydberg);
            }
            for (acc, p) in survival.iter_mut().zip(&rec.final_survival) {
                acc.push(*p);
            }
            total_jumps += rec.jumps.len();
        }
        let split = |v: Vec<Moments>| -> (Vec<f64>, Vec<f64>) {
            v.into_iter().map(|x| x.finish(m)).unzip()
        };
        let (mean_trapped, mean_trapped_stderr) = split(mean_n);
        let (double_rydberg, double_rydberg_stderr) = split(pairs);
        let (populations, populations_stderr) = pops
            .into_iter()
            .map(|row| {
                let mut mean = [0.0; 4];
                let mut err = [0.0; 4];
                for (i, x) in row.into_iter().enumerate() {
                    (mean[i], err[i]) = x.finish(m);
                }
                (mean, err)
            })
            .unzip();
        let (probabilities, std_errors) = split(survival);
        Ok(Self {
            n_atoms,
            trajectories: m,
            times,
            mean_trapped,
            mean_trapped_stderr,
            populations,
            populations_stderr,
            double_rydberg,
            double_rydberg_stderr,
            survival: SurvivalDistribution {
                n_atoms,
                probabilities,
                std_errors,
            },
            total_jumps,
        })
    }
}

/// Runs `m` trajectories with seeds `base_seed + k`, `k = 0..m`, on the
/// current rayon pool. The reduction runs in seed order, so the result does
/// not depend on the number of workers. With `keep_records` the individual
/// records are returned as well.
pub fn run_ensemble(
    config: &SimulationConfig,
    m: usize,
    base_seed: u64,
    keep_records: bool,
) -> Result<(EnsembleResult, Vec<TrajectoryRecord>)> {
    if m == 0 {
        return Err(Error::Input("trajectory count must be >= 1".into()));
    }
    let prepared = Prepared::new(config)?;
    let outcomes: Vec<Result<TrajectoryRecord>> = (0..m as u64)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            prepared.run(seed).map_err(|e| Error::Trajectory {
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    let records = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let result = EnsembleResult::from_records(config.n_atoms(), &records)?;
    log::debug!(
        "ensemble of {m} trajectories, N = {}: {} jumps",
        config.n_atoms(),
        result.total_jumps
    );
    Ok((result, if keep_records { records } else { Vec::new() }))
}
