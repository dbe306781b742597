//! Quantum trajectories: deterministic decay of the norm under the effective
//! generator, interrupted by jumps when the squared norm falls below a
//! uniformly drawn threshold.

mod ensemble;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atom_model::AtomRates;
use crate::error::{Error, Result};
use crate::geometry::EnsembleGeometry;
use crate::integrator::{Dopri5, Tolerances};
use crate::operators::{
    apply_jump, channel_weights, check_capacity, Channel, EffectiveGenerator, Level, LevelSet,
    Register,
};
use crate::pulses::PulseSchedule;

pub use ensemble::{run_ensemble, EnsembleResult};

/// Relative width of the bracket left by the jump-time bisection.
pub const JUMP_TIME_RTOL: f64 = 1e-6;

/// Relative growth of the squared norm tolerated across one step before it
/// is treated as an integration failure.
const NORM_GROWTH_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub tolerances: Tolerances,
    /// Largest step as a fraction of the inverse fastest rate of the
    /// problem, see [`SimulationConfig::fastest_rate`].
    pub max_step_factor: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_step_factor: 1.0,
        }
    }
}

/// Everything a trajectory needs, shared read-only across an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub rates: AtomRates,
    pub schedule: PulseSchedule,
    pub geometry: EnsembleGeometry,
    /// Increasing sample times in `[0, total_duration]`.
    pub output_times: Vec<f64>,
    pub integrator: IntegratorSettings,
    /// Drop |s> from the representation. Atoms reach |s> only by jumps,
    /// which leave them there sharply, so they can be removed from the state
    /// vector.
    pub pruning: bool,
    /// Product state to start from, `|g...g>` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_levels: Option<Vec<Level>>,
}

impl SimulationConfig {
    pub fn n_atoms(&self) -> usize {
        self.geometry.n_atoms()
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.schedule.validate()?;
        let n = self.n_atoms();
        if n == 0 {
            return Err(Error::Contract("ensemble without atoms".into()));
        }
        check_capacity("SimulationConfig", n)?;
        if let Some(levels) = &self.initial_levels {
            if levels.len() != n {
                return Err(Error::Input(format!(
                    "{} initial levels for {n} atoms",
                    levels.len()
                )));
            }
        }
        let t_end = self.schedule.total_duration;
        if self.output_times.is_empty() {
            return Err(Error::Input("empty output grid".into()));
        }
        for w in self.output_times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Input(format!(
                    "output times not increasing at {}",
                    w[1]
                )));
            }
        }
        let (first, last) = (
            self.output_times[0],
            self.output_times[self.output_times.len() - 1],
        );
        if first < 0.0 || last > t_end {
            return Err(Error::Input(format!(
                "output times must lie in [0, {t_end}]"
            )));
        }
        let tol = self.integrator.tolerances;
        if !(tol.rtol > 0.0 && tol.atol > 0.0 && self.integrator.max_step_factor > 0.0) {
            return Err(Error::Input(
                "integrator tolerances and step factor must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Largest frequency scale: total decay of |e>, the Rabi frequencies, the
    /// detuning and the largest pair shift.
    pub fn fastest_rate(&self) -> f64 {
        [
            self.rates.gamma_e_total(),
            self.schedule.omega_ge_peak,
            self.schedule.omega_er_level,
            self.schedule.delta_e_level.abs(),
            self.geometry.max_pair_shift(),
        ]
        .into_iter()
        .fold(1e-3 / self.schedule.total_duration, f64::max)
    }

    pub fn max_step(&self) -> f64 {
        self.integrator.max_step_factor / self.fastest_rate()
    }

    pub fn initial_state(&self) -> Vec<Level> {
        self.initial_levels
            .clone()
            .unwrap_or_else(|| vec![Level::G; self.n_atoms()])
    }

    fn level_set(&self) -> LevelSet {
        if self.pruning {
            LevelSet::Driven
        } else {
            LevelSet::Full
        }
    }
}

/// `n + 1` equally spaced times from 0 to `t_end`.
pub fn uniform_grid(t_end: f64, intervals: usize) -> Vec<f64> {
    let intervals = intervals.max(1);
    (0..=intervals)
        .map(|k| t_end * k as f64 / intervals as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub atom: usize,
    pub channel: Channel,
}

/// Observables of the normalized state at one output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub mean_trapped: f64,
    /// Atom-averaged populations `[g, s, e, r]`.
    pub populations: [f64; 4],
    /// Expected number of atom pairs both in |r>.
    pub double_rydberg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jumps: Vec<JumpEvent>,
    pub samples: Vec<Sample>,
    /// `[g, s, e, r]` for every atom at the end of the protocol.
    pub final_populations: Vec<[f64; 4]>,
    /// Probability of `0..=N` trapped atoms at the end.
    pub final_survival: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

fn squared_norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

fn sample(register: &Register, psi: &[Complex64], t: f64) -> Sample {
    let per_atom = register.atom_populations(psi);
    let n = per_atom.len() as f64;
    let mut populations = [0.0; 4];
    for p in &per_atom {
        for (acc, v) in populations.iter_mut().zip(p) {
            *acc += v;
        }
    }
    let mean_trapped = n - populations[Level::S.digit()];
    for v in &mut populations {
        *v /= n;
    }
    Sample {
        t,
        mean_trapped,
        populations,
        double_rydberg: register.rydberg_pairs(psi),
    }
}

/// Validated configuration with the generator of the initial register built
/// once.
#[derive(Debug)]
pub(crate) struct Prepared<'a> {
    config: &'a SimulationConfig,
    register: Register,
    psi0: Vec<Complex64>,
    generator: EffectiveGenerator,
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(config: &'a SimulationConfig) -> Result<Self> {
        config.validate()?;
        let (register, psi0) =
            Register::product_state(&config.initial_state(), config.level_set())?;
        let generator = EffectiveGenerator::new(
            &register,
            &config.rates,
            &config.geometry,
            config.schedule.delta_e_level,
        )?;
        Ok(Self {
            config,
            register,
            psi0,
            generator,
        })
    }

    pub(crate) fn run(&self, seed: u64) -> Result<TrajectoryRecord> {
        let cfg = self.config;
        let schedule = &cfg.schedule;
        let t_end = schedule.total_duration;
        let times = &cfg.output_times;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut register = self.register.clone();
        let mut psi = self.psi0.clone();
        // Replaces the shared generator once the register has shrunk.
        let mut own_generator: Option<EffectiveGenerator> = None;
        let mut dp = Dopri5::new(
            psi.len(),
            cfg.integrator.tolerances,
            cfg.max_step(),
            1e-12 * t_end,
        );
        let mut buf = vec![Complex64::new(0.0, 0.0); psi.len()];

        let mut t = 0.0;
        let mut threshold: f64 = rng.random();
        let mut norm_sq = 1.0;
        let mut next_out = 0;
        let mut jumps = Vec::new();
        let mut samples = Vec::with_capacity(times.len());

        loop {
            while next_out < times.len() && times[next_out] <= t {
                samples.push(sample(&register, &psi, times[next_out]));
                next_out += 1;
            }
            if t >= t_end {
                break;
            }
            let limit = times.get(next_out).copied().unwrap_or(t_end);
            let generator = own_generator.as_ref().unwrap_or(&self.generator);
            let rhs = |tt: f64, y: &[Complex64], dy: &mut [Complex64]| {
                let d = schedule.drive(tt);
                generator.apply(d.omega_ge, d.omega_er, y, dy);
            };
            let step = dp.step(&rhs, &mut t, &mut psi, limit)?;
            let new_norm = squared_norm(&psi);
            if new_norm.is_nan() || new_norm > norm_sq * (1.0 + NORM_GROWTH_SLACK) {
                return Err(Error::Propagation {
                    t,
                    reason: format!("squared norm grew from {norm_sq} to {new_norm}"),
                });
            }
            norm_sq = new_norm;
            if norm_sq > threshold {
                continue;
            }

            // Bracket the crossing on the continuous extension.
            let (mut lo, mut hi) = (0.0, 1.0);
            while hi - lo > JUMP_TIME_RTOL {
                let mid = 0.5 * (lo + hi);
                dp.interpolate(mid, &psi, &mut buf)?;
                if squared_norm(&buf) <= threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            dp.interpolate(hi, &psi, &mut buf)?;
            let t_jump = if hi == 1.0 {
                t
            } else {
                step.t_old + hi * step.h
            };

            let weights = channel_weights(&register, &buf, &cfg.rates);
            let total: f64 = weights.iter().map(|w| w.weight).sum();
            if total.is_nan() || total <= 0.0 {
                return Err(Error::Propagation {
                    t: t_jump,
                    reason: "norm decayed but no jump channel carries weight".into(),
                });
            }
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = weights[weights.len() - 1];
            for w in &weights {
                acc += w.weight;
                if target < acc {
                    chosen = *w;
                    break;
                }
            }
            let (new_register, new_psi) = apply_jump(&register, &buf, chosen.atom, chosen.channel)?;
            if new_register != register {
                own_generator = Some(EffectiveGenerator::new(
                    &new_register,
                    &cfg.rates,
                    &cfg.geometry,
                    schedule.delta_e_level,
                )?);
                buf.resize(new_register.dim(), Complex64::new(0.0, 0.0));
                register = new_register;
            }
            psi = new_psi;
            dp.restart(psi.len());
            t = t_jump;
            norm_sq = 1.0;
            threshold = rng.random();
            jumps.push(JumpEvent {
                t: t_jump,
                atom: chosen.atom,
                channel: chosen.channel,
            });
        }

        Ok(TrajectoryRecord {
            seed,
            jumps,
            samples,
            final_populations: register.atom_populations(&psi),
            final_survival: register.trapped_distribution(&psi),
            accepted_steps: dp.accepted_steps(),
            rejected_steps: dp.rejected_steps(),
        })
    }
}

/// Runs one trajectory from the configured initial product state.
pub fn evolve_trajectory(config: &SimulationConfig, seed: u64) -> Result<TrajectoryRecord> {
    Prepared::new(config)?.run(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom_model::SchemeConfig;
    use crate::geometry::uniform_blockade_geometry;
    use crate::pulses::RampKind;

    pub(crate) fn resonant_config(n: usize, pruning: bool) -> SimulationConfig {
        let schedule = PulseSchedule {
            omega_er_level: 5.0,
            omega_ge_peak: 30.0,
            t_start_ge: 0.5,
            t_rise: 1.5,
            t_hold: 0.5,
            t_fall: 1.0,
            ramp_kind: RampKind::SineSquared,
            delta_e_level: 0.0,
            total_duration: 4.0,
        };
        SimulationConfig {
            rates: SchemeConfig::SchemeA.rates(0.0, 0.0).unwrap(),
            schedule,
            geometry: uniform_blockade_geometry(n, 200.0).unwrap(),
            output_times: uniform_grid(4.0, 20),
            integrator: IntegratorSettings::default(),
            pruning,
            initial_levels: None,
        }
    }

    #[test]
    fn records_are_reproducible_and_consistent() {
        let cfg = resonant_config(3, true);
        let a = evolve_trajectory(&cfg, 17).unwrap();
        let b = evolve_trajectory(&cfg, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 21);
        for w in a.jumps.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        for s in &a.samples {
            assert!((s.populations.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((a.final_survival.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pruned_and_full_registers_give_identical_jump_logs() {
        for seed in 0..4 {
            let full = evolve_trajectory(&resonant_config(3, false), seed).unwrap();
            let pruned = evolve_trajectory(&resonant_config(3, true), seed).unwrap();
            assert_eq!(full.jumps, pruned.jumps, "seed {seed}");
            for (a, b) in full.final_survival.iter().zip(&pruned.final_survival) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_atom_pruned_after_loss_stays_frozen() {
        let mut cfg = resonant_config(1, true);
        cfg.rates = AtomRates::new(0.0, 36.0, 0.0, 0.0).unwrap();
        let rec = evolve_trajectory(&cfg, 3).unwrap();
        assert_eq!(rec.jumps.len(), 1);
        assert_eq!(rec.jumps[0].channel, Channel::DecayToUntrapped);
        assert_eq!(rec.final_survival, vec![1.0, 0.0]);
        assert_eq!(rec.final_populations, vec![[0.0, 1.0, 0.0, 0.0]]);
    }

    #[test]
    fn invalid_grid_is_rejected() {
        let mut cfg = resonant_config(2, true);
        cfg.output_times = vec![0.0, 2.0, 1.0];
        assert!(matches!(evolve_trajectory(&cfg, 0), Err(Error::Input(_))));
        cfg.output_times = vec![0.0, 5.0];
        assert!(matches!(evolve_trajectory(&cfg, 0), Err(Error::Input(_))));
    }
}
