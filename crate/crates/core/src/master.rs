//! Lindblad master equation for small ensembles, integrated matrix-free:
//! `d rho/dt = K rho + (K rho)^dag + sum_c L_c rho L_c^dag` with
//! `K = -i H - L^2/2`.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::Dopri5;
use crate::mcwf::{EnsembleResult, SimulationConfig};
use crate::observables::SurvivalDistribution;
use crate::operators::{Channel, EffectiveGenerator, Level, LevelSet, Register};

/// Largest ensemble accepted by [`integrate_lindblad`].
pub const MAX_ORACLE_ATOMS: usize = 3;

const TRACE_TOL: f64 = 1e-8;
const HERMITICITY_TOL: f64 = 1e-10;

/// One jump term `L rho L^dag` in index form.
#[derive(Debug, Clone)]
enum Dissipator {
    /// `rho[src_a, src_b]` moves to `[src_a + shift, src_b + shift]`.
    Transfer {
        rate: f64,
        sources: Vec<usize>,
        shift: isize,
    },
    /// `rho[a, b] -> sign_a sign_b rho[a, b]`.
    Dephasing { rate: f64, signs: Vec<f64> },
}

struct Liouvillian {
    generator: EffectiveGenerator,
    dissipators: Vec<Dissipator>,
    dim: usize,
}

impl Liouvillian {
    fn new(config: &SimulationConfig, register: &Register) -> Result<Self> {
        let generator = EffectiveGenerator::new(
            register,
            &config.rates,
            &config.geometry,
            config.schedule.delta_e_level,
        )?;
        let dim = register.dim();
        let mut dissipators = Vec::new();
        for site in 0..register.sites().len() {
            for channel in Channel::ALL {
                let rate = channel.rate(&config.rates);
                if rate == 0.0 {
                    continue;
                }
                match channel.transition() {
                    Some((to, from)) => {
                        let stride = register.strides()[site] as isize;
                        let shift = (to.digit() as isize - from.digit() as isize) * stride;
                        let sources = (0..dim)
                            .filter(|&i| register.level(i, site) == from)
                            .collect();
                        dissipators.push(Dissipator::Transfer {
                            rate,
                            sources,
                            shift,
                        });
                    }
                    None => {
                        let signs = (0..dim)
                            .map(|i| {
                                if register.level(i, site) == Level::R {
                                    1.0
                                } else {
                                    -1.0
                                }
                            })
                            .collect();
                        dissipators.push(Dissipator::Dephasing { rate, signs });
                    }
                }
            }
        }
        Ok(Self {
            generator,
            dissipators,
            dim,
        })
    }

    fn apply(
        &self,
        omega_ge: f64,
        omega_er: f64,
        rho: &[Complex64],
        k_rho: &mut [Complex64],
        out: &mut [Complex64],
    ) {
        let n = self.dim;
        self.generator.apply_left(omega_ge, omega_er, rho, k_rho);
        for a in 0..n {
            for b in 0..n {
                out[a * n + b] = k_rho[a * n + b] + k_rho[b * n + a].conj();
            }
        }
        for d in &self.dissipators {
            match d {
                Dissipator::Transfer {
                    rate,
                    sources,
                    shift,
                } => {
                    for &sa in sources {
                        let da = (sa as isize + shift) as usize;
                        for &sb in sources {
                            let db = (sb as isize + shift) as usize;
                            out[da * n + db] += rho[sa * n + sb] * *rate;
                        }
                    }
                }
                Dissipator::Dephasing { rate, signs } => {
                    for a in 0..n {
                        for b in 0..n {
                            out[a * n + b] += rho[a * n + b] * (rate * signs[a] * signs[b]);
                        }
                    }
                }
            }
        }
    }
}

fn check_density(rho: &[Complex64], n: usize, t: f64) -> Result<()> {
    let trace: Complex64 = (0..n).map(|a| rho[a * n + a]).sum();
    if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
        return Err(Error::Propagation {
            t,
            reason: format!("trace drifted to {trace}"),
        });
    }
    for a in 0..n {
        for b in a..n {
            if (rho[a * n + b] - rho[b * n + a].conj()).norm() > HERMITICITY_TOL {
                return Err(Error::Propagation {
                    t,
                    reason: format!("density matrix lost hermiticity at ({a}, {b})"),
                });
            }
        }
    }
    Ok(())
}

/// Observables read off the diagonal of a density matrix.
struct DiagonalObservables {
    mean_trapped: f64,
    populations: [f64; 4],
    double_rydberg: f64,
    survival: Vec<f64>,
}

fn diagonal_observables(register: &Register, rho: &[Complex64]) -> DiagonalObservables {
    let n = register.dim();
    let atoms = register.n_atoms();
    let mut populations = [0.0; 4];
    let mut double_rydberg = 0.0;
    let mut survival = vec![0.0; atoms + 1];
    for i in 0..n {
        let p = rho[i * n + i].re;
        let mut trapped = 0;
        let mut rydberg = 0;
        for site in 0..atoms {
            let level = register.level(i, site);
            populations[level.digit()] += p;
            trapped += usize::from(level != Level::S);
            rydberg += usize::from(level == Level::R);
        }
        survival[trapped] += p;
        double_rydberg += p * (rydberg * rydberg.saturating_sub(1) / 2) as f64;
    }
    let mean_trapped = atoms as f64 - populations[Level::S.digit()];
    for v in &mut populations {
        *v /= atoms as f64;
    }
    DiagonalObservables {
        mean_trapped,
        populations,
        double_rydberg,
        survival,
    }
}

fn evolve_density(
    config: &SimulationConfig,
    mut at_output: impl FnMut(&Register, &[Complex64]),
) -> Result<(Register, Vec<Complex64>)> {
    let atoms = config.n_atoms();
    if atoms > MAX_ORACLE_ATOMS {
        return Err(Error::Capacity {
            what: "integrate_lindblad",
            atoms,
            max: MAX_ORACLE_ATOMS,
        });
    }
    config.validate()?;
    let schedule = &config.schedule;
    let t_end = schedule.total_duration;
    let (register, psi0) = Register::product_state(&config.initial_state(), LevelSet::Full)?;
    let liouvillian = Liouvillian::new(config, &register)?;
    let n = register.dim();
    let mut rho = vec![Complex64::new(0.0, 0.0); n * n];
    let start = psi0
        .iter()
        .position(|z| z.re == 1.0)
        .expect("product state");
    rho[start * n + start] = Complex64::new(1.0, 0.0);

    let mut dp = Dopri5::new(
        n * n,
        config.integrator.tolerances,
        config.max_step(),
        1e-12 * t_end,
    );
    let scratch = RefCell::new(vec![Complex64::new(0.0, 0.0); n * n]);
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let d = schedule.drive(t);
        liouvillian.apply(d.omega_ge, d.omega_er, y, &mut scratch.borrow_mut(), dy);
    };

    let times = &config.output_times;
    let mut t = 0.0;
    let mut next_out = 0;
    loop {
        while next_out < times.len() && times[next_out] <= t {
            at_output(&register, &rho);
            next_out += 1;
        }
        if t >= t_end {
            break;
        }
        let limit = times.get(next_out).copied().unwrap_or(t_end);
        dp.step(&rhs, &mut t, &mut rho, limit)?;
        check_density(&rho, n, t)?;
    }
    Ok((register, rho))
}

/// Integrates the density matrix from the configured initial product state
/// and reports the same observables as a trajectory ensemble, with zero
/// statistical errors. Pruning is ignored.
pub fn integrate_lindblad(config: &SimulationConfig) -> Result<EnsembleResult> {
    let mut samples = Vec::with_capacity(config.output_times.len());
    let (register, rho) = evolve_density(config, |reg, rho| {
        samples.push(diagonal_observables(reg, rho))
    })?;
    let last = diagonal_observables(&register, &rho);
    let atoms = config.n_atoms();
    let n_t = samples.len();
    Ok(EnsembleResult {
        n_atoms: atoms,
        trajectories: 0,
        times: config.output_times.clone(),
        mean_trapped: samples.iter().map(|s| s.mean_trapped).collect(),
        mean_trapped_stderr: vec![0.0; n_t],
        populations: samples.iter().map(|s| s.populations).collect(),
        populations_stderr: vec![[0.0; 4]; n_t],
        double_rydberg: samples.iter().map(|s| s.double_rydberg).collect(),
        double_rydberg_stderr: vec![0.0; n_t],
        survival: SurvivalDistribution {
            n_atoms: atoms,
            probabilities: last.survival,
            std_errors: vec![0.0; atoms + 1],
        },
        total_jumps: 0,
    })
}

/// Row-major density matrix at the end of the protocol, in the four-level
/// product basis.
pub fn final_density_matrix(config: &SimulationConfig) -> Result<Vec<Complex64>> {
    Ok(evolve_density(config, |_, _| {})?.1)
}
