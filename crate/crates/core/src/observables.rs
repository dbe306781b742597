//! Trapped-atom statistics: survival projectors, the mean trapped number and
//! averaging over a Poissonian initial atom number.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{BasisConvention, Level};

const NORM_SLACK: f64 = 1e-6;

fn check_normalized(psi: &[Complex64]) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_SLACK {
        return Err(Error::Contract(format!("state norm {norm} is not 1")));
    }
    Ok(())
}

/// Probability of every trapped count `0..=n_atoms` for a normalized state in
/// the full four-level basis.
pub fn survival_distribution(psi: &[Complex64], n_atoms: usize) -> Result<Vec<f64>> {
    let basis = BasisConvention::new(n_atoms)?;
    if psi.len() != basis.dimension() {
        return Err(Error::Contract(format!(
            "state of length {} for {n_atoms} atoms",
            psi.len()
        )));
    }
    check_normalized(psi)?;
    let mut dist = vec![0.0; n_atoms + 1];
    for (index, amp) in psi.iter().enumerate() {
        let trapped = (0..n_atoms)
            .filter(|&j| basis.level(index, j) != Level::S)
            .count();
        dist[trapped] += amp.norm_sqr();
    }
    Ok(dist)
}

/// `<psi|Pi^(n)|psi>`: probability that exactly `n_target` atoms are trapped.
pub fn survival_projection(psi: &[Complex64], n_target: usize, n_atoms: usize) -> Result<f64> {
    if n_target > n_atoms {
        return Err(Error::Contract(format!(
            "{n_target} survivors out of {n_atoms} atoms"
        )));
    }
    Ok(survival_distribution(psi, n_atoms)?[n_target])
}

/// `<n> = sum_j <1 - sigma_ss^j>`.
pub fn mean_trapped(psi: &[Complex64], n_atoms: usize) -> Result<f64> {
    let dist = survival_distribution(psi, n_atoms)?;
    Ok(dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum())
}

/// `N̄^N e^{-N̄} / N!`.
pub fn poisson_weight(mean: f64, n: usize) -> f64 {
    // log-space keeps large N finite
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (n as f64 * mean.ln() - mean - ln_fact).exp()
}

/// Survival distributions for a range of initial atom numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDistribution {
    pub n_atoms: usize,
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl SurvivalDistribution {
    pub fn new(probabilities: Vec<f64>, std_errors: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.len() != std_errors.len() {
            return Err(Error::Input(format!(
                "{} probabilities with {} standard errors",
                probabilities.len(),
                std_errors.len()
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!(
                "survival distribution sums to {total}"
            )));
        }
        Ok(Self {
            n_atoms: probabilities.len() - 1,
            probabilities,
            std_errors,
        })
    }

    /// The trivial distribution of an empty trap.
    pub fn empty() -> Self {
        Self {
            n_atoms: 0,
            probabilities: vec![1.0],
            std_errors: vec![0.0],
        }
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonAverage {
    pub mean_atoms: f64,
    /// `P(n)` for `n = 0..=N_max`, renormalized over the simulated range.
    pub probabilities: Vec<f64>,
    /// Initial-number weight with `N > N_max`, left out of `probabilities`.
    pub truncated_weight: f64,
}

/// `P(n) = sum_N P_init(N) P_N(n)` over `N = 0..=N_max`. `per_n[N]` must be
/// the distribution for `N` initial atoms (`per_n[0]` may be
/// [`SurvivalDistribution::empty`]). The tail `N > N_max` is excluded and the
/// result renormalized.
pub fn poisson_average(per_n: &[SurvivalDistribution], mean_atoms: f64) -> Result<PoissonAverage> {
    if !(mean_atoms > 0.0 && mean_atoms.is_finite()) {
        return Err(Error::Input(format!(
            "mean atom number {mean_atoms} must be positive"
        )));
    }
    if per_n.is_empty() {
        return Err(Error::Input("no survival distributions given".into()));
    }
    let n_max = per_n.len() - 1;
    for (n, dist) in per_n.iter().enumerate() {
        if dist.n_atoms != n {
            return Err(Error::Input(format!(
                "entry {n} holds the distribution for {} atoms",
                dist.n_atoms
            )));
        }
    }
    let mut p = vec![0.0; n_max + 1];
    let mut kept = 0.0;
    for (n, dist) in per_n.iter().enumerate() {
        let w = poisson_weight(mean_atoms, n);
        kept += w;
        for (k, pk) in dist.probabilities.iter().enumerate() {
            p[k] += w * pk;
        }
    }
    for v in &mut p {
        *v /= kept;
    }
    Ok(PoissonAverage {
        mean_atoms,
        probabilities: p,
        truncated_weight: 1.0 - kept,
    })
}

/// Collects `P_N` for `N = 1..=n_max` from `(N, distribution)` pairs,
/// prepending the empty trap. Fails if any `N` is missing.
pub fn assemble_sweep(mut runs: Vec<SurvivalDistribution>) -> Result<Vec<SurvivalDistribution>> {
    runs.sort_by_key(|d| d.n_atoms);
    let mut out = vec![SurvivalDistribution::empty()];
    for d in runs {
        if d.n_atoms == 0 {
            continue;
        }
        if d.n_atoms != out.len() {
            return Err(Error::Input(format!(
                "missing survival distribution for N = {}",
                out.len()
            )));
        }
        out.push(d);
    }
    Ok(out)
}
