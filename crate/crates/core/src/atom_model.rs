//! Single-atom level scheme: decay rates, the two coupling schemes and the
//! closed-form results for a driven three-level atom.
//!
//! Units: rates, Rabi frequencies and detunings in inverse microseconds,
//! time in microseconds, hbar = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total decay rate of the intermediate level in the open scheme.
pub const SCHEME_A_GAMMA_E: f64 = 36.0;
/// Bare decay rate of the intermediate level in the closed scheme.
pub const SCHEME_B_GAMMA_E: f64 = 38.0;
/// Decay rate of the auxiliary level admixed by the microwave.
pub const SCHEME_B_GAMMA_E_PRIME: f64 = 36.0;
/// Engineered decay rate into the untrapped level for the closed scheme.
pub const SCHEME_B_GAMMA_ES: f64 = 2.4;

/// Decay and dephasing rates of one atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomRates {
    /// |e> -> |g> (trapped ground state).
    pub gamma_eg: f64,
    /// |e> -> |s> (untrapped state).
    pub gamma_es: f64,
    /// |r> -> |e>.
    pub gamma_re: f64,
    /// Dephasing of |r> relative to the other levels.
    pub gamma_r: f64,
}

impl AtomRates {
    pub fn new(gamma_eg: f64, gamma_es: f64, gamma_re: f64, gamma_r: f64) -> Result<Self> {
        let rates = Self {
            gamma_eg,
            gamma_es,
            gamma_re,
            gamma_r,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_eg", self.gamma_eg),
            ("gamma_es", self.gamma_es),
            ("gamma_re", self.gamma_re),
            ("gamma_r", self.gamma_r),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(
                    "AtomRates",
                    format!("{name} = {v} must be finite and >= 0"),
                ));
            }
        }
        Ok(())
    }

    /// Total decay rate of |e>.
    pub fn gamma_e_total(&self) -> f64 {
        self.gamma_eg + self.gamma_es
    }

    /// Coherence relaxation rate between |g> and |r> implied by these rates.
    pub fn gamma_rg(&self) -> f64 {
        0.5 * self.gamma_re + 2.0 * self.gamma_r
    }
}

/// How the decay of |e> into the untrapped level arises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum SchemeConfig {
    /// Open transition: |e> decays equally to |g> and |s>.
    SchemeA,
    /// Closed transition with a microwave-engineered leak into |s>.
    SchemeB {
        gamma_e: f64,
        omega_ee_prime: f64,
        gamma_e_prime: f64,
    },
}

impl SchemeConfig {
    /// Closed scheme with the microwave set for the target leak rate
    /// [`SCHEME_B_GAMMA_ES`].
    pub fn scheme_b() -> Self {
        let gamma_e_prime = SCHEME_B_GAMMA_E_PRIME;
        SchemeConfig::SchemeB {
            gamma_e: SCHEME_B_GAMMA_E,
            omega_ee_prime: microwave_for_leak_rate(SCHEME_B_GAMMA_ES, gamma_e_prime),
            gamma_e_prime,
        }
    }

    /// `(gamma_eg, gamma_es)` for this scheme.
    pub fn decay_rates(&self) -> Result<(f64, f64)> {
        match *self {
            SchemeConfig::SchemeA => Ok((0.5 * SCHEME_A_GAMMA_E, 0.5 * SCHEME_A_GAMMA_E)),
            SchemeConfig::SchemeB {
                gamma_e,
                omega_ee_prime,
                gamma_e_prime,
            } => engineered_rates(omega_ee_prime, gamma_e_prime, gamma_e),
        }
    }

    /// Full rate set with the given Rydberg decay and dephasing.
    pub fn rates(&self, gamma_re: f64, gamma_r: f64) -> Result<AtomRates> {
        let (gamma_eg, gamma_es) = self.decay_rates()?;
        AtomRates::new(gamma_eg, gamma_es, gamma_re, gamma_r)
    }
}

/// Microwave Rabi frequency that produces the leak rate `gamma_es`.
pub fn microwave_for_leak_rate(gamma_es: f64, gamma_e_prime: f64) -> f64 {
    (3.0 * gamma_e_prime * gamma_es / 8.0).sqrt()
}

fn check_finite_nonneg(what: &'static str, name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(
            what,
            format!("{name} = {v} must be finite and >= 0"),
        ));
    }
    Ok(())
}

/// Decay rates `(gamma_eg, gamma_es)` of |e> after adiabatic elimination of
/// the auxiliary level |e'> coupled with Rabi frequency `omega_ee_prime`.
pub fn engineered_rates(
    omega_ee_prime: f64,
    gamma_e_prime: f64,
    gamma_e_bare: f64,
) -> Result<(f64, f64)> {
    const WHAT: &str = "engineered_rates";
    check_finite_nonneg(WHAT, "omega_ee_prime", omega_ee_prime)?;
    check_finite_nonneg(WHAT, "gamma_e_bare", gamma_e_bare)?;
    if !gamma_e_prime.is_finite() || gamma_e_prime <= 0.0 {
        return Err(Error::domain(
            WHAT,
            format!("gamma_e_prime = {gamma_e_prime} must be > 0"),
        ));
    }
    if omega_ee_prime >= 0.5 * gamma_e_prime {
        log::warn!(
            "omega_ee' = {omega_ee_prime} is not small against gamma_e'/2 = {}; \
             adiabatic elimination of |e'> is unreliable",
            0.5 * gamma_e_prime
        );
    }
    let w2 = omega_ee_prime * omega_ee_prime;
    let gamma_es = 8.0 * w2 / (3.0 * gamma_e_prime);
    let gamma_eg = gamma_e_bare + 4.0 * w2 / gamma_e_prime;
    Ok((gamma_eg, gamma_es))
}

/// Two-photon excitation linewidth of the Rydberg level.
pub fn excitation_linewidth(omega_ge: f64, omega_er: f64, gamma_e_total: f64) -> Result<f64> {
    const WHAT: &str = "excitation_linewidth";
    check_finite_nonneg(WHAT, "omega_ge", omega_ge)?;
    check_finite_nonneg(WHAT, "omega_er", omega_er)?;
    check_finite_nonneg(WHAT, "gamma_e_total", gamma_e_total)?;
    let denom = (2.0 * omega_ge * omega_ge + 0.25 * gamma_e_total * gamma_e_total).sqrt();
    if denom == 0.0 {
        return Err(Error::domain(WHAT, "omega_ge and gamma_e_total both zero"));
    }
    Ok((omega_ge * omega_ge + omega_er * omega_er) / denom)
}

/// Dressed states of the resonant-Raman three-level atom in the basis
/// `(|g>, |e>, |r>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelEigensystem {
    pub lambda_0: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Zero-energy state with no |e> admixture.
    pub dark_state: [f64; 3],
    pub bright_plus: [f64; 3],
    pub bright_minus: [f64; 3],
}

impl ThreeLevelEigensystem {
    /// |<psi_0|r>|^2.
    pub fn dark_rydberg_overlap(&self) -> f64 {
        self.dark_state[2] * self.dark_state[2]
    }
}

/// Eigenvalues and eigenvectors of `Delta_e |e><e| + (Omega_ge |e><g| +
/// Omega_er |r><e| + h.c.)`.
pub fn lambda_eigensystem(
    omega_ge: f64,
    omega_er: f64,
    delta_e: f64,
) -> Result<ThreeLevelEigensystem> {
    const WHAT: &str = "lambda_eigensystem";
    check_finite_nonneg(WHAT, "omega_ge", omega_ge)?;
    check_finite_nonneg(WHAT, "omega_er", omega_er)?;
    if !delta_e.is_finite() {
        return Err(Error::domain(WHAT, "delta_e must be finite"));
    }
    let omega0_sq = omega_ge * omega_ge + omega_er * omega_er;
    if omega0_sq == 0.0 {
        return Err(Error::domain(
            WHAT,
            "both Rabi frequencies zero; dark state undefined",
        ));
    }
    let omega0 = omega0_sq.sqrt();
    let half = 0.5 * delta_e;
    let root = (omega0_sq + half * half).sqrt();
    let lambda_plus = half + root;
    let lambda_minus = half - root;
    let bright = |lambda: f64| {
        let norm = (omega0_sq + lambda * lambda).sqrt();
        [omega_ge / norm, lambda / norm, omega_er / norm]
    };
    Ok(ThreeLevelEigensystem {
        lambda_0: 0.0,
        lambda_plus,
        lambda_minus,
        dark_state: [omega_er / omega0, 0.0, -omega_ge / omega0],
        bright_plus: bright(lambda_plus),
        bright_minus: bright(lambda_minus),
    })
}

/// Probability of losing the last Rydberg atom through one decay of |e>
/// while it still overlaps the bright states.
pub fn last_atom_loss_estimate(
    gamma_es: f64,
    gamma_eg: f64,
    omega_ge: f64,
    omega_er: f64,
) -> Result<f64> {
    const WHAT: &str = "last_atom_loss_estimate";
    for (name, v) in [
        ("gamma_es", gamma_es),
        ("gamma_eg", gamma_eg),
        ("omega_ge", omega_ge),
        ("omega_er", omega_er),
    ] {
        check_finite_nonneg(WHAT, name, v)?;
    }
    let gamma_sum = gamma_es + gamma_eg;
    let omega_sum = omega_ge * omega_ge + omega_er * omega_er;
    if gamma_sum == 0.0 || omega_sum == 0.0 {
        return Err(Error::domain(WHAT, "zero total decay rate or zero drive"));
    }
    Ok(gamma_es * omega_er * omega_er / (gamma_sum * omega_sum))
}

/// Extra g-r coherence relaxation from Rydberg decay and dephasing.
pub fn coherence_relaxation_rate(gamma_re: f64, gamma_r: f64) -> Result<f64> {
    const WHAT: &str = "coherence_relaxation_rate";
    check_finite_nonneg(WHAT, "gamma_re", gamma_re)?;
    check_finite_nonneg(WHAT, "gamma_r", gamma_r)?;
    Ok(0.5 * gamma_re + 2.0 * gamma_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, SymmetricEigen};
    use proptest::prelude::*;

    #[test]
    fn microwave_off_restores_closed_transition() {
        assert_eq!(engineered_rates(0.0, 36.0, 38.0).unwrap(), (38.0, 0.0));
    }

    #[test]
    fn scheme_b_default_leak_rate() {
        let (_, gamma_es) = SchemeConfig::scheme_b().decay_rates().unwrap();
        assert!((gamma_es - 2.4).abs() < 1e-12);
    }

    #[test]
    fn microwave_inversion_round_trips() {
        let omega = microwave_for_leak_rate(2.4, 36.0);
        assert!((omega - 5.692).abs() < 1e-3, "{omega}");
        let back = 8.0 * omega * omega / (3.0 * 36.0);
        assert!((back - 2.4).abs() < 1e-12);
    }

    #[test]
    fn scheme_a_is_symmetric_branching() {
        let rates = SchemeConfig::SchemeA.rates(0.0, 0.0).unwrap();
        assert_eq!(rates.gamma_es / rates.gamma_eg, 1.0);
        assert_eq!(rates.gamma_e_total(), 36.0);
    }

    #[test]
    fn scheme_b_leak_is_weak() {
        let rates = SchemeConfig::scheme_b().rates(0.0, 0.0).unwrap();
        assert!(rates.gamma_es < 0.1 * rates.gamma_eg);
    }

    #[test]
    fn engineered_rates_rejects_bad_input() {
        assert!(engineered_rates(-1.0, 36.0, 38.0).is_err());
        assert!(engineered_rates(1.0, 0.0, 38.0).is_err());
        assert!(engineered_rates(f64::NAN, 36.0, 38.0).is_err());
    }

    #[test]
    fn rates_reject_negative() {
        assert!(AtomRates::new(1.0, -0.1, 0.0, 0.0).is_err());
        assert!(AtomRates::new(1.0, 0.1, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn linewidth_limits() {
        assert_eq!(excitation_linewidth(0.0, 0.0, 36.0).unwrap(), 0.0);
        let omega = 3.7;
        let w = excitation_linewidth(omega, omega, 0.0).unwrap();
        assert!((w - omega * 2f64.sqrt()).abs() < 1e-12);
        assert!(excitation_linewidth(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eigensystem_initial_stirap_configuration() {
        let omega = 5.0;
        let eig = lambda_eigensystem(0.0, omega, 0.0).unwrap();
        assert_eq!(eig.lambda_0, 0.0);
        assert!((eig.lambda_plus - omega).abs() < 1e-12);
        assert!((eig.lambda_minus + omega).abs() < 1e-12);
        assert_eq!(eig.dark_state, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn eigensystem_symmetric_superposition() {
        let eig = lambda_eigensystem(2.0, 2.0, 0.0).unwrap();
        assert!((eig.dark_rydberg_overlap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eigensystem_degenerate() {
        assert!(lambda_eigensystem(0.0, 0.0, 1.0).is_err());
    }

    fn dense(omega_ge: f64, omega_er: f64, delta_e: f64) -> Matrix3<f64> {
        Matrix3::new(
            0.0, omega_ge, 0.0, omega_ge, delta_e, omega_er, 0.0, omega_er, 0.0,
        )
    }

    proptest! {
        #[test]
        fn eigensystem_matches_dense_solve(
            omega_ge in 0.01f64..40.0,
            omega_er in 0.01f64..40.0,
            delta_e in -50.0f64..50.0,
        ) {
            let eig = lambda_eigensystem(omega_ge, omega_er, delta_e).unwrap();
            let m = dense(omega_ge, omega_er, delta_e);
            let mut want: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut got = vec![eig.lambda_minus, eig.lambda_0, eig.lambda_plus];
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-12 * (1.0 + w.abs()), "{got:?} vs {want:?}");
            }
            // Each returned vector is a unit eigenvector of the dense matrix.
            for (vec, lambda) in [
                (eig.dark_state, eig.lambda_0),
                (eig.bright_plus, eig.lambda_plus),
                (eig.bright_minus, eig.lambda_minus),
            ] {
                let v = nalgebra::Vector3::from(vec);
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
                let residual = (m * v - v * lambda).norm();
                prop_assert!(residual < 1e-12 * (1.0 + lambda.abs()), "residual {residual}");
            }
            prop_assert_eq!(eig.dark_state[1], 0.0);
        }

        #[test]
        fn vieta_product_on_resonance(omega_ge in 0.0f64..40.0, omega_er in 0.01f64..40.0) {
            let eig = lambda_eigensystem(omega_ge, omega_er, 0.0).unwrap();
            let want = -(omega_ge * omega_ge + omega_er * omega_er);
            prop_assert!((eig.lambda_plus * eig.lambda_minus - want).abs() < 1e-10 * want.abs());
        }

        #[test]
        fn engineered_rates_monotone(a in 0.0f64..15.0, b in 0.0f64..15.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (eg_lo, es_lo) = engineered_rates(lo, 36.0, 38.0).unwrap();
            let (eg_hi, es_hi) = engineered_rates(hi, 36.0, 38.0).unwrap();
            prop_assert!(eg_lo <= eg_hi && es_lo <= es_hi);
        }

        #[test]
        fn loss_estimate_scale_invariant(
            gamma_es in 0.0f64..50.0,
            gamma_eg in 0.1f64..50.0,
            omega_ge in 0.0f64..40.0,
            omega_er in 0.1f64..40.0,
            k in 0.1f64..10.0,
            q in 0.1f64..10.0,
        ) {
            let base = last_atom_loss_estimate(gamma_es, gamma_eg, omega_ge, omega_er).unwrap();
            let scaled = last_atom_loss_estimate(q * gamma_es, q * gamma_eg, k * omega_ge, k * omega_er).unwrap();
            prop_assert!((base - scaled).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }

    #[test]
    fn loss_estimate_values() {
        assert_eq!(last_atom_loss_estimate(18.0, 18.0, 5.0, 5.0).unwrap(), 0.25);
        assert_eq!(last_atom_loss_estimate(0.0, 38.0, 5.0, 5.0).unwrap(), 0.0);
        let p = last_atom_loss_estimate(1.0, 3.0, 100.0, 1.0).unwrap();
        let limit = 0.25 * 1e-4;
        assert!((p - limit).abs() < 1e-4 * limit);
        assert!(last_atom_loss_estimate(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(last_atom_loss_estimate(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn coherence_relaxation_values() {
        assert_eq!(coherence_relaxation_rate(0.0, 0.0).unwrap(), 0.0);
        assert!((coherence_relaxation_rate(0.003, 0.1).unwrap() - 0.2015).abs() < 1e-15);
        assert_eq!(coherence_relaxation_rate(0.003, 0.0).unwrap(), 0.0015);
        assert!(coherence_relaxation_rate(f64::NAN, 0.0).is_err());
    }
}
