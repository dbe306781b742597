//! Explicitly assembled operators on the full `4^N` basis. The propagation
//! engine uses the matrix-free [`super::EffectiveGenerator`]; these are the
//! reference forms it is checked against.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{check_capacity, BasisConvention, Channel, Level};
use crate::atom_model::AtomRates;
use crate::error::{Error, Result};
use crate::geometry::EnsembleGeometry;
use crate::pulses::PulseSchedule;

/// Sparse operator stored as `(row, col, value)` triplets. Duplicate
/// positions are summed on application.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
    hermitian: bool,
}

impl ManyBodyOperator {
    pub fn zeros(dim: usize, hermitian: bool) -> Self {
        Self {
            dim,
            entries: Vec::new(),
            hermitian,
        }
    }

    pub fn from_entries(
        dim: usize,
        entries: Vec<(usize, usize, Complex64)>,
        hermitian: bool,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::Contract(format!(
                "entry ({r}, {c}) outside dimension {dim}"
            )));
        }
        Ok(Self {
            dim,
            entries,
            hermitian,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    fn push(&mut self, row: usize, col: usize, value: Complex64) {
        if value != Complex64::new(0.0, 0.0) {
            self.entries.push((row, col, value));
        }
    }

    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != self.dim {
            return Err(Error::Contract(format!(
                "vector of length {} for operator of dimension {}",
                psi.len(),
                self.dim
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            out[r] += v * psi[c];
        }
        Ok(out)
    }

    /// `<phi|A|psi>`.
    pub fn matrix_element(&self, phi: &[Complex64], psi: &[Complex64]) -> Result<Complex64> {
        let a_psi = self.apply(psi)?;
        Ok(phi.iter().zip(&a_psi).map(|(p, a)| p.conj() * a).sum())
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::new(0.0, 0.0); self.dim]; self.dim];
        for &(r, c, v) in &self.entries {
            m[r][c] += v;
        }
        m
    }

    /// Diagonal, with off-diagonal entries ignored.
    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    /// `A^dagger A`, with entries in row-major order.
    pub fn adjoint_product(&self) -> ManyBodyOperator {
        let mut by_row: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for &(r, c, v) in &self.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for row in by_row.values() {
            for &(i, vi) in row {
                for &(j, vj) in row {
                    *acc.entry((i, j)).or_default() += vi.conj() * vj;
                }
            }
        }
        let mut out = ManyBodyOperator::zeros(self.dim, true);
        for ((i, j), v) in acc {
            out.push(i, j, v);
        }
        out
    }
}

/// `H = sum_j [Delta_e s_ee + (Omega_ge s_eg + Omega_er s_re + h.c.)] +
/// sum_{i<j} Delta_ij s_rr s_rr` at time `t`.
pub fn build_hamiltonian(
    t: f64,
    schedule: &PulseSchedule,
    geometry: &EnsembleGeometry,
) -> Result<ManyBodyOperator> {
    let n = geometry.n_atoms();
    check_capacity("build_hamiltonian", n)?;
    let omega_ge = schedule.omega_ge(t)?;
    let omega_er = schedule.omega_er(t);
    let delta_e = schedule.delta_e_level;
    let basis = BasisConvention::new(n)?;
    let mut op = ManyBodyOperator::zeros(basis.dimension(), true);
    for index in 0..basis.dimension() {
        let levels = basis.decode(index);
        let n_e = levels.iter().filter(|&&l| l == Level::E).count();
        let mut diag = delta_e * n_e as f64;
        for (i, j, shift) in geometry.pairs() {
            if levels[i] == Level::R && levels[j] == Level::R {
                diag += shift;
            }
        }
        op.push(index, index, Complex64::new(diag, 0.0));
        for (j, &level) in levels.iter().enumerate() {
            let stride = 1usize << (2 * j);
            let to = |l: Level| index - level.digit() * stride + l.digit() * stride;
            match level {
                Level::G => op.push(to(Level::E), index, Complex64::new(omega_ge, 0.0)),
                Level::E => {
                    op.push(to(Level::G), index, Complex64::new(omega_ge, 0.0));
                    op.push(to(Level::R), index, Complex64::new(omega_er, 0.0));
                }
                Level::R => op.push(to(Level::E), index, Complex64::new(omega_er, 0.0)),
                Level::S => {}
            }
        }
    }
    Ok(op)
}

/// A Lindblad generator acting on one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub atom: usize,
    pub channel: Channel,
    pub operator: ManyBodyOperator,
}

/// All single-atom Lindblad generators with non-zero rate, ordered by atom
/// and then by [`Channel::ALL`].
pub fn build_jump_operators(rates: &AtomRates, n: usize) -> Result<Vec<JumpOperator>> {
    check_capacity("build_jump_operators", n)?;
    let basis = BasisConvention::new(n)?;
    let dim = basis.dimension();
    let mut out = Vec::new();
    for atom in 0..n {
        let stride = 1usize << (2 * atom);
        for channel in Channel::ALL {
            let rate = channel.rate(rates);
            if rate == 0.0 {
                continue;
            }
            let amp = rate.sqrt();
            let mut op = ManyBodyOperator::zeros(dim, channel == Channel::RydbergDephasing);
            for index in 0..dim {
                let level = basis.level(index, atom);
                match channel.transition() {
                    Some((to, from)) => {
                        if level == from {
                            let target = index - from.digit() * stride + to.digit() * stride;
                            op.push(target, index, Complex64::new(amp, 0.0));
                        }
                    }
                    None => {
                        let sign = if level == Level::R { 1.0 } else { -1.0 };
                        op.push(index, index, Complex64::new(sign * amp, 0.0));
                    }
                }
            }
            out.push(JumpOperator {
                atom,
                channel,
                operator: op,
            });
        }
    }
    Ok(out)
}

/// Diagonal `L^2 = sum_j [(G_eg + G_es) s_ee + G_re s_rr + g_r 1]`.
pub fn build_damping(rates: &AtomRates, n: usize) -> Result<ManyBodyOperator> {
    check_capacity("build_damping", n)?;
    let basis = BasisConvention::new(n)?;
    let mut op = ManyBodyOperator::zeros(basis.dimension(), true);
    for index in 0..basis.dimension() {
        let mut v = rates.gamma_r * n as f64;
        for level in basis.decode(index) {
            match level {
                Level::E => v += rates.gamma_e_total(),
                Level::R => v += rates.gamma_re,
                _ => {}
            }
        }
        op.push(index, index, Complex64::new(v, 0.0));
    }
    Ok(op)
}

/// `-i H psi - (1/2) L^2 psi`.
pub fn apply_effective_hamiltonian(
    hamiltonian: &ManyBodyOperator,
    damping: &ManyBodyOperator,
    psi: &[Complex64],
) -> Result<Vec<Complex64>> {
    if hamiltonian.dim() != damping.dim() {
        return Err(Error::Contract(format!(
            "Hamiltonian dimension {} differs from damping dimension {}",
            hamiltonian.dim(),
            damping.dim()
        )));
    }
    let h = hamiltonian.apply(psi)?;
    let l = damping.apply(psi)?;
    Ok(h.iter()
        .zip(&l)
        .map(|(h, l)| Complex64::new(h.im, -h.re) - 0.5 * l)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom_model::lambda_eigensystem;
    use crate::geometry::uniform_blockade_geometry;
    use crate::pulses::RampKind;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_state(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    }

    fn schedule(peak: f64, er: f64, delta: f64) -> PulseSchedule {
        PulseSchedule {
            omega_er_level: er,
            omega_ge_peak: peak,
            t_start_ge: 0.0,
            t_rise: 1.0,
            t_hold: 1.0,
            t_fall: 1.0,
            ramp_kind: RampKind::SineSquared,
            delta_e_level: delta,
            total_duration: 3.0,
        }
    }

    #[test]
    fn undriven_single_atom_is_zero() {
        let h = build_hamiltonian(
            0.5,
            &PulseSchedule::coupling_only(0.0, 0.0, 1.0),
            &uniform_blockade_geometry(1, 0.0).unwrap(),
        )
        .unwrap();
        assert!(h.entries().is_empty());
    }

    #[test]
    fn single_atom_spectrum_matches_three_level_eigensystem() {
        let s = schedule(30.0, 5.0, 7.0);
        let t = 1.5;
        let h = build_hamiltonian(t, &s, &uniform_blockade_geometry(1, 0.0).unwrap()).unwrap();
        let dense = h.to_dense();
        let m = DMatrix::from_fn(4, 4, |i, j| dense[i][j]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let eig = lambda_eigensystem(30.0, 5.0, 7.0).unwrap();
        // |s> decouples with eigenvalue 0 next to the dark state.
        let mut want = vec![eig.lambda_minus, 0.0, 0.0, eig.lambda_plus];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{ev:?} vs {want:?}");
        }
    }

    #[test]
    fn pair_shift_only_on_double_rydberg() {
        let g = uniform_blockade_geometry(2, 123.0).unwrap();
        let h = build_hamiltonian(0.0, &schedule(30.0, 5.0, 0.0), &g).unwrap();
        let basis = BasisConvention::new(2).unwrap();
        let diag = h.diagonal();
        assert_eq!(diag[basis.parse("rr").unwrap()], c(123.0));
        assert_eq!(diag[basis.parse("rg").unwrap()], c(0.0));
    }

    #[test]
    fn couplings_per_basis_state_bounded() {
        let h = build_hamiltonian(
            1.5,
            &schedule(30.0, 5.0, 2.0),
            &uniform_blockade_geometry(3, 50.0).unwrap(),
        )
        .unwrap();
        let mut per_col = vec![0usize; h.dim()];
        for &(r, col, _) in h.entries() {
            if r != col {
                per_col[col] += 1;
            }
        }
        assert!(per_col.iter().all(|&k| k <= 2 * 3));
    }

    #[test]
    fn capacity_error() {
        let g = uniform_blockade_geometry(11, 1.0).unwrap();
        assert!(matches!(
            build_hamiltonian(0.0, &schedule(30.0, 5.0, 0.0), &g),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn jump_operator_count() {
        let rates = AtomRates::new(18.0, 18.0, 0.0, 0.0).unwrap();
        assert_eq!(build_jump_operators(&rates, 3).unwrap().len(), 6);
        let rates = AtomRates::new(18.0, 18.0, 0.003, 0.1).unwrap();
        assert_eq!(build_jump_operators(&rates, 3).unwrap().len(), 12);
    }

    #[test]
    fn dephasing_operator_is_unitary_up_to_rate() {
        let rates = AtomRates::new(0.0, 0.0, 0.0, 0.25).unwrap();
        let ops = build_jump_operators(&rates, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for op in &ops {
            let psi = random_state(16, &mut rng);
            let out = op.operator.apply(&psi).unwrap();
            let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn decay_weight_is_rate_times_population() {
        let rates = AtomRates::new(7.0, 3.0, 0.5, 0.0).unwrap();
        let ops = build_jump_operators(&rates, 2).unwrap();
        let basis = BasisConvention::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_state(16, &mut rng);
        for op in ops.iter().filter(|o| o.channel == Channel::DecayToGround) {
            let weight = op
                .operator
                .adjoint_product()
                .matrix_element(&psi, &psi)
                .unwrap()
                .re;
            let pop_e: f64 = (0..16)
                .filter(|&i| basis.level(i, op.atom) == Level::E)
                .map(|i| psi[i].norm_sqr())
                .sum();
            assert!((weight - 7.0 * pop_e).abs() < 1e-12);
        }
    }

    #[test]
    fn single_excited_damping_entry() {
        let rates = AtomRates::new(7.0, 3.0, 0.5, 0.2).unwrap();
        let d = build_damping(&rates, 1).unwrap().diagonal();
        assert_eq!(d[Level::E.digit()], c(7.0 + 3.0 + 0.2));
        assert!(
            build_damping(&AtomRates::new(0.0, 0.0, 0.0, 0.0).unwrap(), 2)
                .unwrap()
                .entries()
                .is_empty()
        );
    }

    #[test]
    fn ground_state_undriven_has_zero_derivative() {
        let rates = AtomRates::new(18.0, 18.0, 0.0, 0.0).unwrap();
        let h = build_hamiltonian(
            0.0,
            &PulseSchedule::coupling_only(0.0, 0.0, 1.0),
            &uniform_blockade_geometry(2, 10.0).unwrap(),
        )
        .unwrap();
        let l2 = build_damping(&rates, 2).unwrap();
        let mut psi = vec![c(0.0); 16];
        psi[0] = c(1.0);
        let d = apply_effective_hamiltonian(&h, &l2, &psi).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn pure_damping_norm_rate() {
        let rates = AtomRates::new(7.0, 3.0, 0.5, 0.2).unwrap();
        let h = ManyBodyOperator::zeros(16, true);
        let l2 = build_damping(&rates, 2).unwrap();
        let psi = random_state(16, &mut ChaCha8Rng::seed_from_u64(6));
        let d = apply_effective_hamiltonian(&h, &l2, &psi).unwrap();
        let dnorm: f64 = psi
            .iter()
            .zip(&d)
            .map(|(p, dp)| 2.0 * (p.conj() * dp).re)
            .sum();
        let want = -l2.matrix_element(&psi, &psi).unwrap().re;
        assert!((dnorm - want).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_contract_violation() {
        let h = ManyBodyOperator::zeros(4, true);
        let l2 = ManyBodyOperator::zeros(16, true);
        assert!(matches!(
            apply_effective_hamiltonian(&h, &l2, &[c(1.0); 4]),
            Err(Error::Contract(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hamiltonian_is_hermitian(seed in 0u64..10_000, t in 0.0f64..3.0, n in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = uniform_blockade_geometry(n, rng.random::<f64>() * 300.0).unwrap();
            let h = build_hamiltonian(t, &schedule(30.0, 5.0, rng.random::<f64>() * 40.0 - 20.0), &g).unwrap();
            let phi = random_state(h.dim(), &mut rng);
            let psi = random_state(h.dim(), &mut rng);
            let a = h.matrix_element(&phi, &psi).unwrap();
            let b = h.matrix_element(&psi, &phi).unwrap().conj();
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
