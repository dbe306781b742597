//! Matrix-free action of the effective Hamiltonian and of the jump
//! operators on a [`Register`].

use num_complex::Complex64;

use super::{Channel, Level, LevelSet, Register};
use crate::atom_model::AtomRates;
use crate::error::{Error, Result};
use crate::geometry::EnsembleGeometry;

#[inline(always)]
fn minus_i(z: Complex64) -> Complex64 {
    Complex64::new(z.im, -z.re)
}

/// `K = -i H - L^2 / 2` on a register. The diagonal (detuning, pair shifts
/// and damping) is precomputed; the laser couplings are generated from the
/// digit structure with the Rabi frequencies supplied per call.
#[derive(Debug, Clone)]
pub struct EffectiveGenerator {
    register: Register,
    diag: Vec<Complex64>,
    digit_g: usize,
    digit_e: usize,
    digit_r: usize,
}

impl EffectiveGenerator {
    pub fn new(
        register: &Register,
        rates: &AtomRates,
        geometry: &EnsembleGeometry,
        delta_e: f64,
    ) -> Result<Self> {
        if geometry.n_atoms() != register.n_atoms() {
            return Err(Error::Contract(format!(
                "geometry has {} atoms, register {}",
                geometry.n_atoms(),
                register.n_atoms()
            )));
        }
        let set = register.level_set();
        let sites = register.sites();
        let n_sites = sites.len();
        // Pair shifts between represented atoms, in ensemble pair order.
        let pairs: Vec<(usize, usize, f64)> = (0..n_sites)
            .flat_map(|a| ((a + 1)..n_sites).map(move |b| (a, b)))
            .map(|(a, b)| (a, b, geometry.pair_shift(sites[a], sites[b])))
            .filter(|&(_, _, s)| s != 0.0)
            .collect();
        let offset = rates.gamma_r * register.n_atoms() as f64;
        let gamma_e = rates.gamma_e_total();
        let mut levels = vec![Level::G; n_sites];
        let diag = (0..register.dim())
            .map(|index| {
                for (site, l) in levels.iter_mut().enumerate() {
                    *l = register.level(index, site);
                }
                let n_e = levels.iter().filter(|&&l| l == Level::E).count();
                let mut h = delta_e * n_e as f64;
                for &(a, b, shift) in &pairs {
                    if levels[a] == Level::R && levels[b] == Level::R {
                        h += shift;
                    }
                }
                let mut damp = offset;
                for &l in &levels {
                    match l {
                        Level::E => damp += gamma_e,
                        Level::R => damp += rates.gamma_re,
                        _ => {}
                    }
                }
                Complex64::new(-0.5 * damp, -h)
            })
            .collect();
        Ok(Self {
            register: register.clone(),
            diag,
            digit_g: set.digit(Level::G).expect("g always represented"),
            digit_e: set.digit(Level::E).expect("e always represented"),
            digit_r: set.digit(Level::R).expect("r always represented"),
        })
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn dim(&self) -> usize {
        self.register.dim()
    }

    /// Diagonal of `K`: real part `-L^2/2`, imaginary part `-H_diag`.
    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    /// `out = K psi`.
    pub fn apply(&self, omega_ge: f64, omega_er: f64, psi: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for ((o, d), p) in out.iter_mut().zip(&self.diag).zip(psi) {
            *o = d * p;
        }
        let d = self.register.level_set().local_dim();
        for &stride in self.register.strides() {
            let (og, oe, or) = (
                self.digit_g * stride,
                self.digit_e * stride,
                self.digit_r * stride,
            );
            for base in (0..self.dim()).step_by(d * stride) {
                for k in base..base + stride {
                    let pg = psi[k + og];
                    let pe = psi[k + oe];
                    let pr = psi[k + or];
                    out[k + og] += minus_i(omega_ge * pe);
                    out[k + oe] += minus_i(omega_ge * pg + omega_er * pr);
                    out[k + or] += minus_i(omega_er * pe);
                }
            }
        }
    }

    /// `out = K rho` for a row-major `dim x dim` matrix.
    pub fn apply_left(
        &self,
        omega_ge: f64,
        omega_er: f64,
        rho: &[Complex64],
        out: &mut [Complex64],
    ) {
        let n = self.dim();
        debug_assert_eq!(rho.len(), n * n);
        for (row, d) in self.diag.iter().enumerate() {
            let r = row * n..(row + 1) * n;
            for (o, p) in out[r.clone()].iter_mut().zip(&rho[r]) {
                *o = d * p;
            }
        }
        let d = self.register.level_set().local_dim();
        for &stride in self.register.strides() {
            let (og, oe, or) = (
                self.digit_g * stride,
                self.digit_e * stride,
                self.digit_r * stride,
            );
            for base in (0..n).step_by(d * stride) {
                for k in base..base + stride {
                    let (ig, ie, ir) = ((k + og) * n, (k + oe) * n, (k + or) * n);
                    for c in 0..n {
                        let pg = rho[ig + c];
                        let pe = rho[ie + c];
                        let pr = rho[ir + c];
                        out[ig + c] += minus_i(omega_ge * pe);
                        out[ie + c] += minus_i(omega_ge * pg + omega_er * pr);
                        out[ir + c] += minus_i(omega_er * pe);
                    }
                }
            }
        }
    }
}

/// Probability weight `<psi|L^dag L|psi>` of one jump channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelWeight {
    pub atom: usize,
    pub channel: Channel,
    pub weight: f64,
}

/// Squared norm of `psi` and the mass of every (site, digit).
fn level_masses(register: &Register, psi: &[Complex64]) -> (f64, Vec<[f64; 4]>) {
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let d = register.level_set().local_dim();
    let masses = register
        .strides()
        .iter()
        .map(|&stride| {
            let mut m = [0.0; 4];
            for base in (0..register.dim()).step_by(d * stride) {
                for (digit, slot) in m.iter_mut().enumerate().take(d) {
                    let start = base + digit * stride;
                    for z in &psi[start..start + stride] {
                        *slot += z.norm_sqr();
                    }
                }
            }
            m
        })
        .collect();
    (norm, masses)
}

/// Weights of every channel with non-zero rate, ordered by atom and then by
/// [`Channel::ALL`]. Atoms frozen in |s> still carry the dephasing weight.
/// The weights sum to `<psi|L^2|psi>`.
pub fn channel_weights(
    register: &Register,
    psi: &[Complex64],
    rates: &AtomRates,
) -> Vec<ChannelWeight> {
    let (norm, masses) = level_masses(register, psi);
    let set = register.level_set();
    let mut out = Vec::with_capacity(4 * register.n_atoms());
    for atom in 0..register.n_atoms() {
        let site = register.site_of(atom);
        let mass = |level: Level| match (site, set.digit(level)) {
            (Some(s), Some(d)) => masses[s][d],
            _ => 0.0,
        };
        for channel in Channel::ALL {
            let rate = channel.rate(rates);
            if rate == 0.0 {
                continue;
            }
            let weight = match channel.transition() {
                Some((_, from)) => rate * mass(from),
                None => rate * norm,
            };
            out.push(ChannelWeight {
                atom,
                channel,
                weight,
            });
        }
    }
    out
}

/// Applies the jump operator of `channel` on `atom` (without the rate
/// prefactor) and normalizes. A decay into |s> removes the atom from a
/// [`LevelSet::Driven`] register.
pub fn apply_jump(
    register: &Register,
    psi: &[Complex64],
    atom: usize,
    channel: Channel,
) -> Result<(Register, Vec<Complex64>)> {
    let site = register.site_of(atom);
    let set = register.level_set();
    let (reg, mut out) = match (channel.transition(), site) {
        (None, None) => (register.clone(), psi.iter().map(|z| -z).collect()),
        (None, Some(s)) => {
            let d = set.local_dim();
            let stride = register.strides()[s];
            let dr = set.digit(Level::R).expect("r represented");
            let mut out = psi.to_vec();
            for base in (0..register.dim()).step_by(d * stride) {
                for digit in (0..d).filter(|&g| g != dr) {
                    let start = base + digit * stride;
                    for z in &mut out[start..start + stride] {
                        *z = -*z;
                    }
                }
            }
            (register.clone(), out)
        }
        (Some((to, from)), Some(s)) => match set.digit(to) {
            Some(dt) => {
                let df = set.digit(from).expect("from-level represented");
                let d = set.local_dim();
                let stride = register.strides()[s];
                let mut out = vec![Complex64::new(0.0, 0.0); register.dim()];
                for base in (0..register.dim()).step_by(d * stride) {
                    let (src, dst) = (base + df * stride, base + dt * stride);
                    out[dst..dst + stride].copy_from_slice(&psi[src..src + stride]);
                }
                (register.clone(), out)
            }
            None => register.extract(psi, s, from)?,
        },
        (Some(_), None) => {
            return Err(Error::Contract(format!(
                "decay channel {channel:?} on atom {atom}, which is frozen in |s>"
            )))
        }
    };
    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Contract(format!(
            "jump {channel:?} on atom {atom} annihilates the state"
        )));
    }
    let inv = 1.0 / norm;
    for z in &mut out {
        *z *= inv;
    }
    Ok((reg, out))
}

/// Restricts a state in which `atom` is sharply in |s> to the register
/// without that atom.
pub fn prune_decoupled(
    register: &Register,
    psi: &[Complex64],
    atom: usize,
) -> Result<(Register, Vec<Complex64>)> {
    let site = register
        .site_of(atom)
        .ok_or_else(|| Error::Contract(format!("atom {atom} is already pruned")))?;
    if register.level_set() != LevelSet::Full {
        return Err(Error::Contract(
            "pruning needs a register that represents |s>".into(),
        ));
    }
    let pops = register.atom_populations(psi);
    let s_pop = pops[atom][Level::S.digit()];
    if (1.0 - s_pop).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "atom {atom} is not sharply in |s> (population {s_pop})"
        )));
    }
    register.extract(psi, site, Level::S)
}
