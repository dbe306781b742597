use num_complex::Complex64;

use super::{check_capacity, Level};
use crate::error::{Error, Result};

/// Local levels kept per represented atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSet {
    /// All four levels, digits as in [`super::BasisConvention`].
    Full,
    /// Only the laser-coupled levels `g -> 0, e -> 1, r -> 2`. Atoms in |s>
    /// are not represented.
    Driven,
}

impl LevelSet {
    pub fn local_dim(self) -> usize {
        match self {
            LevelSet::Full => 4,
            LevelSet::Driven => 3,
        }
    }

    pub fn digit(self, level: Level) -> Option<usize> {
        match self {
            LevelSet::Full => Some(level.digit()),
            LevelSet::Driven => match level {
                Level::G => Some(0),
                Level::S => None,
                Level::E => Some(1),
                Level::R => Some(2),
            },
        }
    }

    pub fn level(self, digit: usize) -> Level {
        match self {
            LevelSet::Full => Level::ALL[digit],
            LevelSet::Driven => [Level::G, Level::E, Level::R][digit],
        }
    }
}

/// The set of atoms carried by a state vector and how their levels are
/// encoded. Atoms of the ensemble that are not represented are frozen in
/// |s>.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    levels: LevelSet,
    /// Ensemble index of the atom held in each digit (site), increasing.
    sites: Vec<usize>,
    n_atoms: usize,
    strides: Vec<usize>,
    dim: usize,
}

impl Register {
    fn with_sites(levels: LevelSet, sites: Vec<usize>, n_atoms: usize) -> Self {
        let d = levels.local_dim();
        let mut strides = Vec::with_capacity(sites.len());
        let mut dim = 1;
        for _ in &sites {
            strides.push(dim);
            dim *= d;
        }
        Self {
            levels,
            sites,
            n_atoms,
            strides,
            dim,
        }
    }

    /// All `n_atoms` atoms with four levels each.
    pub fn full(n_atoms: usize) -> Result<Self> {
        check_capacity("Register", n_atoms)?;
        Ok(Self::with_sites(
            LevelSet::Full,
            (0..n_atoms).collect(),
            n_atoms,
        ))
    }

    /// All `n_atoms` atoms restricted to the driven levels.
    pub fn driven(n_atoms: usize) -> Result<Self> {
        check_capacity("Register", n_atoms)?;
        Ok(Self::with_sites(
            LevelSet::Driven,
            (0..n_atoms).collect(),
            n_atoms,
        ))
    }

    /// Register and state vector for the product state `levels`. With
    /// [`LevelSet::Driven`], atoms in |s> are left out of the register.
    pub fn product_state(levels: &[Level], set: LevelSet) -> Result<(Self, Vec<Complex64>)> {
        let n_atoms = levels.len();
        check_capacity("Register", n_atoms)?;
        let sites: Vec<usize> = (0..n_atoms)
            .filter(|&j| set.digit(levels[j]).is_some())
            .collect();
        let reg = Self::with_sites(set, sites, n_atoms);
        let index = reg
            .sites
            .iter()
            .zip(&reg.strides)
            .map(|(&atom, &stride)| stride * set.digit(levels[atom]).expect("filtered"))
            .sum::<usize>();
        let mut psi = vec![Complex64::new(0.0, 0.0); reg.dim];
        psi[index] = Complex64::new(1.0, 0.0);
        Ok((reg, psi))
    }

    pub fn level_set(&self) -> LevelSet {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn site_of(&self, atom: usize) -> Option<usize> {
        self.sites.binary_search(&atom).ok()
    }

    /// Number of atoms not carried by the register (all in |s>).
    pub fn frozen(&self) -> usize {
        self.n_atoms - self.sites.len()
    }

    /// Digit of `site` in basis index `index`.
    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.levels.local_dim()
    }

    #[inline]
    pub fn level(&self, index: usize, site: usize) -> Level {
        self.levels.level(self.digit(index, site))
    }

    /// Components of `psi` with `site` in `level`, as a vector over the
    /// register without that site.
    pub fn extract(
        &self,
        psi: &[Complex64],
        site: usize,
        level: Level,
    ) -> Result<(Register, Vec<Complex64>)> {
        let digit = self
            .levels
            .digit(level)
            .ok_or_else(|| Error::Contract(format!("level {level:?} not represented")))?;
        let d = self.levels.local_dim();
        let stride = self.strides[site];
        let block = stride * d;
        let mut out = Vec::with_capacity(self.dim / d);
        for base in (0..self.dim).step_by(block) {
            let start = base + digit * stride;
            out.extend_from_slice(&psi[start..start + stride]);
        }
        let mut sites = self.sites.clone();
        sites.remove(site);
        Ok((Self::with_sites(self.levels, sites, self.n_atoms), out))
    }

    /// Populations `[g, s, e, r]` of every atom of the ensemble, frozen atoms
    /// included. `psi` need not be normalized; the result is divided by its
    /// squared norm.
    pub fn atom_populations(&self, psi: &[Complex64]) -> Vec<[f64; 4]> {
        let mut pops = vec![[0.0; 4]; self.n_atoms];
        let mut norm = 0.0;
        for (index, amp) in psi.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            norm += p;
            for (site, &atom) in self.sites.iter().enumerate() {
                pops[atom][self.level(index, site).digit()] += p;
            }
        }
        let frozen_s = Level::S.digit();
        for (atom, pop) in pops.iter_mut().enumerate() {
            if self.site_of(atom).is_none() {
                pop[frozen_s] = 1.0;
            } else if norm > 0.0 {
                for v in pop.iter_mut() {
                    *v /= norm;
                }
            }
        }
        pops
    }

    /// Probability of each number of trapped (not |s>) atoms, `0..=n_atoms`.
    pub fn trapped_distribution(&self, psi: &[Complex64]) -> Vec<f64> {
        let mut dist = vec![0.0; self.n_atoms + 1];
        let mut norm = 0.0;
        for (index, amp) in psi.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            norm += p;
            let trapped = (0..self.sites.len())
                .filter(|&s| self.level(index, s) != Level::S)
                .count();
            dist[trapped] += p;
        }
        if norm > 0.0 {
            for v in dist.iter_mut() {
                *v /= norm;
            }
        }
        dist
    }

    /// Expected number of doubly excited Rydberg pairs.
    pub fn rydberg_pairs(&self, psi: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (index, amp) in psi.iter().enumerate() {
            let p = amp.norm_sqr();
            norm += p;
            if p == 0.0 {
                continue;
            }
            let k = (0..self.sites.len())
                .filter(|&s| self.level(index, s) == Level::R)
                .count();
            acc += p * (k * k.saturating_sub(1) / 2) as f64;
        }
        if norm > 0.0 {
            acc / norm
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::BasisConvention;

    #[test]
    fn product_state_matches_basis_encoding() {
        let levels = [Level::R, Level::G, Level::E];
        let (reg, psi) = Register::product_state(&levels, LevelSet::Full).unwrap();
        let idx = BasisConvention::new(3).unwrap().encode(&levels).unwrap();
        assert_eq!(psi[idx], Complex64::new(1.0, 0.0));
        assert_eq!(reg.dim(), 64);
    }

    #[test]
    fn driven_register_drops_s_atoms() {
        let (reg, psi) =
            Register::product_state(&[Level::G, Level::S, Level::R], LevelSet::Driven).unwrap();
        assert_eq!(reg.sites(), &[0, 2]);
        assert_eq!(reg.dim(), 9);
        assert_eq!(reg.frozen(), 1);
        // g on site 0 (digit 0), r on site 1 (digit 2): index 6
        assert_eq!(psi[6], Complex64::new(1.0, 0.0));
        let pops = reg.atom_populations(&psi);
        assert_eq!(pops[1], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(pops[2], [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(reg.trapped_distribution(&psi), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn extract_removes_site() {
        let reg = Register::full(2).unwrap();
        let basis = BasisConvention::new(2).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 16];
        psi[basis.parse("sg").unwrap()] = Complex64::new(0.6, 0.0);
        psi[basis.parse("sr").unwrap()] = Complex64::new(0.0, 0.8);
        let (sub, out) = reg.extract(&psi, 0, Level::S).unwrap();
        assert_eq!(sub.sites(), &[1]);
        assert_eq!(
            out,
            vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.8)
            ]
        );
    }

    #[test]
    fn rydberg_pair_count() {
        let (reg, psi) =
            Register::product_state(&[Level::R, Level::R, Level::R], LevelSet::Full).unwrap();
        assert_eq!(reg.rydberg_pairs(&psi), 3.0);
    }
}
