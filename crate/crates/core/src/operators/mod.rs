//! Many-body operators on the product space of N four-level atoms.
//!
//! Basis convention: the local levels are encoded as digits
//! `|g> -> 0, |s> -> 1, |e> -> 2, |r> -> 3`, and atom `j` occupies base-4
//! digit `j` of a basis index (atom 0 least significant).

mod generator;
mod register;
mod sparse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generator::{
    apply_jump, channel_weights, prune_decoupled, ChannelWeight, EffectiveGenerator,
};
pub use register::{LevelSet, Register};
pub use sparse::{
    apply_effective_hamiltonian, build_damping, build_hamiltonian, build_jump_operators,
    JumpOperator, ManyBodyOperator,
};

/// Largest ensemble treated exactly.
pub const MAX_EXACT_ATOMS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Trapped ground state.
    G,
    /// Untrapped state, decoupled from the lasers.
    S,
    /// Short-lived intermediate state.
    E,
    /// Rydberg state.
    R,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::G, Level::S, Level::E, Level::R];

    /// Digit in the four-level encoding.
    pub fn digit(self) -> usize {
        match self {
            Level::G => 0,
            Level::S => 1,
            Level::E => 2,
            Level::R => 3,
        }
    }

    pub fn from_digit(d: usize) -> Option<Level> {
        Level::ALL.get(d).copied()
    }

    pub fn as_char(self) -> char {
        match self {
            Level::G => 'g',
            Level::S => 's',
            Level::E => 'e',
            Level::R => 'r',
        }
    }

    pub fn from_char(c: char) -> Option<Level> {
        match c {
            'g' => Some(Level::G),
            's' => Some(Level::S),
            'e' => Some(Level::E),
            'r' => Some(Level::R),
            _ => None,
        }
    }
}

/// Dissipative channel acting on one atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `sqrt(gamma_eg) |g><e|`
    DecayToGround,
    /// `sqrt(gamma_es) |s><e|`
    DecayToUntrapped,
    /// `sqrt(gamma_re) |e><r|`
    RydbergDecay,
    /// `sqrt(gamma_r) (2|r><r| - 1)`
    RydbergDephasing,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::DecayToGround,
        Channel::DecayToUntrapped,
        Channel::RydbergDecay,
        Channel::RydbergDephasing,
    ];

    /// `(to, from)` of the transition, `None` for dephasing.
    pub fn transition(self) -> Option<(Level, Level)> {
        match self {
            Channel::DecayToGround => Some((Level::G, Level::E)),
            Channel::DecayToUntrapped => Some((Level::S, Level::E)),
            Channel::RydbergDecay => Some((Level::E, Level::R)),
            Channel::RydbergDephasing => None,
        }
    }

    pub fn rate(self, rates: &crate::atom_model::AtomRates) -> f64 {
        match self {
            Channel::DecayToGround => rates.gamma_eg,
            Channel::DecayToUntrapped => rates.gamma_es,
            Channel::RydbergDecay => rates.gamma_re,
            Channel::RydbergDephasing => rates.gamma_r,
        }
    }
}

/// Index <-> level-string mapping of the full four-level product basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisConvention {
    pub n_atoms: usize,
}

impl BasisConvention {
    pub fn new(n_atoms: usize) -> Result<Self> {
        check_capacity("BasisConvention", n_atoms)?;
        Ok(Self { n_atoms })
    }

    pub fn dimension(&self) -> usize {
        1 << (2 * self.n_atoms)
    }

    pub fn encode(&self, levels: &[Level]) -> Result<usize> {
        if levels.len() != self.n_atoms {
            return Err(Error::Contract(format!(
                "{} levels given for {} atoms",
                levels.len(),
                self.n_atoms
            )));
        }
        Ok(levels.iter().rev().fold(0, |acc, l| acc * 4 + l.digit()))
    }

    pub fn decode(&self, index: usize) -> Vec<Level> {
        (0..self.n_atoms).map(|j| self.level(index, j)).collect()
    }

    /// Level of atom `atom` in basis state `index`.
    pub fn level(&self, index: usize, atom: usize) -> Level {
        Level::ALL[(index >> (2 * atom)) & 3]
    }

    /// Level string such as `"gre"` (atom 0 first).
    pub fn label(&self, index: usize) -> String {
        self.decode(index).into_iter().map(Level::as_char).collect()
    }

    pub fn parse(&self, label: &str) -> Result<usize> {
        let levels = label
            .chars()
            .map(|c| {
                Level::from_char(c)
                    .ok_or_else(|| Error::Input(format!("unknown level '{c}' in {label:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.encode(&levels)
    }
}

pub(crate) fn check_capacity(what: &'static str, n_atoms: usize) -> Result<()> {
    if n_atoms > MAX_EXACT_ATOMS {
        return Err(Error::Capacity {
            what,
            atoms: n_atoms,
            max: MAX_EXACT_ATOMS,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_round_trips_exhaustively() {
        for n in 0..=5 {
            let basis = BasisConvention::new(n).unwrap();
            for index in 0..basis.dimension() {
                let levels = basis.decode(index);
                assert_eq!(basis.encode(&levels).unwrap(), index);
                assert_eq!(basis.parse(&basis.label(index)).unwrap(), index);
            }
        }
    }

    #[test]
    fn atom_zero_is_least_significant() {
        let basis = BasisConvention::new(3).unwrap();
        assert_eq!(basis.parse("rgg").unwrap(), 3);
        assert_eq!(basis.parse("grg").unwrap(), 12);
        assert_eq!(basis.parse("ses").unwrap(), 1 + 2 * 4 + 16);
    }

    #[test]
    fn capacity_guard() {
        assert!(BasisConvention::new(10).is_ok());
        assert!(matches!(
            BasisConvention::new(11),
            Err(Error::Capacity { .. })
        ));
    }
}
