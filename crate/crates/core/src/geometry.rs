//! Atom positions and the pairwise van der Waals shifts of doubly excited
//! Rydberg configurations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on any pair shift (us^-1). A pair shifted by this much is
/// fully blockaded; larger values only make the dynamics stiffer.
pub const PAIR_SHIFT_CAP: f64 = 1.0e6;

/// Default trap size (um).
pub const DEFAULT_BOX_SIDE: f64 = 2.0;

/// Default minimum separation between sampled atoms (um).
pub const DEFAULT_MIN_SEPARATION: f64 = 0.2;

/// Default interaction coefficient (us^-1 um^6). Smallest round value with
/// `Delta(d) >= 10 w_max` across the full diagonal of the default cube for
/// every preset, see [`minimum_c6`].
pub const DEFAULT_C6: f64 = 1.3e6;

const MAX_REJECTION_ROUNDS: usize = 10_000;

/// Atom positions (optional) and the symmetric matrix of pair shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleGeometry {
    n_atoms: usize,
    /// Positions in um; absent for position-independent interactions.
    positions: Option<Vec<[f64; 3]>>,
    c6: Option<f64>,
    /// Row-major `n_atoms x n_atoms`, zero diagonal.
    pair_shifts: Vec<f64>,
}

impl EnsembleGeometry {
    /// Builds the geometry for explicit positions.
    pub fn from_positions(positions: Vec<[f64; 3]>, c6: f64) -> Result<Self> {
        if !c6.is_finite() || c6 < 0.0 {
            return Err(Error::domain(
                "EnsembleGeometry",
                format!("c6 = {c6} must be >= 0"),
            ));
        }
        let n = positions.len();
        let mut pair_shifts = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance(&positions[i], &positions[j]);
                if d == 0.0 {
                    return Err(Error::domain(
                        "EnsembleGeometry",
                        format!("atoms {i} and {j} coincide"),
                    ));
                }
                let shift = van_der_waals_shift(c6, d);
                pair_shifts[i * n + j] = shift;
                pair_shifts[j * n + i] = shift;
            }
        }
        Ok(Self {
            n_atoms: n,
            positions: Some(positions),
            c6: Some(c6),
            pair_shifts,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn c6(&self) -> Option<f64> {
        self.c6
    }

    pub fn pair_shift(&self, i: usize, j: usize) -> f64 {
        self.pair_shifts[i * self.n_atoms + j]
    }

    /// Iterates `(i, j, shift)` over pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_atoms;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.pair_shift(i, j))))
    }

    pub fn max_pair_shift(&self) -> f64 {
        self.pairs().map(|(_, _, s)| s).fold(0.0, f64::max)
    }

    /// Smallest pair shift, `None` for fewer than two atoms.
    pub fn min_pair_shift(&self) -> Option<f64> {
        self.pairs().map(|(_, _, s)| s).reduce(f64::min)
    }

    /// Smallest pairwise distance, when positions are known.
    pub fn min_distance(&self) -> Option<f64> {
        let p = self.positions.as_ref()?;
        let n = p.len();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| distance(&p[i], &p[j]))
            .reduce(f64::min)
    }

    /// Clamps every pair shift to at most `cap`. Shifts far above the
    /// excitation linewidth all block equally, but set the stiffness of the
    /// equations of motion.
    pub fn with_shift_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::domain(
                "EnsembleGeometry",
                format!("shift cap {cap} must be > 0"),
            ));
        }
        for s in &mut self.pair_shifts {
            *s = s.min(cap);
        }
        Ok(self)
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `C6 / d^6`, capped at [`PAIR_SHIFT_CAP`].
pub fn van_der_waals_shift(c6: f64, d: f64) -> f64 {
    (c6 / d.powi(6)).min(PAIR_SHIFT_CAP)
}

/// Places `n` atoms uniformly in a cube of side `box_side`, redrawing the
/// whole configuration until every pair is at least `min_separation` apart.
pub fn sample_positions<R: Rng + ?Sized>(
    n: usize,
    box_side: f64,
    min_separation: f64,
    c6: f64,
    rng: &mut R,
) -> Result<EnsembleGeometry> {
    if !box_side.is_finite() || box_side <= 0.0 {
        return Err(Error::domain(
            "sample_positions",
            format!("box_side = {box_side} must be > 0"),
        ));
    }
    if !min_separation.is_finite() || min_separation < 0.0 {
        return Err(Error::domain(
            "sample_positions",
            format!("min_separation = {min_separation} must be >= 0"),
        ));
    }
    let mut positions = Vec::with_capacity(n);
    for _ in 0..MAX_REJECTION_ROUNDS {
        positions.clear();
        positions.extend((0..n).map(|_| {
            [
                rng.random::<f64>() * box_side,
                rng.random::<f64>() * box_side,
                rng.random::<f64>() * box_side,
            ]
        }));
        let ok = (0..n).all(|i| {
            ((i + 1)..n).all(|j| distance(&positions[i], &positions[j]) >= min_separation)
        });
        if ok {
            return EnsembleGeometry::from_positions(positions, c6);
        }
    }
    Err(Error::Sampling {
        atoms: n,
        box_side,
        min_separation,
        rounds: MAX_REJECTION_ROUNDS,
    })
}

/// Distance at which the pair shift equals the excitation linewidth.
pub fn blockade_distance(c6: f64, w_max: f64) -> Result<f64> {
    if !(c6.is_finite() && c6 > 0.0 && w_max.is_finite() && w_max > 0.0) {
        return Err(Error::domain(
            "blockade_distance",
            format!("c6 = {c6} and w_max = {w_max} must both be > 0"),
        ));
    }
    Ok((c6 / w_max).powf(1.0 / 6.0))
}

/// Smallest `C6` for which every pair inside a cube of side `box_side` is
/// shifted by at least `factor * w_max`.
pub fn minimum_c6(w_max: f64, box_side: f64, factor: f64) -> f64 {
    let diagonal = 3f64.sqrt() * box_side;
    factor * w_max * diagonal.powi(6)
}

/// All-to-all interaction of strength `delta_uniform` without positions.
pub fn uniform_blockade_geometry(n: usize, delta_uniform: f64) -> Result<EnsembleGeometry> {
    if !delta_uniform.is_finite() || delta_uniform < 0.0 {
        return Err(Error::domain(
            "uniform_blockade_geometry",
            format!("delta_uniform = {delta_uniform} must be >= 0"),
        ));
    }
    let shift = delta_uniform.min(PAIR_SHIFT_CAP);
    let mut pair_shifts = vec![shift; n * n];
    for i in 0..n {
        pair_shifts[i * n + i] = 0.0;
    }
    Ok(EnsembleGeometry {
        n_atoms: n,
        positions: None,
        c6: None,
        pair_shifts,
    })
}
