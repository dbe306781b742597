//! Laser drive schedule: a constant coupling field on e-r and a smooth probe
//! pulse on g-e, switched on after it (counterintuitive order).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::atom_model::{excitation_linewidth, lambda_eigensystem};
use crate::error::{Error, Result};

/// Smallest allowed ratio of the probe peak to the coupling field.
pub const MIN_PEAK_RATIO: f64 = 5.0;

/// Step of the central difference used for the adiabaticity margin (us).
pub const MARGIN_FD_STEP: f64 = 1e-3;

const TANH_STEEPNESS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampKind {
    SineSquared,
    Tanh,
}

impl RampKind {
    /// Monotone ramp from 0 at `u = 0` to 1 at `u = 1`.
    fn profile(self, u: f64) -> f64 {
        match self {
            RampKind::SineSquared => {
                let s = (FRAC_PI_2 * u).sin();
                s * s
            }
            RampKind::Tanh => {
                let a = TANH_STEEPNESS;
                0.5 * ((a * (2.0 * u - 1.0)).tanh() / a.tanh() + 1.0)
            }
        }
    }
}

/// Instantaneous drive parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub omega_ge: f64,
    pub omega_er: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// Coupling-field Rabi frequency, constant over the whole protocol.
    pub omega_er_level: f64,
    pub omega_ge_peak: f64,
    pub t_start_ge: f64,
    pub t_rise: f64,
    pub t_hold: f64,
    pub t_fall: f64,
    pub ramp_kind: RampKind,
    /// Detuning of |e>, constant.
    pub delta_e_level: f64,
    pub total_duration: f64,
}

impl PulseSchedule {
    /// Constant coupling field with the probe switched off.
    pub fn coupling_only(omega_er_level: f64, delta_e_level: f64, total_duration: f64) -> Self {
        Self {
            omega_er_level,
            omega_ge_peak: 0.0,
            t_start_ge: 0.0,
            t_rise: 0.0,
            t_hold: 0.0,
            t_fall: 0.0,
            ramp_kind: RampKind::SineSquared,
            delta_e_level,
            total_duration,
        }
    }

    /// End of the probe pulse.
    pub fn t_end_ge(&self) -> f64 {
        self.t_start_ge + self.t_rise + self.t_hold + self.t_fall
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = [
            ("omega_er_level", self.omega_er_level),
            ("omega_ge_peak", self.omega_ge_peak),
            ("t_start_ge", self.t_start_ge),
            ("t_rise", self.t_rise),
            ("t_hold", self.t_hold),
            ("t_fall", self.t_fall),
            ("total_duration", self.total_duration),
        ];
        for (name, v) in finite_nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Schedule(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        if !self.delta_e_level.is_finite() {
            return Err(Error::Schedule("delta_e_level must be finite".into()));
        }
        if self.total_duration <= 0.0 {
            return Err(Error::Schedule("total_duration must be > 0".into()));
        }
        if self.omega_ge_peak > 0.0 {
            if self.t_rise <= 0.0 || self.t_fall <= 0.0 {
                return Err(Error::Schedule(
                    "probe pulse needs t_rise > 0 and t_fall > 0".into(),
                ));
            }
            if self.omega_ge_peak < MIN_PEAK_RATIO * self.omega_er_level {
                return Err(Error::Schedule(format!(
                    "omega_ge_peak = {} must be at least {MIN_PEAK_RATIO} x omega_er_level = {}",
                    self.omega_ge_peak, self.omega_er_level
                )));
            }
        }
        if self.t_end_ge() > self.total_duration * (1.0 + 1e-12) {
            return Err(Error::Schedule(format!(
                "probe pulse ends at {} after total_duration {}",
                self.t_end_ge(),
                self.total_duration
            )));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.total_duration).contains(&t) {
            return Err(Error::domain(
                "PulseSchedule",
                format!("t = {t} outside [0, {}]", self.total_duration),
            ));
        }
        Ok(())
    }

    /// Probe Rabi frequency at `t`.
    pub fn omega_ge(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.omega_ge_unchecked(t))
    }

    /// Probe Rabi frequency without the range check; zero outside the pulse.
    pub fn omega_ge_unchecked(&self, t: f64) -> f64 {
        if self.omega_ge_peak == 0.0 {
            return 0.0;
        }
        let rise_end = self.t_start_ge + self.t_rise;
        let fall_start = rise_end + self.t_hold;
        let fall_end = fall_start + self.t_fall;
        if t <= self.t_start_ge || t >= fall_end {
            0.0
        } else if t < rise_end {
            self.omega_ge_peak * self.ramp_kind.profile((t - self.t_start_ge) / self.t_rise)
        } else if t <= fall_start {
            self.omega_ge_peak
        } else {
            self.omega_ge_peak * self.ramp_kind.profile((fall_end - t) / self.t_fall)
        }
    }

    pub fn omega_er(&self, _t: f64) -> f64 {
        self.omega_er_level
    }

    pub fn drive(&self, t: f64) -> Drive {
        Drive {
            omega_ge: self.omega_ge_unchecked(t),
            omega_er: self.omega_er_level,
            delta_e: self.delta_e_level,
        }
    }

    /// Largest two-photon linewidth over the schedule (reached at the probe
    /// peak, the linewidth grows with `omega_ge`).
    pub fn max_linewidth(&self, gamma_e_total: f64) -> Result<f64> {
        excitation_linewidth(self.omega_ge_peak, self.omega_er_level, gamma_e_total)
    }

    fn omega0(&self, t: f64) -> f64 {
        self.omega_ge_unchecked(t).hypot(self.omega_er_level)
    }

    /// `|d omega_0/dt| / (omega_0 min|lambda_pm|)`; small values mean the
    /// dark state is followed adiabatically.
    pub fn adiabaticity_margin(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let omega0 = self.omega0(t);
        if omega0 == 0.0 {
            return Err(Error::domain(
                "adiabaticity_margin",
                format!("omega_0 vanishes at t = {t}"),
            ));
        }
        let lo = (t - MARGIN_FD_STEP).max(0.0);
        let hi = (t + MARGIN_FD_STEP).min(self.total_duration);
        let derivative = (self.omega0(hi) - self.omega0(lo)) / (hi - lo);
        let d = self.drive(t);
        let eig = lambda_eigensystem(d.omega_ge, d.omega_er, d.delta_e)?;
        let gap = eig.lambda_plus.abs().min(eig.lambda_minus.abs());
        Ok(derivative.abs() / (omega0 * gap))
    }

    /// Largest margin over `points` equally spaced times.
    pub fn max_adiabaticity_margin(&self, points: usize) -> Result<f64> {
        let points = points.max(2);
        (0..points)
            .map(|k| self.adiabaticity_margin(self.total_duration * k as f64 / (points - 1) as f64))
            .try_fold(0.0f64, |acc, m| Ok(acc.max(m?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(kind: RampKind) -> PulseSchedule {
        PulseSchedule {
            omega_er_level: 5.0,
            omega_ge_peak: 30.0,
            t_start_ge: 0.5,
            t_rise: 1.0,
            t_hold: 0.5,
            t_fall: 1.0,
            ramp_kind: kind,
            delta_e_level: 0.0,
            total_duration: 3.5,
        }
    }

    #[test]
    fn probe_shape_landmarks() {
        for kind in [RampKind::SineSquared, RampKind::Tanh] {
            let s = schedule(kind);
            s.validate().unwrap();
            assert_eq!(s.omega_ge(0.0).unwrap(), 0.0);
            assert_eq!(s.omega_ge(0.3).unwrap(), 0.0);
            assert!((s.omega_ge(1.5).unwrap() - 30.0).abs() < 1e-12);
            assert_eq!(s.omega_ge(1.8).unwrap(), 30.0);
            assert_eq!(s.omega_ge(3.5).unwrap(), 0.0);
            assert!(s.omega_ge(3.6).is_err());
            assert!(s.omega_ge(-0.1).is_err());
        }
        let s = schedule(RampKind::SineSquared);
        assert!((s.omega_ge(1.0).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn probe_is_continuous() {
        let s = schedule(RampKind::SineSquared);
        let n = 35_000;
        let mut last = s.omega_ge(0.0).unwrap();
        for k in 1..=n {
            let v = s.omega_ge(3.5 * k as f64 / n as f64).unwrap();
            assert!((v - last).abs() < 0.01, "jump at step {k}");
            last = v;
        }
    }

    #[test]
    fn counterintuitive_order_and_constant_coupling() {
        let s = schedule(RampKind::SineSquared);
        assert!(s.omega_er(0.0) > 0.0);
        assert_eq!(s.omega_ge(0.0).unwrap(), 0.0);
        for k in 0..=10 {
            assert_eq!(s.omega_er(0.35 * k as f64), 5.0);
        }
    }

    #[test]
    fn validation() {
        let mut s = schedule(RampKind::SineSquared);
        s.omega_ge_peak = 20.0;
        assert!(s.validate().is_err(), "peak ratio 4 < 5");
        let mut s = schedule(RampKind::SineSquared);
        s.total_duration = 2.0;
        assert!(s.validate().is_err());
        let mut s = schedule(RampKind::SineSquared);
        s.t_rise = 0.0;
        assert!(s.validate().is_err());
        PulseSchedule::coupling_only(5.0, 0.0, 1.0)
            .validate()
            .unwrap();
    }

    #[test]
    fn constant_fields_have_zero_margin() {
        let s = PulseSchedule::coupling_only(5.0, 0.0, 2.0);
        for t in [0.0, 0.7, 2.0] {
            assert_eq!(s.adiabaticity_margin(t).unwrap(), 0.0);
        }
        let off = PulseSchedule::coupling_only(0.0, 0.0, 2.0);
        assert!(off.adiabaticity_margin(1.0).is_err());
    }

    #[test]
    fn margin_scales_inversely_with_rise_time() {
        let mut slow = schedule(RampKind::SineSquared);
        slow.t_rise = 2.0;
        slow.total_duration = 4.5;
        let mut fast = slow;
        fast.t_rise = 0.5;
        let m_slow = slow
            .adiabaticity_margin(slow.t_start_ge + 0.5 * slow.t_rise)
            .unwrap();
        let m_fast = fast
            .adiabaticity_margin(fast.t_start_ge + 0.5 * fast.t_rise)
            .unwrap();
        // Same instantaneous fields at mid-rise, derivative ~ 1/t_rise.
        assert!((m_fast / m_slow - 4.0).abs() < 1e-3, "{}", m_fast / m_slow);
    }
}
