//! Dormand-Prince 5(4) integrator for complex vectors, with error control in
//! the scaled max-norm and the standard 4th-order continuous extension.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Error-control settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn eval(&self, t: f64, y: &[Complex64], dydt: &mut [Complex64]);
}

impl<F: Fn(f64, &[Complex64], &mut [Complex64])> Rhs for F {
    fn eval(&self, t: f64, y: &[Complex64], dydt: &mut [Complex64]) {
        self(t, y, dydt)
    }
}

/// An accepted step `[t_old, t_old + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t_old: f64,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct Dopri5 {
    tol: Tolerances,
    h_max: f64,
    h_min: f64,
    h: f64,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    y_old: Vec<Complex64>,
    last: Option<Step>,
    /// k[0] holds f at the start of the step to come.
    fsal_ready: bool,
    /// k[6] of the last step has not yet been rotated into k[0].
    rotation_pending: bool,
    rejected: usize,
    accepted: usize,
    evals: usize,
}

impl Dopri5 {
    pub fn new(dim: usize, tol: Tolerances, h_max: f64, h_min: f64) -> Self {
        let zeros = || vec![Complex64::new(0.0, 0.0); dim];
        Self {
            tol,
            h_max,
            h_min,
            h: 0.0,
            k: std::array::from_fn(|_| zeros()),
            stage: zeros(),
            y_old: zeros(),
            last: None,
            fsal_ready: false,
            rotation_pending: false,
            rejected: 0,
            accepted: 0,
            evals: 0,
        }
    }

    /// Resizes the work vectors and forgets the FSAL stage, e.g. after the
    /// state was changed discontinuously.
    pub fn restart(&mut self, dim: usize) {
        for k in &mut self.k {
            k.resize(dim, Complex64::new(0.0, 0.0));
        }
        self.stage.resize(dim, Complex64::new(0.0, 0.0));
        self.y_old.resize(dim, Complex64::new(0.0, 0.0));
        self.fsal_ready = false;
        self.rotation_pending = false;
        self.last = None;
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn evaluations(&self) -> usize {
        self.evals
    }

    pub fn last_step(&self) -> Option<Step> {
        self.last
    }

    fn error_scale(&self, a: Complex64, b: Complex64) -> f64 {
        self.tol.atol + self.tol.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&self, y: &[Complex64]) -> f64 {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for (yi, fi) in y.iter().zip(&self.k[0]) {
            let sc = self.error_scale(*yi, *yi);
            d0 = d0.max(yi.norm() / sc);
            d1 = d1.max(fi.norm() / sc);
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(self.h_max)
    }

    /// Advances `y` from `*t` by one accepted step that does not pass
    /// `t_limit`.
    pub fn step<F: Rhs>(
        &mut self,
        f: &F,
        t: &mut f64,
        y: &mut Vec<Complex64>,
        t_limit: f64,
    ) -> Result<Step> {
        if self.rotation_pending {
            self.k.swap(0, 6);
            self.rotation_pending = false;
        }
        if !self.fsal_ready {
            f.eval(*t, y, &mut self.k[0]);
            self.evals += 1;
            self.fsal_ready = true;
            if self.h <= 0.0 {
                self.h = self.initial_step(y);
            }
        }
        let mut reject_streak = false;
        loop {
            let remaining = t_limit - *t;
            if remaining <= 0.0 {
                return Err(Error::Propagation {
                    t: *t,
                    reason: format!("step requested past t_limit {t_limit}"),
                });
            }
            let mut h = self.h.min(self.h_max);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            if h < self.h_min && !clipped {
                return Err(Error::Propagation {
                    t: *t,
                    reason: format!(
                        "step size underflow: h = {h:e} < {:e} after {} rejected steps",
                        self.h_min, self.rejected
                    ),
                });
            }
            let err = self.attempt(f, *t, y, h);
            if !err.is_finite() {
                return Err(Error::Propagation {
                    t: *t,
                    reason: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                let mut fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    SAFETY * err.powf(-0.2)
                };
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if reject_streak {
                    fac = fac.min(1.0);
                }
                // A clipped final step says nothing about the natural step.
                if !clipped || fac < 1.0 {
                    self.h = h * fac;
                }
                std::mem::swap(&mut self.y_old, y);
                std::mem::swap(y, &mut self.stage);
                let step = Step { t_old: *t, h };
                *t = if clipped { t_limit } else { *t + h };
                self.last = Some(step);
                self.rotation_pending = true;
                self.accepted += 1;
                return Ok(step);
            }
            self.rejected += 1;
            reject_streak = true;
            self.h = h * (SAFETY * err.powf(-0.2)).max(FAC_MIN);
        }
    }

    /// One trial step; leaves the 5th-order solution in `stage` and `f` at
    /// it in `k[6]`. Returns the scaled error norm.
    fn attempt<F: Rhs>(&mut self, f: &F, t: f64, y: &[Complex64], h: f64) -> f64 {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let stage = &mut self.stage;

        for i in 0..y.len() {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        f.eval(t + C2 * h, stage, k2);
        for i in 0..y.len() {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f.eval(t + C3 * h, stage, k3);
        for i in 0..y.len() {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f.eval(t + C4 * h, stage, k4);
        for i in 0..y.len() {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f.eval(t + C5 * h, stage, k5);
        for i in 0..y.len() {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f.eval(t + h, stage, k6);
        for i in 0..y.len() {
            stage[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f.eval(t + h, stage, k7);
        self.evals += 6;

        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(stage[i].norm());
            err = err.max(e.norm() / sc);
        }
        err
    }

    /// Continuous extension over the last accepted step at fraction `theta`
    /// in `[0, 1]`. `y_new` is the state at the end of that step.
    pub fn interpolate(
        &self,
        theta: f64,
        y_new: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<()> {
        let Some(step) = self.last else {
            return Err(Error::Contract("no step to interpolate".into()));
        };
        if !self.rotation_pending {
            return Err(Error::Contract(
                "interpolation data already consumed".into(),
            ));
        }
        let h = step.h;
        let theta1 = 1.0 - theta;
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        for i in 0..out.len() {
            let y0 = self.y_old[i];
            let diff = y_new[i] - y0;
            let bspl = h * k1[i] - diff;
            let r4 = diff - h * k7[i] - bspl;
            let r5 =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            out[i] = y0 + theta * (diff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
        }
        Ok(())
    }

    /// State at the start of the last accepted step.
    pub fn previous_state(&self) -> &[Complex64] {
        &self.y_old
    }
}
