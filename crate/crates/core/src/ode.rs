//! Adaptive Dormand–Prince 5(4) stepper over fixed-size states.
//!
//! The stepper advances one accepted step per call so that callers can carry
//! state between steps (orientation references, section filters, output
//! strides) without threading it through the right-hand side.

use serde::{Deserialize, Serialize};

use crate::error::IntegrationError;

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

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on `|h|`.
    pub h_max: f64,
    /// Overrides the norm-based initial step heuristic.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl StepOptions {
    pub fn with_tol(tol: f64) -> Self {
        StepOptions {
            atol: tol,
            rtol: tol,
            ..Default::default()
        }
    }

    pub fn h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    fn validate(&self) -> Result<(), IntegrationError> {
        for tol in [self.atol, self.rtol] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(IntegrationError::InvalidTolerance(tol));
            }
        }
        if !(self.h_max > 0.0) {
            return Err(IntegrationError::InvalidTolerance(self.h_max));
        }
        Ok(())
    }
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            atol: 1e-8,
            rtol: 1e-8,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, other: Self) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

/// Failure of a single step: either the integrator itself or the user RHS.
#[derive(Debug, Clone, PartialEq)]
pub enum StepError<E> {
    Integration(IntegrationError),
    Rhs { t: f64, error: E },
}

impl<E: std::fmt::Display> From<StepError<E>> for IntegrationError {
    fn from(e: StepError<E>) -> Self {
        match e {
            StepError::Integration(e) => e,
            StepError::Rhs { t, error } => IntegrationError::Rhs {
                t,
                reason: error.to_string(),
            },
        }
    }
}

pub struct Dopri5<const N: usize> {
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h: f64,
    t_end: f64,
    dir: f64,
    opts: StepOptions,
    stats: StepStats,
    last_rejected: bool,
    h_initial: f64,
}

impl<const N: usize> Dopri5<N> {
    pub fn new<E, F>(
        rhs: &mut F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        opts: StepOptions,
    ) -> Result<Self, StepError<E>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        opts.validate().map_err(StepError::Integration)?;
        if !y0.iter().all(|v| v.is_finite()) || !t0.is_finite() || !t_end.is_finite() {
            return Err(StepError::Integration(IntegrationError::NonFinite { t: t0 }));
        }
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let f = rhs(t0, &y0).map_err(|error| StepError::Rhs { t: t0, error })?;
        let mut stepper = Dopri5 {
            t: t0,
            y: y0,
            f,
            h: 0.0,
            t_end,
            dir,
            opts,
            stats: StepStats {
                rhs_evals: 1,
                ..Default::default()
            },
            last_rejected: false,
            h_initial: 0.0,
        };
        if t_end != t0 {
            let h = match opts.h_init {
                Some(h) => h.abs().min(opts.h_max),
                None => stepper.initial_step(rhs)?,
            };
            stepper.h = dir * h;
            stepper.h_initial = h;
        }
        Ok(stepper)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Right-hand side at the current state.
    pub fn derivative(&self) -> &[f64; N] {
        &self.f
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn initial_step_size(&self) -> f64 {
        self.h_initial
    }

    pub fn is_done(&self) -> bool {
        self.t == self.t_end
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    /// Norm-based starting step (Hairer, Nørsett & Wanner, II.4).
    fn initial_step<E, F>(&mut self, rhs: &mut F) -> Result<f64, StepError<E>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        let n = N as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sk = self.scale(self.y[i], 0.0);
            d0 += (self.y[i] / sk).powi(2);
            d1 += (self.f[i] / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(self.opts.h_max).min((self.t_end - self.t).abs());
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = self.y[i] + self.dir * h0 * self.f[i];
        }
        let t1 = self.t + self.dir * h0;
        let f1 = rhs(t1, &y1).map_err(|error| StepError::Rhs { t: t1, error })?;
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for i in 0..N {
            let sk = self.scale(self.y[i], 0.0);
            d2 += ((f1[i] - self.f[i]) / sk).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        Ok((100.0 * h0).min(h1).min(self.opts.h_max))
    }

    /// Advances by one accepted step. Returns `Ok(false)` once `t_end` was reached.
    pub fn step<E, F>(&mut self, rhs: &mut F) -> Result<bool, StepError<E>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        if self.is_done() {
            return Ok(false);
        }
        loop {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(StepError::Integration(IntegrationError::TooManySteps {
                    t: self.t,
                    max_steps: self.opts.max_steps,
                }));
            }
            let mut h = self.h.abs().min(self.opts.h_max);
            let remaining = (self.t_end - self.t).abs();
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) && !last {
                return Err(StepError::Integration(IntegrationError::StepUnderflow {
                    t: self.t,
                    h,
                }));
            }
            let hs = self.dir * h;

            let (y_new, f_new, err) = self.attempt(rhs, hs)?;
            self.stats.rhs_evals += 6;

            if err.is_finite() && err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                let fac = if self.last_rejected { fac.min(1.0) } else { fac };
                self.t = if last { self.t_end } else { self.t + hs };
                self.y = y_new;
                self.f = f_new;
                self.h = self.dir * (h * fac).min(self.opts.h_max);
                self.stats.accepted += 1;
                self.last_rejected = false;
                return Ok(true);
            }

            self.stats.rejected += 1;
            self.last_rejected = true;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            self.h = self.dir * h * fac;
            if !err.is_finite() && h * fac <= 16.0 * f64::EPSILON * self.t.abs().max(1.0) {
                return Err(StepError::Integration(IntegrationError::NonFinite { t: self.t }));
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn attempt<E, F>(
        &self,
        rhs: &mut F,
        h: f64,
    ) -> Result<([f64; N], [f64; N], f64), StepError<E>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        let t = self.t;
        let y = &self.y;
        let k1 = &self.f;
        let mut eval = |tt: f64, yy: &[f64; N]| {
            rhs(tt, yy).map_err(|error| StepError::Rhs { t: tt, error })
        };

        let mut ys = [0.0; N];
        for i in 0..N {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = eval(t + C2 * h, &ys)?;
        for i in 0..N {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = eval(t + C3 * h, &ys)?;
        for i in 0..N {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = eval(t + C4 * h, &ys)?;
        for i in 0..N {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = eval(t + C5 * h, &ys)?;
        for i in 0..N {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = eval(t + h, &ys)?;
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = eval(t + h, &y_new)?;

        let mut sum = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.scale(y[i], y_new[i]);
            sum += (e / sk).powi(2);
        }
        let err = (sum / N as f64).sqrt();
        Ok((y_new, k7, err))
    }
}

/// Integrates to `t_end` and returns the final state and statistics.
pub fn solve<const N: usize, E, F>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: StepOptions,
) -> Result<([f64; N], StepStats), StepError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    if t_end == t0 {
        return Ok((y0, StepStats::default()));
    }
    let mut stepper = Dopri5::new(&mut rhs, t0, y0, t_end, opts)?;
    while stepper.step(&mut rhs)? {}
    Ok((*stepper.y(), stepper.stats()))
}
