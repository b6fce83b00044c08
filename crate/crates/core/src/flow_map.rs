//! Flow map `F_{t0}^{t1}` and its gradient `DF_{t0}^{t1}`.
//!
//! The gradient is obtained from the equation of variations
//! `d/dt DF = Du(F(x0), t) DF`, integrated together with the trajectory as one
//! 12-dimensional system under a shared error control.

use std::convert::Infallible;

use serde::{Deserialize, Serialize};

use crate::error::IntegrationError;
use crate::ode::{solve, Dopri5, StepOptions, StepStats};
use crate::velocity::{Mat3, Vec3, VelocityField};

/// Default absolute and relative tolerance of every integration.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub x0: Vec3,
    pub t0: f64,
    pub t1: f64,
    pub x1: Vec3,
    /// Deformation gradient, row `i` column `j` is `d x1_i / d x0_j`.
    pub df: Mat3,
    pub stats: StepStats,
    /// First trial step chosen by the starting heuristic (0 for an empty horizon).
    pub h_initial: f64,
}

fn position_rhs(field: &VelocityField) -> impl FnMut(f64, &[f64; 3]) -> Result<[f64; 3], Infallible> + '_ {
    move |t, y| {
        let u = field.velocity_unchecked(&Vec3::new(y[0], y[1], y[2]), t);
        Ok([u[0], u[1], u[2]])
    }
}

fn variational_rhs(
    field: &VelocityField,
) -> impl FnMut(f64, &[f64; 12]) -> Result<[f64; 12], Infallible> + '_ {
    move |t, y| {
        let (u, du) = field.velocity_and_gradient_unchecked(&Vec3::new(y[0], y[1], y[2]), t);
        let mut out = [0.0; 12];
        out[0] = u[0];
        out[1] = u[1];
        out[2] = u[2];
        // DF stored row-major in y[3..12]
        for i in 0..3 {
            for j in 0..3 {
                out[3 + 3 * i + j] = du[(i, 0)] * y[3 + j] + du[(i, 1)] * y[6 + j] + du[(i, 2)] * y[9 + j];
            }
        }
        Ok(out)
    }
}

fn check_inputs(x0: &Vec3, t0: f64, t1: f64) -> Result<(), IntegrationError> {
    if x0.iter().all(|v| v.is_finite()) && t0.is_finite() && t1.is_finite() {
        Ok(())
    } else {
        Err(IntegrationError::NonFinite { t: t0 })
    }
}

fn finite_or_err<const N: usize>(y: &[f64; N], t: f64) -> Result<(), IntegrationError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IntegrationError::NonFinite { t })
    }
}

/// Final position `x(t1; t0, x0)`.
pub fn advect(
    field: &VelocityField,
    x0: &Vec3,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Vec3, IntegrationError> {
    advect_with(field, x0, t0, t1, StepOptions::with_tol(tol)).map(|(x, _)| x)
}

pub fn advect_with(
    field: &VelocityField,
    x0: &Vec3,
    t0: f64,
    t1: f64,
    opts: StepOptions,
) -> Result<(Vec3, StepStats), IntegrationError> {
    check_inputs(x0, t0, t1)?;
    let (y, stats) = solve(position_rhs(field), t0, [x0[0], x0[1], x0[2]], t1, opts)?;
    finite_or_err(&y, t1)?;
    Ok((Vec3::new(y[0], y[1], y[2]), stats))
}

/// Final position together with the deformation gradient.
pub fn advect_with_variations(
    field: &VelocityField,
    x0: &Vec3,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<FlowSample, IntegrationError> {
    check_inputs(x0, t0, t1)?;
    let opts = StepOptions::with_tol(tol);
    let mut y0 = [0.0; 12];
    y0[..3].copy_from_slice(x0.as_slice());
    y0[3] = 1.0;
    y0[7] = 1.0;
    y0[11] = 1.0;
    if t1 == t0 {
        return Ok(FlowSample {
            x0: *x0,
            t0,
            t1,
            x1: *x0,
            df: Mat3::identity(),
            stats: StepStats::default(),
            h_initial: 0.0,
        });
    }
    let mut rhs = variational_rhs(field);
    let mut stepper = Dopri5::new(&mut rhs, t0, y0, t1, opts)?;
    while stepper.step(&mut rhs)? {}
    let y = stepper.y();
    finite_or_err(y, t1)?;
    Ok(FlowSample {
        x0: *x0,
        t0,
        t1,
        x1: Vec3::new(y[0], y[1], y[2]),
        df: Mat3::from_row_slice(&y[3..12]),
        stats: stepper.stats(),
        h_initial: stepper.initial_step_size(),
    })
}

/// Central-difference approximation of `DF` from six auxiliary trajectories
/// displaced by `+-delta` along the coordinate axes.
pub fn finite_difference_gradient(
    field: &VelocityField,
    x0: &Vec3,
    t0: f64,
    t1: f64,
    delta: f64,
    tol: f64,
) -> Result<Mat3, IntegrationError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(IntegrationError::InvalidArgument(format!(
            "finite-difference displacement must be positive, got {delta}"
        )));
    }
    let mut df = Mat3::zeros();
    for j in 0..3 {
        let mut plus = *x0;
        let mut minus = *x0;
        plus[j] += delta;
        minus[j] -= delta;
        let xp = advect(field, &plus, t0, t1, tol)?;
        let xm = advect(field, &minus, t0, t1, tol)?;
        df.set_column(j, &((xp - xm) / (2.0 * delta)));
    }
    Ok(df)
}

/// Integrates a trajectory and reports every accepted step point `(t, x)`,
/// starting with the initial point. Positions are unwrapped.
pub fn trace_trajectory<O>(
    field: &VelocityField,
    x0: &Vec3,
    t0: f64,
    t1: f64,
    tol: f64,
    mut observer: O,
) -> Result<StepStats, IntegrationError>
where
    O: FnMut(f64, &Vec3),
{
    check_inputs(x0, t0, t1)?;
    observer(t0, x0);
    if t1 == t0 {
        return Ok(StepStats::default());
    }
    let mut rhs = position_rhs(field);
    let mut stepper = Dopri5::new(&mut rhs, t0, [x0[0], x0[1], x0[2]], t1, StepOptions::with_tol(tol))?;
    while stepper.step(&mut rhs)? {
        let y = stepper.y();
        finite_or_err(y, stepper.t())?;
        observer(stepper.t(), &Vec3::new(y[0], y[1], y[2]));
    }
    Ok(stepper.stats())
}
