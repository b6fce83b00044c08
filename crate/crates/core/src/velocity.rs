//! Analytic benchmark velocity fields with exact spatial gradients.
//!
//! Every field exposes `u(x, t)` and `Du(x, t)`. Positions are wrapped into
//! `[0, period)` on periodic axes before evaluation, so callers may keep
//! trajectories unwrapped.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::FieldError;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Per-axis boundary behaviour of a field's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Axis {
    Periodic { period: f64 },
    Bounded { lo: f64, hi: f64 },
    Unbounded,
}

impl Axis {
    pub fn wrap(&self, v: f64) -> f64 {
        match *self {
            Axis::Periodic { period } => {
                let w = v.rem_euclid(period);
                // rem_euclid can round up to exactly `period` for tiny negative inputs
                if w >= period {
                    0.0
                } else {
                    w
                }
            }
            _ => v,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Axis::Bounded { lo, hi } => v >= lo && v <= hi,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub axes: [Axis; 3],
}

impl Domain {
    pub fn periodic_cube(period: f64) -> Self {
        Domain {
            axes: [Axis::Periodic { period }; 3],
        }
    }

    pub fn unbounded() -> Self {
        Domain {
            axes: [Axis::Unbounded; 3],
        }
    }

    pub fn wrap(&self, x: &Vec3) -> Vec3 {
        Vec3::new(
            self.axes[0].wrap(x[0]),
            self.axes[1].wrap(x[1]),
            self.axes[2].wrap(x[2]),
        )
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|i| self.axes[i].contains(x[i]))
    }
}

/// User-supplied field, e.g. for oracle tests with closed-form flow maps.
pub trait CustomField: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn domain(&self) -> Domain;
    fn velocity(&self, x: &Vec3, t: f64) -> Vec3;
    fn gradient(&self, x: &Vec3, t: f64) -> Mat3;
}

/// `u(x) = M x + b`, time independent. Skew-symmetric `M` gives a rigid rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub matrix: Mat3,
    pub offset: Vec3,
}

impl AffineField {
    pub fn linear(matrix: Mat3) -> Self {
        AffineField {
            matrix,
            offset: Vec3::zeros(),
        }
    }

    pub fn uniform(offset: Vec3) -> Self {
        AffineField {
            matrix: Mat3::zeros(),
            offset,
        }
    }
}

impl CustomField for AffineField {
    fn name(&self) -> &str {
        "affine"
    }

    fn domain(&self) -> Domain {
        Domain::unbounded()
    }

    fn velocity(&self, x: &Vec3, _t: f64) -> Vec3 {
        self.matrix * x + self.offset
    }

    fn gradient(&self, _x: &Vec3, _t: f64) -> Mat3 {
        self.matrix
    }
}

/// Coefficients of the time-aperiodic ABC modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Default for Modulation {
    fn default() -> Self {
        Modulation {
            k0: 0.3,
            k1: 0.5,
            k2: 1.5,
            k3: 1.8,
        }
    }
}

#[derive(Clone)]
pub enum VelocityField {
    /// Two-and-a-half-dimensional Cat's eye flow, `W(psi) = exp(psi)`.
    CatsEye { c: f64, domain: Domain },
    SteadyAbc { a: f64, b: f64, c: f64 },
    AperiodicAbc {
        a: f64,
        b: f64,
        c: f64,
        modulation: Modulation,
    },
    Custom(Arc<dyn CustomField>),
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::CatsEye { c, domain } => f
                .debug_struct("CatsEye")
                .field("c", c)
                .field("domain", domain)
                .finish(),
            VelocityField::SteadyAbc { a, b, c } => f
                .debug_struct("SteadyAbc")
                .field("a", a)
                .field("b", b)
                .field("c", c)
                .finish(),
            VelocityField::AperiodicAbc {
                a,
                b,
                c,
                modulation,
            } => f
                .debug_struct("AperiodicAbc")
                .field("a", a)
                .field("b", b)
                .field("c", c)
                .field("modulation", modulation)
                .finish(),
            VelocityField::Custom(inner) => f.debug_tuple("Custom").field(inner).finish(),
        }
    }
}

impl VelocityField {
    /// Cat's eye flow with `c = 2`.
    pub fn cats_eye() -> Self {
        Self::cats_eye_with(2.0).expect("c = 2 is valid")
    }

    pub fn cats_eye_with(c: f64) -> Result<Self, FieldError> {
        if !(c.is_finite() && c > 1.0) {
            return Err(FieldError::InvalidParameter(format!(
                "Cat's eye parameter c must exceed 1, got {c}"
            )));
        }
        Ok(VelocityField::CatsEye {
            c,
            domain: Domain {
                axes: [Axis::Periodic { period: TAU }, Axis::Unbounded, Axis::Unbounded],
            },
        })
    }

    /// Steady ABC flow with `A = sqrt(3), B = sqrt(2), C = 1`.
    pub fn steady_abc() -> Self {
        VelocityField::SteadyAbc {
            a: 3f64.sqrt(),
            b: 2f64.sqrt(),
            c: 1.0,
        }
    }

    pub fn aperiodic_abc() -> Self {
        VelocityField::AperiodicAbc {
            a: 3f64.sqrt(),
            b: 2f64.sqrt(),
            c: 1.0,
            modulation: Modulation::default(),
        }
    }

    pub fn custom(field: impl CustomField + 'static) -> Self {
        VelocityField::Custom(Arc::new(field))
    }

    pub fn name(&self) -> &str {
        match self {
            VelocityField::CatsEye { .. } => "cats-eye",
            VelocityField::SteadyAbc { .. } => "steady-abc",
            VelocityField::AperiodicAbc { .. } => "aperiodic-abc",
            VelocityField::Custom(inner) => inner.name(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            VelocityField::CatsEye { domain, .. } => *domain,
            VelocityField::SteadyAbc { .. } | VelocityField::AperiodicAbc { .. } => {
                Domain::periodic_cube(TAU)
            }
            VelocityField::Custom(inner) => inner.domain(),
        }
    }

    /// Replaces the bounds of a Cat's eye field's `y` axis (plot/exit extent).
    pub fn with_y_extent(self, lo: f64, hi: f64) -> Self {
        match self {
            VelocityField::CatsEye { c, mut domain } => {
                domain.axes[1] = Axis::Bounded { lo, hi };
                VelocityField::CatsEye { c, domain }
            }
            other => other,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, VelocityField::AperiodicAbc { .. })
    }

    /// `u(x, t)`.
    pub fn velocity(&self, x: &Vec3, t: f64) -> Result<Vec3, FieldError> {
        check_finite(x, t)?;
        Ok(self.velocity_unchecked(x, t))
    }

    /// `Du(x, t)`, the exact Jacobian `d u_i / d x_j` (row `i`, column `j`).
    pub fn gradient(&self, x: &Vec3, t: f64) -> Result<Mat3, FieldError> {
        check_finite(x, t)?;
        Ok(self.velocity_and_gradient_unchecked(x, t).1)
    }

    pub fn velocity_and_gradient(&self, x: &Vec3, t: f64) -> Result<(Vec3, Mat3), FieldError> {
        check_finite(x, t)?;
        Ok(self.velocity_and_gradient_unchecked(x, t))
    }

    pub(crate) fn velocity_unchecked(&self, x: &Vec3, t: f64) -> Vec3 {
        match self {
            VelocityField::CatsEye { c, domain } => {
                let p = domain.wrap(x);
                let s = (c * c - 1.0).sqrt();
                let (sx, cx) = p[0].sin_cos();
                let d = c * p[1].cosh() + s * cx;
                Vec3::new(c * p[1].sinh() / d, s * sx / d, 1.0 / d)
            }
            VelocityField::SteadyAbc { a, b, c } => abc_velocity(x, *a, *b, *c),
            VelocityField::AperiodicAbc {
                a,
                b,
                c,
                modulation,
            } => {
                let (bt, ct) = aperiodic_coefficients(t, *b, *c, modulation);
                abc_velocity(x, *a, bt, ct)
            }
            VelocityField::Custom(inner) => inner.velocity(x, t),
        }
    }

    pub(crate) fn velocity_and_gradient_unchecked(&self, x: &Vec3, t: f64) -> (Vec3, Mat3) {
        match self {
            VelocityField::CatsEye { c, domain } => {
                let p = domain.wrap(x);
                let c = *c;
                let s = (c * c - 1.0).sqrt();
                let (sx, cx) = p[0].sin_cos();
                let (shy, chy) = (p[1].sinh(), p[1].cosh());
                let d = c * chy + s * cx;
                let d2 = d * d;
                let u = Vec3::new(c * shy / d, s * sx / d, 1.0 / d);
                #[rustfmt::skip]
                let du = Mat3::new(
                    c * s * shy * sx / d2, (c * chy * d - c * c * shy * shy) / d2, 0.0,
                    (s * cx * d + s * s * sx * sx) / d2, -s * c * sx * shy / d2, 0.0,
                    s * sx / d2, -c * shy / d2, 0.0,
                );
                (u, du)
            }
            VelocityField::SteadyAbc { a, b, c } => abc_velocity_and_gradient(x, *a, *b, *c),
            VelocityField::AperiodicAbc {
                a,
                b,
                c,
                modulation,
            } => {
                let (bt, ct) = aperiodic_coefficients(t, *b, *c, modulation);
                abc_velocity_and_gradient(x, *a, bt, ct)
            }
            VelocityField::Custom(inner) => (inner.velocity(x, t), inner.gradient(x, t)),
        }
    }
}

fn check_finite(x: &Vec3, t: f64) -> Result<(), FieldError> {
    if x.iter().all(|v| v.is_finite()) && t.is_finite() {
        Ok(())
    } else {
        Err(FieldError::NonFinite)
    }
}

// sin/cos are 2pi-periodic, so the ABC family needs no explicit wrapping.
fn abc_velocity(x: &Vec3, a: f64, b: f64, c: f64) -> Vec3 {
    let (sx, cx) = x[0].sin_cos();
    let (sy, cy) = x[1].sin_cos();
    let (sz, cz) = x[2].sin_cos();
    Vec3::new(a * sz + c * cy, b * sx + a * cz, c * sy + b * cx)
}

fn abc_velocity_and_gradient(x: &Vec3, a: f64, b: f64, c: f64) -> (Vec3, Mat3) {
    let (sx, cx) = x[0].sin_cos();
    let (sy, cy) = x[1].sin_cos();
    let (sz, cz) = x[2].sin_cos();
    let u = Vec3::new(a * sz + c * cy, b * sx + a * cz, c * sy + b * cx);
    #[rustfmt::skip]
    let du = Mat3::new(
        0.0, -c * sy, a * cz,
        b * cx, 0.0, -a * sz,
        -b * sx, c * cy, 0.0,
    );
    (u, du)
}

/// Stream function of the Cat's eye flow, `psi = -log(c cosh y + sqrt(c^2 - 1) cos x)`.
pub fn cats_eye_stream_function(x: f64, y: f64, c: f64) -> Result<f64, FieldError> {
    if !(c > 1.0) {
        return Err(FieldError::InvalidParameter(format!(
            "Cat's eye parameter c must exceed 1, got {c}"
        )));
    }
    let arg = c * y.cosh() + (c * c - 1.0).sqrt() * x.cos();
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(FieldError::LogDomain(arg));
    }
    Ok(-arg.ln())
}

/// Time-dependent `(B~(t), C~(t))` of the aperiodic ABC flow.
pub fn aperiodic_coefficients(t: f64, b: f64, c: f64, m: &Modulation) -> (f64, f64) {
    let envelope = m.k0 * (m.k1 * t).tanh();
    let b_t = b + b * envelope * ((m.k2 * t).powi(2)).cos();
    let c_t = c + c * envelope * ((m.k3 * t).powi(2)).sin();
    (b_t, c_t)
}
