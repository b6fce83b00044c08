//! Singular value decomposition of the deformation gradient and the scalar
//! deformation diagnostics derived from it.
//!
//! `DF xi_i = sigma_i eta_i` with `sigma_1 <= sigma_2 <= sigma_3`. The
//! Cauchy–Green eigenvalues are `sigma_i^2`; `C = DF^T DF` is never formed.

use serde::{Deserialize, Serialize};

use crate::error::StrainError;
use crate::velocity::{Mat3, Vec3};

/// Singular values closer than this fraction of `sigma_3` count as degenerate.
pub const DEGENERATE_GAP_REL: f64 = 1e-10;

/// Default number of tangent directions probed by [`stretch_band`].
pub const DEFAULT_BAND_SAMPLES: usize = 64;

const JACOBI_MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainData {
    /// Ascending singular values.
    pub sigma: [f64; 3],
    /// Right singular vectors `xi_1, xi_2, xi_3`.
    pub xi: [Vec3; 3],
    /// Left singular vectors `eta_1, eta_2, eta_3`.
    pub eta: [Vec3; 3],
    /// `min(sigma_2 - sigma_1, sigma_3 - sigma_2)`.
    pub gap: f64,
}

impl StrainData {
    pub fn is_degenerate(&self) -> bool {
        self.gap < DEGENERATE_GAP_REL * self.sigma[2]
    }

    /// Eigenvalues of the right Cauchy–Green tensor.
    pub fn cauchy_green_eigenvalues(&self) -> [f64; 3] {
        self.sigma.map(|s| s * s)
    }

    pub fn sigma_product(&self) -> f64 {
        self.sigma[0] * self.sigma[1] * self.sigma[2]
    }
}

/// One-sided (Hestenes) Jacobi SVD of a 3x3 matrix.
///
/// Each `xi_i` is flipped, together with `eta_i`, so that its largest-magnitude
/// component is positive.
pub fn svd3(df: &Mat3) -> Result<StrainData, StrainError> {
    if !df.iter().all(|v| v.is_finite()) {
        return Err(StrainError::NonFinite);
    }
    let mut a = *df;
    let mut v = Mat3::identity();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = a.column(p).norm_squared();
            let beta = a.column(q).norm_squared();
            let gamma = a.column(p).dot(&a.column(q));
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
            let c = 1.0 / t.hypot(1.0);
            let s = c * t;
            for m in [&mut a, &mut v] {
                for r in 0..3 {
                    let xp = m[(r, p)];
                    let xq = m[(r, q)];
                    m[(r, p)] = c * xp - s * xq;
                    m[(r, q)] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms = [a.column(0).norm(), a.column(1).norm(), a.column(2).norm()];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]).then(i.cmp(&j)));
    let sigma = order.map(|i| norms[i]);
    if !(sigma[2] > 0.0) || sigma[0] <= 4.0 * f64::EPSILON * sigma[2] {
        return Err(StrainError::RankDeficient(if sigma[2] > 0.0 {
            sigma[0] / sigma[2]
        } else {
            0.0
        }));
    }

    let mut xi = order.map(|i| Vec3::from(v.column(i)));
    let cols = order.map(|i| Vec3::from(a.column(i)));

    let eta3 = cols[2] / sigma[2];
    let mut eta2 = cols[1] / sigma[1];
    eta2 -= eta3 * eta3.dot(&eta2);
    eta2.normalize_mut();
    let mut eta1 = cols[0] - eta3 * eta3.dot(&cols[0]) - eta2 * eta2.dot(&cols[0]);
    eta1.normalize_mut();
    let mut eta = [eta1, eta2, eta3];

    for i in 0..3 {
        let k = xi[i].iamax();
        if xi[i][k] < 0.0 {
            xi[i] = -xi[i];
            eta[i] = -eta[i];
        }
    }

    let gap = (sigma[1] - sigma[0]).min(sigma[2] - sigma[1]);
    Ok(StrainData {
        sigma,
        xi,
        eta,
        gap,
    })
}

/// Finite-time Lyapunov exponent `log(sigma_3) / (t1 - t0)`.
pub fn ftle(sigma3: f64, t0: f64, t1: f64) -> Result<f64, StrainError> {
    if t1 == t0 {
        return Err(StrainError::ZeroHorizon);
    }
    if !(sigma3 > 0.0) {
        return Err(StrainError::RankDeficient(0.0));
    }
    Ok(sigma3.ln() / (t1 - t0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnityCheck {
    pub holds: bool,
    /// `ln(min(b, 1/b) / a)` for the mean-normalised values `a < b < c`.
    pub lower_slack: f64,
    /// `ln(c / max(b, 1/b))`.
    pub upper_slack: f64,
}

/// Checks that the intermediate singular value is the one closest to unity
/// once the triple is normalised by its geometric mean.
pub fn sigma2_nearest_unity_check(sigma: [f64; 3]) -> Result<UnityCheck, StrainError> {
    let [s1, s2, s3] = sigma;
    if !(s1 > 0.0 && s1 < s2 && s2 < s3) || !s3.is_finite() {
        return Err(StrainError::Unordered);
    }
    let m = (s1.ln() + s2.ln() + s3.ln()) / 3.0;
    let (a, b, c) = ((s1.ln() - m).exp(), (s2.ln() - m).exp(), (s3.ln() - m).exp());
    let (lo, hi) = (b.min(1.0 / b), b.max(1.0 / b));
    let lower_slack = (lo / a).ln();
    let upper_slack = (c / hi).ln();
    Ok(UnityCheck {
        holds: lower_slack > 0.0 && upper_slack > 0.0 && lo <= 1.0 && hi >= 1.0,
        lower_slack,
        upper_slack,
    })
}

fn check_unit(n0: &Vec3) -> Result<(), StrainError> {
    let norm = n0.norm();
    if (norm - 1.0).abs() > 1e-8 || !norm.is_finite() {
        return Err(StrainError::NonUnitNormal(norm));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepulsionShear {
    /// Normal repulsion.
    pub rho: f64,
    /// Magnitude of tangential shear.
    pub shear: f64,
    /// Advected unit normal.
    pub n1: Vec3,
}

/// Normal repulsion and tangential shear of a surface element with unit normal `n0`.
pub fn repulsion_and_shear(df: &Mat3, n0: &Vec3) -> Result<RepulsionShear, StrainError> {
    check_unit(n0)?;
    if !df.iter().all(|v| v.is_finite()) {
        return Err(StrainError::NonFinite);
    }
    let det = df.determinant();
    if !(det > 0.0) {
        return Err(StrainError::NotOrientationPreserving(det));
    }
    let inv = df
        .try_inverse()
        .ok_or(StrainError::RankDeficient(0.0))?;
    let n1 = (inv.transpose() * n0).normalize();
    let v1 = df * n0;
    let rho = v1.dot(&n1);
    let shear = (v1 - rho * n1).norm();
    Ok(RepulsionShear { rho, shear, n1 })
}

/// Orthonormal pair spanning the plane orthogonal to unit `n`.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let k = n.iamin();
    let mut axis = Vec3::zeros();
    axis[k] = 1.0;
    let ea = n.cross(&axis).normalize();
    let eb = n.cross(&ea);
    (ea, eb)
}

/// Extremal stretch factors `|DF e|` over unit tangent vectors `e` orthogonal to `n0`.
///
/// The tangent circle is scanned at `n_samples` equispaced angles in `[0, pi)`
/// and both extremes are then polished by golden-section search.
pub fn stretch_band(df: &Mat3, n0: &Vec3, n_samples: usize) -> Result<(f64, f64), StrainError> {
    if n_samples < 8 {
        return Err(StrainError::TooFewSamples {
            min: 8,
            got: n_samples,
        });
    }
    check_unit(n0)?;
    if !df.iter().all(|v| v.is_finite()) {
        return Err(StrainError::NonFinite);
    }
    let (ea, eb) = tangent_basis(n0);
    let (da, db) = (df * ea, df * eb);
    let stretch = |theta: f64| {
        let (s, c) = theta.sin_cos();
        (c * da + s * db).norm()
    };
    let step = std::f64::consts::PI / n_samples as f64;
    let samples: Vec<f64> = (0..n_samples).map(|k| stretch(k as f64 * step)).collect();
    let kmin = (0..n_samples)
        .min_by(|&i, &j| samples[i].total_cmp(&samples[j]))
        .unwrap_or(0);
    let kmax = (0..n_samples)
        .max_by(|&i, &j| samples[i].total_cmp(&samples[j]))
        .unwrap_or(0);
    let lo = golden_min(stretch, kmin as f64 * step, step).min(samples[kmin]);
    let hi = (-golden_min(|th| -stretch(th), kmax as f64 * step, step)).max(samples[kmax]);
    Ok((lo, hi))
}

fn golden_min(f: impl Fn(f64) -> f64, center: f64, half_width: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (center - half_width, center + half_width);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Relative slack absorbing integration error in [`within_stretch_band`].
pub const BAND_SLACK: f64 = 1e-8;

/// Whether `[lambda_min, lambda_max]` lies inside `[sigma2 (1 - delta), sigma2 (1 + delta)]`,
/// widened by [`BAND_SLACK`].
pub fn within_stretch_band(band: (f64, f64), sigma2: f64, delta: f64) -> bool {
    band.0 >= sigma2 * (1.0 - delta - BAND_SLACK) && band.1 <= sigma2 * (1.0 + delta + BAND_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(a, b, c))
    }

    #[test]
    fn identity_is_degenerate() {
        let s = svd3(&Mat3::identity()).unwrap();
        assert_eq!(s.sigma, [1.0, 1.0, 1.0]);
        assert!(s.is_degenerate());
        assert_eq!(s.xi, [Vec3::x(), Vec3::y(), Vec3::z()]);
        assert_eq!(s.eta, s.xi);
    }

    #[test]
    fn diagonal_ordering() {
        let s = svd3(&diag(2.0, 0.5, 1.0)).unwrap();
        assert_eq!(s.sigma, [0.5, 1.0, 2.0]);
        assert_eq!(s.xi, [Vec3::y(), Vec3::z(), Vec3::x()]);
        assert_eq!(s.eta, s.xi);
        assert!(!s.is_degenerate());
    }

    #[test]
    fn unit_shear() {
        let f = Mat3::new(1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let s = svd3(&f).unwrap();
        let r5 = 5f64.sqrt();
        assert!((s.sigma[0] - (r5 - 1.0) / 2.0).abs() < 1e-14);
        assert!((s.sigma[1] - 1.0).abs() < 1e-14);
        assert!((s.sigma[2] - (r5 + 1.0) / 2.0).abs() < 1e-14);
        assert!((s.sigma_product() - 1.0).abs() < 1e-14);
        for i in 0..3 {
            assert!((f * s.xi[i] - s.sigma[i] * s.eta[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(svd3(&Mat3::zeros()), Err(StrainError::RankDeficient(_))));
        assert!(matches!(
            svd3(&diag(1.0, 1.0, 0.0)),
            Err(StrainError::RankDeficient(_))
        ));
        let mut m = Mat3::identity();
        m[(1, 2)] = f64::NAN;
        assert!(matches!(svd3(&m), Err(StrainError::NonFinite)));
    }

    #[test]
    fn ftle_values() {
        assert!((ftle(1f64.exp().powi(2), 0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ftle(1.0, 0.0, 3.0).unwrap(), 0.0);
        assert!(matches!(ftle(2.0, 1.0, 1.0), Err(StrainError::ZeroHorizon)));
    }

    #[test]
    fn unity_check_examples() {
        let c = sigma2_nearest_unity_check([0.5, 0.9, 1.0 / 0.45]).unwrap();
        assert!(c.holds);
        let c = sigma2_nearest_unity_check([0.5, 1.0, 2.0]).unwrap();
        assert!(c.holds);
        assert!((c.lower_slack - c.upper_slack).abs() < 1e-14);
        assert!(sigma2_nearest_unity_check([1.0, 0.5, 2.0]).is_err());
        assert!(sigma2_nearest_unity_check([0.0, 0.5, 2.0]).is_err());
    }

    #[test]
    fn repulsion_examples() {
        let r = repulsion_and_shear(&diag(0.5, 1.0, 2.0), &Vec3::z()).unwrap();
        assert!((r.rho - 2.0).abs() < 1e-15 && r.shear.abs() < 1e-15);
        assert!((r.n1 - Vec3::z()).norm() < 1e-15);

        let f = Mat3::new(1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let r = repulsion_and_shear(&f, &Vec3::z()).unwrap();
        assert!((r.n1 - Vec3::z()).norm() < 1e-15);
        assert!((r.rho - 1.0).abs() < 1e-15 && (r.shear - 1.0).abs() < 1e-15);

        let n = Vec3::new(1.0, 2.0, -2.0) / 3.0;
        let r = repulsion_and_shear(&Mat3::identity(), &n).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-15 && r.shear < 1e-15);

        assert!(matches!(
            repulsion_and_shear(&Mat3::identity(), &Vec3::new(1.0, 1.0, 0.0)),
            Err(StrainError::NonUnitNormal(_))
        ));
    }

    #[test]
    fn band_examples() {
        let d = diag(0.5, 1.0, 2.0);
        let (lo, hi) = stretch_band(&d, &Vec3::x(), 64).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        let (lo, hi) = stretch_band(&d, &Vec3::z(), 64).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);

        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0).into_inner();
        for n in [Vec3::x(), Vec3::new(0.6, 0.0, 0.8), Vec3::new(1.0, 1.0, 1.0).normalize()] {
            let band = stretch_band(&rot, &n, 16).unwrap();
            assert!((band.0 - 1.0).abs() < 1e-12 && (band.1 - 1.0).abs() < 1e-12);
            assert!(within_stretch_band(band, 1.0, 1e-12));
        }
        assert!(stretch_band(&d, &Vec3::x(), 4).is_err());
    }
}
