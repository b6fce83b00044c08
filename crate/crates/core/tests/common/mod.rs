#![allow(dead_code)]

use std::f64::consts::PI;

use dual_lcs::velocity::{Mat3, Vec3};

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Mat3) -> Mat3 {
    let norm = a.iter().map(|v| v.abs()).sum::<f64>();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(squarings);
    let mut term = Mat3::identity();
    let mut sum = Mat3::identity();
    for k in 1..=20 {
        term = term * b / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Ascending roots of the characteristic polynomial of a symmetric 3x3 matrix.
pub fn symmetric_eigenvalues(s: &Mat3) -> [f64; 3] {
    let q = s.trace() / 3.0;
    let p1 = s[(0, 1)].powi(2) + s[(0, 2)].powi(2) + s[(1, 2)].powi(2);
    let p2 = (s[(0, 0)] - q).powi(2) + (s[(1, 1)] - q).powi(2) + (s[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q; 3];
    }
    let b = (s - Mat3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [lo, 3.0 * q - lo - hi, hi]
}

/// Unit null vector of `s - lambda I` from the largest cross product of its rows.
pub fn eigenvector(s: &Mat3, lambda: f64) -> Vec3 {
    let m = s - Mat3::identity() * lambda;
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let candidates = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    candidates
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap()
        .normalize()
}

/// Singular values and right singular vectors from the eigenproblem of `F^T F`.
pub fn brute_force_svd(f: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let c = f.transpose() * f;
    let lambda = symmetric_eigenvalues(&c);
    let sigma = lambda.map(|l| l.max(0.0).sqrt());
    let xi = lambda.map(|l| eigenvector(&c, l));
    (sigma, xi)
}

pub fn rel_err(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).norm() / b.norm()
}
