//! Typing of invariant-manifold candidates of the dual system.
//!
//! Tangency to the intermediate singular-vector field is necessary but not
//! sufficient for a coherent structure, so each verdict combines independent
//! evidence: robustness under perturbed direction fields, the deformation of
//! a small tracer sphere, torus fits and a stretch audit.

use std::f64::consts::{PI, TAU};

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::cloud_distance;
use crate::direction::{
    integrate_line, BaseField, DirectionLine, DualFieldSpec, LineOptions, Partner,
};
use crate::error::ClassifyError;
use crate::flow_map::{advect, advect_with_variations};
use crate::poincare::{dual_section, SectionPoints, SectionSpec};
use crate::strain::{stretch_band, svd3, within_stretch_band, DEFAULT_BAND_SAMPLES};
use crate::velocity::{Domain, Mat3, Vec3, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LcsType {
    RepellingHyperbolic,
    AttractingHyperbolic,
    Elliptic,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// Whether the measurement meets its threshold.
    pub passed: bool,
}

impl Evidence {
    fn new(name: &str, value: f64, threshold: f64, passed: bool) -> Self {
        Evidence {
            name: name.to_string(),
            value,
            threshold,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub kind: LcsType,
    pub evidence: Vec<Evidence>,
}

// ---------------------------------------------------------------------------
// toroidal coordinates

/// Vortex center curve `(x_c(z), y_c(z))`, tabulated on ascending `z` in
/// `[0, 2 pi)` and linearly interpolated with periodic continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterCurve {
    pub z: Vec<f64>,
    pub xc: Vec<f64>,
    pub yc: Vec<f64>,
}

impl CenterCurve {
    pub fn constant(xc: f64, yc: f64) -> Self {
        CenterCurve {
            z: vec![0.0],
            xc: vec![xc],
            yc: vec![yc],
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let n = self.z.len();
        if n == 0 || self.xc.len() != n || self.yc.len() != n {
            return Err(ClassifyError::InvalidInput(
                "center curve tables must be non-empty and of equal length".into(),
            ));
        }
        if self.z.windows(2).any(|w| !(w[1] > w[0])) || self.z[0] < 0.0 || self.z[n - 1] >= TAU {
            return Err(ClassifyError::InvalidInput(
                "center curve z values must be ascending within [0, 2 pi)".into(),
            ));
        }
        Ok(())
    }

    /// Centroid of `points` per z-bin, in coordinates continuous with the first point.
    pub fn from_points(points: &[Vec3], n_bins: usize) -> Result<Self, ClassifyError> {
        if points.is_empty() || n_bins == 0 {
            return Err(ClassifyError::InvalidInput("no points for center estimate".into()));
        }
        let reference = (points[0][0], points[0][1]);
        let mut sums = vec![(0.0, 0.0, 0usize); n_bins];
        for p in points {
            let z = p[2].rem_euclid(TAU);
            let b = ((z / TAU * n_bins as f64) as usize).min(n_bins - 1);
            sums[b].0 += nearest_image(p[0], reference.0);
            sums[b].1 += nearest_image(p[1], reference.1);
            sums[b].2 += 1;
        }
        let mut curve = CenterCurve {
            z: Vec::new(),
            xc: Vec::new(),
            yc: Vec::new(),
        };
        for (b, (sx, sy, n)) in sums.into_iter().enumerate() {
            if n > 0 {
                curve.z.push((b as f64 + 0.5) * TAU / n_bins as f64);
                curve.xc.push(sx / n as f64);
                curve.yc.push(sy / n as f64);
            }
        }
        Ok(curve)
    }

    pub fn at(&self, z: f64) -> (f64, f64) {
        let n = self.z.len();
        if n == 1 {
            return (self.xc[0], self.yc[0]);
        }
        let z = z.rem_euclid(TAU);
        let hi = self.z.partition_point(|&v| v <= z);
        let (i0, i1, z0, z1) = if hi == 0 {
            (n - 1, 0, self.z[n - 1] - TAU, self.z[0])
        } else if hi == n {
            (n - 1, 0, self.z[n - 1], self.z[0] + TAU)
        } else {
            (hi - 1, hi, self.z[hi - 1], self.z[hi])
        };
        let w = (z - z0) / (z1 - z0);
        (
            self.xc[i0] + w * (self.xc[i1] - self.xc[i0]),
            self.yc[i0] + w * (self.yc[i1] - self.yc[i0]),
        )
    }
}

fn nearest_image(v: f64, reference: f64) -> f64 {
    reference + (v - reference + PI).rem_euclid(TAU) - PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToroidalFrame {
    pub r1: f64,
    pub r2: f64,
    pub center: CenterCurve,
}

impl ToroidalFrame {
    pub fn new(r1: f64, r2: f64, center: CenterCurve) -> Result<Self, ClassifyError> {
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(ClassifyError::InvalidInput(format!(
                "toroidal radii must be positive, got R1 = {r1}, R2 = {r2}"
            )));
        }
        center.validate()?;
        Ok(ToroidalFrame { r1, r2, center })
    }

    /// `R1 = 2, R2 = 1` around the given center curve.
    pub fn standard(center: CenterCurve) -> Self {
        ToroidalFrame {
            r1: 2.0,
            r2: 1.0,
            center,
        }
    }
}

pub fn toroidal_transform(x: &Vec3, frame: &ToroidalFrame) -> Vec3 {
    let (xc, yc) = frame.center.at(x[2]);
    let r = x[0] - xc + frame.r1;
    let (s, c) = x[2].sin_cos();
    Vec3::new(r * c, r * s, frame.r2 * (x[1] - yc))
}

/// Inverse of [`toroidal_transform`] for `x - x_c(z) + R1 > 0`; `z` is returned in `[0, 2 pi)`.
pub fn inverse_toroidal_transform(p: &Vec3, frame: &ToroidalFrame) -> Vec3 {
    let z = p[1].atan2(p[0]).rem_euclid(TAU);
    let r = p[0].hypot(p[1]);
    let (xc, yc) = frame.center.at(z);
    Vec3::new(r + xc - frame.r1, p[2] / frame.r2 + yc, z)
}

// ---------------------------------------------------------------------------
// torus fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusMesh {
    pub n_z: usize,
    pub n_theta: usize,
    /// Poloidal radius per bin, row-major `(i_z, j_theta)`.
    pub radii: Vec<f64>,
    pub vertices: Vec<Vec3>,
    pub frame: ToroidalFrame,
    /// Bins that had no data and were interpolated.
    pub filled_bins: usize,
}

impl TorusMesh {
    pub fn vertex(&self, i: usize, j: usize) -> Vec3 {
        self.vertices[(i % self.n_z) * self.n_theta + (j % self.n_theta)]
    }

    /// Outward unit normal from centred differences along the two mesh directions.
    pub fn normal(&self, i: usize, j: usize) -> Vec3 {
        let (nz, nt) = (self.n_z, self.n_theta);
        let mut dz = self.vertex(i + 1, j) - self.vertex(i + nz - 1, j);
        if i == 0 || i == nz - 1 {
            dz[2] += TAU;
        }
        let dtheta = self.vertex(i, j + 1) - self.vertex(i, j + nt - 1);
        let mut n = dz.cross(&dtheta).normalize();
        let (xc, yc) = self.frame.center.at(self.vertex(i, j)[2]);
        let radial = Vec3::new(self.vertex(i, j)[0] - xc, self.vertex(i, j)[1] - yc, 0.0);
        if n.dot(&radial) < 0.0 {
            n = -n;
        }
        n
    }

    pub fn points_and_normals(&self) -> Vec<(Vec3, Vec3)> {
        let mut out = Vec::with_capacity(self.vertices.len());
        for i in 0..self.n_z {
            for j in 0..self.n_theta {
                out.push((self.vertex(i, j), self.normal(i, j)));
            }
        }
        out
    }
}

/// Fits a tubular mesh around the frame's center curve by binning points in
/// `(z, theta)` and averaging the poloidal radius per bin.
pub fn fit_torus_surface(
    points: &[Vec3],
    frame: &ToroidalFrame,
    n_z: usize,
    n_theta: usize,
) -> Result<TorusMesh, ClassifyError> {
    if n_z < 3 || n_theta < 3 {
        return Err(ClassifyError::InvalidInput("mesh needs at least 3x3 bins".into()));
    }
    frame.center.validate()?;
    let polar = |p: &Vec3| {
        let (xc, yc) = frame.center.at(p[2]);
        let dx = nearest_image(p[0], xc) - xc;
        let dy = nearest_image(p[1], yc) - yc;
        (dy.atan2(dx), dx.hypot(dy))
    };
    let mut winding = 0.0;
    let mut prev: Option<f64> = None;
    for p in points {
        let (theta, _) = polar(p);
        if let Some(t0) = prev {
            winding += (theta - t0 + PI).rem_euclid(TAU) - PI;
        }
        prev = Some(theta);
    }
    if winding.abs() < TAU {
        return Err(ClassifyError::InsufficientWinding(winding));
    }

    let mut sums = vec![(0.0, 0usize); n_z * n_theta];
    for p in points {
        let (theta, r) = polar(p);
        let z = p[2].rem_euclid(TAU);
        let i = ((z / TAU * n_z as f64) as usize).min(n_z - 1);
        let j = (((theta + PI) / TAU * n_theta as f64) as usize).min(n_theta - 1);
        sums[i * n_theta + j].0 += r;
        sums[i * n_theta + j].1 += 1;
    }
    let empty = sums.iter().filter(|s| s.1 == 0).count();
    if 2 * empty > sums.len() {
        return Err(ClassifyError::SparseBins {
            empty,
            total: sums.len(),
        });
    }
    let mut radii: Vec<Option<f64>> = sums
        .iter()
        .map(|&(s, n)| if n > 0 { Some(s / n as f64) } else { None })
        .collect();
    fill_periodic(&mut radii, n_z, n_theta, true);
    fill_periodic(&mut radii, n_z, n_theta, false);
    let radii: Vec<f64> = radii.into_iter().map(|r| r.unwrap_or(0.0)).collect();

    let mut vertices = Vec::with_capacity(n_z * n_theta);
    for i in 0..n_z {
        let z = (i as f64 + 0.5) * TAU / n_z as f64;
        let (xc, yc) = frame.center.at(z);
        for j in 0..n_theta {
            let theta = (j as f64 + 0.5) * TAU / n_theta as f64 - PI;
            let r = radii[i * n_theta + j];
            vertices.push(Vec3::new(xc + r * theta.cos(), yc + r * theta.sin(), z));
        }
    }
    Ok(TorusMesh {
        n_z,
        n_theta,
        radii,
        vertices,
        frame: frame.clone(),
        filled_bins: empty,
    })
}

/// Periodic linear interpolation of missing entries along rows (`along_theta`) or columns.
fn fill_periodic(values: &mut [Option<f64>], n_z: usize, n_theta: usize, along_theta: bool) {
    let (outer, inner) = if along_theta { (n_z, n_theta) } else { (n_theta, n_z) };
    let idx = |o: usize, k: usize| {
        if along_theta {
            o * n_theta + k
        } else {
            k * n_theta + o
        }
    };
    for o in 0..outer {
        let known: Vec<usize> = (0..inner).filter(|&k| values[idx(o, k)].is_some()).collect();
        if known.is_empty() || known.len() == inner {
            continue;
        }
        for k in 0..inner {
            if values[idx(o, k)].is_some() {
                continue;
            }
            let after = known.iter().copied().find(|&q| q > k).unwrap_or(known[0] + inner);
            let before = known
                .iter()
                .rev()
                .copied()
                .find(|&q| q < k)
                .map(|q| q as isize)
                .unwrap_or(*known.last().unwrap() as isize - inner as isize);
            let va = values[idx(o, after % inner)].unwrap();
            let vb = values[idx(o, before.rem_euclid(inner as isize) as usize)].unwrap();
            let w = (k as isize - before) as f64 / (after as isize - before) as f64;
            values[idx(o, k)] = Some(vb + w * (va - vb));
        }
    }
}

/// Total area of a periodic quad mesh given as `n_z x n_theta` vertices.
/// The z-direction seam is closed by shifting the first ring by `z_period`.
pub fn mesh_area(vertices: &[Vec3], n_z: usize, n_theta: usize, z_period: f64) -> f64 {
    let v = |i: usize, j: usize| {
        let mut p = vertices[(i % n_z) * n_theta + (j % n_theta)];
        if i >= n_z {
            p[2] += z_period;
        }
        p
    };
    let mut area = 0.0;
    for i in 0..n_z {
        for j in 0..n_theta {
            let (a, b, c, d) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            area += 0.5 * (b - a).cross(&(c - a)).norm() + 0.5 * (c - a).cross(&(d - a)).norm();
        }
    }
    area
}

// ---------------------------------------------------------------------------
// tracer sphere

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereDeformation {
    pub center: Vec3,
    pub radius: f64,
    pub t0: f64,
    pub t1: f64,
    /// Tracer positions at `t1`.
    pub points: Vec<Vec3>,
    /// Ellipsoid principal semi-axis lengths, ascending.
    pub lengths: [f64; 3],
    /// Matching unit principal axes.
    pub axes: [Vec3; 3],
}

impl SphereDeformation {
    pub fn major_axis(&self) -> Vec3 {
        self.axes[2]
    }
}

/// Antipodally symmetric quasi-uniform unit vectors (Fibonacci lattice plus antipodes).
pub fn sphere_directions(n_points: usize) -> Vec<Vec3> {
    let half = n_points.div_ceil(2);
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut dirs = Vec::with_capacity(2 * half);
    for k in 0..half {
        let z = 1.0 - (k as f64 + 0.5) / half as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        dirs.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
    }
    let mirrored: Vec<Vec3> = dirs.iter().map(|d| -d).collect();
    dirs.extend(mirrored);
    dirs
}

/// Advects a sphere of tracers and fits the image ellipsoid.
///
/// The ellipsoid is the image of the unit sphere under the affine map that
/// best fits (least squares) the tracer correspondences.
pub fn advect_sphere(
    field: &VelocityField,
    center: &Vec3,
    radius: f64,
    n_points: usize,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<SphereDeformation, ClassifyError> {
    if n_points < 50 {
        return Err(ClassifyError::InvalidInput(format!(
            "need at least 50 tracers, got {n_points}"
        )));
    }
    if !(radius > 0.0) {
        return Err(ClassifyError::InvalidInput("sphere radius must be positive".into()));
    }
    let dirs = sphere_directions(n_points);
    let points = dirs
        .par_iter()
        .map(|d| advect(field, &(center + radius * d), t0, t1, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let n = points.len() as f64;
    let mean_p = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mean_u = dirs.iter().fold(Vec3::zeros(), |a, d| a + d) / n;
    let mut pu = Mat3::zeros();
    let mut uu = Mat3::zeros();
    for (p, d) in points.iter().zip(&dirs) {
        let dp = p - mean_p;
        let du = d - mean_u;
        pu += dp * du.transpose();
        uu += du * du.transpose();
    }
    let inv = uu
        .try_inverse()
        .ok_or_else(|| ClassifyError::InvalidInput("degenerate tracer layout".into()))?;
    let map = pu * inv;
    let s = svd3(&map)?;
    Ok(SphereDeformation {
        center: *center,
        radius,
        t0,
        t1,
        points,
        lengths: s.sigma,
        axes: s.eta,
    })
}

/// Angle in degrees between two lines (orientation ignored), in `[0, 90]`.
pub fn line_angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    let c = (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0);
    c.acos().to_degrees()
}

// ---------------------------------------------------------------------------
// local surface estimate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub point: Vec3,
    pub normal: Vec3,
    /// Smallest over middle covariance eigenvalue; near 0 for a clean plane.
    pub flatness: f64,
    pub neighbours: usize,
}

fn minimal_displacement(a: &Vec3, b: &Vec3, domain: &Domain) -> Vec3 {
    let mut d = b - a;
    for k in 0..3 {
        if let crate::velocity::Axis::Periodic { period } = domain.axes[k] {
            d[k] = (d[k] + 0.5 * period).rem_euclid(period) - 0.5 * period;
        }
    }
    d
}

/// Principal-component plane through the neighbours of `center` within `radius`.
pub fn local_plane(points: &[Vec3], center: &Vec3, radius: f64, domain: &Domain) -> Option<PlaneFit> {
    let offsets: Vec<Vec3> = points
        .iter()
        .map(|p| minimal_displacement(center, p, domain))
        .filter(|d| d.norm() <= radius)
        .collect();
    if offsets.len() < 6 {
        return None;
    }
    let mean = offsets.iter().fold(Vec3::zeros(), |a, d| a + d) / offsets.len() as f64;
    let mut cov = Mat3::zeros();
    for d in &offsets {
        let c = d - mean;
        cov += c * c.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let normal = Vec3::from(eig.eigenvectors.column(order[0])).normalize();
    let flatness = eig.eigenvalues[order[0]] / eig.eigenvalues[order[1]].max(f64::MIN_POSITIVE);
    Some(PlaneFit {
        point: center + mean,
        normal,
        flatness,
        neighbours: offsets.len(),
    })
}

/// Picks the window vertex with the most neighbours within `radius` and fits
/// the local plane there. At most `max_candidates` vertices are tried.
pub fn densest_plane(
    line: &DirectionLine,
    window: (f64, f64),
    radius: f64,
    domain: &Domain,
    max_candidates: usize,
) -> Option<PlaneFit> {
    let pts: Vec<Vec3> = line
        .vertices
        .iter()
        .filter(|v| v.s >= window.0 && v.s <= window.1)
        .map(|v| domain.wrap(&v.x))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let stride = (pts.len() / max_candidates.max(1)).max(1);
    pts.iter()
        .step_by(stride)
        .filter_map(|c| local_plane(&pts, c, radius, domain))
        .max_by(|a, b| {
            a.neighbours
                .cmp(&b.neighbours)
                .then(b.flatness.total_cmp(&a.flatness))
        })
}

// ---------------------------------------------------------------------------
// perturbation robustness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub base: BaseField,
    pub epsilon: f64,
    /// Cloud distance of the tangent-partner blend to the unperturbed cloud.
    pub distance_tangent: f64,
    /// Cloud distance of the normal-partner blend to the unperturbed cloud.
    pub distance_normal: f64,
    pub points: [usize; 3],
    pub lines: [DirectionLine; 3],
    pub sections: [SectionPoints; 3],
}

/// Partners `(tangent, normal)` for a hyperbolic candidate of the base field:
/// repelling candidates (`Xi2`) are tangent to `xi_1`, attracting ones (`Eta2`) to `eta_3`.
pub fn perturbation_partners(base: BaseField) -> (Partner, Partner) {
    match base {
        BaseField::Xi2 => (Partner::Xi1, Partner::Xi3),
        BaseField::Eta2 => (Partner::Eta3, Partner::Eta1),
    }
}

/// Integrates the unperturbed line and the tangent- and normal-partner blends
/// from the same seed and compares their dual sections.
pub fn perturbation_robustness(
    spec: &DualFieldSpec,
    field: &VelocityField,
    seed: &Vec3,
    initial_orientation: &Vec3,
    epsilon: f64,
    opts: &LineOptions,
    section: &SectionSpec,
) -> Result<PerturbationReport, ClassifyError> {
    let (tangent, normal) = perturbation_partners(spec.base);
    let mut plain = *spec;
    plain.blend = None;
    let specs = [
        plain,
        plain.with_blend(epsilon, tangent),
        plain.with_blend(epsilon, normal),
    ];
    let lines: Vec<DirectionLine> = specs
        .par_iter()
        .map(|s| integrate_line(s, field, seed, initial_orientation, opts))
        .collect();
    for line in &lines {
        if !line.completed() && line.s_end < section.window.1 {
            return Err(ClassifyError::LineTerminated {
                reason: line.message.clone().unwrap_or_else(|| line.termination.to_string()),
                s: line.s_end,
            });
        }
    }
    let domain = field.domain();
    let sections: Vec<SectionPoints> = lines
        .iter()
        .map(|l| dual_section([(0, l)], section, &domain))
        .collect();
    let clouds: Vec<Vec<[f64; 2]>> = sections.iter().map(|s| s.xy()).collect();
    let distance_tangent = cloud_distance(&clouds[1], &clouds[0]);
    let distance_normal = cloud_distance(&clouds[2], &clouds[0]);
    let [l0, l1, l2]: [DirectionLine; 3] = lines.try_into().expect("three lines");
    let [s0, s1, s2]: [SectionPoints; 3] = sections.try_into().expect("three sections");
    Ok(PerturbationReport {
        base: spec.base,
        epsilon,
        distance_tangent,
        distance_normal,
        points: [s0.points.len(), s1.points.len(), s2.points.len()],
        lines: [l0, l1, l2],
        sections: [s0, s1, s2],
    })
}

// ---------------------------------------------------------------------------
// stretch audit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexAudit {
    pub point: Vec3,
    pub sigma2: f64,
    pub band: (f64, f64),
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchAudit {
    pub delta: f64,
    pub vertices: Vec<Result<VertexAudit, String>>,
    pub pass_fraction: f64,
    pub failures: usize,
}

/// Near-uniform stretching check of every mesh vertex: all tangent stretch
/// factors must lie in `[sigma_2 (1 - delta), sigma_2 (1 + delta)]`.
pub fn stretch_audit(
    mesh: &[(Vec3, Vec3)],
    field: &VelocityField,
    t0: f64,
    t1: f64,
    delta: f64,
    tol: f64,
) -> StretchAudit {
    let vertices: Vec<Result<VertexAudit, String>> = mesh
        .par_iter()
        .map(|(p, n)| {
            let sample = advect_with_variations(field, p, t0, t1, tol).map_err(|e| e.to_string())?;
            let s = svd3(&sample.df).map_err(|e| e.to_string())?;
            let band = stretch_band(&sample.df, &n.normalize(), DEFAULT_BAND_SAMPLES)
                .map_err(|e| e.to_string())?;
            Ok(VertexAudit {
                point: *p,
                sigma2: s.sigma[1],
                band,
                passed: within_stretch_band(band, s.sigma[1], delta),
            })
        })
        .collect();
    let ok = vertices.iter().filter(|v| matches!(v, Ok(a) if a.passed)).count();
    let failures = vertices.iter().filter(|v| v.is_err()).count();
    StretchAudit {
        delta,
        pass_fraction: if vertices.is_empty() {
            0.0
        } else {
            ok as f64 / vertices.len() as f64
        },
        failures,
        vertices,
    }
}

// ---------------------------------------------------------------------------
// verdicts

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// Largest admissible tangent-blend cloud distance.
    pub tangent_distance: f64,
    /// Required ratio of normal- to tangent-blend distance.
    pub normal_ratio: f64,
    /// Maximal angle (degrees) between a sphere axis and the line it must follow.
    pub axis_angle_deg: f64,
    pub audit_majority: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds {
            tangent_distance: 0.1,
            normal_ratio: 5.0,
            axis_angle_deg: 10.0,
            audit_majority: 0.5,
        }
    }
}

/// Sphere deformation measured against a candidate surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereAlignment {
    pub deformation: SphereDeformation,
    /// Unit normal of the advected candidate surface at the sphere's image.
    pub surface_normal: Vec3,
    /// Angle (degrees) between the ellipsoid's major axis and the surface normal.
    pub major_normal_angle: f64,
    pub plane: PlaneFit,
}

/// Places a tracer sphere on the candidate surface and compares the deformed
/// ellipsoid with the advected surface normal.
///
/// For `Xi2` candidates the sphere starts at the plane point at `t0` and is
/// advected to `t0 + dt`. For `Eta2` candidates the plane lives at `t1`; its
/// point and normal are first mapped back to `t1 - dt` and the sphere is
/// advected forward over `[t1 - dt, t1]`.
pub fn sphere_alignment(
    spec: &DualFieldSpec,
    field: &VelocityField,
    plane: &PlaneFit,
    dt: f64,
    radius: f64,
    n_points: usize,
) -> Result<SphereAlignment, ClassifyError> {
    let dir = if spec.t1 >= spec.t0 { 1.0 } else { -1.0 };
    let (start, normal0, ts, te) = match spec.base {
        BaseField::Xi2 => (plane.point, plane.normal, spec.t0, spec.t0 + dir * dt),
        BaseField::Eta2 => {
            let back = advect_with_variations(field, &plane.point, spec.t1, spec.t1 - dir * dt, spec.tol)?;
            let inv_t = back
                .df
                .try_inverse()
                .ok_or(ClassifyError::Strain(crate::error::StrainError::RankDeficient(0.0)))?
                .transpose();
            (back.x1, (inv_t * plane.normal).normalize(), spec.t1 - dir * dt, spec.t1)
        }
    };
    let deformation = advect_sphere(field, &start, radius, n_points, ts, te, spec.tol)?;
    let fwd = advect_with_variations(field, &start, ts, te, spec.tol)?;
    let inv_t = fwd
        .df
        .try_inverse()
        .ok_or(ClassifyError::Strain(crate::error::StrainError::RankDeficient(0.0)))?
        .transpose();
    let surface_normal = (inv_t * normal0).normalize();
    let major_normal_angle = line_angle_deg(&deformation.major_axis(), &surface_normal);
    Ok(SphereAlignment {
        deformation,
        surface_normal,
        major_normal_angle,
        plane: *plane,
    })
}

/// Hyperbolic verdict from perturbation and sphere evidence. `Xi2`
/// candidates can only be typed repelling, `Eta2` candidates attracting.
pub fn hyperbolic_verdict(
    report: &PerturbationReport,
    sphere: Option<&SphereAlignment>,
    thresholds: &VerdictThresholds,
) -> CandidateVerdict {
    let mut evidence = vec![
        Evidence::new(
            "tangent-blend-distance",
            report.distance_tangent,
            thresholds.tangent_distance,
            report.distance_tangent <= thresholds.tangent_distance,
        ),
        Evidence::new(
            "normal-blend-distance",
            report.distance_normal,
            thresholds.normal_ratio * thresholds.tangent_distance,
            report.distance_normal >= thresholds.normal_ratio * thresholds.tangent_distance,
        ),
    ];
    if let Some(s) = sphere {
        let passed = match report.base {
            // repelling: largest stretching across the surface
            BaseField::Xi2 => s.major_normal_angle <= thresholds.axis_angle_deg,
            // attracting: tracers collapse onto the surface
            BaseField::Eta2 => s.major_normal_angle >= 90.0 - thresholds.axis_angle_deg,
        };
        evidence.push(Evidence::new(
            "sphere-major-axis-to-normal-deg",
            s.major_normal_angle,
            match report.base {
                BaseField::Xi2 => thresholds.axis_angle_deg,
                BaseField::Eta2 => 90.0 - thresholds.axis_angle_deg,
            },
            passed,
        ));
    }
    let all = evidence.len() >= 3 && evidence.iter().all(|e| e.passed);
    let kind = match (all, report.base) {
        (true, BaseField::Xi2) => LcsType::RepellingHyperbolic,
        (true, BaseField::Eta2) => LcsType::AttractingHyperbolic,
        _ => LcsType::Undetermined,
    };
    CandidateVerdict { kind, evidence }
}

/// Elliptic verdict: a successful torus fit plus a stretch-audit majority.
pub fn elliptic_verdict(
    mesh: Option<&TorusMesh>,
    audit: Option<&StretchAudit>,
    thresholds: &VerdictThresholds,
) -> CandidateVerdict {
    let mut evidence = Vec::new();
    if let Some(m) = mesh {
        let total = (m.n_z * m.n_theta) as f64;
        evidence.push(Evidence::new(
            "torus-filled-bin-fraction",
            m.filled_bins as f64 / total,
            0.5,
            (m.filled_bins as f64) <= 0.5 * total,
        ));
    }
    if let Some(a) = audit {
        evidence.push(Evidence::new(
            "stretch-audit-pass-fraction",
            a.pass_fraction,
            thresholds.audit_majority,
            a.pass_fraction > thresholds.audit_majority,
        ));
    }
    let kind = if evidence.len() >= 2 && evidence.iter().all(|e| e.passed) {
        LcsType::Elliptic
    } else {
        LcsType::Undetermined
    };
    CandidateVerdict { kind, evidence }
}
