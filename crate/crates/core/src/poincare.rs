//! Classical and dual Poincaré sections.
//!
//! Section points are collected with a band rule: a stored trajectory or line
//! point belongs to the section when its wrapped coordinate along the section
//! axis lies within `epsilon_band` of the plane (on either side of the
//! periodic seam). An interpolating crossing detector is available for dense
//! sections; it does not reproduce the band rule point-for-point.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direction::DirectionLine;
use crate::error::IntegrationError;
use crate::flow_map::trace_trajectory;
use crate::velocity::{Domain, Vec3, VelocityField};

pub const DEFAULT_SECTION_BAND: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingRule {
    Band,
    /// Linear interpolation between consecutive points straddling the plane.
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    /// Coordinate index normal to the plane (2 for `z = value`).
    pub axis: usize,
    pub value: f64,
    pub epsilon_band: f64,
    /// Time (classical) or arclength (dual) window, inclusive.
    pub window: (f64, f64),
    pub period: f64,
    pub rule: CrossingRule,
}

impl SectionSpec {
    pub fn z0(window: (f64, f64)) -> Self {
        SectionSpec {
            axis: 2,
            value: 0.0,
            epsilon_band: DEFAULT_SECTION_BAND,
            window,
            period: TAU,
            rule: CrossingRule::Band,
        }
    }

    pub fn with_band(mut self, epsilon: f64) -> Self {
        self.epsilon_band = epsilon;
        self
    }

    pub fn with_rule(mut self, rule: CrossingRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.axis > 2 {
            return Err(format!("section axis must be 0, 1 or 2, got {}", self.axis));
        }
        if !(self.epsilon_band > 0.0) || !(self.epsilon_band < 0.25 * self.period) {
            return Err(format!(
                "section band must be positive and small against the period, got {}",
                self.epsilon_band
            ));
        }
        if !(self.window.0 <= self.window.1) {
            return Err(format!("empty section window {:?}", self.window));
        }
        Ok(())
    }

    /// In-plane coordinate indices.
    pub fn plane_axes(&self) -> (usize, usize) {
        match self.axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    /// Distance from the plane along the axis, wrapped into `[0, period)`.
    pub fn wrapped_offset(&self, coord: f64) -> f64 {
        let d = (coord - self.value).rem_euclid(self.period);
        if d >= self.period {
            0.0
        } else {
            d
        }
    }

    pub fn in_band(&self, coord: f64) -> bool {
        let d = self.wrapped_offset(coord);
        d <= self.epsilon_band || d >= self.period - self.epsilon_band
    }

    pub fn in_window(&self, stamp: f64) -> bool {
        stamp >= self.window.0 && stamp <= self.window.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub seed_id: usize,
    /// Time (classical) or arclength (dual).
    pub stamp: f64,
    pub x: f64,
    pub y: f64,
    /// Wrapped coordinate along the section axis.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPoints {
    pub section: SectionSpec,
    pub points: Vec<SectionPoint>,
    /// Seeds whose integration failed, with the reason.
    pub failures: Vec<(usize, String)>,
}

impl SectionPoints {
    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn for_seed(&self, seed_id: usize) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .filter(|p| p.seed_id == seed_id)
            .map(|p| [p.x, p.y])
            .collect()
    }
}

/// Wraps periodic axes into `[0, period)`; identity elsewhere.
pub fn wrap_periodic(x: &Vec3, domain: &Domain) -> Vec3 {
    domain.wrap(x)
}

fn point_from(
    section: &SectionSpec,
    domain: &Domain,
    seed_id: usize,
    stamp: f64,
    x: &Vec3,
) -> SectionPoint {
    let w = domain.wrap(x);
    let (a, b) = section.plane_axes();
    SectionPoint {
        seed_id,
        stamp,
        x: w[a],
        y: w[b],
        offset: section.wrapped_offset(x[section.axis]),
    }
}

/// Streaming section filter over an ordered sequence of `(stamp, position)`.
struct Collector<'a> {
    section: &'a SectionSpec,
    domain: &'a Domain,
    seed_id: usize,
    prev: Option<(f64, Vec3)>,
    out: Vec<SectionPoint>,
}

impl<'a> Collector<'a> {
    fn new(section: &'a SectionSpec, domain: &'a Domain, seed_id: usize) -> Self {
        Collector {
            section,
            domain,
            seed_id,
            prev: None,
            out: Vec::new(),
        }
    }

    fn push(&mut self, stamp: f64, x: &Vec3) {
        let section = self.section;
        let ax = section.axis;
        match section.rule {
            CrossingRule::Band => {
                if section.in_window(stamp) && section.in_band(x[ax]) {
                    self.out
                        .push(point_from(section, self.domain, self.seed_id, stamp, x));
                }
            }
            CrossingRule::Interpolated => {
                if let Some((s0, x0)) = self.prev {
                    let k0 = ((x0[ax] - section.value) / section.period).floor();
                    let k1 = ((x[ax] - section.value) / section.period).floor();
                    if k0 != k1 {
                        let level = section.value + section.period * k0.max(k1);
                        let frac = (level - x0[ax]) / (x[ax] - x0[ax]);
                        let s = s0 + frac * (stamp - s0);
                        if section.in_window(s) {
                            let xc = x0 + frac * (x - x0);
                            self.out
                                .push(point_from(section, self.domain, self.seed_id, s, &xc));
                        }
                    }
                }
            }
        }
        self.prev = Some((stamp, *x));
    }
}

/// Poincaré section of trajectories of the velocity field over `[0, t_total]`.
pub fn classical_section(
    field: &VelocityField,
    seeds: &[Vec3],
    t_total: f64,
    section: &SectionSpec,
    tol: f64,
) -> Result<SectionPoints, IntegrationError> {
    section
        .validate()
        .map_err(IntegrationError::InvalidArgument)?;
    if !(section.window.0 >= 0.0 && section.window.1 <= t_total) {
        return Err(IntegrationError::InvalidArgument(format!(
            "window {:?} must lie within [0, {t_total}]",
            section.window
        )));
    }
    let domain = field.domain();
    let per_seed: Vec<(Vec<SectionPoint>, Option<String>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(id, x0)| {
            let mut collector = Collector::new(section, &domain, id);
            let result = trace_trajectory(field, x0, 0.0, t_total, tol, |t, x| collector.push(t, x));
            (collector.out, result.err().map(|e| e.to_string()))
        })
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (id, (pts, err)) in per_seed.into_iter().enumerate() {
        points.extend(pts);
        if let Some(e) = err {
            failures.push((id, e));
        }
    }
    Ok(SectionPoints {
        section: *section,
        points,
        failures,
    })
}

/// Dual Poincaré section from already integrated direction lines.
///
/// Pure post-processing; output is sorted by `(seed_id, stamp)`.
pub fn dual_section<'a>(
    lines: impl IntoIterator<Item = (usize, &'a DirectionLine)>,
    section: &SectionSpec,
    domain: &Domain,
) -> SectionPoints {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (id, line) in lines {
        let mut collector = Collector::new(section, domain, id);
        for v in &line.vertices {
            collector.push(v.s, &v.x);
        }
        points.extend(collector.out);
        if !line.completed() && line.s_end < section.window.1 {
            failures.push((
                id,
                format!("line terminated ({}) at s = {}", line.termination, line.s_end),
            ));
        }
    }
    points.sort_by(|a, b| {
        a.seed_id
            .cmp(&b.seed_id)
            .then(a.stamp.total_cmp(&b.stamp))
            .then(a.x.total_cmp(&b.x))
            .then(a.y.total_cmp(&b.y))
    });
    points.dedup();
    failures.sort();
    failures.dedup();
    SectionPoints {
        section: *section,
        points,
        failures,
    }
}
