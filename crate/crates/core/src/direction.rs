//! Oriented singular-vector direction fields and their arclength-parameterised
//! integral curves.
//!
//! Every evaluation of the field at a point `x` solves the flow map and the
//! equation of variations over the configured horizon, takes the SVD of the
//! resulting deformation gradient, and orients the chosen singular vector by
//! continuity with the previous direction along the curve.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{DirectionError, IntegrationError};
use crate::flow_map::{advect_with_variations, DEFAULT_TOL};
use crate::ode::{Dopri5, StepError, StepOptions, StepStats};
use crate::strain::{svd3, StrainData};
use crate::velocity::{Vec3, VelocityField};

/// Default cap on the arclength step.
pub const DEFAULT_MAX_ARC_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseField {
    /// Intermediate right singular vector of `DF_{t0}^{t1}` (initial LCS positions).
    Xi2,
    /// Intermediate left singular vector, evaluated as the intermediate right
    /// singular vector of the backward map `DF_{t1}^{t0}` (final LCS positions).
    Eta2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Partner {
    Xi1,
    Xi3,
    Eta1,
    Eta3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blend {
    pub epsilon: f64,
    pub partner: Partner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualFieldSpec {
    pub base: BaseField,
    pub blend: Option<Blend>,
    pub t0: f64,
    pub t1: f64,
    pub tol: f64,
}

impl DualFieldSpec {
    pub fn xi2(t0: f64, t1: f64) -> Self {
        DualFieldSpec {
            base: BaseField::Xi2,
            blend: None,
            t0,
            t1,
            tol: DEFAULT_TOL,
        }
    }

    pub fn eta2(t0: f64, t1: f64) -> Self {
        DualFieldSpec {
            base: BaseField::Eta2,
            ..Self::xi2(t0, t1)
        }
    }

    pub fn with_blend(mut self, epsilon: f64, partner: Partner) -> Self {
        self.blend = Some(Blend { epsilon, partner });
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        if let Some(b) = self.blend {
            let ok = matches!(
                (self.base, b.partner),
                (BaseField::Xi2, Partner::Xi1 | Partner::Xi3)
                    | (BaseField::Eta2, Partner::Eta1 | Partner::Eta3)
            );
            if !ok {
                return Err(IntegrationError::InvalidArgument(format!(
                    "partner {:?} cannot be blended with base {:?}",
                    b.partner, self.base
                )));
            }
            if !b.epsilon.is_finite() {
                return Err(IntegrationError::InvalidArgument("blend epsilon must be finite".into()));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(IntegrationError::InvalidTolerance(self.tol));
        }
        Ok(())
    }

    /// Horizon of the flow map whose right singular vectors define the field.
    pub fn map_horizon(&self) -> (f64, f64) {
        match self.base {
            BaseField::Xi2 => (self.t0, self.t1),
            BaseField::Eta2 => (self.t1, self.t0),
        }
    }

    /// Index of the partner among the right singular vectors of the map
    /// returned by [`Self::map_horizon`].
    fn partner_index(&self) -> Option<(usize, f64)> {
        self.blend.map(|b| {
            let idx = match b.partner {
                Partner::Xi1 => 0,
                Partner::Xi3 => 2,
                // backward map reverses the singular value order
                Partner::Eta1 => 2,
                Partner::Eta3 => 0,
            };
            (idx, b.epsilon)
        })
    }
}

/// Orientation references carried along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub base: Vec3,
    /// `None` takes the canonical SVD sign for the blend partner, flipped
    /// whenever the base vector is flipped.
    pub partner: Option<Vec3>,
}

impl Orientation {
    pub fn new(base: Vec3) -> Self {
        Orientation {
            base,
            partner: None,
        }
    }

    pub fn flipped(&self) -> Self {
        Orientation {
            base: -self.base,
            partner: self.partner.map(|p| -p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedDirection {
    /// Unit tangent of the (blended) field.
    pub direction: Vec3,
    /// References to use at the next point.
    pub orientation: Orientation,
    pub strain: StrainData,
    /// Steps spent on the flow-map solve.
    pub flow_steps: usize,
}

/// Source of singular vectors: a fresh flow-map solve per point, or a lazily
/// filled lattice cache with trilinear blending (lower fidelity).
#[derive(Debug, Clone, Default)]
pub enum StrainSource {
    #[default]
    Exact,
    GridCache(Arc<GridCache>),
}

/// Lazily filled lattice of singular-vector data. Exploratory use only: the
/// interpolated field can miss structure finer than the lattice spacing.
#[derive(Debug)]
pub struct GridCache {
    spacing: f64,
    nodes: RwLock<HashMap<[i64; 3], Result<StrainData, DirectionError>>>,
}

impl GridCache {
    pub fn new(spacing: f64) -> Self {
        GridCache {
            spacing,
            nodes: RwLock::new(HashMap::new()),
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn node(
        &self,
        spec: &DualFieldSpec,
        field: &VelocityField,
        key: [i64; 3],
    ) -> Result<StrainData, DirectionError> {
        if let Some(hit) = self.nodes.read().ok().and_then(|m| m.get(&key).cloned()) {
            return hit;
        }
        let x = Vec3::new(key[0] as f64, key[1] as f64, key[2] as f64) * self.spacing;
        let value = strain_at(spec, field, &x, Degeneracy::PassThrough).map(|(s, _)| s);
        if let Ok(mut m) = self.nodes.write() {
            m.insert(key, value.clone());
        }
        value
    }
}

fn strain_at(
    spec: &DualFieldSpec,
    field: &VelocityField,
    x: &Vec3,
    degeneracy: Degeneracy,
) -> Result<(StrainData, usize), DirectionError> {
    let (a, b) = spec.map_horizon();
    let sample = advect_with_variations(field, x, a, b, spec.tol)?;
    let strain = svd3(&sample.df)?;
    check_gap(&strain, x, degeneracy)?;
    Ok((strain, sample.stats.accepted + sample.stats.rejected))
}

fn check_gap(strain: &StrainData, x: &Vec3, degeneracy: Degeneracy) -> Result<(), DirectionError> {
    if degeneracy == Degeneracy::Terminate && strain.is_degenerate() {
        return Err(DirectionError::DegenerateGap {
            x: x[0],
            y: x[1],
            z: x[2],
            gap: strain.gap,
        });
    }
    Ok(())
}

fn align(v: Vec3, reference: &Vec3) -> Vec3 {
    if v.dot(reference) < 0.0 {
        -v
    } else {
        v
    }
}

fn compose(
    spec: &DualFieldSpec,
    base: Vec3,
    partner: Option<Vec3>,
    reference: &Orientation,
) -> (Vec3, Orientation) {
    let oriented = align(base, &reference.base);
    let flip = if oriented == base { 1.0 } else { -1.0 };
    let base = oriented;
    let partner = partner.map(|p| match reference.partner {
        Some(r) => align(p, &r),
        None => flip * p,
    });
    let mut d = base;
    if let (Some(p), Some((_, eps))) = (partner, spec.partner_index()) {
        d += eps * p;
    }
    let d = d.normalize();
    (
        d,
        Orientation {
            base,
            partner,
        },
    )
}

/// Evaluates the oriented (blended) direction field at `x`.
pub fn oriented_direction(
    spec: &DualFieldSpec,
    field: &VelocityField,
    x: &Vec3,
    reference: &Orientation,
) -> Result<OrientedDirection, DirectionError> {
    oriented_direction_from(&StrainSource::Exact, spec, field, x, reference)
}

pub fn oriented_direction_from(
    source: &StrainSource,
    spec: &DualFieldSpec,
    field: &VelocityField,
    x: &Vec3,
    reference: &Orientation,
) -> Result<OrientedDirection, DirectionError> {
    evaluate(source, spec, field, x, reference, Degeneracy::Terminate)
}

fn evaluate(
    source: &StrainSource,
    spec: &DualFieldSpec,
    field: &VelocityField,
    x: &Vec3,
    reference: &Orientation,
    degeneracy: Degeneracy,
) -> Result<OrientedDirection, DirectionError> {
    spec.validate()?;
    if ((reference.base.norm() - 1.0).abs() > 1e-6) || !reference.base.norm().is_finite() {
        return Err(DirectionError::NonUnitReference);
    }
    match source {
        StrainSource::Exact => {
            let (strain, flow_steps) = strain_at(spec, field, x, degeneracy)?;
            let partner = spec.partner_index().map(|(i, _)| strain.xi[i]);
            let (direction, orientation) = compose(spec, strain.xi[1], partner, reference);
            Ok(OrientedDirection {
                direction,
                orientation,
                strain,
                flow_steps,
            })
        }
        StrainSource::GridCache(cache) => {
            let h = cache.spacing;
            let g = x / h;
            let base_idx = [g[0].floor(), g[1].floor(), g[2].floor()];
            let frac = Vec3::new(g[0] - base_idx[0], g[1] - base_idx[1], g[2] - base_idx[2]);
            let mut base = Vec3::zeros();
            let mut partner = Vec3::zeros();
            let mut nearest: Option<(f64, StrainData)> = None;
            for corner in 0..8 {
                let off = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
                let key = [
                    base_idx[0] as i64 + off[0] as i64,
                    base_idx[1] as i64 + off[1] as i64,
                    base_idx[2] as i64 + off[2] as i64,
                ];
                let w = (0..3)
                    .map(|k| if off[k] == 1 { frac[k] } else { 1.0 - frac[k] })
                    .product::<f64>();
                let s = cache.node(spec, field, key)?;
                check_gap(&s, x, degeneracy)?;
                base += w * align(s.xi[1], &reference.base);
                if let Some((i, _)) = spec.partner_index() {
                    let r = reference.partner.unwrap_or(s.xi[i]);
                    partner += w * align(s.xi[i], &r);
                }
                if nearest.as_ref().is_none_or(|(wn, _)| w > *wn) {
                    nearest = Some((w, s));
                }
            }
            let strain = nearest.map(|(_, s)| s).expect("eight corners visited");
            let partner = spec.partner_index().map(|_| partner.normalize());
            let (direction, orientation) = compose(spec, base.normalize(), partner, reference);
            Ok(OrientedDirection {
                direction,
                orientation,
                strain,
                flow_steps: 0,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedSmax,
    DegenerateGap,
    StepUnderflow,
    LeftDomain,
    /// Flow-map solve or step budget failure.
    IntegrationFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedSmax => "reached-smax",
            Termination::DegenerateGap => "degenerate-gap",
            Termination::StepUnderflow => "step-underflow",
            Termination::LeftDomain => "left-domain",
            Termination::IntegrationFailure => "integration-failure",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub s: f64,
    pub x: Vec3,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LineStats {
    pub steps: StepStats,
    /// Total integration steps spent inside flow-map solves.
    pub flow_steps: usize,
    /// Smallest cosine between consecutive accepted base directions.
    pub min_turn_cos: f64,
    /// Smallest `|x_{k+1} - x_k| / (s_{k+1} - s_k)` over accepted steps.
    pub min_chord_ratio: f64,
    /// Largest such ratio.
    pub max_chord_ratio: f64,
    pub initial_step: f64,
    /// Right-hand-side evaluations at degenerate points (pass-through only).
    pub degenerate_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionLine {
    pub seed: Vec3,
    pub vertices: Vec<Vertex>,
    pub orientation_seed: Vec3,
    pub termination: Termination,
    /// Arclength reached when integration stopped.
    pub s_end: f64,
    pub message: Option<String>,
    pub stats: LineStats,
}

impl DirectionLine {
    pub fn completed(&self) -> bool {
        self.termination == Termination::ReachedSmax
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineOptions {
    pub s_max: f64,
    #[serde(default)]
    pub degeneracy: Degeneracy,
    /// Minimum arclength between stored vertices; 0 stores every step.
    pub output_stride: f64,
    /// Vertices with smaller arclength are not stored (the seed always is).
    pub keep_from: f64,
    pub max_step: f64,
}

impl LineOptions {
    pub fn new(s_max: f64) -> Self {
        LineOptions {
            s_max,
            degeneracy: Degeneracy::Terminate,
            output_stride: 0.0,
            keep_from: 0.0,
            max_step: DEFAULT_MAX_ARC_STEP,
        }
    }
}

/// What a line does at points whose singular-value gap is below the
/// degeneracy threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degeneracy {
    /// Stop with [`Termination::DegenerateGap`].
    #[default]
    Terminate,
    /// Use the singular vectors as computed and count the event.
    PassThrough,
}

/// Integrates `x' = d(x)` in arclength from `seed`.
///
/// Failures are recorded in [`DirectionLine::termination`]; whatever was
/// integrated up to that point is kept.
pub fn integrate_line(
    spec: &DualFieldSpec,
    field: &VelocityField,
    seed: &Vec3,
    initial_orientation: &Vec3,
    opts: &LineOptions,
) -> DirectionLine {
    integrate_line_from(&StrainSource::Exact, spec, field, seed, initial_orientation, opts)
}

pub fn integrate_line_from(
    source: &StrainSource,
    spec: &DualFieldSpec,
    field: &VelocityField,
    seed: &Vec3,
    initial_orientation: &Vec3,
    opts: &LineOptions,
) -> DirectionLine {
    let mut line = DirectionLine {
        seed: *seed,
        vertices: vec![Vertex { s: 0.0, x: *seed }],
        orientation_seed: *initial_orientation,
        termination: Termination::ReachedSmax,
        s_end: 0.0,
        message: None,
        stats: LineStats {
            min_turn_cos: 1.0,
            min_chord_ratio: 1.0,
            max_chord_ratio: 1.0,
            ..Default::default()
        },
    };
    let fail = |line: &mut DirectionLine, term: Termination, msg: String| {
        line.termination = term;
        line.message = Some(msg);
    };
    if let Err(e) = spec.validate() {
        fail(&mut line, Termination::IntegrationFailure, e.to_string());
        return line;
    }
    if !(opts.s_max > 0.0) || !(opts.max_step > 0.0) {
        fail(
            &mut line,
            Termination::IntegrationFailure,
            "s_max and max_step must be positive".into(),
        );
        return line;
    }
    let n = initial_orientation.norm();
    if !(n > 0.0 && n.is_finite()) {
        fail(
            &mut line,
            Termination::IntegrationFailure,
            "initial orientation must be a nonzero vector".into(),
        );
        return line;
    }
    let domain = field.domain();

    // the seed evaluation fixes the references used by the first step
    let seed_ref = match evaluate(
        source,
        spec,
        field,
        seed,
        &Orientation::new(initial_orientation / n),
        opts.degeneracy,
    ) {
        Ok(d) => d.orientation,
        Err(e) => {
            let term = match e {
                DirectionError::DegenerateGap { .. } => Termination::DegenerateGap,
                _ => Termination::IntegrationFailure,
            };
            fail(&mut line, term, format!("at s = 0: {e}"));
            return line;
        }
    };
    let reference = Cell::new(seed_ref);
    let last = Cell::new(seed_ref);
    let flow_steps = Cell::new(0usize);
    let degenerate = Cell::new(0usize);
    let mut rhs = |_s: f64, y: &[f64; 3]| -> Result<[f64; 3], DirectionError> {
        let x = Vec3::new(y[0], y[1], y[2]);
        let d = evaluate(source, spec, field, &x, &reference.get(), opts.degeneracy)?;
        if d.strain.is_degenerate() {
            degenerate.set(degenerate.get() + 1);
        }
        last.set(d.orientation);
        flow_steps.set(flow_steps.get() + d.flow_steps);
        Ok([d.direction[0], d.direction[1], d.direction[2]])
    };

    let step_opts = StepOptions {
        atol: spec.tol,
        rtol: spec.tol,
        h_max: opts.max_step,
        h_init: None,
        max_steps: usize::MAX,
    };
    let mut stepper = match Dopri5::new(&mut rhs, 0.0, [seed[0], seed[1], seed[2]], opts.s_max, step_opts) {
        Ok(s) => s,
        Err(e) => {
            let (term, msg) = classify_failure(e);
            fail(&mut line, term, msg);
            line.stats.flow_steps = flow_steps.get();
            return line;
        }
    };
    line.stats.initial_step = stepper.initial_step_size();
    let mut last_stored_s = 0.0;
    let mut prev = *seed;
    let mut prev_s = 0.0;
    loop {
        match stepper.step(&mut rhs) {
            Ok(true) => {
                let y = stepper.y();
                let x = Vec3::new(y[0], y[1], y[2]);
                let s = stepper.t();
                let new_ref = last.get();
                let cos = new_ref.base.dot(&reference.get().base);
                line.stats.min_turn_cos = line.stats.min_turn_cos.min(cos);
                let ratio = (x - prev).norm() / (s - prev_s);
                line.stats.min_chord_ratio = line.stats.min_chord_ratio.min(ratio);
                line.stats.max_chord_ratio = line.stats.max_chord_ratio.max(ratio);
                reference.set(new_ref);
                line.s_end = s;
                let is_last = stepper.is_done();
                if !domain.contains(&x) {
                    line.vertices.push(Vertex { s, x });
                    fail(
                        &mut line,
                        Termination::LeftDomain,
                        format!("left the domain at s = {s}"),
                    );
                    break;
                }
                if s >= opts.keep_from && (s - last_stored_s >= opts.output_stride || is_last) {
                    line.vertices.push(Vertex { s, x });
                    last_stored_s = s;
                }
                prev = x;
                prev_s = s;
            }
            Ok(false) => break,
            Err(e) => {
                let (term, msg) = classify_failure(e);
                fail(&mut line, term, msg);
                break;
            }
        }
    }
    line.stats.steps = stepper.stats();
    line.stats.flow_steps = flow_steps.get();
    line.stats.degenerate_evals = degenerate.get();
    line
}

fn classify_failure(e: StepError<DirectionError>) -> (Termination, String) {
    match e {
        StepError::Rhs { t, error } => {
            let term = match error {
                DirectionError::DegenerateGap { .. } => Termination::DegenerateGap,
                _ => Termination::IntegrationFailure,
            };
            (term, format!("at s = {t}: {error}"))
        }
        StepError::Integration(IntegrationError::StepUnderflow { t, h }) => (
            Termination::StepUnderflow,
            format!("step size underflow at s = {t} (h = {h:e})"),
        ),
        StepError::Integration(other) => (Termination::IntegrationFailure, other.to_string()),
    }
}
