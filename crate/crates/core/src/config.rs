//! Run configuration: TOML schema, defaults, validation and `KEY=VALUE` overrides.
//!
//! ```toml
//! tol = 1e-8
//!
//! [field]
//! name = "steady-abc"        # cats-eye | steady-abc | aperiodic-abc | affine
//!
//! [horizon]
//! t0 = 0.0
//! t1 = 10.0
//!
//! [seeds]
//! grid = { x = [0.0, 6.283185307179586, 20], y = [0.0, 6.283185307179586, 20], z = [0.0, 0.0, 1] }
//!
//! [line]
//! s_max = 5e4
//!
//! [section]
//! window = [4e4, 5e4]
//! ```

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{CenterCurve, ToroidalFrame, VerdictThresholds};
use crate::direction::{BaseField, Degeneracy, DualFieldSpec, LineOptions, Partner, DEFAULT_MAX_ARC_STEP};
use crate::error::ConfigError;
use crate::flow_map::DEFAULT_TOL;
use crate::poincare::{CrossingRule, SectionSpec, DEFAULT_SECTION_BAND};
use crate::velocity::{AffineField, Mat3, Modulation, Vec3, VelocityField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
    pub field: FieldConfig,
    #[serde(default)]
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub line: LineConfig,
    #[serde(default)]
    pub section: SectionConfig,
    #[serde(default)]
    pub classical: ClassicalConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub sphere: SphereConfig,
    #[serde(default)]
    pub fd: FdConfig,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub name: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    /// Modulation constants `k0..k3` for the aperiodic ABC flow.
    pub k: Option<[f64; 4]>,
    /// Cat's eye cross-stream extent; unbounded when absent.
    pub y_range: Option<[f64; 2]>,
    pub matrix: Option<[[f64; 3]; 3]>,
    pub offset: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    pub t0: f64,
    pub t1: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        HorizonConfig { t0: 0.0, t1: 10.0 }
    }
}

/// One axis of a seed lattice: `[lo, hi, n]`, `n` evenly spaced values with
/// `hi` excluded when the axis is a full period, included otherwise.
pub type GridAxis = (f64, f64, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: GridAxis,
    pub y: GridAxis,
    pub z: GridAxis,
    /// Drop the upper endpoint on every axis (periodic grids).
    #[serde(default = "default_true")]
    pub periodic: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    pub grid: Option<GridSpec>,
}

impl SeedConfig {
    /// Explicit points first, then the grid in `x`-fastest order.
    pub fn resolve(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = self.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        if let Some(g) = &self.grid {
            let axis = |a: GridAxis| -> Vec<f64> {
                let (lo, hi, n) = a;
                if n <= 1 {
                    return vec![lo; n];
                }
                let div = if g.periodic { n } else { n - 1 } as f64;
                (0..n).map(|i| lo + (hi - lo) * i as f64 / div).collect()
            };
            let (xs, ys, zs) = (axis(g.x), axis(g.y), axis(g.z));
            for z in &zs {
                for y in &ys {
                    for x in &xs {
                        out.push(Vec3::new(*x, *y, *z));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseName {
    Xi2,
    Eta2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartnerName {
    Xi1,
    Xi3,
    Eta1,
    Eta3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    #[serde(default = "default_base")]
    pub base: BaseName,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default)]
    pub output_stride: f64,
    #[serde(default)]
    pub keep_from: f64,
    #[serde(default = "default_orientation")]
    pub orientation: [f64; 3],
    #[serde(default)]
    pub epsilon: f64,
    pub partner: Option<PartnerName>,
    #[serde(default)]
    pub degeneracy: Degeneracy,
}

fn default_base() -> BaseName {
    BaseName::Xi2
}
fn default_s_max() -> f64 {
    5e4
}
fn default_max_step() -> f64 {
    DEFAULT_MAX_ARC_STEP
}
fn default_orientation() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for LineConfig {
    fn default() -> Self {
        LineConfig {
            base: default_base(),
            s_max: default_s_max(),
            max_step: default_max_step(),
            output_stride: 0.0,
            keep_from: 0.0,
            orientation: default_orientation(),
            epsilon: 0.0,
            partner: None,
            degeneracy: Degeneracy::Terminate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Band,
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    #[serde(default = "default_axis")]
    pub axis: usize,
    #[serde(default)]
    pub value: f64,
    #[serde(default = "default_band")]
    pub epsilon: f64,
    #[serde(default = "default_window")]
    pub window: [f64; 2],
    #[serde(default = "default_rule")]
    pub rule: RuleName,
}

fn default_axis() -> usize {
    2
}
fn default_band() -> f64 {
    DEFAULT_SECTION_BAND
}
fn default_window() -> [f64; 2] {
    [4e4, 5e4]
}
fn default_rule() -> RuleName {
    RuleName::Band
}

impl Default for SectionConfig {
    fn default() -> Self {
        SectionConfig {
            axis: default_axis(),
            value: 0.0,
            epsilon: default_band(),
            window: default_window(),
            rule: default_rule(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    #[serde(default = "default_classical_t")]
    pub t_total: f64,
    #[serde(default = "default_classical_window")]
    pub window: [f64; 2],
}

fn default_classical_t() -> f64 {
    2e4
}
fn default_classical_window() -> [f64; 2] {
    [1e4, 2e4]
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            t_total: default_classical_t(),
            window: default_classical_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Blend weight of the perturbed lines.
    #[serde(default = "default_perturbation")]
    pub epsilon: f64,
    /// Neighbourhood radius for the local surface estimate.
    #[serde(default = "default_plane_radius")]
    pub plane_radius: f64,
    #[serde(default = "default_sphere_radius")]
    pub sphere_radius: f64,
    #[serde(default = "default_sphere_points")]
    pub sphere_points: usize,
    /// Advection time of the tracer sphere.
    #[serde(default = "default_sphere_dt")]
    pub sphere_dt: f64,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    /// Stretch-audit band half-width.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_frame")]
    pub frame: [f64; 2],
    /// Tabulated center curve `[z, x_c, y_c]`; estimated from the line when empty.
    #[serde(default)]
    pub center: Vec<[f64; 3]>,
    #[serde(default = "default_mesh")]
    pub mesh: [usize; 2],
    /// Also attempt the elliptic tests.
    #[serde(default)]
    pub elliptic: bool,
}

fn default_perturbation() -> f64 {
    0.01
}
fn default_plane_radius() -> f64 {
    0.2
}
fn default_sphere_radius() -> f64 {
    1e-3 * TAU
}
fn default_sphere_points() -> usize {
    200
}
fn default_sphere_dt() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.2
}
fn default_frame() -> [f64; 2] {
    [2.0, 1.0]
}
fn default_mesh() -> [usize; 2] {
    [32, 16]
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            epsilon: default_perturbation(),
            plane_radius: default_plane_radius(),
            sphere_radius: default_sphere_radius(),
            sphere_points: default_sphere_points(),
            sphere_dt: default_sphere_dt(),
            thresholds: ThresholdConfig::default(),
            delta: default_delta(),
            frame: default_frame(),
            center: Vec::new(),
            mesh: default_mesh(),
            elliptic: false,
        }
    }
}

impl ClassifyConfig {
    pub fn toroidal_frame(&self) -> Option<ToroidalFrame> {
        if self.center.is_empty() {
            return None;
        }
        Some(ToroidalFrame {
            r1: self.frame[0],
            r2: self.frame[1],
            center: CenterCurve {
                z: self.center.iter().map(|r| r[0]).collect(),
                xc: self.center.iter().map(|r| r[1]).collect(),
                yc: self.center.iter().map(|r| r[2]).collect(),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default = "default_tangent_distance")]
    pub tangent_distance: f64,
    #[serde(default = "default_normal_ratio")]
    pub normal_ratio: f64,
    #[serde(default = "default_axis_angle")]
    pub axis_angle_deg: f64,
    #[serde(default = "default_majority")]
    pub audit_majority: f64,
}

fn default_tangent_distance() -> f64 {
    VerdictThresholds::default().tangent_distance
}
fn default_normal_ratio() -> f64 {
    VerdictThresholds::default().normal_ratio
}
fn default_axis_angle() -> f64 {
    VerdictThresholds::default().axis_angle_deg
}
fn default_majority() -> f64 {
    VerdictThresholds::default().audit_majority
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        let t = VerdictThresholds::default();
        ThresholdConfig {
            tangent_distance: t.tangent_distance,
            normal_ratio: t.normal_ratio,
            axis_angle_deg: t.axis_angle_deg,
            audit_majority: t.audit_majority,
        }
    }
}

impl From<ThresholdConfig> for VerdictThresholds {
    fn from(t: ThresholdConfig) -> Self {
        VerdictThresholds {
            tangent_distance: t.tangent_distance,
            normal_ratio: t.normal_ratio,
            axis_angle_deg: t.axis_angle_deg,
            audit_majority: t.audit_majority,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub center: Option<[f64; 3]>,
    #[serde(default = "default_sphere_radius")]
    pub radius: f64,
    #[serde(default = "default_sphere_points")]
    pub n_points: usize,
}

impl Default for SphereConfig {
    fn default() -> Self {
        SphereConfig {
            center: None,
            radius: default_sphere_radius(),
            n_points: default_sphere_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdConfig {
    #[serde(default = "default_fd_delta")]
    pub delta: f64,
}

fn default_fd_delta() -> f64 {
    1e-5
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            delta: default_fd_delta(),
        }
    }
}

/// Byte offset to 1-based line number.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    ConfigError::Syntax {
        line,
        message: err.message().to_string(),
    }
}

/// Sets a dotted key (`line.s_max`) in a TOML table. The value is parsed as
/// TOML and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(assignment.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::BadOverride(assignment.to_string()));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::invalid(key, format!("`{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses, applies overrides, fills defaults and validates.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let config = if overrides.is_empty() {
        config
    } else {
        let mut table: toml::Table = text.parse().map_err(|e| toml_error(text, e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let merged = toml::to_string(&table).map_err(|e| ConfigError::invalid("overrides", e.to_string()))?;
        toml::from_str(&merged).map_err(|e| ConfigError::invalid("overrides", e.message().to_string()))?
    };
    config.validate()?;
    Ok(config)
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, "must be finite"))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("tol", self.tol)?;
        if self.workers == Some(0) {
            return Err(ConfigError::invalid("workers", "must be at least 1"));
        }
        self.velocity_field()?;
        finite("horizon", &[self.horizon.t0, self.horizon.t1])?;
        for (i, p) in self.seeds.points.iter().enumerate() {
            finite(&format!("seeds.points[{i}]"), p)?;
        }
        if let Some(g) = &self.seeds.grid {
            finite("seeds.grid", &[g.x.0, g.x.1, g.y.0, g.y.1, g.z.0, g.z.1])?;
        }

        let l = &self.line;
        positive("line.s_max", l.s_max)?;
        positive("line.max_step", l.max_step)?;
        if !(l.output_stride >= 0.0) || !(l.keep_from >= 0.0) {
            return Err(ConfigError::invalid("line", "output_stride and keep_from must be non-negative"));
        }
        finite("line.orientation", &l.orientation)?;
        if Vec3::from(l.orientation).norm() == 0.0 {
            return Err(ConfigError::invalid("line.orientation", "must be non-zero"));
        }
        if l.epsilon != 0.0 && l.partner.is_none() {
            return Err(ConfigError::invalid("line.partner", "required when line.epsilon is non-zero"));
        }
        self.dual_spec().validate().map_err(|e| ConfigError::invalid("line", e.to_string()))?;

        let s = &self.section;
        if s.axis > 2 {
            return Err(ConfigError::invalid("section.axis", "must be 0, 1 or 2"));
        }
        positive("section.epsilon", s.epsilon)?;
        self.section_spec()
            .validate()
            .map_err(|m| ConfigError::invalid("section", m))?;
        positive("classical.t_total", self.classical.t_total)?;
        if !(self.classical.window[0] < self.classical.window[1]) {
            return Err(ConfigError::invalid("classical.window", "must be an increasing pair"));
        }

        let c = &self.classify;
        positive("classify.epsilon", c.epsilon)?;
        positive("classify.plane_radius", c.plane_radius)?;
        positive("classify.sphere_radius", c.sphere_radius)?;
        positive("classify.sphere_dt", c.sphere_dt)?;
        if c.sphere_points < 50 {
            return Err(ConfigError::invalid("classify.sphere_points", "must be at least 50"));
        }
        if !(c.delta >= 0.0) {
            return Err(ConfigError::invalid("classify.delta", "must be non-negative"));
        }
        positive("classify.frame[0]", c.frame[0])?;
        positive("classify.frame[1]", c.frame[1])?;
        if let Some(frame) = c.toroidal_frame() {
            frame
                .center
                .validate()
                .map_err(|e| ConfigError::invalid("classify.center", e.to_string()))?;
        }
        if c.mesh[0] < 3 || c.mesh[1] < 3 {
            return Err(ConfigError::invalid("classify.mesh", "needs at least 3x3 bins"));
        }
        positive("sphere.radius", self.sphere.radius)?;
        if self.sphere.n_points < 50 {
            return Err(ConfigError::invalid("sphere.n_points", "must be at least 50"));
        }
        positive("fd.delta", self.fd.delta)?;
        Ok(())
    }

    pub fn velocity_field(&self) -> Result<VelocityField, ConfigError> {
        let f = &self.field;
        let unused = |names: &[(&str, bool)]| -> Result<(), ConfigError> {
            for (n, present) in names {
                if *present {
                    return Err(ConfigError::invalid(
                        format!("field.{n}"),
                        format!("not a parameter of `{}`", f.name),
                    ));
                }
            }
            Ok(())
        };
        let field = match f.name.as_str() {
            "cats-eye" => {
                unused(&[
                    ("a", f.a.is_some()),
                    ("b", f.b.is_some()),
                    ("k", f.k.is_some()),
                    ("matrix", f.matrix.is_some()),
                    ("offset", f.offset.is_some()),
                ])?;
                let field = VelocityField::cats_eye_with(f.c.unwrap_or(2.0))
                    .map_err(|e| ConfigError::invalid("field.c", e.to_string()))?;
                match f.y_range {
                    Some([lo, hi]) if lo < hi => field.with_y_extent(lo, hi),
                    Some(_) => return Err(ConfigError::invalid("field.y_range", "must be an increasing pair")),
                    None => field,
                }
            }
            "steady-abc" | "aperiodic-abc" => {
                unused(&[
                    ("y_range", f.y_range.is_some()),
                    ("matrix", f.matrix.is_some()),
                    ("offset", f.offset.is_some()),
                ])?;
                let base = VelocityField::steady_abc();
                let (a0, b0, c0) = match base {
                    VelocityField::SteadyAbc { a, b, c } => (a, b, c),
                    _ => unreachable!(),
                };
                let (a, b, c) = (f.a.unwrap_or(a0), f.b.unwrap_or(b0), f.c.unwrap_or(c0));
                finite("field", &[a, b, c])?;
                if f.name == "steady-abc" {
                    if f.k.is_some() {
                        return Err(ConfigError::invalid("field.k", "not a parameter of `steady-abc`"));
                    }
                    VelocityField::SteadyAbc { a, b, c }
                } else {
                    let modulation = match f.k {
                        Some(k) => {
                            finite("field.k", &k)?;
                            Modulation {
                                k0: k[0],
                                k1: k[1],
                                k2: k[2],
                                k3: k[3],
                            }
                        }
                        None => Modulation::default(),
                    };
                    VelocityField::AperiodicAbc { a, b, c, modulation }
                }
            }
            "affine" => {
                unused(&[
                    ("a", f.a.is_some()),
                    ("b", f.b.is_some()),
                    ("c", f.c.is_some()),
                    ("k", f.k.is_some()),
                    ("y_range", f.y_range.is_some()),
                ])?;
                let m = f.matrix.unwrap_or([[0.0; 3]; 3]);
                let o = f.offset.unwrap_or([0.0; 3]);
                finite("field.matrix", &m.concat())?;
                finite("field.offset", &o)?;
                let matrix = Mat3::from_fn(|i, j| m[i][j]);
                if matrix.trace().abs() > 1e-12 {
                    return Err(ConfigError::invalid("field.matrix", "must be trace-free (incompressible)"));
                }
                VelocityField::custom(AffineField {
                    matrix,
                    offset: Vec3::from(o),
                })
            }
            other => {
                return Err(ConfigError::invalid(
                    "field.name",
                    format!("unknown field `{other}` (expected cats-eye, steady-abc, aperiodic-abc or affine)"),
                ))
            }
        };
        Ok(field)
    }

    pub fn dual_spec(&self) -> DualFieldSpec {
        let (t0, t1) = (self.horizon.t0, self.horizon.t1);
        let base = match self.line.base {
            BaseName::Xi2 => DualFieldSpec::xi2(t0, t1),
            BaseName::Eta2 => DualFieldSpec::eta2(t0, t1),
        };
        let spec = base.with_tol(self.tol);
        match self.line.partner {
            Some(p) if self.line.epsilon != 0.0 => spec.with_blend(self.line.epsilon, partner(p)),
            _ => spec,
        }
    }

    pub fn base_field(&self) -> BaseField {
        self.dual_spec().base
    }

    pub fn line_options(&self) -> LineOptions {
        LineOptions {
            s_max: self.line.s_max,
            degeneracy: self.line.degeneracy,
            output_stride: self.line.output_stride,
            keep_from: self.line.keep_from,
            max_step: self.line.max_step,
        }
    }

    pub fn orientation(&self) -> Vec3 {
        Vec3::from(self.line.orientation).normalize()
    }

    pub fn section_spec(&self) -> SectionSpec {
        let s = &self.section;
        let mut spec = SectionSpec::z0((s.window[0], s.window[1]))
            .with_band(s.epsilon)
            .with_rule(match s.rule {
                RuleName::Band => CrossingRule::Band,
                RuleName::Interpolated => CrossingRule::Interpolated,
            });
        spec.axis = s.axis;
        spec.value = s.value;
        spec
    }

    /// Section spec for classical Poincaré maps (time stamps instead of arclength).
    pub fn classical_section_spec(&self) -> SectionSpec {
        let mut spec = self.section_spec();
        spec.window = (self.classical.window[0], self.classical.window[1]);
        spec
    }

    /// Canonical JSON used for hashing and the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON of `command` plus the resolved config.
    pub fn hash(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0u8]);
        h.update(self.canonical_json().as_bytes());
        hex::encode(h.finalize())
    }
}

fn partner(p: PartnerName) -> Partner {
    match p {
        PartnerName::Xi1 => Partner::Xi1,
        PartnerName::Xi3 => Partner::Xi3,
        PartnerName::Eta1 => Partner::Eta1,
        PartnerName::Eta3 => Partner::Eta3,
    }
}
