//! Batch pipelines behind the command-line front end.
//!
//! Every run writes its artifacts plus `manifest.json` (resolved config,
//! content hash, artifact digests, per-seed soft failures) into the output
//! directory. Results are gathered in seed order, so outputs do not depend on
//! scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::classify::{
    advect_sphere, densest_plane, elliptic_verdict, fit_torus_surface, hyperbolic_verdict,
    line_angle_deg, perturbation_robustness, sphere_alignment, stretch_audit, CenterCurve,
    SphereAlignment, ToroidalFrame, TorusMesh,
};
use crate::config::RunConfig;
use crate::direction::{integrate_line, DirectionLine};
use crate::error::RunError;
use crate::flow_map::{advect_with_variations, finite_difference_gradient};
use crate::poincare::{classical_section, dual_section, SectionPoints};
use crate::stats::{quantile, spearman};
use crate::strain::{ftle, svd3};
use crate::velocity::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Ftle,
    LineSweep,
    ClassicalPoincare,
    DualPoincare,
    Classify,
    Sphere,
    FdCompare,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Ftle,
        Command::LineSweep,
        Command::ClassicalPoincare,
        Command::DualPoincare,
        Command::Classify,
        Command::Sphere,
        Command::FdCompare,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Ftle => "ftle",
            Command::LineSweep => "line-sweep",
            Command::ClassicalPoincare => "classical-poincare",
            Command::DualPoincare => "dual-poincare",
            Command::Classify => "classify",
            Command::Sphere => "sphere",
            Command::FdCompare => "fd-compare",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftFailure {
    pub seed_id: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub workers: usize,
    pub artifacts: Vec<Artifact>,
    pub soft_failures: Vec<SoftFailure>,
    pub summary: Value,
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Pipeline(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}

fn io_error(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Round-trip exact decimal representation (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn progress(command: Command, done: usize, total: usize) {
    if total >= 10 && (done % (total / 10).max(1) == 0 || done == total) {
        eprintln!("[{command}] {done}/{total}");
    }
}

/// Runs `command` with a pool of `workers` threads and writes all artifacts
/// (and the manifest) into `out_dir`.
pub fn run_command(
    config: &RunConfig,
    command: Command,
    out_dir: &Path,
    workers: usize,
) -> Result<RunReport, RunError> {
    config.validate()?;
    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Pipeline(e.to_string()))?;
    let mut writer = Writer::new(out_dir)?;
    let hash = config.hash(command.as_str());
    eprintln!("[{command}] config hash {hash}");
    let (soft_failures, summary) = pool.install(|| match command {
        Command::Ftle => run_ftle(config, &mut writer),
        Command::LineSweep => run_line_sweep(config, &mut writer),
        Command::ClassicalPoincare => run_classical(config, &mut writer, &hash),
        Command::DualPoincare => run_dual(config, &mut writer, &hash),
        Command::Classify => run_classify(config, &mut writer, &hash),
        Command::Sphere => run_sphere(config, &mut writer),
        Command::FdCompare => run_fd_compare(config, &mut writer),
    })?;
    let report = RunReport {
        command: command.as_str().to_string(),
        config_hash: hash,
        workers,
        artifacts: writer.artifacts.clone(),
        soft_failures,
        summary,
    };
    let manifest = json!({
        "command": report.command,
        "config_hash": report.config_hash,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "workers": workers,
        "artifacts": report.artifacts,
        "soft_failures": report.soft_failures,
        "summary": report.summary,
    });
    writer.write_json("manifest.json", &manifest)?;
    eprintln!("[{command}] wrote {} artifacts to {}", writer.artifacts.len(), out_dir.display());
    Ok(report)
}

type Outcome = Result<(Vec<SoftFailure>, Value), RunError>;

fn seeds(config: &RunConfig) -> Result<Vec<Vec3>, RunError> {
    let seeds = config.seeds.resolve();
    if seeds.is_empty() {
        return Err(RunError::Pipeline("no seeds configured".into()));
    }
    Ok(seeds)
}

fn run_ftle(config: &RunConfig, writer: &mut Writer) -> Outcome {
    let field = config.velocity_field()?;
    let seeds = seeds(config)?;
    let (t0, t1) = (config.horizon.t0, config.horizon.t1);
    let rows: Vec<Result<(f64, [f64; 3], f64), String>> = seeds
        .par_iter()
        .map(|x| {
            let sample = advect_with_variations(&field, x, t0, t1, config.tol).map_err(|e| e.to_string())?;
            let s = svd3(&sample.df).map_err(|e| e.to_string())?;
            let f = ftle(s.sigma[2], t0, t1).map_err(|e| e.to_string())?;
            Ok((f, s.sigma, s.gap))
        })
        .collect();
    let mut csv = String::from("seed_id,x,y,z,ftle,sigma1,sigma2,sigma3,gap\n");
    let mut failures = Vec::new();
    let mut max_ftle = f64::NEG_INFINITY;
    for (id, (x, row)) in seeds.iter().zip(&rows).enumerate() {
        match row {
            Ok((f, s, gap)) => {
                max_ftle = max_ftle.max(*f);
                let _ = writeln!(
                    csv,
                    "{id},{},{},{},{},{},{},{},{}",
                    fmt_f64(x[0]),
                    fmt_f64(x[1]),
                    fmt_f64(x[2]),
                    fmt_f64(*f),
                    fmt_f64(s[0]),
                    fmt_f64(s[1]),
                    fmt_f64(s[2]),
                    fmt_f64(*gap)
                );
            }
            Err(e) => failures.push(SoftFailure {
                seed_id: id,
                message: e.clone(),
            }),
        }
    }
    writer.write("ftle.csv", &csv)?;
    Ok((failures, json!({ "seeds": seeds.len(), "max_ftle": max_ftle })))
}

/// Line CSV rows; `term_reason` only on the last row of each line.
pub fn line_csv(lines: &[(usize, &DirectionLine)]) -> String {
    let mut csv = String::from("seed_id,s,x,y,z,term_reason\n");
    for (id, line) in lines {
        let n = line.vertices.len();
        for (k, v) in line.vertices.iter().enumerate() {
            let reason = if k + 1 == n { line.termination.as_str() } else { "" };
            let _ = writeln!(
                csv,
                "{id},{},{},{},{},{reason}",
                fmt_f64(v.s),
                fmt_f64(v.x[0]),
                fmt_f64(v.x[1]),
                fmt_f64(v.x[2])
            );
        }
    }
    csv
}

fn line_failure(id: usize, line: &DirectionLine) -> Option<SoftFailure> {
    (!line.completed()).then(|| SoftFailure {
        seed_id: id,
        message: format!(
            "{} at s = {}: {}",
            line.termination.as_str(),
            line.s_end,
            line.message.clone().unwrap_or_default()
        ),
    })
}

fn integrate_all(config: &RunConfig, command: Command) -> Result<Vec<DirectionLine>, RunError> {
    let field = config.velocity_field()?;
    let seeds = seeds(config)?;
    let spec = config.dual_spec();
    let opts = config.line_options();
    let orientation = config.orientation();
    let done = std::sync::atomic::AtomicUsize::new(0);
    Ok(seeds
        .par_iter()
        .map(|x| {
            let line = integrate_line(&spec, &field, x, &orientation, &opts);
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(command, k, seeds.len());
            line
        })
        .collect())
}

fn run_line_sweep(config: &RunConfig, writer: &mut Writer) -> Outcome {
    let lines = integrate_all(config, Command::LineSweep)?;
    let indexed: Vec<(usize, &DirectionLine)> = lines.iter().enumerate().collect();
    writer.write("lines.csv", &line_csv(&indexed))?;
    let failures = indexed.iter().filter_map(|(id, l)| line_failure(*id, l)).collect();
    let stats: Vec<Value> = lines
        .iter()
        .map(|l| {
            json!({
                "termination": l.termination.as_str(),
                "s_end": l.s_end,
                "accepted_steps": l.stats.steps.accepted,
                "degenerate_evals": l.stats.degenerate_evals,
            })
        })
        .collect();
    Ok((failures, json!({ "lines": stats })))
}

/// Section CSV `seed_id,stamp,x,y`.
pub fn section_csv(points: &SectionPoints) -> String {
    let mut csv = String::from("seed_id,stamp,x,y\n");
    for p in &points.points {
        let _ = writeln!(csv, "{},{},{},{}", p.seed_id, fmt_f64(p.stamp), fmt_f64(p.x), fmt_f64(p.y));
    }
    csv
}

fn write_section(
    writer: &mut Writer,
    name: &str,
    points: &SectionPoints,
    hash: &str,
    kind: &str,
) -> Result<(), RunError> {
    writer.write(&format!("{name}.csv"), &section_csv(points))?;
    writer.write_json(
        &format!("{name}.json"),
        &json!({
            "kind": kind,
            "section": points.section,
            "config_hash": hash,
            "points": points.points.len(),
            "failures": points.failures,
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )
}

fn run_classical(config: &RunConfig, writer: &mut Writer, hash: &str) -> Outcome {
    let field = config.velocity_field()?;
    let seeds = seeds(config)?;
    let section = config.classical_section_spec();
    let points = classical_section(&field, &seeds, config.classical.t_total, &section, config.tol)?;
    write_section(writer, "section", &points, hash, "classical")?;
    let failures = points
        .failures
        .iter()
        .map(|(id, m)| SoftFailure {
            seed_id: *id,
            message: m.clone(),
        })
        .collect();
    Ok((failures, json!({ "seeds": seeds.len(), "points": points.points.len() })))
}

fn run_dual(config: &RunConfig, writer: &mut Writer, hash: &str) -> Outcome {
    let field = config.velocity_field()?;
    let seeds = seeds(config)?;
    let spec = config.dual_spec();
    let mut opts = config.line_options();
    let section = config.section_spec();
    // only window vertices matter; the line is reduced to its crossings immediately
    opts.keep_from = opts.keep_from.max(section.window.0 - opts.max_step);
    let orientation = config.orientation();
    let domain = field.domain();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let per_seed: Vec<(SectionPoints, Option<SoftFailure>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(id, x)| {
            let line = integrate_line(&spec, &field, x, &orientation, &opts);
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(Command::DualPoincare, k, seeds.len());
            (dual_section([(id, &line)], &section, &domain), line_failure(id, &line))
        })
        .collect();
    let mut all = SectionPoints {
        section,
        points: Vec::new(),
        failures: Vec::new(),
    };
    let mut failures = Vec::new();
    for (pts, fail) in per_seed {
        all.points.extend(pts.points);
        all.failures.extend(pts.failures);
        failures.extend(fail);
    }
    write_section(writer, "section", &all, hash, "dual")?;
    Ok((failures, json!({ "seeds": seeds.len(), "points": all.points.len() })))
}

fn mesh_csv(mesh: &TorusMesh) -> String {
    let mut csv = String::from("i,j,x,y,z\n");
    for i in 0..mesh.n_z {
        for j in 0..mesh.n_theta {
            let v = mesh.vertex(i, j);
            let _ = writeln!(csv, "{i},{j},{},{},{}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]));
        }
    }
    csv
}

fn run_classify(config: &RunConfig, writer: &mut Writer, hash: &str) -> Outcome {
    let field = config.velocity_field()?;
    let seed = seeds(config)?[0];
    let spec = config.dual_spec();
    let opts = config.line_options();
    let section = config.section_spec();
    let c = &config.classify;
    let thresholds = c.thresholds.into();
    let mut failures = Vec::new();

    let report = perturbation_robustness(
        &spec,
        &field,
        &seed,
        &config.orientation(),
        c.epsilon,
        &opts,
        &section,
    )?;
    for (name, points) in ["plain", "tangent", "normal"].iter().zip(&report.sections) {
        write_section(writer, &format!("section_{name}"), points, hash, "dual")?;
    }
    let domain = field.domain();
    let plane = densest_plane(&report.lines[0], section.window, c.plane_radius, &domain, 400);
    let sphere: Option<SphereAlignment> = match plane {
        Some(p) => match sphere_alignment(&spec, &field, &p, c.sphere_dt, c.sphere_radius, c.sphere_points) {
            Ok(s) => Some(s),
            Err(e) => {
                failures.push(SoftFailure {
                    seed_id: 0,
                    message: format!("sphere: {e}"),
                });
                None
            }
        },
        None => {
            failures.push(SoftFailure {
                seed_id: 0,
                message: "no local surface estimate in the window".into(),
            });
            None
        }
    };
    let hyperbolic = hyperbolic_verdict(&report, sphere.as_ref(), &thresholds);

    let mut elliptic = None;
    if c.elliptic {
        let pts: Vec<Vec3> = report.lines[0]
            .vertices
            .iter()
            .filter(|v| section.in_window(v.s))
            .map(|v| domain.wrap(&v.x))
            .collect();
        let frame = match c.toroidal_frame() {
            Some(f) => Ok(f),
            None => CenterCurve::from_points(&pts, c.mesh[0])
                .map(|center| ToroidalFrame::new(c.frame[0], c.frame[1], center))
                .and_then(|f| f),
        };
        let mesh = frame.and_then(|f| fit_torus_surface(&pts, &f, c.mesh[0], c.mesh[1]));
        let audit = mesh.as_ref().ok().map(|m| {
            stretch_audit(&m.points_and_normals(), &field, spec.t0, spec.t1, c.delta, config.tol)
        });
        match &mesh {
            Ok(m) => {
                writer.write("mesh.csv", &mesh_csv(m))?;
                writer.write_json(
                    "mesh.json",
                    &json!({ "n_z": m.n_z, "n_theta": m.n_theta, "frame": m.frame, "filled_bins": m.filled_bins }),
                )?;
            }
            Err(e) => failures.push(SoftFailure {
                seed_id: 0,
                message: format!("torus fit: {e}"),
            }),
        }
        elliptic = Some(elliptic_verdict(mesh.as_ref().ok(), audit.as_ref(), &thresholds));
    }

    let verdict = match &elliptic {
        Some(e) if e.kind != crate::classify::LcsType::Undetermined => e.clone(),
        _ => hyperbolic.clone(),
    };
    let summary = json!({
        "seed": seed,
        "verdict": verdict,
        "hyperbolic": hyperbolic,
        "elliptic": elliptic,
        "distance_tangent": report.distance_tangent,
        "distance_normal": report.distance_normal,
        "section_points": report.points,
        "lines": report.lines.iter().map(|l| json!({
            "termination": l.termination.as_str(),
            "s_end": l.s_end,
            "degenerate_evals": l.stats.degenerate_evals,
        })).collect::<Vec<_>>(),
        "plane": plane,
        "sphere": sphere.as_ref().map(|s| json!({
            "center": s.deformation.center,
            "t0": s.deformation.t0,
            "t1": s.deformation.t1,
            "lengths": s.deformation.lengths,
            "axes": s.deformation.axes,
            "surface_normal": s.surface_normal,
            "major_normal_angle": s.major_normal_angle,
        })),
    });
    writer.write_json("verdict.json", &summary)?;
    Ok((failures, summary))
}

fn run_sphere(config: &RunConfig, writer: &mut Writer) -> Outcome {
    let field = config.velocity_field()?;
    let center = match config.sphere.center {
        Some(c) => Vec3::from(c),
        None => seeds(config)?[0],
    };
    let (t0, t1) = (config.horizon.t0, config.horizon.t1);
    let r = config.sphere.radius;
    let d = advect_sphere(&field, &center, r, config.sphere.n_points, t0, t1, config.tol)?;
    let sample = advect_with_variations(&field, &center, t0, t1, config.tol)?;
    let s = svd3(&sample.df).map_err(|e| RunError::Pipeline(e.to_string()))?;
    let mut csv = String::from("k,x,y,z\n");
    for (k, p) in d.points.iter().enumerate() {
        let _ = writeln!(csv, "{k},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]));
    }
    writer.write("sphere.csv", &csv)?;
    let rel_errors: Vec<f64> = (0..3).map(|i| (d.lengths[i] / (r * s.sigma[i]) - 1.0).abs()).collect();
    let axis_angles: Vec<f64> = (0..3).map(|i| line_angle_deg(&d.axes[i], &s.eta[i])).collect();
    let summary = json!({
        "center": center,
        "radius": r,
        "lengths": d.lengths,
        "axes": d.axes,
        "sigma": s.sigma,
        "eta": s.eta,
        "length_rel_errors": rel_errors,
        "axis_angles_deg": axis_angles,
    });
    writer.write_json("ellipsoid.json", &summary)?;
    Ok((Vec::new(), summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdRow {
    pub angle_deg: f64,
    pub ftle: f64,
}

/// Angle between the finite-difference and variational `xi_2` plus FTLE per seed.
pub fn fd_compare_rows(config: &RunConfig, seeds: &[Vec3]) -> Result<Vec<Result<FdRow, String>>, RunError> {
    let field = config.velocity_field()?;
    let (t0, t1) = (config.horizon.t0, config.horizon.t1);
    let delta = config.fd.delta;
    let done = std::sync::atomic::AtomicUsize::new(0);
    Ok(seeds
        .par_iter()
        .map(|x| {
            let row = (|| {
                let sample = advect_with_variations(&field, x, t0, t1, config.tol).map_err(|e| e.to_string())?;
                let exact = svd3(&sample.df).map_err(|e| e.to_string())?;
                let fd = finite_difference_gradient(&field, x, t0, t1, delta, config.tol).map_err(|e| e.to_string())?;
                let approx = svd3(&fd).map_err(|e| e.to_string())?;
                Ok(FdRow {
                    angle_deg: line_angle_deg(&exact.xi[1], &approx.xi[1]),
                    ftle: ftle(exact.sigma[2], t0, t1).map_err(|e| e.to_string())?,
                })
            })();
            let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(Command::FdCompare, k, seeds.len());
            row
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdSummary {
    pub max_angle_deg: f64,
    pub angle_p90: f64,
    pub ftle_p90: f64,
    /// Spearman correlation of angle and FTLE over the top-decile-angle set.
    pub exceedance_spearman: f64,
    /// Fraction of top-decile-angle points that are also top-decile FTLE.
    pub exceedance_overlap: f64,
    pub samples: usize,
}

pub fn summarize_fd(rows: &[FdRow]) -> FdSummary {
    let angles: Vec<f64> = rows.iter().map(|r| r.angle_deg).collect();
    let ftles: Vec<f64> = rows.iter().map(|r| r.ftle).collect();
    let angle_p90 = quantile(&angles, 0.9);
    let ftle_p90 = quantile(&ftles, 0.9);
    let top: Vec<&FdRow> = rows.iter().filter(|r| r.angle_deg >= angle_p90).collect();
    let a: Vec<f64> = top.iter().map(|r| r.angle_deg).collect();
    let f: Vec<f64> = top.iter().map(|r| r.ftle).collect();
    FdSummary {
        max_angle_deg: angles.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        angle_p90,
        ftle_p90,
        exceedance_spearman: spearman(&a, &f),
        exceedance_overlap: top.iter().filter(|r| r.ftle >= ftle_p90).count() as f64 / top.len().max(1) as f64,
        samples: rows.len(),
    }
}

fn run_fd_compare(config: &RunConfig, writer: &mut Writer) -> Outcome {
    let seeds = seeds(config)?;
    let rows = fd_compare_rows(config, &seeds)?;
    let mut csv = String::from("seed_id,x,y,z,angle_deg,ftle\n");
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (id, (x, row)) in seeds.iter().zip(rows).enumerate() {
        match row {
            Ok(r) => {
                let _ = writeln!(
                    csv,
                    "{id},{},{},{},{},{}",
                    fmt_f64(x[0]),
                    fmt_f64(x[1]),
                    fmt_f64(x[2]),
                    fmt_f64(r.angle_deg),
                    fmt_f64(r.ftle)
                );
                ok.push(r);
            }
            Err(message) => failures.push(SoftFailure { seed_id: id, message }),
        }
    }
    writer.write("fd_compare.csv", &csv)?;
    let summary = summarize_fd(&ok);
    Ok((failures, serde_json::to_value(summary).map_err(|e| RunError::Pipeline(e.to_string()))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.as_str().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.283185307179586, f64::MAX] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn ftle_run_writes_manifest() {
        let text = "[field]\nname = \"steady-abc\"\n[horizon]\nt0 = 0.0\nt1 = 1.0\n[seeds]\npoints = [[0.1, 0.2, 0.3], [1.0, 2.0, 3.0]]\n";
        let config = parse_config(text, &[]).unwrap();
        let dir = std::env::temp_dir().join(format!("dual-lcs-ftle-{}", std::process::id()));
        let report = run_command(&config, Command::Ftle, &dir, 1).unwrap();
        assert_eq!(report.artifacts[0].path, "ftle.csv");
        let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["config_hash"], report.config_hash);
        let csv = fs::read_to_string(dir.join("ftle.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn line_csv_marks_only_last_row() {
        let text = "[field]\nname = \"affine\"\nmatrix = [[0.3, 0.0, 0.0], [0.0, -0.5, 0.0], [0.0, 0.0, 0.2]]\n[horizon]\nt0 = 0.0\nt1 = 1.0\n[line]\ns_max = 0.5\n";
        let config = parse_config(text, &[]).unwrap();
        let line = integrate_line(
            &config.dual_spec(),
            &config.velocity_field().unwrap(),
            &Vec3::zeros(),
            &Vec3::z(),
            &config.line_options(),
        );
        let csv = line_csv(&[(7, &line)]);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert!(rows.len() >= 2);
        assert!(rows[..rows.len() - 1].iter().all(|r| r.ends_with(',')));
        assert!(rows.last().unwrap().ends_with(",reached-smax"));
        assert!(rows.iter().all(|r| r.starts_with("7,")));
    }
}
