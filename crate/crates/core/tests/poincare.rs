use std::f64::consts::{PI, TAU};

use dual_lcs::cloud::mean_nearest_distance;
use dual_lcs::direction::{DirectionLine, LineStats, Termination, Vertex};
use dual_lcs::poincare::{classical_section, dual_section, wrap_periodic, CrossingRule, SectionSpec};
use dual_lcs::velocity::{AffineField, Domain, Vec3, VelocityField};
use proptest::prelude::*;

fn helix(seed: Vec3, pitch: f64, n: usize, ds: f64) -> DirectionLine {
    let vertices = (0..n)
        .map(|k| {
            let s = k as f64 * ds;
            Vertex {
                s,
                x: seed + Vec3::new((s * 0.7).cos() - 1.0, (s * 0.7).sin(), pitch * s),
            }
        })
        .collect::<Vec<_>>();
    DirectionLine {
        seed,
        s_end: vertices.last().unwrap().s,
        vertices,
        orientation_seed: Vec3::z(),
        termination: Termination::ReachedSmax,
        message: None,
        stats: LineStats::default(),
    }
}

#[test]
fn wrapping_examples() {
    let abc = Domain::periodic_cube(TAU);
    assert!((wrap_periodic(&Vec3::new(TAU + 0.1, 0.0, 0.0), &abc) - Vec3::new(0.1, 0.0, 0.0)).norm() < 1e-15);
    assert!((wrap_periodic(&Vec3::new(-0.1, 0.0, 0.0), &abc) - Vec3::new(TAU - 0.1, 0.0, 0.0)).norm() < 1e-15);
    let cats = VelocityField::cats_eye().domain();
    assert_eq!(wrap_periodic(&Vec3::new(0.5, 37.2, -4.0), &cats), Vec3::new(0.5, 37.2, -4.0));
}

#[test]
fn band_membership_examples() {
    let s = SectionSpec::z0((0.0, 1.0));
    assert!(s.in_band(0.001));
    assert!(!s.in_band(0.01));
    assert!(s.in_band(TAU - 0.001));
    assert!(s.in_band(3.0 * TAU + 0.0015));
}

#[test]
fn uniform_flow_on_and_off_the_plane() {
    let field = VelocityField::custom(AffineField::uniform(Vec3::x()));
    let s = SectionSpec::z0((0.0, 10.0));
    let on = classical_section(&field, &[Vec3::zeros()], 10.0, &s, 1e-8).unwrap();
    let mut steps = 0;
    dual_lcs::flow_map::trace_trajectory(&field, &Vec3::zeros(), 0.0, 10.0, 1e-8, |_, _| steps += 1).unwrap();
    assert_eq!(on.points.len(), steps);
    let off = classical_section(&field, &[Vec3::new(0.0, 0.0, PI)], 10.0, &s, 1e-8).unwrap();
    assert!(off.points.is_empty());
}

#[test]
fn dual_section_points_respect_window_and_band() {
    let lines: Vec<DirectionLine> = (0..5).map(|k| helix(Vec3::new(k as f64, 1.0, 0.3 * k as f64), 0.2, 20_000, 0.05)).collect();
    let s = SectionSpec::z0((200.0, 800.0));
    let cloud = dual_section(lines.iter().enumerate(), &s, &Domain::periodic_cube(TAU));
    assert!(!cloud.points.is_empty());
    for p in &cloud.points {
        assert!(s.in_window(p.stamp));
        assert!(p.offset <= s.epsilon_band || p.offset >= TAU - s.epsilon_band);
        assert!((0.0..TAU).contains(&p.x) && (0.0..TAU).contains(&p.y));
    }
}

#[test]
fn band_width_scales_point_count() {
    let field = VelocityField::steady_abc();
    let seeds: Vec<Vec3> = (0..10).map(|k| Vec3::new(0.6 * k as f64 + 0.1, 0.35 * k as f64 + 0.2, 0.0)).collect();
    let wide = SectionSpec::z0((1e3, 2e4));
    let narrow = wide.with_band(wide.epsilon_band / 10.0);
    let a = classical_section(&field, &seeds, 2e4, &wide, 1e-8).unwrap();
    let b = classical_section(&field, &seeds, 2e4, &narrow, 1e-8).unwrap();
    let ratio = a.points.len() as f64 / b.points.len() as f64;
    assert!((5.0..20.0).contains(&ratio), "{} vs {}", a.points.len(), b.points.len());
    let support = mean_nearest_distance(&b.xy(), &a.xy());
    assert!(support < 0.1, "{support}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dual_section_is_idempotent_and_order_free(
        pitches in prop::collection::vec(0.05..0.5f64, 2..6),
        interpolated in any::<bool>(),
        lo in 0.0..200.0f64,
    ) {
        let lines: Vec<DirectionLine> = pitches
            .iter()
            .enumerate()
            .map(|(k, &p)| helix(Vec3::new(0.5 * k as f64, 2.0, 0.1 * k as f64), p, 6000, 0.1))
            .collect();
        let rule = if interpolated { CrossingRule::Interpolated } else { CrossingRule::Band };
        let s = SectionSpec::z0((lo, lo + 300.0)).with_band(0.05).with_rule(rule);
        let domain = Domain::periodic_cube(TAU);
        let forward = dual_section(lines.iter().enumerate(), &s, &domain);
        let again = dual_section(lines.iter().enumerate(), &s, &domain);
        let reversed = dual_section(lines.iter().enumerate().rev(), &s, &domain);
        prop_assert_eq!(&forward, &again);
        prop_assert_eq!(&forward, &reversed);
    }
}
