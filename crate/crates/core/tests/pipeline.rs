//! Cross-module consistency: ODE constructions feed the classifier, and the
//! f32 path agrees with f64.

use finsler_core::classifier::{default_grid, DEFAULT_TOL};
use finsler_core::fixtures::metric_point;
use finsler_core::ode_lab::{linspace, shen_berwald_phi_check, shen_landsberg_phi_check};
use finsler_core::{classify, Direction, Frame, MetricPoint32, MetricPoint64, PhiSpec32, PhiSpec64, VerdictKind};

#[test]
fn berwald_construction_is_classified_t_condition() {
    let mp: MetricPoint64 = metric_point("unit_b").unwrap();
    for c in [1.5, 2.0, 4.0] {
        let check = shen_berwald_phi_check(c, mp.b_sq, &linspace(0.05, 0.95, 17)).unwrap();
        assert!(check.passed, "c = {c}: {check:?}");
        let spec = PhiSpec64::shen_berwald(c, mp.b_sq);
        let v = classify(&mp, &spec, &default_grid(&mp, &spec, 33), DEFAULT_TOL).unwrap();
        assert_eq!(v.kind, VerdictKind::TCondition, "c = {c}");
        let fit = v.t_condition.fit.unwrap();
        assert!((fit.c - c).abs() <= 1e-6 * c, "c = {c}, fit {}", fit.c);
    }
}

#[test]
fn landsberg_construction_is_classified_sigma_t() {
    let mp: MetricPoint64 = metric_point("tilted").unwrap();
    let b = mp.b_norm();
    for (c1, c2) in [(1.0, 0.5), (-0.7, 0.3), (0.5, -1.0)] {
        let check = shen_landsberg_phi_check(c1, c2, mp.b_sq, &linspace(-0.9 * b, 0.9 * b, 15)).unwrap();
        assert!(check.passed, "({c1}, {c2}): {check:?}");
        let spec = PhiSpec64::shen_landsberg(c1, c2, mp.b_sq);
        let v = classify(&mp, &spec, &default_grid(&mp, &spec, 33), DEFAULT_TOL).unwrap();
        assert_eq!(v.kind, VerdictKind::SigmaTCondition, "({c1}, {c2})");
    }
}

#[test]
fn general_member_is_not_misclassified() {
    let mp: MetricPoint64 = metric_point("standard").unwrap();
    let spec = PhiSpec64::series(vec![1.0, 0.3, 0.2, 0.1]);
    let v = classify(&mp, &spec, &default_grid(&mp, &spec, 33), DEFAULT_TOL).unwrap();
    assert_eq!(v.kind, VerdictKind::General);
}

#[test]
fn single_precision_tracks_double() {
    let mp64: MetricPoint64 = metric_point("standard").unwrap();
    let mp32: MetricPoint32 = metric_point("standard").unwrap();
    let y64 = Direction(vec![1.0, 0.3, 0.2]);
    let y32 = Direction(vec![1.0f32, 0.3, 0.2]);
    let f64_ = Frame::new(&mp64, &y64, &PhiSpec64::shen_landsberg(1.0, 0.5, 0.36)).unwrap();
    let f32_ = Frame::new(&mp32, &y32, &PhiSpec32::shen_landsberg(1.0, 0.5, 0.36)).unwrap();
    let g64 = f64_.metric_lower();
    let g32 = f32_.metric_lower();
    for (a, b) in g64.as_slice().iter().zip(g32.as_slice()) {
        assert!((a - *b as f64).abs() <= 1e-5 * (1.0 + a.abs()), "{a} vs {b}");
    }
    let t64 = f64_.t_lower().unwrap().to_dense();
    let t32 = f32_.t_lower().unwrap().to_dense();
    let scale = t64.max_abs();
    for (a, b) in t64.as_slice().iter().zip(t32.as_slice()) {
        assert!((a - *b as f64).abs() <= 1e-4 * scale, "{a} vs {b}");
    }
}
