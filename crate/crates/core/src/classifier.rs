//! Grid-based decision procedures for the Riemannian, T- and σT-conditions.
//!
//! Each grid value of `s` is realized by a direction with `α = 1` and `β = s`
//! (see [`MetricPoint::direction_for_s`]), and residuals are maxima over the grid.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::Frame;
use crate::error::{FinslerError, Result};
use crate::geometry::MetricPoint;
use crate::phi::{q_from_phi, PhiSpec};
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_SIZE: usize = 33;
pub const FIT_TOL: f64 = 1e-6;

/// `n` Chebyshev nodes on `(lo, hi)`, ascending.
pub fn chebyshev_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    let mid = (lo + hi) * T::lit(0.5);
    let half = (hi - lo) * T::lit(0.5);
    let mut g: Vec<T> = (0..n)
        .map(|k| {
            let theta = T::PI() * T::lit((2 * k + 1) as f64) / T::lit((2 * n) as f64);
            mid - half * theta.cos()
        })
        .collect();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    g
}

/// `(0.05b, 0.95b)` for families defined only for `s > 0`, `(−0.95b, 0.95b)` otherwise.
pub fn default_grid<T: Scalar>(mp: &MetricPoint<T>, spec: &PhiSpec<T>, n: usize) -> Vec<T> {
    let b = mp.b_norm();
    if spec.is_positive_only() {
        chebyshev_grid(T::lit(0.05) * b, T::lit(0.95) * b, n)
    } else {
        chebyshev_grid(T::lit(-0.95) * b, T::lit(0.95) * b, n)
    }
}

fn check_inputs<T: Scalar>(mp: &MetricPoint<T>, grid: &[T]) -> Result<()> {
    if mp.dim < 3 {
        return Err(FinslerError::DimensionTooSmall { dim: mp.dim });
    }
    if grid.is_empty() {
        return Err(FinslerError::EmptyGrid);
    }
    Ok(())
}

fn frame_at<'a, T: Scalar>(mp: &'a MetricPoint<T>, spec: &PhiSpec<T>, s: T) -> Result<Frame<'a, T>> {
    let y = mp.direction_for_s(s, None)?;
    Frame::new(mp, &y, spec)
}

#[derive(Debug, Clone, Serialize)]
pub struct RiemannianTest {
    pub passed: bool,
    pub rho1_max: f64,
    /// `max |ρ2| / max(1, |s|)`
    pub rho2_max: f64,
    pub cartan_max: f64,
    /// All three sub-residuals on the same side of `10·tol`.
    pub consistent: bool,
    /// `(k1, k2)` from `φ² = k1 s² + k2` through two grid points.
    pub fit: Option<(f64, f64)>,
    pub fit_residual: Option<f64>,
}

pub fn riemannian_test<T: Scalar>(mp: &MetricPoint<T>, spec: &PhiSpec<T>, grid: &[T], tol: T) -> Result<RiemannianTest> {
    check_inputs(mp, grid)?;
    let (mut r1, mut r2, mut cm) = (T::zero(), T::zero(), T::zero());
    let mut phis = Vec::with_capacity(grid.len());
    for &s in grid {
        let f = frame_at(mp, spec, s)?;
        r1 = r1.max(f.rho.rho1.abs());
        r2 = r2.max(f.rho.rho2.abs() / s.abs().max(T::one()));
        cm = cm.max(f.cartan_lower().max_abs());
        phis.push(f.phi());
    }
    let passed = r1 <= tol;
    let ten = T::lit(10.0) * tol;
    let below = [r1, r2, cm].map(|r| r <= ten);
    let consistent = below.iter().all(|&b| b) || below.iter().all(|&b| !b);
    let (fit, fit_residual) = if passed { fit_riemannian(grid, &phis) } else { (None, None) };
    Ok(RiemannianTest {
        passed,
        rho1_max: r1.to_f64_lossy(),
        rho2_max: r2.to_f64_lossy(),
        cartan_max: cm.to_f64_lossy(),
        consistent,
        fit,
        fit_residual,
    })
}

fn fit_riemannian<T: Scalar>(grid: &[T], phis: &[T]) -> (Option<(f64, f64)>, Option<f64>) {
    // the two points with the most distinct s²
    let (mut lo, mut hi) = (0, 0);
    for (k, &s) in grid.iter().enumerate() {
        if s * s < grid[lo] * grid[lo] {
            lo = k;
        }
        if s * s > grid[hi] * grid[hi] {
            hi = k;
        }
    }
    let (s1, s2) = (grid[lo] * grid[lo], grid[hi] * grid[hi]);
    if s1 == s2 {
        return (None, None);
    }
    let (p1, p2) = (phis[lo] * phis[lo], phis[hi] * phis[hi]);
    let k1 = (p2 - p1) / (s2 - s1);
    let k2 = p1 - k1 * s1;
    let res = grid.iter().zip(phis).map(|(&s, &p)| (p * p - k1 * s * s - k2).abs()).fold(T::zero(), T::max);
    (Some((k1.to_f64_lossy(), k2.to_f64_lossy())), Some(res.to_f64_lossy()))
}

#[derive(Debug, Clone, Serialize)]
pub struct BerwaldFit {
    pub c: f64,
    pub residual: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TConditionTest {
    pub passed: bool,
    pub phi_max: f64,
    pub psi_max: f64,
    pub omega_max: f64,
    /// When `passed`, whether Ψ and Ω vanish too.
    pub converse_ok: Option<bool>,
    pub fit: Option<BerwaldFit>,
}

pub fn t_condition_test<T: Scalar>(mp: &MetricPoint<T>, spec: &PhiSpec<T>, grid: &[T], tol: T) -> Result<TConditionTest> {
    check_inputs(mp, grid)?;
    let (mut pm, mut sm, mut om) = (T::zero(), T::zero(), T::zero());
    for &s in grid {
        let c = frame_at(mp, spec, s)?.t_coefficients()?;
        pm = pm.max(c.phi_coef.abs());
        sm = sm.max(c.psi_coef.abs());
        om = om.max(c.omega_coef.abs());
    }
    let passed = pm <= tol;
    let converse_ok = passed.then(|| sm <= tol && om <= tol);
    let fit = if passed { fit_berwald(mp.b_sq, spec, grid).ok() } else { None };
    Ok(TConditionTest {
        passed,
        phi_max: pm.to_f64_lossy(),
        psi_max: sm.to_f64_lossy(),
        omega_max: om.to_f64_lossy(),
        converse_ok,
        fit,
    })
}

/// Least-squares `c` in `1 + sQ = c(b² − s²)`, with the max deviation of `Q`
/// from `(cb² − 1)/s − cs` as residual.
pub fn fit_berwald<T: Scalar>(b_sq: T, spec: &PhiSpec<T>, grid: &[T]) -> Result<BerwaldFit> {
    let mut pts = Vec::new();
    for &s in grid.iter().filter(|s| s.abs() > T::lit(1e-12)) {
        pts.push((s, q_from_phi(spec, s)?.value()));
    }
    if pts.is_empty() {
        return Err(FinslerError::EmptyGrid);
    }
    let (mut num, mut den) = (T::zero(), T::zero());
    for &(s, q) in &pts {
        let m2 = b_sq - s * s;
        num += (T::one() + s * q) * m2;
        den += m2 * m2;
    }
    let c = num / den;
    let res = pts.iter().map(|&(s, q)| (q - ((c * b_sq - T::one()) / s - c * s)).abs()).fold(T::zero(), T::max);
    let residual = res.to_f64_lossy();
    Ok(BerwaldFit { c: c.to_f64_lossy(), residual, ok: residual <= FIT_TOL })
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaTConditionTest {
    pub passed: bool,
    /// `max |Φ + m²Ψ|`
    pub a_max: f64,
    /// `max |3Ψ + m²Ω|`
    pub b_max: f64,
    /// `max ‖σ_h T^h_ijk‖` with `σ = b`.
    pub sigma_contraction: f64,
    /// `max_j |σ_j − (σ_0/(sα)) b_j|` with `σ = b`.
    pub condition_c: f64,
    pub sigma: Vec<f64>,
    /// Grid values too close to `s = 0` for the contraction.
    pub skipped: Vec<f64>,
}

pub fn sigma_t_condition_test<T: Scalar>(
    mp: &MetricPoint<T>,
    spec: &PhiSpec<T>,
    grid: &[T],
    tol: T,
) -> Result<SigmaTConditionTest> {
    check_inputs(mp, grid)?;
    let (mut am, mut bm, mut sc, mut cc) = (T::zero(), T::zero(), T::zero(), T::zero());
    let mut skipped = Vec::new();
    let sigma = mp.b.clone();
    for &s in grid {
        let f = frame_at(mp, spec, s)?;
        let c = f.t_coefficients()?;
        let m2 = f.geom.m_sq;
        am = am.max(c.sigma_a(m2).abs());
        bm = bm.max(c.sigma_b(m2).abs());
        match f.sigma_contract(&sigma) {
            Ok(r) => {
                sc = sc.max(r.tensor.max_abs());
                cc = cc.max(r.condition_c);
            }
            Err(FinslerError::SDividesZero { .. }) => skipped.push(s.to_f64_lossy()),
            Err(e) => return Err(e),
        }
    }
    if skipped.len() == grid.len() {
        return Err(FinslerError::SDividesZero { s: 0.0 });
    }
    Ok(SigmaTConditionTest {
        passed: am <= tol && bm <= tol && sc <= tol,
        a_max: am.to_f64_lossy(),
        b_max: bm.to_f64_lossy(),
        sigma_contraction: sc.to_f64_lossy(),
        condition_c: cc.to_f64_lossy(),
        sigma: sigma.iter().map(|v| v.to_f64_lossy()).collect(),
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Riemannian,
    TCondition,
    SigmaTCondition,
    General,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationVerdict {
    pub kind: VerdictKind,
    pub residuals: BTreeMap<String, f64>,
    pub grid: Vec<f64>,
    pub dim_ok: bool,
    pub tol: f64,
    pub riemannian: RiemannianTest,
    pub t_condition: TConditionTest,
    pub sigma_t_condition: SigmaTConditionTest,
}

/// Runs all three tests; the most specific passing class wins.
pub fn classify<T: Scalar>(mp: &MetricPoint<T>, spec: &PhiSpec<T>, grid: &[T], tol: T) -> Result<ClassificationVerdict> {
    let r = riemannian_test(mp, spec, grid, tol)?;
    let t = t_condition_test(mp, spec, grid, tol)?;
    let st = sigma_t_condition_test(mp, spec, grid, tol)?;
    let kind = if r.passed {
        VerdictKind::Riemannian
    } else if t.passed {
        VerdictKind::TCondition
    } else if st.passed {
        VerdictKind::SigmaTCondition
    } else {
        VerdictKind::General
    };
    let residuals = BTreeMap::from([
        ("rho1".to_string(), r.rho1_max),
        ("Phi".to_string(), t.phi_max),
        ("Psi".to_string(), t.psi_max),
        ("Omega".to_string(), t.omega_max),
        ("Phi_plus_m2Psi".to_string(), st.a_max),
        ("threePsi_plus_m2Omega".to_string(), st.b_max),
        ("sigma_contraction".to_string(), st.sigma_contraction),
    ]);
    Ok(ClassificationVerdict {
        kind,
        residuals,
        grid: grid.iter().map(|s| s.to_f64_lossy()).collect(),
        dim_ok: mp.dim >= 3,
        tol: tol.to_f64_lossy(),
        riemannian: r,
        t_condition: t,
        sigma_t_condition: st,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_metric_point;
    use crate::linalg::Matrix;

    fn point(b: f64) -> MetricPoint<f64> {
        make_metric_point(Matrix::identity(3), vec![b, 0.0, 0.0], 1.0).unwrap()
    }

    fn run(mp: &MetricPoint<f64>, spec: &PhiSpec<f64>) -> ClassificationVerdict {
        classify(mp, spec, &default_grid(mp, spec, DEFAULT_GRID_SIZE), DEFAULT_TOL).unwrap()
    }

    #[test]
    fn chebyshev_nodes() {
        let g = chebyshev_grid(-1.0f64, 1.0, 33);
        assert_eq!(g.len(), 33);
        assert!(g[16].abs() < 1e-15);
        assert!(g[0] > -1.0 && g[32] < 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn riemannian_fit_recovers_k() {
        let mp = point(0.6);
        let spec = PhiSpec::riemannian(2.0, 3.0);
        let r = riemannian_test(&mp, &spec, &default_grid(&mp, &spec, 33), DEFAULT_TOL).unwrap();
        assert!(r.passed && r.consistent);
        let (k1, k2) = r.fit.unwrap();
        assert!((k1 - 2.0).abs() < 1e-10 && (k2 - 3.0).abs() < 1e-10);
    }

    #[test]
    fn verdicts() {
        assert_eq!(run(&point(0.6), &PhiSpec::riemannian(1.0, 1.0)).kind, VerdictKind::Riemannian);
        assert_eq!(run(&point(0.6), &PhiSpec::series(vec![1.0])).kind, VerdictKind::Riemannian);
        assert_eq!(run(&point(0.6), &PhiSpec::randers()).kind, VerdictKind::General);
        assert_eq!(run(&point(0.6), &PhiSpec::kropina()).kind, VerdictKind::General);
        let sb = run(&point(1.0), &PhiSpec::shen_berwald(2.0, 1.0));
        assert_eq!(sb.kind, VerdictKind::TCondition);
        let fit = sb.t_condition.fit.unwrap();
        assert!((fit.c - 2.0).abs() < 1e-8 && fit.ok);
        assert!(sb.sigma_t_condition.passed);
        let sl = run(&point(0.6), &PhiSpec::shen_landsberg(1.0, 0.5, 0.36));
        assert_eq!(sl.kind, VerdictKind::SigmaTCondition);
        assert!(sl.sigma_t_condition.sigma_contraction <= 1e-9);
        assert!(sl.sigma_t_condition.condition_c < 1e-15);
    }

    #[test]
    fn randers_riemannian_residual() {
        let mp = point(0.6);
        let r = riemannian_test(&mp, &PhiSpec::randers(), &[0.1, 0.5], DEFAULT_TOL).unwrap();
        assert!(!r.passed && r.consistent);
        assert_eq!(r.rho1_max, 1.0);
    }

    #[test]
    fn two_dimensions_rejected() {
        let mp = make_metric_point(Matrix::identity(2), vec![0.6, 0.0], 1.0).unwrap();
        let r = riemannian_test(&mp, &PhiSpec::randers(), &[0.3], DEFAULT_TOL);
        assert!(matches!(r, Err(FinslerError::DimensionTooSmall { dim: 2 })));
    }
}
