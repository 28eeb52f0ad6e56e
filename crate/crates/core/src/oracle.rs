//! Definition-based tensors computed from `F = αφ(β/α)` by exact multi-dual
//! differentiation. Nothing here uses the ρ/μ/Φ closed forms; the oracle
//! only needs φ's order-4 jet.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::{check_family_b_sq, Frame};
use crate::error::{FinslerError, Result};
use crate::geometry::{Direction, MetricPoint};
use crate::jet::MAX_ORDER;
use crate::linalg::Matrix;
use crate::multidual::{full_mask, perturb, MultiDual};
use crate::phi::{phi_jet, PhiSpec};
use crate::scalar::Scalar;
use crate::tensor::{all_indices, DenseTensor};

/// `F(y)` with multi-dual `y`.
pub fn finsler_md<T: Scalar>(mp: &MetricPoint<T>, y: &[MultiDual<T>], spec: &PhiSpec<T>) -> Result<MultiDual<T>> {
    let n = mp.dim;
    if y.len() != n {
        return Err(FinslerError::DimensionMismatch { expected: n, found: y.len() });
    }
    let mut q = MultiDual::constant(T::zero());
    let mut beta = MultiDual::constant(T::zero());
    for i in 0..n {
        let ai: MultiDual<T> = (0..n).map(|j| y[j] * mp.a.get(i, j)).sum();
        q = q + y[i] * ai;
        beta = beta + y[i] * mp.b[i];
    }
    if !(q.real() > T::min_positive_value()) || !q.real().is_finite() {
        return Err(FinslerError::ZeroDirection { alpha: q.real().max(T::zero()).sqrt().to_f64_lossy() });
    }
    let alpha = q.sqrt();
    let s = beta / alpha;
    let jet = phi_jet(spec, s.real(), MAX_ORDER)?;
    Ok(alpha * s.apply_jet(&jet))
}

/// `F²(y)` with multi-dual `y`.
pub fn f_squared<T: Scalar>(mp: &MetricPoint<T>, y: &[MultiDual<T>], spec: &PhiSpec<T>) -> Result<MultiDual<T>> {
    let f = finsler_md(mp, y, spec)?;
    Ok(f * f)
}

fn partial_f2<T: Scalar>(mp: &MetricPoint<T>, y: &[T], spec: &PhiSpec<T>, dirs: &[usize]) -> Result<T> {
    Ok(f_squared(mp, &perturb(y, dirs), spec)?.coeff(full_mask(dirs.len())))
}

fn derivative_tensor<T: Scalar>(
    mp: &MetricPoint<T>,
    y: &Direction<T>,
    spec: &PhiSpec<T>,
    order: usize,
    factor: T,
) -> Result<DenseTensor<T>> {
    check_family_b_sq(mp, spec)?;
    let n = mp.dim;
    let mut out = DenseTensor::zeros(n, order);
    for idx in all_indices(n, order) {
        out.set(&idx, factor * partial_f2(mp, &y.0, spec, &idx)?);
    }
    Ok(out)
}

/// `g_ij = ½ ∂²F²/∂y^i∂y^j`.
pub fn oracle_metric<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Matrix<T>> {
    let t = derivative_tensor(mp, y, spec, 2, T::lit(0.5))?;
    Ok(Matrix::from_fn(mp.dim, |i, j| t.get(&[i, j])))
}

/// `C_ijk = ¼ ∂³F²`.
pub fn oracle_cartan<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<DenseTensor<T>> {
    derivative_tensor(mp, y, spec, 3, T::lit(0.25))
}

/// `C_rijk = ∂C_ijk/∂y^r = ¼ ∂⁴F²`.
pub fn oracle_cartan_derivative<T: Scalar>(
    mp: &MetricPoint<T>,
    y: &Direction<T>,
    spec: &PhiSpec<T>,
) -> Result<DenseTensor<T>> {
    derivative_tensor(mp, y, spec, 4, T::lit(0.25))
}

/// `ℓ_i = ∂F/∂y^i`.
pub fn oracle_ell<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Vec<T>> {
    check_family_b_sq(mp, spec)?;
    (0..mp.dim).map(|i| Ok(finsler_md(mp, &perturb(&y.0, &[i]), spec)?.coeff(1))).collect()
}

/// The T-tensor from its definition, with the three groups of terms kept apart.
#[derive(Debug, Clone)]
pub struct OracleT<T> {
    /// `F C_rijk`
    pub f_dc: DenseTensor<T>,
    /// `−F(C_sij C^s_rk + C_sjr C^s_ik + C_sir C^s_jk)`
    pub cc: DenseTensor<T>,
    /// `C_rij ℓ_k + C_rik ℓ_j + C_rjk ℓ_i + C_ijk ℓ_r`
    pub c_ell: DenseTensor<T>,
    pub total: DenseTensor<T>,
    pub metric: Matrix<T>,
    pub metric_inverse: Matrix<T>,
    pub finsler: T,
}

impl<T: Scalar> OracleT<T> {
    /// Largest single term group, the natural size against which
    /// cancellation in `total` is judged.
    pub fn term_scale(&self) -> T {
        self.f_dc.max_abs().max(self.cc.max_abs()).max(self.c_ell.max_abs())
    }
}

pub fn oracle_t<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<OracleT<T>> {
    let n = mp.dim;
    let g = oracle_metric(mp, y, spec)?;
    let gi = g.inverse().map_err(|e| match e {
        FinslerError::Singular { pivot } => FinslerError::DegenerateMetric { guard: "g (oracle)", value: pivot as f64 },
        other => other,
    })?;
    let c = oracle_cartan(mp, y, spec)?;
    let dc = oracle_cartan_derivative(mp, y, spec)?;
    let ell = oracle_ell(mp, y, spec)?;
    let f = finsler_md(mp, &perturb(&y.0, &[]), spec)?.real();
    // C^s_jk = g^{sr} C_rjk
    let c_up = c.raise_first(&gi);
    let cc_term = |a: usize, b: usize, p: usize, q: usize| -> T { (0..n).map(|s| c.get(&[s, a, b]) * c_up.get(&[s, p, q])).sum() };
    let f_dc = dc.scale(f);
    let cc = DenseTensor::from_fn(n, 4, |idx| {
        let (r, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
        -f * (cc_term(i, j, r, k) + cc_term(j, r, i, k) + cc_term(i, r, j, k))
    });
    let c_ell = DenseTensor::from_fn(n, 4, |idx| {
        let (r, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
        c.get(&[r, i, j]) * ell[k] + c.get(&[r, i, k]) * ell[j] + c.get(&[r, j, k]) * ell[i] + c.get(&[i, j, k]) * ell[r]
    });
    let total = f_dc.add(&cc).add(&c_ell);
    Ok(OracleT { f_dc, cc, c_ell, total, metric: g, metric_inverse: gi, finsler: f })
}

/// Deviation between a closed-form tensor and its oracle counterpart.
///
/// `max_rel` is `max_abs / scale`, where `scale` is the larger of the two
/// tensors' max-norms unless a larger natural scale is supplied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub quantity: String,
    pub max_abs: f64,
    pub max_rel: f64,
    pub scale: f64,
    pub worst_index: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<BTreeMap<String, f64>>,
}

pub fn compare<T: Scalar>(
    quantity: &str,
    closed: &DenseTensor<T>,
    oracle: &DenseTensor<T>,
    natural_scale: Option<T>,
) -> Result<ComparisonReport> {
    if closed.dim() != oracle.dim() || closed.order() != oracle.order() {
        return Err(FinslerError::DimensionMismatch { expected: oracle.dim(), found: closed.dim() });
    }
    let mut worst = T::zero();
    let mut worst_index = vec![0; closed.order()];
    for idx in all_indices(closed.dim(), closed.order()) {
        let d = (closed.get(&idx) - oracle.get(&idx)).abs();
        if d > worst || d.is_nan() {
            worst = d;
            worst_index = idx;
        }
    }
    let mut scale = closed.max_abs().max(oracle.max_abs());
    if let Some(ns) = natural_scale {
        scale = scale.max(ns);
    }
    let max_rel = if scale > T::zero() { worst / scale } else { worst };
    Ok(ComparisonReport {
        quantity: quantity.to_string(),
        max_abs: worst.to_f64_lossy(),
        max_rel: max_rel.to_f64_lossy(),
        scale: scale.to_f64_lossy(),
        worst_index,
        terms: None,
    })
}

fn matrix_tensor<T: Scalar>(m: &Matrix<T>) -> DenseTensor<T> {
    DenseTensor::from_fn(m.dim(), 2, |idx| m.get(idx[0], idx[1]))
}

fn vector_tensor<T: Scalar>(v: &[T]) -> DenseTensor<T> {
    DenseTensor::from_fn(v.len(), 1, |idx| v[idx[0]])
}

/// All closed-form-vs-oracle comparisons at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PointVerification {
    pub s: f64,
    pub y: Vec<f64>,
    pub comparisons: Vec<ComparisonReport>,
    pub max_rel: f64,
    /// Largest deviation of the oracle tensors from total symmetry.
    pub oracle_symmetry_defect: f64,
}

/// Compares g, g⁻¹, ℓ, C, ∂C, T and T^h against the oracle.
///
/// The natural scale for C and T (degree −1) is `‖g‖/F`, for ∂C it is `‖g‖/F²`;
/// for T the largest term of the definition also enters, so that exact
/// cancellation (T ≡ 0) is measured against the size of what cancels.
pub fn verify_point<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<PointVerification> {
    let frame = Frame::new(mp, y, spec)?;
    let ot = oracle_t(mp, y, spec)?;
    let f = ot.finsler;
    let g_scale = ot.metric.max_abs();
    let deg1 = g_scale / f;
    let mut comparisons = Vec::new();

    comparisons.push(compare("g", &matrix_tensor(&frame.metric_lower()), &matrix_tensor(&ot.metric), None)?);
    comparisons.push(compare(
        "g_inverse",
        &matrix_tensor(&frame.metric_upper()?),
        &matrix_tensor(&ot.metric_inverse),
        None,
    )?);
    comparisons.push(compare("ell", &vector_tensor(&frame.ell()), &vector_tensor(&oracle_ell(mp, y, spec)?), None)?);
    let c_or = oracle_cartan(mp, y, spec)?;
    comparisons.push(compare("C", &frame.cartan_lower().to_dense(), &c_or, Some(deg1))?);
    let dc_or = ot.f_dc.scale(f.recip());
    comparisons.push(compare("dC", &frame.cartan_derivative().to_dense(), &dc_or, Some(deg1 / f))?);

    let t_scale = ot.term_scale().max(deg1);
    let mut t_report = compare("T", &frame.t_lower()?.to_dense(), &ot.total, Some(t_scale))?;
    let mut terms = BTreeMap::new();
    terms.insert("F_dC".to_string(), ot.f_dc.max_abs().to_f64_lossy());
    terms.insert("CC".to_string(), ot.cc.max_abs().to_f64_lossy());
    terms.insert("C_ell".to_string(), ot.c_ell.max_abs().to_f64_lossy());
    terms.insert("total".to_string(), ot.total.max_abs().to_f64_lossy());
    t_report.terms = Some(terms);
    comparisons.push(t_report);

    let gi = &ot.metric_inverse;
    let raised_terms = [&ot.f_dc, &ot.cc, &ot.c_ell].map(|t| t.raise_first(gi).max_abs());
    let tu_scale = raised_terms.iter().copied().fold(deg1 * gi.max_abs(), T::max);
    comparisons.push(compare("T_raised", &frame.t_raised()?, &ot.total.raise_first(gi), Some(tu_scale))?);

    let defect = [
        matrix_tensor(&ot.metric).symmetry_defect() / g_scale,
        c_or.symmetry_defect() / c_or.max_abs().max(deg1),
        ot.f_dc.symmetry_defect() / ot.f_dc.max_abs().max(deg1),
        ot.total.symmetry_defect() / t_scale,
    ]
    .into_iter()
    .fold(T::zero(), T::max);

    let max_rel = comparisons.iter().map(|c| c.max_rel).fold(0.0, f64::max);
    Ok(PointVerification {
        s: frame.geom.s.to_f64_lossy(),
        y: y.0.iter().map(|v| v.to_f64_lossy()).collect(),
        comparisons,
        max_rel,
        oracle_symmetry_defect: defect.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_metric_point;

    fn standard() -> MetricPoint<f64> {
        make_metric_point(Matrix::identity(3), vec![0.6, 0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn unit_phi_f_squared() {
        let mp = standard();
        let y = perturb(&[1.0, 0.0, 0.0], &[]);
        let f2 = f_squared(&mp, &y, &PhiSpec::series(vec![1.0])).unwrap();
        assert_eq!(f2.real(), 1.0);
        let c = oracle_cartan(&mp, &Direction(vec![1.0, 0.3, 0.2]), &PhiSpec::series(vec![1.0])).unwrap();
        assert!(c.max_abs() < 1e-15);
    }

    #[test]
    fn f_squared_is_two_homogeneous() {
        let mp = standard();
        let spec = PhiSpec::randers();
        let y = [1.0, 0.3, 0.2];
        let f1 = f_squared(&mp, &perturb(&y, &[]), &spec).unwrap().real();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let f2 = f_squared(&mp, &perturb(&y2, &[]), &spec).unwrap().real();
        assert!((f2 - 4.0 * f1).abs() < 1e-14);
    }

    #[test]
    fn randers_oracle_matches_closed_forms() {
        let mp = standard();
        let v = verify_point(&mp, &Direction(vec![1.0, 0.3, 0.2]), &PhiSpec::randers()).unwrap();
        for c in &v.comparisons {
            assert!(c.max_rel <= 1e-10, "{}: {}", c.quantity, c.max_rel);
        }
        assert!(v.oracle_symmetry_defect < 1e-12);
    }

    #[test]
    fn kropina_oracle_matches_closed_forms() {
        let mp = make_metric_point(Matrix::identity(3), vec![0.8, 0.0, 0.0], 1.0).unwrap();
        let y = mp.direction_for_s(0.5, None).unwrap();
        let v = verify_point(&mp, &y, &PhiSpec::kropina()).unwrap();
        assert!(v.max_rel <= 1e-9, "{:?}", v.comparisons);
    }

    #[test]
    fn cartan_halves_under_doubling() {
        let mp = standard();
        let spec = PhiSpec::kropina();
        let y = Direction(vec![1.0, 0.3, 0.2]);
        let c1 = oracle_cartan(&mp, &y, &spec).unwrap();
        let c2 = oracle_cartan(&mp, &y.scaled(2.0), &spec).unwrap();
        assert!(c2.sub(&c1.scale(0.5)).max_abs() < 1e-12);
    }

    #[test]
    fn cartan_is_half_derivative_of_metric() {
        // d/dy^k of oracle g with one extra unit, halved
        let mp = standard();
        let spec = PhiSpec::shen_landsberg(1.0, 0.5, 0.36);
        let y = [1.0, 0.3, 0.2];
        let c = oracle_cartan(&mp, &Direction(y.to_vec()), &spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let g_k = 0.5 * partial_f2(&mp, &y, &spec, &[i, j, k]).unwrap();
                    assert!((0.5 * g_k - c.get(&[i, j, k])).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn compare_reports_worst_slot() {
        let a = DenseTensor::from_fn(3, 4, |idx| idx.iter().sum::<usize>() as f64);
        assert_eq!(compare("x", &a, &a, None).unwrap().max_abs, 0.0);
        let mut b = a.clone();
        b.set(&[1, 2, 0, 1], a.get(&[1, 2, 0, 1]) + 1e-6);
        let r = compare("x", &b, &a, None).unwrap();
        assert!((r.max_abs - 1e-6).abs() < 1e-15);
        assert_eq!(r.worst_index, vec![1, 2, 0, 1]);
        let short = DenseTensor::<f64>::zeros(2, 4);
        assert!(matches!(compare("x", &short, &a, None), Err(FinslerError::DimensionMismatch { .. })));
    }
}
