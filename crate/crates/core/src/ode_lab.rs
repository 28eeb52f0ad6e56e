//! Residuals of the two Q-equations, φ reconstruction checks for the
//! T- and σT-families, and the closed arctan member of the latter.
//!
//! With `m² = b² − s²` the equations are
//! `Q' + (1/s + 2s/m²) Q + 2/m² = 0` (T-condition) and
//! `m² Q'' − s Q' + Q = 0` (σT-condition).

use serde::Serialize;

use crate::engine::Frame;
use crate::error::{FinslerError, Result};
use crate::geometry::make_metric_point;
use crate::jet::ScalarJet;
use crate::linalg::Matrix;
use crate::phi::{phi_from_q, phi_jet, q_from_phi, PhiFamily, PhiSpec, QSpec};
use crate::scalar::Scalar;

fn m_sq_checked<T: Scalar>(s: T, b_sq: T) -> Result<T> {
    let m2 = b_sq - s * s;
    if m2 <= T::zero() {
        return Err(FinslerError::BoundaryS { s: s.to_f64_lossy(), b: b_sq.sqrt().to_f64_lossy() });
    }
    Ok(m2)
}

/// `Q' + (1/s + 2s/m²)Q + 2/m²` for a jet of `Q` at `s`.
pub fn trivial_ode_lhs<T: Scalar>(q: &ScalarJet<T>, s: T, b_sq: T) -> Result<T> {
    if s.abs() < T::lit(1e-12) {
        return Err(FinslerError::SDividesZero { s: s.to_f64_lossy() });
    }
    let m2 = m_sq_checked(s, b_sq)?;
    let two = T::lit(2.0);
    Ok(q.d(1) + (s.recip() + two * s / m2) * q.d(0) + two / m2)
}

/// `(b² − s²)Q'' − sQ' + Q` for a jet of `Q` at `s`.
pub fn landsberg_ode_lhs<T: Scalar>(q: &ScalarJet<T>, s: T, b_sq: T) -> Result<T> {
    let m2 = m_sq_checked(s, b_sq)?;
    Ok(m2 * q.d(2) - s * q.d(1) + q.d(0))
}

pub fn residual_trivial_ode<T: Scalar>(q: &QSpec<T>, s: T, b_sq: T) -> Result<T> {
    if s.abs() < T::lit(1e-12) {
        return Err(FinslerError::SDividesZero { s: s.to_f64_lossy() });
    }
    m_sq_checked(s, b_sq)?;
    trivial_ode_lhs(&q.jet(s)?, s, b_sq)
}

pub fn residual_landsberg_ode<T: Scalar>(q: &QSpec<T>, s: T, b_sq: T) -> Result<T> {
    m_sq_checked(s, b_sq)?;
    landsberg_ode_lhs(&q.jet(s)?, s, b_sq)
}

/// Per-sample residuals of both equations, with optional φ reconstruction columns.
#[derive(Debug, Clone, Serialize)]
pub struct OdeResidualReport {
    pub label: String,
    pub b_sq: f64,
    pub grid: Vec<f64>,
    /// `None` where the equation is undefined (`s = 0`).
    pub residual_trivial: Vec<Option<f64>>,
    pub residual_landsberg: Vec<Option<f64>>,
    pub phi_closed: Vec<Option<f64>>,
    pub phi_quadrature: Vec<Option<f64>>,
    pub ratio: Vec<Option<f64>>,
    pub max_abs_trivial: f64,
    pub max_abs_landsberg: f64,
    /// `(max − min)/|mean|` of `ratio`, when φ columns are present.
    pub ratio_spread: Option<f64>,
}

pub const CSV_HEADER: [&str; 6] = ["s", "residual_trivial", "residual_landsberg", "phi_closed", "phi_quadrature", "ratio"];

impl OdeResidualReport {
    /// Rows in [`CSV_HEADER`] order.
    pub fn rows(&self) -> Vec<[Option<f64>; 6]> {
        (0..self.grid.len())
            .map(|k| {
                [
                    Some(self.grid[k]),
                    self.residual_trivial[k],
                    self.residual_landsberg[k],
                    self.phi_closed[k],
                    self.phi_quadrature[k],
                    self.ratio[k],
                ]
            })
            .collect()
    }
}

fn optional<T: Scalar>(r: Result<T>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v.to_f64_lossy())),
        Err(FinslerError::SDividesZero { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evaluates both residuals of `q` over `grid`; if `phi` is given, also
/// compares it against `phi_from_q(q)` normalized at `s_ref`.
pub fn ode_report<T: Scalar>(
    label: &str,
    q: &QSpec<T>,
    b_sq: T,
    grid: &[T],
    phi: Option<(&PhiSpec<T>, T)>,
) -> Result<OdeResidualReport> {
    if grid.is_empty() {
        return Err(FinslerError::EmptyGrid);
    }
    let n = grid.len();
    let mut rep = OdeResidualReport {
        label: label.to_string(),
        b_sq: b_sq.to_f64_lossy(),
        grid: grid.iter().map(|s| s.to_f64_lossy()).collect(),
        residual_trivial: Vec::with_capacity(n),
        residual_landsberg: Vec::with_capacity(n),
        phi_closed: vec![None; n],
        phi_quadrature: vec![None; n],
        ratio: vec![None; n],
        max_abs_trivial: 0.0,
        max_abs_landsberg: 0.0,
        ratio_spread: None,
    };
    for (k, &s) in grid.iter().enumerate() {
        let rt = optional(residual_trivial_ode(q, s, b_sq))?;
        let rl = optional(residual_landsberg_ode(q, s, b_sq))?;
        rep.max_abs_trivial = rep.max_abs_trivial.max(rt.map_or(0.0, f64::abs));
        rep.max_abs_landsberg = rep.max_abs_landsberg.max(rl.map_or(0.0, f64::abs));
        rep.residual_trivial.push(rt);
        rep.residual_landsberg.push(rl);
        if let Some((spec, s_ref)) = phi {
            let closed = phi_jet(spec, s, 0)?.value();
            let quad = phi_from_q(q, s, s_ref, T::one())?;
            rep.phi_closed[k] = Some(closed.to_f64_lossy());
            rep.phi_quadrature[k] = Some(quad.to_f64_lossy());
            rep.ratio[k] = Some((closed / quad).to_f64_lossy());
        }
    }
    if phi.is_some() {
        rep.ratio_spread = Some(spread(rep.ratio.iter().flatten().copied()));
    }
    Ok(rep)
}

/// `(max − min)/|mean|`.
pub fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (hi - lo) / mean.abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct BerwaldPhiReport {
    pub c: f64,
    pub b_sq: f64,
    /// `max |Q_φ − Q_Berwald|` over value and first two derivatives.
    pub q_error_max: f64,
    /// `max |1 + sQ − (cb² − cs²)|`
    pub identity_one_plus_sq: f64,
    /// `max |Q/(1+sQ) − (1/s − 1/(cs(b²−s²)))|`
    pub identity_log_derivative: f64,
    pub ode: OdeResidualReport,
    pub passed: bool,
}

/// Checks the T-condition family `φ = s^{(cb²−1)/(cb²)} (cb² − cs²)^{1/(2cb²)}`.
pub fn shen_berwald_phi_check<T: Scalar>(c: T, b_sq: T, grid: &[T]) -> Result<BerwaldPhiReport> {
    if c * b_sq <= T::one() {
        return Err(FinslerError::UnsupportedParameterRange(format!(
            "c*b^2 = {} must exceed 1",
            (c * b_sq).to_f64_lossy()
        )));
    }
    let spec = PhiSpec::shen_berwald(c, b_sq);
    let q = QSpec::Berwald { c, b_sq };
    let (mut qe, mut i1, mut i2) = (T::zero(), T::zero(), T::zero());
    for &s in grid {
        let from_phi = q_from_phi(&spec, s)?;
        let closed = q.jet(s)?;
        for k in 0..=2 {
            qe = qe.max((from_phi.d(k) - closed.d(k)).abs());
        }
        let qv = closed.value();
        i1 = i1.max((T::one() + s * qv - (c * b_sq - c * s * s)).abs());
        let l = qv / (T::one() + s * qv);
        i2 = i2.max((l - (s.recip() - (c * s * (b_sq - s * s)).recip())).abs());
    }
    let ode = ode_report("berwald", &q, b_sq, grid, Some((&spec, spec.reference_s())))?;
    let passed = qe <= T::lit(1e-9)
        && i1 <= T::lit(1e-10)
        && i2 <= T::lit(1e-10)
        && ode.ratio_spread.is_some_and(|r| r <= 1e-8);
    Ok(BerwaldPhiReport {
        c: c.to_f64_lossy(),
        b_sq: b_sq.to_f64_lossy(),
        q_error_max: qe.to_f64_lossy(),
        identity_one_plus_sq: i1.to_f64_lossy(),
        identity_log_derivative: i2.to_f64_lossy(),
        ode,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LandsbergPhiReport {
    /// Parameters in the φ-formula convention: numerator `c1 sqrt(b²−s²) + c2 s`.
    pub c1: f64,
    pub c2: f64,
    pub b_sq: f64,
    pub q_error_max: f64,
    /// `max |Φ + m²Ψ|`
    pub sigma_a: f64,
    /// `max |3Ψ + m²Ω|`
    pub sigma_b: f64,
    pub ode: OdeResidualReport,
    pub passed: bool,
}

/// Checks the σT-family built from `Q = c1 sqrt(b²−s²) + c2 s`.
pub fn shen_landsberg_phi_check<T: Scalar>(c1: T, c2: T, b_sq: T, grid: &[T]) -> Result<LandsbergPhiReport> {
    let spec = PhiSpec::shen_landsberg(c1, c2, b_sq);
    let q = PhiFamily::landsberg_q(c1, c2, b_sq);
    let b = b_sq.sqrt();
    let mp = make_metric_point(Matrix::identity(3), vec![b, T::zero(), T::zero()], b)?;
    let (mut qe, mut sa, mut sb) = (T::zero(), T::zero(), T::zero());
    for &s in grid {
        let from_phi = q_from_phi(&spec, s)?;
        let closed = q.jet(s)?;
        for k in 0..=2 {
            qe = qe.max((from_phi.d(k) - closed.d(k)).abs());
        }
        let frame = Frame::new(&mp, &mp.direction_for_s(s, None)?, &spec)?;
        let tc = frame.t_coefficients()?;
        sa = sa.max(tc.sigma_a(frame.geom.m_sq).abs());
        sb = sb.max(tc.sigma_b(frame.geom.m_sq).abs());
    }
    let ode = ode_report("landsberg", &q, b_sq, grid, Some((&spec, spec.reference_s())))?;
    let tol = T::lit(1e-9);
    Ok(LandsbergPhiReport {
        c1: c1.to_f64_lossy(),
        c2: c2.to_f64_lossy(),
        b_sq: b_sq.to_f64_lossy(),
        q_error_max: qe.to_f64_lossy(),
        sigma_a: sa.to_f64_lossy(),
        sigma_b: sb.to_f64_lossy(),
        passed: qe <= tol && sa <= tol && sb <= tol && ode.max_abs_landsberg <= 1e-10,
        ode,
    })
}

/// The Asanov member: normalized parameters `c2' = k`, no linear term, `b0 = 1`.
pub fn asanov_phi_check<T: Scalar>(k: T, grid: &[T]) -> Result<LandsbergPhiReport> {
    match PhiSpec::asanov(k).family {
        PhiFamily::ShenLandsberg { c1, c2, b_sq } => shen_landsberg_phi_check(c1, c2, b_sq, grid),
        _ => unreachable!("asanov preset is a Shen-Landsberg member"),
    }
}

fn special_checked<T: Scalar>(c1: T, b_sq: T, s: T) -> Result<(T, T, T)> {
    let k = c1 * b_sq;
    let disc = T::lit(4.0) - k * k;
    if disc <= T::zero() {
        return Err(FinslerError::UnsupportedParameterRange(format!(
            "4 - c1^2 b^4 = {} must be positive",
            disc.to_f64_lossy()
        )));
    }
    let b = b_sq.sqrt();
    if !(s > T::zero() && s < b) {
        return Err(FinslerError::OutOfDomain { s: s.to_f64_lossy(), lo: 0.0, hi: b.to_f64_lossy() });
    }
    Ok((k, disc.sqrt(), (b_sq - s * s).sqrt()))
}

/// The arctan member of the σT-family with no linear term:
/// `sqrt(1 + c1 s w) exp(k/r arctan((k w + 2s)/(r w)))`,
/// `w = sqrt(b²−s²)`, `k = c1 b²`, `r = sqrt(4 − k²)`.
pub fn special_phi_c2_zero<T: Scalar>(c1: T, b_sq: T, s: T) -> Result<T> {
    let (k, r, w) = special_checked(c1, b_sq, s)?;
    Ok((T::one() + c1 * s * w).sqrt() * (k / r * ((k * w + T::lit(2.0) * s) / (r * w)).atan()).exp())
}

/// Same as [`special_phi_c2_zero`] with prefactor `sqrt(1 + c1 b² w)`, the
/// variant that does not integrate the equation; kept for the audit.
pub fn special_phi_c2_zero_printed<T: Scalar>(c1: T, b_sq: T, s: T) -> Result<T> {
    let (k, r, w) = special_checked(c1, b_sq, s)?;
    Ok((T::one() + c1 * b_sq * w).sqrt() * (k / r * ((k * w + T::lit(2.0) * s) / (r * w)).atan()).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecialCaseReport {
    pub c1: f64,
    pub b_sq: f64,
    pub grid: Vec<f64>,
    pub closed: Vec<f64>,
    pub quadrature: Vec<f64>,
    pub ratio: Vec<f64>,
    pub ratio_spread: f64,
    /// Ratio spread of the `sqrt(1 + c1 b² w)` prefactor variant.
    pub printed_ratio_spread: f64,
    pub passed: bool,
}

/// Ratio-constancy of the arctan closed form against quadrature of `Q = c1 sqrt(b²−s²)`.
pub fn special_case_check<T: Scalar>(c1: T, b_sq: T, grid: &[T]) -> Result<SpecialCaseReport> {
    let q = PhiFamily::landsberg_q(c1, T::zero(), b_sq);
    let s_ref = b_sq.sqrt() * T::lit(0.5);
    let (mut closed, mut quad, mut printed) = (Vec::new(), Vec::new(), Vec::new());
    for &s in grid {
        closed.push(special_phi_c2_zero(c1, b_sq, s)?.to_f64_lossy());
        printed.push(special_phi_c2_zero_printed(c1, b_sq, s)?.to_f64_lossy());
        quad.push(phi_from_q(&q, s, s_ref, T::one())?.to_f64_lossy());
    }
    let ratio: Vec<f64> = closed.iter().zip(&quad).map(|(a, b)| a / b).collect();
    let ratio_spread = spread(ratio.iter().copied());
    let printed_ratio_spread = spread(printed.iter().zip(&quad).map(|(a, b)| a / b));
    Ok(SpecialCaseReport {
        c1: c1.to_f64_lossy(),
        b_sq: b_sq.to_f64_lossy(),
        grid: grid.iter().map(|s| s.to_f64_lossy()).collect(),
        closed,
        quadrature: quad,
        ratio,
        ratio_spread,
        printed_ratio_spread,
        passed: ratio_spread <= 1e-7,
    })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::chebyshev_grid;

    fn jet(ds: &[f64]) -> ScalarJet<f64> {
        ScalarJet::from_derivatives(ds).unwrap()
    }

    #[test]
    fn trivial_examples() {
        let q = QSpec::Berwald { c: 2.0f64, b_sq: 1.0 };
        assert!(residual_trivial_ode(&q, 0.5, 1.0).unwrap().abs() <= 1e-12);
        let q = QSpec::Berwald { c: 1.0f64, b_sq: 2.0 };
        assert!(residual_trivial_ode(&q, 0.7, 2.0).unwrap().abs() <= 1e-12);
        let zero = QSpec::Linear { c1: 0.0f64, c2: 0.0, b_sq: 1.0 };
        assert!((residual_trivial_ode(&zero, 0.5, 1.0).unwrap() - 2.0 / 0.75).abs() < 1e-14);
        assert!(matches!(residual_trivial_ode(&zero, 0.0, 1.0), Err(FinslerError::SDividesZero { .. })));
        assert!(matches!(residual_trivial_ode(&zero, 1.0, 1.0), Err(FinslerError::BoundaryS { .. })));
    }

    #[test]
    fn landsberg_examples() {
        let q = QSpec::Linear { c1: 1.0, c2: 0.0, b_sq: 1.0 };
        for s in [-0.9, 0.0, 0.3] {
            assert_eq!(residual_landsberg_ode(&q, s, 1.0).unwrap(), 0.0);
        }
        let q = QSpec::Linear { c1: 0.0f64, c2: 1.0, b_sq: 1.0 };
        assert!(residual_landsberg_ode(&q, 0.5, 1.0).unwrap().abs() <= 1e-12);
        // Q = s² at s = 0.5
        let r = landsberg_ode_lhs(&jet(&[0.25, 1.0, 2.0]), 0.5, 1.0).unwrap();
        assert!((r - 1.25).abs() < 1e-15);
    }

    #[test]
    fn mutual_exclusion() {
        let r = residual_landsberg_ode(&QSpec::Berwald { c: 2.0f64, b_sq: 1.0 }, 0.5, 1.0).unwrap();
        assert!((r - 16.0).abs() < 1e-12);
    }

    #[test]
    fn berwald_check() {
        let rep = shen_berwald_phi_check(2.0, 1.0, &chebyshev_grid(0.05, 0.95, 17)).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(matches!(shen_berwald_phi_check(1.0, 1.0, &[0.5]), Err(FinslerError::UnsupportedParameterRange(_))));
    }

    #[test]
    fn landsberg_check() {
        let rep = shen_landsberg_phi_check(1.0, 0.5, 0.36, &chebyshev_grid(-0.57, 0.57, 17)).unwrap();
        assert!(rep.passed, "{rep:?}");
        let flat = shen_landsberg_phi_check(0.0, 0.0, 0.36, &[0.1, 0.3]).unwrap();
        assert_eq!(flat.sigma_a, 0.0);
    }

    #[test]
    fn asanov_runs() {
        let rep = asanov_phi_check(1.0, &chebyshev_grid(-0.95, 0.95, 17)).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn special_case_ratio_constant() {
        let rep = special_case_check(1.0, 0.36, &linspace(0.06, 0.54, 9)).unwrap();
        assert!(rep.ratio_spread <= 1e-7, "{}", rep.ratio_spread);
        assert!(rep.printed_ratio_spread > 1e-3);
        let flat = special_case_check(0.0, 0.36, &linspace(0.06, 0.54, 9)).unwrap();
        assert!(flat.closed.iter().all(|&v| v == 1.0));
        // c1 b² = 2
        assert!(matches!(special_phi_c2_zero(8.0, 0.25, 0.3), Err(FinslerError::UnsupportedParameterRange(_))));
    }

    #[test]
    fn report_rows_align() {
        let q = QSpec::Berwald { c: 2.0f64, b_sq: 1.0 };
        let rep = ode_report("x", &q, 1.0, &[0.2, 0.4], None).unwrap();
        let rows = rep.rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][0], Some(0.4));
        assert!(rows[0][3].is_none());
    }
}
