//! Point data `(a_ij, b_i)` and the per-direction scalars and tensors derived
//! from it: `alpha`, `beta`, `s`, `alpha_i`, `m_i`, `m^2`, `h_ij`, `n_ij`.

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

/// Symmetry tolerance applied to the input matrix `a`.
const SYMMETRY_TOL: f64 = 1e-12;

/// Riemannian metric and one-form at a single point `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricPoint<T> {
    pub dim: usize,
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub b_sq: T,
    pub b0: T,
    #[serde(skip)]
    a_inv: Matrix<T>,
    #[serde(skip)]
    b_up: Vec<T>,
}

/// A supporting element `y^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction<T>(pub Vec<T>);

impl<T: Scalar> Direction<T> {
    pub fn new(y: Vec<T>) -> Self {
        Self(y)
    }

    pub fn scaled(&self, lambda: T) -> Self {
        Self(self.0.iter().map(|&v| v * lambda).collect())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Builds a [`MetricPoint`], validating symmetry, positive definiteness and
/// the one-form bound `0 < b^2`, `sqrt(b^2) <= b0`.
pub fn make_metric_point<T: Scalar>(a: Matrix<T>, b: Vec<T>, b0: T) -> Result<MetricPoint<T>> {
    let n = a.dim();
    if b.len() != n {
        return Err(FinslerError::DimensionMismatch { expected: n, found: b.len() });
    }
    if n < 2 {
        return Err(FinslerError::Invalid(format!("dimension {n} < 2")));
    }
    let asym = a.asymmetry();
    if asym > T::lit(SYMMETRY_TOL) * a.max_abs().max(T::one()) {
        return Err(FinslerError::NotSymmetric { asymmetry: asym.to_f64_lossy() });
    }
    let a_inv = a.inverse_spd()?;
    let b_up = a_inv.mul_vec(&b);
    let b_sq = dot(&b, &b_up);
    let tol = T::lit(1e-12);
    if !(b_sq > T::zero()) || b_sq.sqrt() > b0 * (T::one() + tol) {
        return Err(FinslerError::BetaOutOfRange { b_sq: b_sq.to_f64_lossy(), b0: b0.to_f64_lossy() });
    }
    Ok(MetricPoint { dim: n, a, b, b_sq, b0, a_inv, b_up })
}

impl<T: Scalar> MetricPoint<T> {
    /// `a^{ij}`.
    pub fn a_inv(&self) -> &Matrix<T> {
        &self.a_inv
    }

    /// `b^i = a^{ij} b_j`.
    pub fn b_up(&self) -> &[T] {
        &self.b_up
    }

    /// `sqrt(b^2)`.
    pub fn b_norm(&self) -> T {
        self.b_sq.sqrt()
    }

    /// `true` when `sqrt(b^2) < b0` strictly (the regular regime).
    pub fn is_regular_regime(&self) -> bool {
        self.b_norm() < self.b0
    }

    pub fn alpha(&self, y: &Direction<T>) -> T {
        self.a.bilinear(y.as_slice(), y.as_slice()).sqrt()
    }

    pub fn beta(&self, y: &Direction<T>) -> T {
        dot(&self.b, y.as_slice())
    }

    /// Unit vector (in the `a`-norm) along `b^i`.
    pub fn b_hat(&self) -> Vec<T> {
        let nb = self.b_norm();
        self.b_up.iter().map(|&v| v / nb).collect()
    }

    /// An `a`-unit vector `a`-orthogonal to `b^i`, built from `seed` by one
    /// Gram-Schmidt step. Falls back to the coordinate axis least aligned with
    /// `b^i` when `seed` is (nearly) parallel to it.
    pub fn perpendicular_unit(&self, seed: Option<&[T]>) -> Vec<T> {
        let u = self.b_hat();
        let project = |v: &[T]| -> Vec<T> {
            let c = self.a.bilinear(&u, v);
            v.iter().zip(&u).map(|(&vi, &ui)| vi - c * ui).collect::<Vec<T>>()
        };
        let normalize = |w: Vec<T>| -> Option<Vec<T>> {
            let nw = self.a.bilinear(&w, &w).sqrt();
            (nw > T::lit(1e-8)).then(|| w.into_iter().map(|x| x / nw).collect())
        };
        if let Some(v) = seed {
            let scale = self.a.bilinear(v, v).sqrt();
            if let Some(w) = normalize(project(v)).filter(|_| scale > T::zero()) {
                return w;
            }
        }
        let mut best: Option<(T, usize)> = None;
        for k in 0..self.dim {
            let ek_norm = self.a.get(k, k).sqrt();
            let align = (self.a.mul_vec(&u)[k] / ek_norm).abs();
            if best.is_none_or(|(b, _)| align < b) {
                best = Some((align, k));
            }
        }
        let k = best.map(|(_, k)| k).unwrap_or(0);
        let mut e = vec![T::zero(); self.dim];
        e[k] = T::one();
        normalize(project(&e)).expect("coordinate axis not parallel to b")
    }

    /// The direction `y = (s/b) b_hat + sqrt(1 - s^2/b^2) w` with `alpha(y) = 1`
    /// and `beta(y) = s`, where `w` is the `a`-unit perpendicular derived from
    /// `seed`. Requires `|s| <= sqrt(b^2)`.
    pub fn direction_for_s(&self, s: T, seed: Option<&[T]>) -> Result<Direction<T>> {
        let nb = self.b_norm();
        if s.abs() > nb {
            return Err(FinslerError::BoundaryS { s: s.to_f64_lossy(), b: nb.to_f64_lossy() });
        }
        let u = self.b_hat();
        let w = self.perpendicular_unit(seed);
        let cu = s / nb;
        let cw = (T::one() - cu * cu).max(T::zero()).sqrt();
        Ok(Direction(u.iter().zip(&w).map(|(&ui, &wi)| cu * ui + cw * wi).collect()))
    }
}

/// Per-direction quantities shared by every tensor formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseGeometry<T> {
    pub y: Vec<T>,
    pub alpha: T,
    pub beta: T,
    pub s: T,
    /// `alpha_i = a_ij y^j / alpha`
    pub alpha_low: Vec<T>,
    /// `alpha^i = y^i / alpha`
    pub alpha_up: Vec<T>,
    /// `m_i = b_i - s alpha_i`
    pub m: Vec<T>,
    /// `m^i = a^{ij} m_j`
    pub m_up: Vec<T>,
    /// `m^2 = b^2 - s^2`
    pub m_sq: T,
    /// `h_ij = a_ij - alpha_i alpha_j`
    pub h: Matrix<T>,
    /// `n_ij = alpha_i m_j + alpha_j m_i`
    pub n_tensor: Matrix<T>,
}

/// Evaluates [`BaseGeometry`] at `y`. Fails with `ZeroDirection` when
/// `alpha(y)` does not exceed `1e-300`-scale underflow or is not finite.
pub fn eval_geometry<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>) -> Result<BaseGeometry<T>> {
    if y.dim() != mp.dim {
        return Err(FinslerError::DimensionMismatch { expected: mp.dim, found: y.dim() });
    }
    let n = mp.dim;
    let ay = mp.a.mul_vec(y.as_slice());
    let alpha_sq = dot(y.as_slice(), &ay);
    let alpha = alpha_sq.sqrt();
    if !(alpha > T::min_positive_value().sqrt()) || !alpha.is_finite() {
        return Err(FinslerError::ZeroDirection { alpha: alpha.to_f64_lossy() });
    }
    let beta = mp.beta(y);
    let s = beta / alpha;
    let alpha_low: Vec<T> = ay.iter().map(|&v| v / alpha).collect();
    let alpha_up: Vec<T> = y.as_slice().iter().map(|&v| v / alpha).collect();
    let m: Vec<T> = mp.b.iter().zip(&alpha_low).map(|(&bi, &ai)| bi - s * ai).collect();
    let m_up: Vec<T> = mp.b_up().iter().zip(&alpha_up).map(|(&bi, &ai)| bi - s * ai).collect();
    let m_sq = mp.b_sq - s * s;
    let h = Matrix::from_fn(n, |i, j| mp.a.get(i, j) - alpha_low[i] * alpha_low[j]);
    let n_tensor = Matrix::from_fn(n, |i, j| alpha_low[i] * m[j] + alpha_low[j] * m[i]);
    Ok(BaseGeometry {
        y: y.0.clone(),
        alpha,
        beta,
        s,
        alpha_low,
        alpha_up,
        m,
        m_up,
        m_sq,
        h,
        n_tensor,
    })
}

/// Residuals of the algebraic identities satisfied by [`BaseGeometry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryResiduals<T> {
    /// `|y^i m_i|`
    pub y_dot_m: T,
    /// `max_j |b^i h_ij - m_j|`
    pub b_h_minus_m: T,
    /// `max(|m^i m_i - m^2|, |b^i m_i - m^2|)`
    pub m_sq: T,
    /// `max_i |h_ij y^j|`
    pub h_y: T,
}

impl<T: Scalar> BaseGeometry<T> {
    pub fn residuals(&self, mp: &MetricPoint<T>) -> GeometryResiduals<T> {
        let n = mp.dim;
        let bh = (0..n)
            .map(|j| ((0..n).map(|i| mp.b_up()[i] * self.h.get(i, j)).sum::<T>() - self.m[j]).abs())
            .fold(T::zero(), T::max);
        let mm = dot(&self.m_up, &self.m);
        let bm = dot(mp.b_up(), &self.m);
        let hy = crate::scalar::max_abs(&self.h.mul_vec(&self.y));
        GeometryResiduals {
            y_dot_m: dot(&self.y, &self.m).abs(),
            b_h_minus_m: bh,
            m_sq: (mm - self.m_sq).abs().max((bm - self.m_sq).abs()),
            h_y: hy,
        }
    }

    /// `F = alpha phi`.
    pub fn finsler(&self, phi: T) -> T {
        self.alpha * phi
    }
}

/// JSON fixture for a [`MetricPoint`]: `{"dim": n, "a": [[...]], "b": [...], "b0": r}`.
///
/// An optional `"y"` supplies a default supporting element for commands that
/// evaluate at a single direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFixture {
    pub dim: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub b0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

impl MetricFixture {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_metric_point<T: Scalar>(&self) -> Result<MetricPoint<T>> {
        if self.a.len() != self.dim {
            return Err(FinslerError::DimensionMismatch { expected: self.dim, found: self.a.len() });
        }
        let rows: Vec<Vec<T>> = self.a.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
        let a = Matrix::from_rows(&rows)?;
        make_metric_point(a, self.b.iter().map(|&v| T::lit(v)).collect(), T::lit(self.b0))
    }
}
