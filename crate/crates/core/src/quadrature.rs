//! Adaptive Simpson quadrature with Richardson correction.

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;

/// Absolute tolerance used for φ reconstruction.
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
/// Maximum bisection depth.
pub const DEFAULT_MAX_DEPTH: usize = 40;

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson<T> {
    pub abs_tol: T,
    pub max_depth: usize,
}

impl<T: Scalar> Default for AdaptiveSimpson<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(DEFAULT_ABS_TOL), max_depth: DEFAULT_MAX_DEPTH }
    }
}

impl<T: Scalar> AdaptiveSimpson<T> {
    /// `∫_a^b f`. Orientation is respected (`a > b` yields the negated integral).
    /// Non-finite integrand values abort with `QuadratureFailure`.
    pub fn integrate(&self, f: impl Fn(T) -> T, a: T, b: T) -> Result<T> {
        if a == b {
            return Ok(T::zero());
        }
        let fail = || FinslerError::QuadratureFailure { a: a.to_f64_lossy(), b: b.to_f64_lossy() };
        let half = T::lit(0.5);
        let fa = f(a);
        let fb = f(b);
        let m = (a + b) * half;
        let fm = f(m);
        let whole = simpson(a, b, fa, fm, fb);
        if !whole.is_finite() {
            return Err(fail());
        }
        // work stack of (a, b, fa, fm, fb, whole, tol, depth)
        let mut stack = vec![(a, b, fa, fm, fb, whole, self.abs_tol, 0usize)];
        let mut total = T::zero();
        let fifteen = T::lit(15.0);
        while let Some((a, b, fa, fm, fb, whole, tol, depth)) = stack.pop() {
            let m = (a + b) * half;
            let lm = (a + m) * half;
            let rm = (m + b) * half;
            let flm = f(lm);
            let frm = f(rm);
            let left = simpson(a, m, fa, flm, fm);
            let right = simpson(m, b, fm, frm, fb);
            if !(left.is_finite() && right.is_finite()) {
                return Err(fail());
            }
            let delta = left + right - whole;
            if delta.abs() <= fifteen * tol || depth >= self.max_depth {
                if depth >= self.max_depth && delta.abs() > fifteen * tol * T::lit(1e3) {
                    return Err(fail());
                }
                total += left + right + delta / fifteen;
            } else {
                let sub_tol = (tol * half).max(T::epsilon() * (left.abs() + right.abs()));
                stack.push((m, b, fm, frm, fb, right, sub_tol, depth + 1));
                stack.push((a, m, fa, flm, fm, left, sub_tol, depth + 1));
            }
        }
        Ok(total)
    }
}

#[inline]
fn simpson<T: Scalar>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}
