//! Truncated multi-dual numbers over four nilpotent units `ε₁..ε₄`, `εₐ² = 0`.
//!
//! Coefficient `c[mask]` multiplies the product of the units whose bits are set
//! in `mask`. Multiplication is the subset convolution
//! `(ab)[m] = Σ_{s ⊆ m} a[s] b[m \ s]`, so the full-mask coefficient of
//! `f(y + ε₁e_h + ε₂e_i + ε₃e_j + ε₄e_k)` is the exact mixed partial
//! `∂⁴f/∂y^h∂y^i∂y^j∂y^k`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::jet::{ScalarJet, MAX_ORDER};
use crate::scalar::Scalar;

/// Number of infinitesimal units.
pub const UNITS: usize = 4;
/// Number of coefficients, one per subset of units.
pub const LEN: usize = 1 << UNITS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiDual<T> {
    pub c: [T; LEN],
}

impl<T: Scalar> MultiDual<T> {
    pub fn constant(x: T) -> Self {
        let mut c = [T::zero(); LEN];
        c[0] = x;
        Self { c }
    }

    /// `x + ε_unit`.
    pub fn with_unit(x: T, unit: usize) -> Self {
        let mut d = Self::constant(x);
        d.c[1 << unit] = T::one();
        d
    }

    #[inline]
    pub fn real(&self) -> T {
        self.c[0]
    }

    #[inline]
    pub fn coeff(&self, mask: usize) -> T {
        self.c[mask]
    }

    /// Applies a univariate function given its derivatives at the real part:
    /// `f(x0 + δ) = Σ_k f^(k)(x0) δ^k / k!`, exact because `δ⁵ = 0`.
    pub fn apply(&self, derivs: &[T; MAX_ORDER + 1]) -> Self {
        let mut delta = *self;
        delta.c[0] = T::zero();
        let mut out = Self::constant(derivs[0]);
        let mut power = Self::constant(T::one());
        let mut fact = T::one();
        for (k, &dk) in derivs.iter().enumerate().skip(1) {
            power = power * delta;
            fact *= T::lit(k as f64);
            let w = dk / fact;
            for (o, p) in out.c.iter_mut().zip(power.c.iter()) {
                *o += w * *p;
            }
        }
        out
    }

    /// Composition with a jet supplied at `self.real()`.
    pub fn apply_jet(&self, jet: &ScalarJet<T>) -> Self {
        self.apply(&jet.coeffs)
    }

    pub fn sqrt(&self) -> Self {
        self.apply_jet(&ScalarJet::variable(self.real()).sqrt())
    }

    pub fn recip(&self) -> Self {
        self.apply_jet(&ScalarJet::variable(self.real()).recip())
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = *self;
        out.c.iter_mut().for_each(|x| *x *= k);
        out
    }
}

impl<T: Scalar> Add for MultiDual<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        self
    }
}

impl<T: Scalar> Sub for MultiDual<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        self
    }
}

impl<T: Scalar> Neg for MultiDual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul for MultiDual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [T::zero(); LEN];
        for (m, slot) in c.iter_mut().enumerate() {
            // enumerate submasks s of m
            let mut s = m;
            loop {
                *slot += self.c[s] * rhs.c[m ^ s];
                if s == 0 {
                    break;
                }
                s = (s - 1) & m;
            }
        }
        Self { c }
    }
}

impl<T: Scalar> Div for MultiDual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar> Mul<T> for MultiDual<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> std::iter::Sum for MultiDual<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::constant(T::zero()), |a, b| a + b)
    }
}

/// `y + Σ_k ε_k e_{dirs[k]}` as a vector of multi-duals.
pub fn perturb<T: Scalar>(y: &[T], dirs: &[usize]) -> Vec<MultiDual<T>> {
    debug_assert!(dirs.len() <= UNITS);
    let mut out: Vec<MultiDual<T>> = y.iter().map(|&v| MultiDual::constant(v)).collect();
    for (unit, &i) in dirs.iter().enumerate() {
        out[i].c[1 << unit] += T::one();
    }
    out
}

/// Mask with the lowest `k` units set.
pub fn full_mask(k: usize) -> usize {
    (1 << k) - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quartic(y: &[MultiDual<f64>], a: &[[f64; 3]; 3]) -> MultiDual<f64> {
        let mut q = MultiDual::constant(0.0);
        for i in 0..3 {
            for j in 0..3 {
                q = q + y[i] * y[j] * a[i][j];
            }
        }
        q * q
    }

    #[test]
    fn quartic_mixed_partials_exact() {
        // f = (yᵀAy)²: ∂⁴f/∂h∂i∂j∂k = 8(A_hi A_jk + A_hj A_ik + A_hk A_ij)
        let a = [[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 1.0]];
        let y = [0.7, -0.4, 1.1];
        let av = |i: usize, j: usize| a[i][j];
        let ay: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i][j] * y[j]).sum()).collect();
        let q: f64 = (0..3).map(|i| y[i] * ay[i]).sum();
        for h in 0..3 {
            for i in 0..3 {
                let d2 = quartic(&perturb(&y, &[h, i]), &a).coeff(0b11);
                // ∂²f = 8 (Ay)_h (Ay)_i + 4 q A_hi
                assert!((d2 - (8.0 * ay[h] * ay[i] + 4.0 * q * av(h, i))).abs() < 1e-13);
                for j in 0..3 {
                    let d3 = quartic(&perturb(&y, &[h, i, j]), &a).coeff(0b111);
                    let want3 = 8.0 * (av(h, j) * ay[i] + av(i, j) * ay[h] + av(h, i) * ay[j]);
                    assert!((d3 - want3).abs() < 1e-13);
                    for k in 0..3 {
                        let d4 = quartic(&perturb(&y, &[h, i, j, k]), &a).coeff(0b1111);
                        let want4 = 8.0 * (av(h, i) * av(j, k) + av(h, j) * av(i, k) + av(h, k) * av(i, j));
                        assert!((d4 - want4).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn sqrt_and_recip() {
        let x = MultiDual::with_unit(4.0f64, 0) * MultiDual::with_unit(1.0, 1);
        // (4+ε₁)(1+ε₂) = 4 + ε₁ + 4ε₂ + ε₁ε₂
        assert_eq!(x.c[..4], [4.0, 1.0, 4.0, 1.0]);
        let r = x.sqrt();
        assert!((r * r - x).c.iter().all(|v| v.abs() < 1e-15));
        let inv = x.recip();
        let one = inv * x;
        assert!((one.real() - 1.0).abs() < 1e-15);
        assert!(one.c[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn nilpotent_units() {
        let e = MultiDual::with_unit(0.0f64, 2);
        assert_eq!((e * e).c, [0.0; LEN]);
    }

    proptest! {
        #[test]
        fn ring_axioms(a in prop::collection::vec(-2.0f64..2.0, LEN),
                       b in prop::collection::vec(-2.0f64..2.0, LEN),
                       c in prop::collection::vec(-2.0f64..2.0, LEN)) {
            let mk = |v: &Vec<f64>| { let mut m = MultiDual::constant(0.0); m.c.copy_from_slice(v); m };
            let (a, b, c) = (mk(&a), mk(&b), mk(&c));
            let l = (a * b) * c;
            let r = a * (b * c);
            let d = a * (b + c) - (a * b + a * c);
            for k in 0..LEN {
                prop_assert!((l.c[k] - r.c[k]).abs() < 1e-12);
                prop_assert!(d.c[k].abs() < 1e-12);
                prop_assert!(((a * b).c[k] - (b * a).c[k]).abs() < 1e-12);
            }
        }
    }
}
