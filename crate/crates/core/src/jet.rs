//! Univariate jets: a value together with its first four derivatives.
//!
//! Coefficients are stored as plain derivatives `f, f', f'', f''', f''''`
//! (not Taylor-normalized). Products follow the Leibniz rule and composition
//! follows Faà di Bruno's formula, truncated at order four.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::scalar::{binomial, Scalar};

/// Highest derivative order a jet carries.
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarJet<T> {
    /// Highest derivative order that is meaningful; slots above it are zero.
    pub order: usize,
    pub coeffs: [T; MAX_ORDER + 1],
}

impl<T: Scalar> ScalarJet<T> {
    pub fn constant(c: T) -> Self {
        let mut coeffs = [T::zero(); MAX_ORDER + 1];
        coeffs[0] = c;
        Self { order: MAX_ORDER, coeffs }
    }

    /// The identity function evaluated at `x`.
    pub fn variable(x: T) -> Self {
        let mut j = Self::constant(x);
        j.coeffs[1] = T::one();
        j
    }

    pub fn from_derivatives(ds: &[T]) -> Result<Self> {
        if ds.is_empty() {
            return Err(FinslerError::Invalid("empty jet".into()));
        }
        if ds.len() > MAX_ORDER + 1 {
            return Err(FinslerError::OrderTooHigh { requested: ds.len() - 1, max: MAX_ORDER });
        }
        let mut coeffs = [T::zero(); MAX_ORDER + 1];
        coeffs[..ds.len()].copy_from_slice(ds);
        Ok(Self { order: ds.len() - 1, coeffs })
    }

    #[inline]
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// The `k`-th derivative.
    #[inline]
    pub fn d(&self, k: usize) -> T {
        self.coeffs[k]
    }

    /// Restricts the jet to `order`, zeroing higher slots.
    pub fn truncate(mut self, order: usize) -> Self {
        let order = order.min(self.order);
        for k in (order + 1)..=MAX_ORDER {
            self.coeffs[k] = T::zero();
        }
        self.order = order;
        self
    }

    /// Jet of the derivative function; loses one order.
    pub fn derivative(&self) -> Self {
        let mut coeffs = [T::zero(); MAX_ORDER + 1];
        coeffs[..MAX_ORDER].copy_from_slice(&self.coeffs[1..]);
        Self { order: self.order.saturating_sub(1), coeffs }
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = *self;
        out.coeffs.iter_mut().for_each(|c| *c *= k);
        out
    }

    /// `g(self)` where `outer` holds `g, g', ..., g''''` evaluated at `self.value()`.
    pub fn compose(&self, outer: [T; MAX_ORDER + 1]) -> Self {
        let [_, u1, u2, u3, u4] = self.coeffs;
        let [g0, g1, g2, g3, g4] = outer;
        let three = T::lit(3.0);
        let four = T::lit(4.0);
        let six = T::lit(6.0);
        Self {
            order: self.order,
            coeffs: [
                g0,
                g1 * u1,
                g2 * u1 * u1 + g1 * u2,
                g3 * u1 * u1 * u1 + three * g2 * u1 * u2 + g1 * u3,
                g4 * u1.powi(4) + six * g3 * u1 * u1 * u2 + g2 * (three * u2 * u2 + four * u1 * u3) + g1 * u4,
            ],
        }
        .truncate(self.order)
    }

    pub fn recip(&self) -> Self {
        let x = self.value();
        let r = x.recip();
        // d^k/dx^k x^{-1} = (-1)^k k! x^{-k-1}
        self.compose([r, -r * r, T::lit(2.0) * r.powi(3), -T::lit(6.0) * r.powi(4), T::lit(24.0) * r.powi(5)])
    }

    pub fn sqrt(&self) -> Self {
        self.powf(T::lit(0.5))
    }

    /// `x^p` for `x > 0` and real `p`.
    pub fn powf(&self, p: T) -> Self {
        let x = self.value();
        let mut outer = [T::zero(); MAX_ORDER + 1];
        let mut coef = T::one();
        for (k, slot) in outer.iter_mut().enumerate() {
            let kk = T::lit(k as f64);
            *slot = coef * x.powf(p - kk);
            coef *= p - kk;
        }
        self.compose(outer)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Self {
        let x = self.value();
        let r = x.recip();
        self.compose([x.ln(), r, -r * r, T::lit(2.0) * r.powi(3), -T::lit(6.0) * r.powi(4)])
    }

    pub fn atan(&self) -> Self {
        // derivatives of atan via the jet of 1/(1+x^2)
        let x = Self::variable(self.value());
        let inner = (Self::constant(T::one()) + x * x).recip();
        let outer = [self.value().atan(), inner.d(0), inner.d(1), inner.d(2), inner.d(3)];
        self.compose(outer)
    }
}

impl<T: Scalar> Add for ScalarJet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.order = self.order.min(rhs.order);
        for k in 0..=MAX_ORDER {
            out.coeffs[k] = self.coeffs[k] + rhs.coeffs[k];
        }
        out.truncate(out.order)
    }
}

impl<T: Scalar> Sub for ScalarJet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for ScalarJet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul for ScalarJet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let order = self.order.min(rhs.order);
        let mut coeffs = [T::zero(); MAX_ORDER + 1];
        for (n, slot) in coeffs.iter_mut().enumerate().take(order + 1) {
            *slot = (0..=n).map(|k| T::lit(binomial(n, k) as f64) * self.coeffs[k] * rhs.coeffs[n - k]).sum();
        }
        Self { order, coeffs }
    }
}

impl<T: Scalar> Div for ScalarJet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        // q = a / b  <=>  a = q b; solve the Leibniz expansion for q^(n)
        let order = self.order.min(rhs.order);
        let mut q = [T::zero(); MAX_ORDER + 1];
        let b0 = rhs.coeffs[0];
        for n in 0..=order {
            let mut acc = self.coeffs[n];
            for k in 0..n {
                acc -= T::lit(binomial(n, k) as f64) * q[k] * rhs.coeffs[n - k];
            }
            q[n] = acc / b0;
        }
        Self { order, coeffs: q }
    }
}

impl<T: Scalar> Add<T> for ScalarJet<T> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.coeffs[0] += rhs;
        self
    }
}

impl<T: Scalar> Mul<T> for ScalarJet<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}
