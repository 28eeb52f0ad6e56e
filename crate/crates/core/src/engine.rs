//! Closed-form fundamental tensors of an (α,β)-metric `F = α φ(β/α)`.
//!
//! Everything here is expressed through the scalars `ρ, ρ0, ρ1, ρ2, ρ0', ρ0''`,
//! the inverse-metric coefficients `μ0, μ1, μ2`, the T-tensor coefficients
//! `Φ, Ψ, Ω` and the base tensors `h_ij`, `m_i`, `α_i`, `n_ij`.

use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::geometry::{eval_geometry, BaseGeometry, Direction, MetricPoint};
use crate::jet::{ScalarJet, MAX_ORDER};
use crate::linalg::{dot, Matrix};
use crate::phi::{phi_jet, PhiSpec};
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, SymTensor, Tensor3, Tensor4};

/// Shared relative threshold for every guarded denominator.
pub const DEFAULT_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guards<T> {
    pub threshold: T,
}

impl<T: Scalar> Default for Guards<T> {
    fn default() -> Self {
        Self { threshold: T::lit(DEFAULT_GUARD) }
    }
}

/// `ρ = φ² − sφφ'`, `ρ0 = φ'² + φφ''`, `ρ1 = φφ' − sρ0`, `ρ2 = s²ρ0 − sφφ'`,
/// and the first two derivatives of `ρ0` in `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoSet<T> {
    pub rho: T,
    pub rho0: T,
    pub rho1: T,
    pub rho2: T,
    pub rho0_p: T,
    pub rho0_pp: T,
}

impl<T: Scalar> RhoSet<T> {
    pub fn map_f64(&self) -> RhoSet<f64> {
        let f = |x: T| x.to_f64_lossy();
        RhoSet {
            rho: f(self.rho),
            rho0: f(self.rho0),
            rho1: f(self.rho1),
            rho2: f(self.rho2),
            rho0_p: f(self.rho0_p),
            rho0_pp: f(self.rho0_pp),
        }
    }
}

/// Computes [`RhoSet`] from an order-4 jet of φ at `s`.
pub fn rho_scalars<T: Scalar>(phi: &ScalarJet<T>, s: T) -> Result<RhoSet<T>> {
    if phi.order < MAX_ORDER {
        return Err(FinslerError::InsufficientJetOrder { have: phi.order, need: MAX_ORDER });
    }
    let dphi = phi.derivative();
    let ddphi = dphi.derivative();
    // ρ0 = (φφ')' as a jet, so ρ0' and ρ0'' come out exactly
    let rho0 = dphi * dphi + phi.truncate(ddphi.order) * ddphi;
    let (p0, p1) = (phi.d(0), phi.d(1));
    let rho = p0 * p0 - s * p0 * p1;
    let rho1 = p0 * p1 - s * rho0.d(0);
    let rho2 = s * s * rho0.d(0) - s * p0 * p1;
    Ok(RhoSet { rho, rho0: rho0.d(0), rho1, rho2, rho0_p: rho0.d(1), rho0_pp: rho0.d(2) })
}

/// Inverse-metric and T-tensor coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TCoefficients<T> {
    #[serde(rename = "Phi")]
    pub phi_coef: T,
    #[serde(rename = "Psi")]
    pub psi_coef: T,
    #[serde(rename = "Omega")]
    pub omega_coef: T,
    #[serde(rename = "K1")]
    pub k1: T,
    #[serde(rename = "K2")]
    pub k2: T,
    pub mu0: T,
    pub mu1: T,
    pub mu2: T,
}

/// Inverse-metric coefficients `μ0, μ1, μ2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuSet<T> {
    pub mu0: T,
    pub mu1: T,
    pub mu2: T,
}

/// Everything needed to evaluate the closed forms at one `(x, y)`.
#[derive(Debug, Clone)]
pub struct Frame<'a, T> {
    pub mp: &'a MetricPoint<T>,
    pub geom: BaseGeometry<T>,
    pub jet: ScalarJet<T>,
    pub rho: RhoSet<T>,
    pub guards: Guards<T>,
}

impl<'a, T: Scalar> Frame<'a, T> {
    pub fn new(mp: &'a MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Self> {
        Self::with_guards(mp, y, spec, Guards::default())
    }

    pub fn with_guards(mp: &'a MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>, guards: Guards<T>) -> Result<Self> {
        check_family_b_sq(mp, spec)?;
        let geom = eval_geometry(mp, y)?;
        let jet = phi_jet(spec, geom.s, MAX_ORDER)?;
        let rho = rho_scalars(&jet, geom.s)?;
        Ok(Self { mp, geom, jet, rho, guards })
    }

    #[inline]
    pub fn phi(&self) -> T {
        self.jet.d(0)
    }

    /// `F = αφ`.
    pub fn finsler(&self) -> T {
        self.geom.alpha * self.phi()
    }

    fn guard_rho(&self) -> Result<T> {
        let (p0, p1) = (self.jet.d(0), self.jet.d(1));
        let scale = p0 * p0 + (self.geom.s * p0 * p1).abs();
        if self.rho.rho.abs() <= self.guards.threshold * scale {
            return Err(FinslerError::DegenerateDenominator { name: "rho", value: self.rho.rho.to_f64_lossy() });
        }
        Ok(self.rho.rho)
    }

    /// `ρ + φφ''m²`, guarded.
    pub fn metric_denominator(&self) -> Result<T> {
        let extra = self.jet.d(0) * self.jet.d(2) * self.geom.m_sq;
        let d = self.rho.rho + extra;
        if d.abs() <= self.guards.threshold * (self.rho.rho.abs() + extra.abs()) {
            return Err(FinslerError::DegenerateMetric { guard: "rho + phi*phi''*m^2", value: d.to_f64_lossy() });
        }
        Ok(d)
    }

    fn guard_m_sq(&self) -> Result<T> {
        if self.geom.m_sq <= T::lit(1e-12) * self.mp.b_sq.max(T::one()) {
            return Err(FinslerError::ParallelDirection { m_sq: self.geom.m_sq.to_f64_lossy() });
        }
        Ok(self.geom.m_sq)
    }

    /// Ratio of the largest to the smallest guarded denominator magnitude
    /// (`α, |ρ|, |ρ + φφ''m²|, m², |φ − sφ'|`).
    pub fn conditioning(&self) -> T {
        let d = self.rho.rho + self.jet.d(0) * self.jet.d(2) * self.geom.m_sq;
        let vals = [
            self.geom.alpha,
            self.rho.rho.abs(),
            d.abs(),
            self.geom.m_sq.abs(),
            (self.jet.d(0) - self.geom.s * self.jet.d(1)).abs(),
        ];
        let hi = vals.iter().copied().fold(T::zero(), T::max);
        let lo = vals.iter().copied().fold(T::infinity(), T::min);
        hi / lo
    }

    /// `g_ij = ρ a_ij + ρ0 b_i b_j + ρ1 (b_i α_j + b_j α_i) + ρ2 α_i α_j`.
    pub fn metric_lower(&self) -> Matrix<T> {
        let RhoSet { rho, rho0, rho1, rho2, .. } = self.rho;
        let a = &self.mp.a;
        let b = &self.mp.b;
        let al = &self.geom.alpha_low;
        Matrix::from_fn(self.mp.dim, |i, j| {
            rho * a.get(i, j) + rho0 * b[i] * b[j] + rho1 * (b[i] * al[j] + b[j] * al[i]) + rho2 * al[i] * al[j]
        })
    }

    /// `μ0 = −φφ''/(ρD)`, `μ1 = −ρ1/(ρD)`, `μ2 = ρ1(sρ + (ρ1 + sφφ'')m²)/(ρ²D)`
    /// with `D = ρ + φφ''m²`.
    pub fn mu(&self) -> Result<MuSet<T>> {
        let rho = self.guard_rho()?;
        let d = self.metric_denominator()?;
        let s = self.geom.s;
        let pp = self.jet.d(0) * self.jet.d(2);
        let rho1 = self.rho.rho1;
        let m_sq = self.geom.m_sq;
        Ok(MuSet {
            mu0: -pp / (rho * d),
            mu1: -rho1 / (rho * d),
            mu2: rho1 * (s * rho + (rho1 + s * pp) * m_sq) / (rho * rho * d),
        })
    }

    /// `g^ij = a^ij/ρ + μ0 b^i b^j + μ1 (b^i α^j + b^j α^i) + μ2 α^i α^j`.
    pub fn metric_upper(&self) -> Result<Matrix<T>> {
        let MuSet { mu0, mu1, mu2 } = self.mu()?;
        let rho = self.rho.rho;
        let ai = self.mp.a_inv();
        let b = self.mp.b_up();
        let au = &self.geom.alpha_up;
        Ok(Matrix::from_fn(self.mp.dim, |i, j| {
            ai.get(i, j) / rho + mu0 * b[i] * b[j] + mu1 * (b[i] * au[j] + b[j] * au[i]) + mu2 * au[i] * au[j]
        }))
    }

    /// Residuals of the four linear equations the μ's solve, obtained by
    /// requiring `g^{ir} g_{rj} = δ^i_j` coefficient by coefficient in the
    /// basis `b^i b_j, b^i α_j, α^i b_j, α^i α_j`.
    pub fn inverse_system_residuals(&self) -> Result<[T; 4]> {
        let MuSet { mu0, mu1, mu2 } = self.mu()?;
        let RhoSet { rho, rho0, rho1, rho2, .. } = self.rho;
        let s = self.geom.s;
        let b2 = self.mp.b_sq;
        Ok([
            (rho + rho0 * b2 + s * rho1) * mu0 + (rho1 + s * rho0) * mu1 + rho0 / rho,
            (b2 * rho1 + s * rho2) * mu0 + rho * mu1 + rho1 / rho,
            (b2 * rho0 + rho + s * rho1) * mu1 + (rho1 + s * rho0) * mu2 + rho1 / rho,
            (b2 * rho1 + s * rho2) * mu1 + rho * mu2 + rho2 / rho,
        ])
    }

    /// `C_ijk = (ρ1/2α)(h_ij m_k + h_jk m_i + h_ik m_j) + (ρ0'/2α) m_i m_j m_k`.
    pub fn cartan_lower(&self) -> Tensor3<T> {
        let two_alpha = T::lit(2.0) * self.geom.alpha;
        let c1 = self.rho.rho1 / two_alpha;
        let c2 = self.rho.rho0_p / two_alpha;
        let h = &self.geom.h;
        let m = &self.geom.m;
        SymTensor::from_fn(self.mp.dim, 3, |idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            c1 * (h.get(i, j) * m[k] + h.get(j, k) * m[i] + h.get(i, k) * m[j]) + c2 * m[i] * m[j] * m[k]
        })
    }

    /// `∂C_ijk/∂y^h` from its expansion in `h`, `n`, `m`.
    pub fn cartan_derivative(&self) -> Tensor4<T> {
        let a2 = T::lit(2.0) * self.geom.alpha * self.geom.alpha;
        let s = self.geom.s;
        let RhoSet { rho1, rho0_p, rho0_pp, .. } = self.rho;
        let h = &self.geom.h;
        let nt = &self.geom.n_tensor;
        let m = &self.geom.m;
        SymTensor::from_fn(self.mp.dim, 4, |idx| {
            let (hh_, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let hn = h.get(i, k) * nt.get(j, hh_)
                + h.get(j, k) * nt.get(i, hh_)
                + h.get(i, j) * nt.get(k, hh_)
                + h.get(j, hh_) * nt.get(i, k)
                + h.get(k, hh_) * nt.get(i, j)
                + h.get(i, hh_) * nt.get(j, k);
            let nmm = nt.get(i, j) * m[hh_] * m[k] + nt.get(k, hh_) * m[i] * m[j];
            (-rho1 * hn - s * rho1 * hh_sum(h, idx) - s * rho0_p * hmm_sum(h, m, idx)
                + rho0_pp * m[hh_] * m[i] * m[j] * m[k]
                - rho0_p * nmm)
                / a2
        })
    }

    /// `ℓ_i = φ α_i + φ' m_i`.
    pub fn ell(&self) -> Vec<T> {
        let (p0, p1) = (self.jet.d(0), self.jet.d(1));
        self.geom.alpha_low.iter().zip(&self.geom.m).map(|(&a, &m)| p0 * a + p1 * m).collect()
    }

    /// `Φ, Ψ, Ω, K1, K2, μ0, μ1, μ2`.
    pub fn t_coefficients(&self) -> Result<TCoefficients<T>> {
        let m_sq = self.guard_m_sq()?;
        let MuSet { mu0, mu1, mu2 } = self.mu()?;
        let d = self.metric_denominator()?;
        let RhoSet { rho, rho1, rho0_p, rho0_pp, .. } = self.rho;
        let alpha = self.geom.alpha;
        let s = self.geom.s;
        let (phi, dphi, ddphi) = (self.jet.d(0), self.jet.d(1), self.jet.d(2));
        let two = T::lit(2.0);
        let k1 = rho1 / (two * alpha * d);
        let k2 = (rho * rho0_p - two * rho1 * phi * ddphi) / (two * alpha * rho * d);
        let phi_coef = -(rho1 * phi / (two * alpha)) * (s + alpha * k1 * m_sq);
        let psi_coef = rho1 * dphi / alpha
            - rho1 * rho1 * phi / (alpha * rho)
            - s * rho0_p * phi / (two * alpha)
            - rho1 * phi * m_sq * k2 / two;
        let omega_coef = rho0_pp * phi / (two * alpha) + two * rho0_p * dphi / alpha
            - T::lit(3.0) * phi * (k2 * (rho1 + rho0_p * m_sq / two) + rho1 * rho0_p / (two * alpha * rho));
        Ok(TCoefficients { phi_coef, psi_coef, omega_coef, k1, k2, mu0, mu1, mu2 })
    }

    /// `T_hijk = Φ (hh) + Ψ (hmm) + Ω mmmm`, each bracket the symmetric sum.
    pub fn t_lower(&self) -> Result<Tensor4<T>> {
        let c = self.t_coefficients()?;
        Ok(assemble_t(&self.geom, self.mp.dim, &c))
    }

    /// `T^h_ijk` from the closed form in terms of `h^h_i`, `m^h`, `b^h`, `α^h`.
    pub fn t_raised(&self) -> Result<DenseTensor<T>> {
        let c = self.t_coefficients()?;
        let rho = self.rho.rho;
        let n = self.mp.dim;
        let h = &self.geom.h;
        let m = &self.geom.m;
        let mu_ = &self.geom.m_up;
        let au = &self.geom.alpha_up;
        let al = &self.geom.alpha_low;
        let bu = self.mp.b_up();
        let m_sq = self.geom.m_sq;
        let three = T::lit(3.0);
        let h_mixed = |up: usize, low: usize| -> T {
            let delta = if up == low { T::one() } else { T::zero() };
            delta - au[up] * al[low]
        };
        Ok(DenseTensor::from_fn(n, 4, |idx| {
            let (hu, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let hh = h_mixed(hu, i) * h.get(j, k) + h_mixed(hu, j) * h.get(i, k) + h_mixed(hu, k) * h.get(i, j);
            let hmm = h_mixed(hu, k) * m[i] * m[j]
                + h_mixed(hu, j) * m[i] * m[k]
                + h_mixed(hu, i) * m[j] * m[k]
                + h.get(i, j) * mu_[hu] * m[k]
                + h.get(j, k) * m[i] * mu_[hu]
                + h.get(i, k) * m[j] * mu_[hu];
            let m3 = m[i] * m[j] * m[k];
            let hm3 = h.get(i, k) * m[j] + h.get(i, j) * m[k] + h.get(j, k) * m[i];
            let b_contracted =
                c.phi_coef * hm3 + c.psi_coef * (m_sq * hm3 + three * m3) + c.omega_coef * m_sq * m3;
            (c.phi_coef * hh + c.psi_coef * hmm + c.omega_coef * mu_[hu] * m3) / rho
                + (c.mu0 * bu[hu] + c.mu1 * au[hu]) * b_contracted
        }))
    }

    /// `T^h_ijk` by raising [`Frame::t_lower`] with [`Frame::metric_upper`].
    pub fn t_raised_numeric(&self) -> Result<DenseTensor<T>> {
        let t = self.t_lower()?.to_dense();
        Ok(t.raise_first(&self.metric_upper()?))
    }

    /// `σ_h T^h_ijk` together with the diagnostic `max_j |σ_j − (σ_0/(sα)) b_j|`.
    pub fn sigma_contract(&self, sigma: &[T]) -> Result<SigmaContraction<T>> {
        let n = self.mp.dim;
        if sigma.len() != n {
            return Err(FinslerError::DimensionMismatch { expected: n, found: sigma.len() });
        }
        let s = self.geom.s;
        if s.abs() < T::lit(1e-12) {
            return Err(FinslerError::SDividesZero { s: s.to_f64_lossy() });
        }
        let tr = self.t_raised()?;
        let tensor = tr.contract(0, sigma)?;
        let sigma_0 = dot(sigma, &self.geom.y);
        let sigma_beta = dot(sigma, self.mp.b_up());
        let k = sigma_0 / (s * self.geom.alpha);
        let condition_c =
            sigma.iter().zip(&self.mp.b).map(|(&sj, &bj)| (sj - k * bj).abs()).fold(T::zero(), T::max);
        Ok(SigmaContraction { tensor, condition_c, sigma_0, sigma_beta })
    }

    /// All tensors at this point, for reporting.
    pub fn bundle(&self) -> Result<TensorBundle<T>> {
        Ok(TensorBundle {
            s: self.geom.s,
            alpha: self.geom.alpha,
            finsler: self.finsler(),
            rho: self.rho,
            coefficients: self.t_coefficients()?,
            conditioning: self.conditioning(),
            metric: self.metric_lower(),
            metric_inverse: self.metric_upper()?,
            cartan: self.cartan_lower(),
            t_lower: self.t_lower()?,
            t_raised: self.t_raised()?,
        })
    }
}

/// `Φ(hh) + Ψ(hmm) + Ω m⁴` assembled from given coefficients.
pub fn assemble_t<T: Scalar>(geom: &BaseGeometry<T>, dim: usize, c: &TCoefficients<T>) -> Tensor4<T> {
    let h = &geom.h;
    let m = &geom.m;
    SymTensor::from_fn(dim, 4, |idx| {
        c.phi_coef * hh_sum(h, idx)
            + c.psi_coef * hmm_sum(h, m, idx)
            + c.omega_coef * m[idx[0]] * m[idx[1]] * m[idx[2]] * m[idx[3]]
    })
}

/// `h_hi h_jk + h_hj h_ik + h_hk h_ij`.
fn hh_sum<T: Scalar>(h: &Matrix<T>, idx: &[usize]) -> T {
    let (a, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
    h.get(a, i) * h.get(j, k) + h.get(a, j) * h.get(i, k) + h.get(a, k) * h.get(i, j)
}

/// The six-term symmetric sum of `h_.. m_. m_.`.
fn hmm_sum<T: Scalar>(h: &Matrix<T>, m: &[T], idx: &[usize]) -> T {
    let (a, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
    h.get(a, k) * m[i] * m[j]
        + h.get(a, j) * m[i] * m[k]
        + h.get(a, i) * m[j] * m[k]
        + h.get(i, j) * m[a] * m[k]
        + h.get(j, k) * m[i] * m[a]
        + h.get(i, k) * m[j] * m[a]
}

impl<T: Scalar> TCoefficients<T> {
    /// Residuals of the dual forms of `K1`, `K2` and their helper identity:
    /// `[K1 − ρ1(1+ρμ0m²)/(2αρ), K2 − (ρ0'(1+ρμ0m²)/(2αρ) + ρ1μ0/α),
    ///   (ρ1/2α)(K2m² + ρ1/(αρ)) − K1(ρ1/α + ρ0'm²/(2α))]`.
    pub fn identity_residuals(&self, frame: &Frame<'_, T>) -> [T; 3] {
        let RhoSet { rho, rho1, rho0_p, .. } = frame.rho;
        let alpha = frame.geom.alpha;
        let m_sq = frame.geom.m_sq;
        let two = T::lit(2.0);
        let f = T::one() + rho * self.mu0 * m_sq;
        [
            self.k1 - rho1 * f / (two * alpha * rho),
            self.k2 - (rho0_p * f / (two * alpha * rho) + rho1 * self.mu0 / alpha),
            rho1 / (two * alpha) * (self.k2 * m_sq + rho1 / (alpha * rho))
                - self.k1 * (rho1 / alpha + rho0_p * m_sq / (two * alpha)),
        ]
    }

    pub fn map_f64(&self) -> TCoefficients<f64> {
        let f = |x: T| x.to_f64_lossy();
        TCoefficients {
            phi_coef: f(self.phi_coef),
            psi_coef: f(self.psi_coef),
            omega_coef: f(self.omega_coef),
            k1: f(self.k1),
            k2: f(self.k2),
            mu0: f(self.mu0),
            mu1: f(self.mu1),
            mu2: f(self.mu2),
        }
    }

    /// `Φ + m²Ψ`.
    pub fn sigma_a(&self, m_sq: T) -> T {
        self.phi_coef + m_sq * self.psi_coef
    }

    /// `3Ψ + m²Ω`.
    pub fn sigma_b(&self, m_sq: T) -> T {
        T::lit(3.0) * self.psi_coef + m_sq * self.omega_coef
    }
}

/// Output of [`Frame::sigma_contract`].
#[derive(Debug, Clone)]
pub struct SigmaContraction<T> {
    pub tensor: DenseTensor<T>,
    pub condition_c: T,
    pub sigma_0: T,
    pub sigma_beta: T,
}

/// g, g⁻¹, C, T and T^h at one point.
#[derive(Debug, Clone)]
pub struct TensorBundle<T> {
    pub s: T,
    pub alpha: T,
    pub finsler: T,
    pub rho: RhoSet<T>,
    pub coefficients: TCoefficients<T>,
    pub conditioning: T,
    pub metric: Matrix<T>,
    pub metric_inverse: Matrix<T>,
    pub cartan: Tensor3<T>,
    pub t_lower: Tensor4<T>,
    pub t_raised: DenseTensor<T>,
}

/// Rejects a family whose built-in `b²` disagrees with the point's.
pub fn check_family_b_sq<T: Scalar>(mp: &MetricPoint<T>, spec: &PhiSpec<T>) -> Result<()> {
    if let Some(fb) = spec.b_sq() {
        if !fb.is_finite() {
            return Err(FinslerError::ParameterMismatch(format!(
                "family {} has no b_sq; fill it from the metric point",
                spec.family_name()
            )));
        }
        if (fb - mp.b_sq).abs() > T::lit(1e-12) * mp.b_sq.max(T::one()) {
            return Err(FinslerError::ParameterMismatch(format!(
                "family {} built for b^2 = {}, metric point has b^2 = {}",
                spec.family_name(),
                fb.to_f64_lossy(),
                mp.b_sq.to_f64_lossy()
            )));
        }
    }
    Ok(())
}

// Free-function forms of the frame methods.

pub fn metric_lower<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Matrix<T>> {
    Ok(Frame::new(mp, y, spec)?.metric_lower())
}

pub fn metric_upper<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Matrix<T>> {
    Frame::new(mp, y, spec)?.metric_upper()
}

pub fn cartan_lower<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Tensor3<T>> {
    Ok(Frame::new(mp, y, spec)?.cartan_lower())
}

pub fn ell_covector<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Vec<T>> {
    Ok(Frame::new(mp, y, spec)?.ell())
}

pub fn t_coefficients<T: Scalar>(
    mp: &MetricPoint<T>,
    y: &Direction<T>,
    spec: &PhiSpec<T>,
) -> Result<TCoefficients<T>> {
    Frame::new(mp, y, spec)?.t_coefficients()
}

pub fn t_lower<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<Tensor4<T>> {
    Frame::new(mp, y, spec)?.t_lower()
}

pub fn t_raised<T: Scalar>(mp: &MetricPoint<T>, y: &Direction<T>, spec: &PhiSpec<T>) -> Result<DenseTensor<T>> {
    Frame::new(mp, y, spec)?.t_raised()
}

pub fn sigma_contract<T: Scalar>(
    sigma: &[T],
    mp: &MetricPoint<T>,
    y: &Direction<T>,
    spec: &PhiSpec<T>,
) -> Result<SigmaContraction<T>> {
    Frame::new(mp, y, spec)?.sigma_contract(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_metric_point;

    fn standard() -> MetricPoint<f64> {
        make_metric_point(Matrix::identity(3), vec![0.6, 0.0, 0.0], 1.0).unwrap()
    }

    fn y0() -> Direction<f64> {
        Direction(vec![1.0, 0.3, 0.2])
    }

    #[test]
    fn rho_constant_phi() {
        let r = rho_scalars(&ScalarJet::constant(1.0), 0.4).unwrap();
        assert_eq!((r.rho, r.rho0, r.rho1, r.rho2, r.rho0_p), (1.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn rho_randers() {
        for &s in &[-0.5f64, 0.1, 0.7] {
            let j = phi_jet(&PhiSpec::randers(), s, 4).unwrap();
            let r = rho_scalars(&j, s).unwrap();
            assert!((r.rho - (1.0 + s)).abs() < 1e-15);
            assert_eq!((r.rho0, r.rho1, r.rho0_p), (1.0, 1.0, 0.0));
            assert!((r.rho2 + s).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_kropina() {
        let s = 0.5f64;
        let j = phi_jet(&PhiSpec::kropina(), s, 4).unwrap();
        let r = rho_scalars(&j, s).unwrap();
        assert!((r.rho - 2.0 / (s * s)).abs() < 1e-13);
        assert!((r.rho0 - 3.0 / s.powi(4)).abs() < 1e-12);
        assert!((r.rho1 + 4.0 / s.powi(3)).abs() < 1e-12);
        assert!((s * r.rho1 + r.rho2).abs() < 1e-12);
    }

    #[test]
    fn rho_needs_order_four() {
        let j = phi_jet(&PhiSpec::randers(), 0.1, 3).unwrap();
        assert!(matches!(rho_scalars(&j, 0.1), Err(FinslerError::InsufficientJetOrder { .. })));
    }

    #[test]
    fn rho0_derivative_leibniz() {
        let spec = PhiSpec::series(vec![1.0, 0.4, -0.3, 0.2, 0.05]);
        let s = 0.37f64;
        let j = phi_jet(&spec, s, 4).unwrap();
        let r = rho_scalars(&j, s).unwrap();
        let want = 3.0 * j.d(1) * j.d(2) + j.d(0) * j.d(3);
        assert!((r.rho0_p - want).abs() < 1e-14);
        let want2 = 3.0 * j.d(2).powi(2) + 4.0 * j.d(1) * j.d(3) + j.d(0) * j.d(4);
        assert!((r.rho0_pp - want2).abs() < 1e-14);
    }

    #[test]
    fn unit_phi_gives_riemannian_tensors() {
        let mp = standard();
        let spec = PhiSpec::series(vec![1.0]);
        let f = Frame::new(&mp, &y0(), &spec).unwrap();
        assert!(f.metric_lower().sub(&mp.a).max_abs() < 1e-15);
        assert!(f.metric_upper().unwrap().sub(mp.a_inv()).max_abs() < 1e-15);
        let mu = f.mu().unwrap();
        assert_eq!((mu.mu0, mu.mu1, mu.mu2), (0.0, 0.0, 0.0));
        assert_eq!(f.cartan_lower().max_abs(), 0.0);
        let ell = f.ell();
        for (a, b) in ell.iter().zip(&f.geom.alpha_low) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn riemannian_family_metric_is_constant() {
        let mp = standard();
        let (k1, k2) = (2.0, 3.0);
        let g = metric_lower(&mp, &y0(), &PhiSpec::riemannian(k1, k2)).unwrap();
        let want = Matrix::from_fn(3, |i, j| k2 * mp.a.get(i, j) + k1 * mp.b[i] * mp.b[j]);
        assert!(g.sub(&want).max_abs() < 1e-14);
    }

    #[test]
    fn randers_inverse_and_homogeneity() {
        let mp = standard();
        let spec = PhiSpec::randers();
        let f = Frame::new(&mp, &y0(), &spec).unwrap();
        let g = f.metric_lower();
        let gi = f.metric_upper().unwrap();
        assert!(gi.mul(&g).sub(&Matrix::identity(3)).max_abs() < 1e-12);
        let fv = f.finsler();
        assert!((g.bilinear(&f.geom.y, &f.geom.y) - fv * fv).abs() < 1e-12);
        for r in f.inverse_system_residuals().unwrap() {
            assert!(r.abs() < 1e-13);
        }
    }

    #[test]
    fn randers_ell() {
        let mp = standard();
        let ell = ell_covector(&mp, &Direction(vec![1.0, 0.0, 0.0]), &PhiSpec::randers()).unwrap();
        assert!((ell[0] - 1.6).abs() < 1e-15 && ell[1] == 0.0 && ell[2] == 0.0);
    }

    #[test]
    fn randers_coefficients_match_closed_form() {
        let mp = standard();
        let f = Frame::new(&mp, &y0(), &PhiSpec::randers()).unwrap();
        let c = f.t_coefficients().unwrap();
        let (s, a, b2) = (f.geom.s, f.geom.alpha, mp.b_sq);
        let want = -(b2 + s * s + 2.0 * s) / (4.0 * a);
        assert!((c.phi_coef - want).abs() < 1e-15);
        assert_eq!(c.psi_coef, 0.0);
        assert_eq!(c.omega_coef, 0.0);
        for r in c.identity_residuals(&f) {
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_phi_trips_metric_guard() {
        let mp = standard();
        let spec = PhiSpec::linear_sqrt(0.5, 1.0, 0.36);
        let r = metric_upper(&mp, &y0(), &spec);
        assert!(matches!(r, Err(FinslerError::DegenerateMetric { .. })), "{r:?}");
        // the lower metric itself is still computable
        assert!(metric_lower(&mp, &y0(), &spec).is_ok());
    }

    #[test]
    fn parallel_direction_rejected_for_t() {
        let mp = standard();
        let r = t_coefficients(&mp, &Direction(vec![1.0, 0.0, 0.0]), &PhiSpec::randers());
        assert!(matches!(r, Err(FinslerError::ParallelDirection { .. })));
    }

    #[test]
    fn b_sq_mismatch_rejected() {
        let mp = standard();
        let r = Frame::new(&mp, &y0(), &PhiSpec::shen_berwald(2.0, 1.0));
        assert!(matches!(r, Err(FinslerError::ParameterMismatch(_))));
    }

    #[test]
    fn sigma_zero_and_s_zero() {
        let mp = standard();
        let spec = PhiSpec::randers();
        let sc = sigma_contract(&[0.0; 3], &mp, &y0(), &spec).unwrap();
        assert_eq!(sc.tensor.max_abs(), 0.0);
        let y = Direction(vec![0.0, 1.0, 0.0]);
        assert!(matches!(sigma_contract(&[1.0, 0.0, 0.0], &mp, &y, &spec), Err(FinslerError::SDividesZero { .. })));
    }

    #[test]
    fn randers_sigma_b_nonzero() {
        let mp = standard();
        let sc = sigma_contract(&mp.b.clone(), &mp, &y0(), &PhiSpec::randers()).unwrap();
        assert!(sc.tensor.max_abs() > 1e-3);
        assert!(sc.condition_c < 1e-15);
    }

    #[test]
    fn raised_paths_agree() {
        let mp = standard();
        for spec in [PhiSpec::randers(), PhiSpec::kropina(), PhiSpec::shen_landsberg(1.0, 0.5, 0.36)] {
            let f = Frame::new(&mp, &y0(), &spec).unwrap();
            let a = f.t_raised().unwrap();
            let b = f.t_raised_numeric().unwrap();
            let scale = a.max_abs().max(1.0);
            assert!(a.sub(&b).max_abs() < 1e-9 * scale, "{}", spec.family_name());
            // lowering recovers T
            let back = a.raise_first(&f.metric_lower());
            assert!(back.sub(&f.t_lower().unwrap().to_dense()).max_abs() < 1e-9 * scale);
        }
    }
}
