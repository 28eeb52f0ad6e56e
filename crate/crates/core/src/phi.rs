//! φ-families of `F = α φ(β/α)`, the transform `Q = φ'/(φ - sφ')` in both
//! directions, and the regularity checker.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{FinslerError, Result};
use crate::jet::{ScalarJet, MAX_ORDER};
use crate::quadrature::AdaptiveSimpson;
use crate::scalar::{binomial, Scalar};

/// Relative threshold for `|φ - sφ'|` in [`q_from_phi`].
const Q_DENOMINATOR_GUARD: f64 = 1e-14;
/// Relative threshold for the regularity denominator `ρ + φφ''m^2`.
const METRIC_GUARD: f64 = 1e-12;

/// Open interval `(lo, hi)` of admissible `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, s: T) -> bool {
        s > self.lo && s < self.hi
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }
}

/// Closed-form `Q(s)` selectors.
#[derive(Debug, Clone, PartialEq)]
pub enum QSpec<T> {
    /// `Q = c1 s + c2 sqrt(b^2 - s^2)`, the general solution of the
    /// second-order Landsberg-class equation.
    Linear { c1: T, c2: T, b_sq: T },
    /// `Q = (c b^2 - 1)/s - c s`, the solution of the first-order
    /// T-condition equation.
    Berwald { c: T, b_sq: T },
    /// `Q` derived from an existing φ.
    FromPhi(Box<PhiSpec<T>>),
}

/// The φ-family selector.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiFamily<T> {
    /// `φ = sqrt(k1 s^2 + k2)`
    Riemannian { k1: T, k2: T },
    /// `φ = 1 + s`
    Randers,
    /// `φ = 1/s`
    Kropina,
    /// `φ = s^{(cb²-1)/(cb²)} (cb² - cs²)^{1/(2cb²)}`, defined for `c b^2 > 1`.
    ShenBerwald { c: T, b_sq: T },
    /// `φ = exp ∫ Q/(1+sQ)` with `Q = c1 sqrt(b^2 - s^2) + c2 s`.
    ///
    /// Note the constants multiply the opposite terms compared with
    /// [`QSpec::Linear`]; see [`PhiFamily::landsberg_q`].
    ShenLandsberg { c1: T, c2: T, b_sq: T },
    /// `φ = exp ∫ Q/(1+sQ)` for an arbitrary [`QSpec`].
    GeneralQ(QSpec<T>),
    /// `φ = Σ a_k s^k`.
    Series(Vec<T>),
    /// `φ = c1 s + c2 sqrt(b^2 - s^2)`: the family for which `ρ + φφ''m^2`
    /// vanishes identically. Kept so the degenerate guard can be exercised.
    LinearSqrt { c1: T, c2: T, b_sq: T },
}

/// A φ-family together with its normalization constant `c3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpec<T> {
    pub family: PhiFamily<T>,
    pub c3: T,
    /// Lower limit of the reconstruction integral for Q-defined families.
    /// Defaults to `sqrt(b^2)/2`.
    pub s_ref: Option<T>,
}

impl<T: Scalar> PhiFamily<T> {
    /// The [`QSpec::Linear`] equivalent of a Shen-Landsberg parameter pair.
    pub fn landsberg_q(c1: T, c2: T, b_sq: T) -> QSpec<T> {
        QSpec::Linear { c1: c2, c2: c1, b_sq }
    }
}

impl<T: Scalar> PhiSpec<T> {
    pub fn new(family: PhiFamily<T>) -> Self {
        Self { family, c3: T::one(), s_ref: None }
    }

    pub fn with_c3(mut self, c3: T) -> Self {
        self.c3 = c3;
        self
    }

    pub fn with_s_ref(mut self, s_ref: T) -> Self {
        self.s_ref = Some(s_ref);
        self
    }

    pub fn riemannian(k1: T, k2: T) -> Self {
        Self::new(PhiFamily::Riemannian { k1, k2 })
    }

    pub fn randers() -> Self {
        Self::new(PhiFamily::Randers)
    }

    pub fn kropina() -> Self {
        Self::new(PhiFamily::Kropina)
    }

    pub fn shen_berwald(c: T, b_sq: T) -> Self {
        Self::new(PhiFamily::ShenBerwald { c, b_sq })
    }

    pub fn shen_landsberg(c1: T, c2: T, b_sq: T) -> Self {
        Self::new(PhiFamily::ShenLandsberg { c1, c2, b_sq })
    }

    /// Shen-Landsberg family in the constant-norm parameterization
    /// `Q = c2' sqrt(1 - (s/b0)^2) + c_lin s` with `b = b0`.
    pub fn shen_landsberg_normalized(c2_prime: T, c_lin: T, b0: T) -> Self {
        Self::shen_landsberg(c2_prime / b0, c_lin, b0 * b0)
    }

    /// Asanov's member: `b0 = 1`, no linear term, `Q = k sqrt(1 - s^2)`.
    pub fn asanov(k: T) -> Self {
        Self::shen_landsberg_normalized(k, T::zero(), T::one())
    }

    pub fn general_q(q: QSpec<T>) -> Self {
        Self::new(PhiFamily::GeneralQ(q))
    }

    pub fn series(coefficients: Vec<T>) -> Self {
        Self::new(PhiFamily::Series(coefficients))
    }

    pub fn linear_sqrt(c1: T, c2: T, b_sq: T) -> Self {
        Self::new(PhiFamily::LinearSqrt { c1, c2, b_sq })
    }

    /// Short family name as used in JSON.
    pub fn family_name(&self) -> &'static str {
        match self.family {
            PhiFamily::Riemannian { .. } => "riemannian",
            PhiFamily::Randers => "randers",
            PhiFamily::Kropina => "kropina",
            PhiFamily::ShenBerwald { .. } => "shen_berwald",
            PhiFamily::ShenLandsberg { .. } => "shen_landsberg",
            PhiFamily::GeneralQ(_) => "general_q",
            PhiFamily::Series(_) => "series",
            PhiFamily::LinearSqrt { .. } => "linear_sqrt",
        }
    }

    /// The `b^2` this family was built for, when it depends on one.
    pub fn b_sq(&self) -> Option<T> {
        match &self.family {
            PhiFamily::ShenBerwald { b_sq, .. }
            | PhiFamily::ShenLandsberg { b_sq, .. }
            | PhiFamily::LinearSqrt { b_sq, .. } => Some(*b_sq),
            PhiFamily::GeneralQ(q) => q.b_sq(),
            _ => None,
        }
    }

    /// Replaces a family's `b^2` parameter (used when a fixture supplies it).
    pub fn with_b_sq(mut self, value: T) -> Self {
        match &mut self.family {
            PhiFamily::ShenBerwald { b_sq, .. }
            | PhiFamily::ShenLandsberg { b_sq, .. }
            | PhiFamily::LinearSqrt { b_sq, .. } => *b_sq = value,
            PhiFamily::GeneralQ(QSpec::Linear { b_sq, .. }) | PhiFamily::GeneralQ(QSpec::Berwald { b_sq, .. }) => {
                *b_sq = value
            }
            _ => {}
        }
        self
    }

    /// `true` when φ is only smooth on `s > 0`.
    pub fn is_positive_only(&self) -> bool {
        self.domain().lo >= T::zero()
    }

    /// Open interval of `s` on which φ is defined and smooth.
    pub fn domain(&self) -> Interval<T> {
        let inf = T::infinity();
        let whole = Interval::new(-inf, inf);
        let ball = |b_sq: T| Interval::new(-b_sq.sqrt(), b_sq.sqrt());
        match &self.family {
            PhiFamily::Riemannian { k1, k2 } => {
                let (k1, k2) = (*k1, *k2);
                if k2 > T::zero() {
                    if k1 >= T::zero() {
                        whole
                    } else {
                        let r = (-k2 / k1).sqrt();
                        Interval::new(-r, r)
                    }
                } else if k1 > T::zero() {
                    Interval::new((-k2 / k1).sqrt(), inf)
                } else {
                    Interval::new(T::zero(), T::zero())
                }
            }
            PhiFamily::Randers => Interval::new(-T::one(), inf),
            PhiFamily::Kropina => Interval::new(T::zero(), inf),
            PhiFamily::ShenBerwald { b_sq, .. } => Interval::new(T::zero(), b_sq.sqrt()),
            PhiFamily::ShenLandsberg { b_sq, .. } | PhiFamily::LinearSqrt { b_sq, .. } => ball(*b_sq),
            PhiFamily::GeneralQ(q) => q.domain(),
            PhiFamily::Series(_) => whole,
        }
    }

    /// Default lower limit for reconstruction integrals.
    pub fn reference_s(&self) -> T {
        if let Some(s) = self.s_ref {
            return s;
        }
        self.b_sq().map(|b| b.sqrt() * T::lit(0.5)).unwrap_or(T::lit(0.5))
    }

    /// The Q-spec behind a Q-defined family.
    pub fn q_spec(&self) -> Option<QSpec<T>> {
        match &self.family {
            PhiFamily::ShenLandsberg { c1, c2, b_sq } => Some(PhiFamily::landsberg_q(*c1, *c2, *b_sq)),
            PhiFamily::GeneralQ(q) => Some(q.clone()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let f = |x: T| x.to_f64_lossy();
        let params = match &self.family {
            PhiFamily::Riemannian { k1, k2 } => json!({"k1": f(*k1), "k2": f(*k2)}),
            PhiFamily::Randers | PhiFamily::Kropina => json!({}),
            PhiFamily::ShenBerwald { c, b_sq } => json!({"c": f(*c), "b_sq": f(*b_sq)}),
            PhiFamily::ShenLandsberg { c1, c2, b_sq } | PhiFamily::LinearSqrt { c1, c2, b_sq } => {
                json!({"c1": f(*c1), "c2": f(*c2), "b_sq": f(*b_sq)})
            }
            PhiFamily::GeneralQ(q) => json!({"q": q.to_json()}),
            PhiFamily::Series(c) => json!({"coefficients": c.iter().map(|&x| f(x)).collect::<Vec<_>>()}),
        };
        let mut out = json!({"family": self.family_name(), "params": params, "c3": f(self.c3)});
        if let Some(s) = self.s_ref {
            out["s_ref"] = json!(f(s));
        }
        out
    }

    /// Parses `{"family": ..., "params": {...}, "c3": r}`.
    ///
    /// `shen_landsberg` also accepts the constant-norm parameterization
    /// `{"c2_prime", "c_lin", "b0"}`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| invalid("phi spec must be an object"))?;
        let family = obj.get("family").and_then(Value::as_str).ok_or_else(|| invalid("missing \"family\""))?;
        let empty = Map::new();
        let params = match obj.get("params") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return Err(invalid("\"params\" must be an object")),
        };
        let c3 = match obj.get("c3") {
            None | Some(Value::Null) => T::one(),
            Some(x) => T::lit(x.as_f64().ok_or_else(|| invalid("\"c3\" must be a number"))?),
        };
        let mut spec = Self::family_from_json(family, params)?.with_c3(c3);
        if let Some(s) = obj.get("s_ref").and_then(Value::as_f64) {
            spec = spec.with_s_ref(T::lit(s));
        }
        Ok(spec)
    }

    fn family_from_json(family: &str, p: &Map<String, Value>) -> Result<Self> {
        let num = |k: &str| -> Result<T> {
            p.get(k).and_then(Value::as_f64).map(T::lit).ok_or_else(|| invalid(&format!("missing numeric param \"{k}\"")))
        };
        // b_sq may be filled from the fixture later; NaN marks "unset"
        let b_sq = || num("b_sq").or(Ok::<T, FinslerError>(T::nan()));
        Ok(match family {
            "riemannian" => Self::riemannian(num("k1")?, num("k2")?),
            "randers" => Self::randers(),
            "kropina" => Self::kropina(),
            "shen_berwald" => Self::shen_berwald(num("c")?, b_sq()?),
            "shen_landsberg" => {
                if p.contains_key("c2_prime") {
                    Self::shen_landsberg_normalized(num("c2_prime")?, num("c_lin").unwrap_or(T::zero()), num("b0")?)
                } else {
                    Self::shen_landsberg(num("c1")?, num("c2")?, b_sq()?)
                }
            }
            "asanov" => Self::asanov(num("k")?),
            "linear_sqrt" => Self::linear_sqrt(num("c1")?, num("c2")?, b_sq()?),
            "general_q" => Self::general_q(QSpec::from_json(p.get("q").ok_or_else(|| invalid("missing \"q\""))?)?),
            "series" => {
                let c = p
                    .get("coefficients")
                    .and_then(Value::as_array)
                    .ok_or_else(|| invalid("missing \"coefficients\""))?
                    .iter()
                    .map(|x| x.as_f64().map(T::lit).ok_or_else(|| invalid("series coefficient not a number")))
                    .collect::<Result<Vec<T>>>()?;
                Self::series(c)
            }
            other => return Err(invalid(&format!("unknown phi family \"{other}\""))),
        })
    }
}

fn invalid(msg: &str) -> FinslerError {
    FinslerError::Invalid(msg.to_string())
}

impl<T: Scalar> QSpec<T> {
    pub fn b_sq(&self) -> Option<T> {
        match self {
            QSpec::Linear { b_sq, .. } | QSpec::Berwald { b_sq, .. } => Some(*b_sq),
            QSpec::FromPhi(p) => p.b_sq(),
        }
    }

    pub fn domain(&self) -> Interval<T> {
        match self {
            QSpec::Linear { b_sq, .. } => Interval::new(-b_sq.sqrt(), b_sq.sqrt()),
            QSpec::Berwald { b_sq, .. } => Interval::new(T::zero(), b_sq.sqrt()),
            QSpec::FromPhi(p) => p.domain(),
        }
    }

    /// Jet of `Q` at `s` (order 4 for closed forms, order 3 when derived from φ).
    pub fn jet(&self, s: T) -> Result<ScalarJet<T>> {
        let x = ScalarJet::variable(s);
        match self {
            QSpec::Linear { c1, c2, b_sq } => {
                let b = b_sq.sqrt();
                if s.abs() >= b {
                    return Err(FinslerError::BoundaryS { s: s.to_f64_lossy(), b: b.to_f64_lossy() });
                }
                let w = (-(x * x) + *b_sq).sqrt();
                Ok(x * *c1 + w * *c2)
            }
            QSpec::Berwald { c, b_sq } => {
                if s.abs() < T::lit(1e-12) {
                    return Err(FinslerError::SDividesZero { s: s.to_f64_lossy() });
                }
                Ok(x.recip() * (*c * *b_sq - T::one()) - x * *c)
            }
            QSpec::FromPhi(p) => q_jet_from_phi(p, s),
        }
    }

    /// Plain value `Q(s)`.
    pub fn value(&self, s: T) -> Result<T> {
        Ok(self.jet(s)?.value())
    }

    pub fn to_json(&self) -> Value {
        let f = |x: T| x.to_f64_lossy();
        match self {
            QSpec::Linear { c1, c2, b_sq } => json!({"kind": "linear", "c1": f(*c1), "c2": f(*c2), "b_sq": f(*b_sq)}),
            QSpec::Berwald { c, b_sq } => json!({"kind": "berwald", "c": f(*c), "b_sq": f(*b_sq)}),
            QSpec::FromPhi(p) => json!({"kind": "from_phi", "phi": p.to_json()}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let num = |k: &str| -> Result<T> {
            v.get(k).and_then(Value::as_f64).map(T::lit).ok_or_else(|| invalid(&format!("missing numeric q param \"{k}\"")))
        };
        match v.get("kind").and_then(Value::as_str) {
            Some("linear") => Ok(QSpec::Linear { c1: num("c1")?, c2: num("c2")?, b_sq: num("b_sq")? }),
            Some("berwald") => Ok(QSpec::Berwald { c: num("c")?, b_sq: num("b_sq")? }),
            Some("from_phi") => Ok(QSpec::FromPhi(Box::new(PhiSpec::from_json(
                v.get("phi").ok_or_else(|| invalid("missing \"phi\""))?,
            )?))),
            _ => Err(invalid("q spec needs \"kind\": linear | berwald | from_phi")),
        }
    }
}

/// Jet of φ at `s`, exact to the requested order (at most 4).
///
/// Closed-form families are differentiated by jet arithmetic. Q-defined
/// families use the log-derivative `L = Q/(1+sQ)`: `φ' = Lφ` and the Leibniz
/// recursion `φ^(k+1) = Σ C(k,j) L^(j) φ^(k-j)`, with φ itself from
/// [`phi_from_q`].
pub fn phi_jet<T: Scalar>(spec: &PhiSpec<T>, s: T, order: usize) -> Result<ScalarJet<T>> {
    if order > MAX_ORDER {
        return Err(FinslerError::OrderTooHigh { requested: order, max: MAX_ORDER });
    }
    let dom = spec.domain();
    if !dom.contains(s) {
        return Err(FinslerError::OutOfDomain { s: s.to_f64_lossy(), lo: dom.lo.to_f64_lossy(), hi: dom.hi.to_f64_lossy() });
    }
    let x = ScalarJet::variable(s);
    let raw = match &spec.family {
        PhiFamily::Riemannian { k1, k2 } => (x * x * *k1 + *k2).sqrt(),
        PhiFamily::Randers => x + T::one(),
        PhiFamily::Kropina => x.recip(),
        PhiFamily::ShenBerwald { c, b_sq } => {
            let cb = *c * *b_sq;
            if !(cb > T::one()) {
                return Err(FinslerError::UnsupportedParameterRange(format!(
                    "Shen-Berwald needs c b^2 > 1, got {}",
                    cb.to_f64_lossy()
                )));
            }
            let p = (cb - T::one()) / cb;
            let q = T::one() / (T::lit(2.0) * cb);
            x.powf(p) * (x * x * (-*c) + cb).powf(q)
        }
        PhiFamily::ShenLandsberg { .. } | PhiFamily::GeneralQ(_) => {
            let q = spec.q_spec().expect("Q-defined family");
            let value = phi_from_q(&q, s, spec.reference_s(), T::one())?;
            return Ok(jet_from_log_derivative(&q, s, value)?.scale(spec.c3).truncate(order));
        }
        PhiFamily::Series(coefs) => {
            let mut acc = ScalarJet::constant(T::zero());
            for &c in coefs.iter().rev() {
                acc = acc * x + c;
            }
            acc
        }
        PhiFamily::LinearSqrt { c1, c2, b_sq } => x * *c1 + (-(x * x) + *b_sq).sqrt() * *c2,
    };
    Ok(raw.scale(spec.c3).truncate(order))
}

/// φ-jet from `Q` through the log-derivative recursion, given `φ(s)`.
fn jet_from_log_derivative<T: Scalar>(q: &QSpec<T>, s: T, value: T) -> Result<ScalarJet<T>> {
    let qj = q.jet(s)?;
    let x = ScalarJet::variable(s);
    let denom = x * qj + T::one();
    if denom.value().abs() < T::lit(1e-12) {
        return Err(FinslerError::PoleOnPath { t: s.to_f64_lossy() });
    }
    let l = qj / denom;
    let mut d = [T::zero(); MAX_ORDER + 1];
    d[0] = value;
    let top = (l.order + 1).min(MAX_ORDER);
    for k in 0..top {
        d[k + 1] = (0..=k).map(|j| T::lit(binomial(k, j) as f64) * l.d(j) * d[k - j]).sum();
    }
    ScalarJet::from_derivatives(&d[..=top])
}

/// Full-order Q jet from φ (order 3 when φ is known to order 4).
fn q_jet_from_phi<T: Scalar>(spec: &PhiSpec<T>, s: T) -> Result<ScalarJet<T>> {
    let phi = phi_jet(spec, s, MAX_ORDER)?;
    let dphi = phi.derivative();
    let x = ScalarJet::variable(s);
    let denom = phi.truncate(dphi.order) - x * dphi;
    let scale = phi.value().abs() + (s * dphi.value()).abs();
    if denom.value().abs() <= T::lit(Q_DENOMINATOR_GUARD) * scale {
        return Err(FinslerError::DegenerateDenominator { name: "phi - s*phi'", value: denom.value().to_f64_lossy() });
    }
    Ok(dphi / denom)
}

/// `(Q, Q', Q'')` at `s` for `Q = φ'/(φ - sφ')`.
pub fn q_from_phi<T: Scalar>(spec: &PhiSpec<T>, s: T) -> Result<ScalarJet<T>> {
    Ok(q_jet_from_phi(spec, s)?.truncate(2))
}

/// Number of probes used to detect a sign change of `1 + tQ(t)` on the path.
const POLE_PROBES: usize = 64;

/// `c3 · exp(∫_{s_ref}^{s} Q/(1+tQ) dt)` by adaptive Simpson at absolute
/// tolerance `1e-12`.
pub fn phi_from_q<T: Scalar>(q: &QSpec<T>, s: T, s_ref: T, c3: T) -> Result<T> {
    if s == s_ref {
        return Ok(c3);
    }
    let denom = |t: T| -> Result<T> { Ok(T::one() + t * q.value(t)?) };
    let d_ref = denom(s_ref)?;
    for k in 0..=POLE_PROBES {
        let t = s_ref + (s - s_ref) * T::lit(k as f64 / POLE_PROBES as f64);
        let d = denom(t)?;
        if d.abs() < T::lit(1e-12) || d.signum() != d_ref.signum() {
            return Err(FinslerError::PoleOnPath { t: t.to_f64_lossy() });
        }
    }
    let integrand = |t: T| match q.value(t) {
        Ok(v) => v / (T::one() + t * v),
        Err(_) => T::nan(),
    };
    let integral = AdaptiveSimpson::default().integrate(integrand, s_ref, s)?;
    Ok(c3 * integral.exp())
}

/// Regularity grade of a φ-family over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityClass {
    Regular,
    PositivelyAlmostRegular,
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularitySample<T> {
    pub s: T,
    pub phi: T,
    pub phi_positive: bool,
    /// Minimum of `φ - sφ' + (t^2 - s^2)φ''` over the sampled `t ∈ (|s|, b0)`.
    pub min_indicator: T,
    /// The `t` attaining [`Self::min_indicator`].
    pub t_at_min: T,
    pub indicator_positive: bool,
    /// `ρ + φφ''m^2` with `m^2 = b^2 - s^2`.
    pub denominator: T,
    pub denominator_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport<T> {
    pub family: &'static str,
    pub b_sq: T,
    pub b0: T,
    pub samples: Vec<RegularitySample<T>>,
    pub classification: RegularityClass,
}

/// Samples of `t` per grid point on `(|s|, b0)`.
const T_SAMPLES: usize = 16;

/// Checks `φ > 0`, `φ - sφ' + (t^2 - s^2)φ'' > 0` for `t` sampled on
/// `(|s|, b0)`, and `ρ + φφ''m^2 ≠ 0` at every grid point.
pub fn regularity_check<T: Scalar>(spec: &PhiSpec<T>, b_sq: T, b0: T, grid: &[T]) -> Result<RegularityReport<T>> {
    if grid.is_empty() {
        return Err(FinslerError::EmptyGrid);
    }
    let mut samples = Vec::with_capacity(grid.len());
    for &s in grid {
        let j = phi_jet(spec, s, 2)?;
        let (p0, p1, p2) = (j.d(0), j.d(1), j.d(2));
        let base = p0 - s * p1;
        let mut min_ind = T::infinity();
        let mut t_min = s.abs();
        for k in 0..T_SAMPLES {
            let frac = T::lit((k as f64 + 0.5) / T_SAMPLES as f64);
            let t = s.abs() + (b0 - s.abs()) * frac;
            let ind = base + (t * t - s * s) * p2;
            if ind < min_ind {
                min_ind = ind;
                t_min = t;
            }
        }
        let rho = p0 * p0 - s * p0 * p1;
        let m_sq = b_sq - s * s;
        let extra = p0 * p2 * m_sq;
        let denominator = rho + extra;
        let scale = rho.abs() + extra.abs();
        samples.push(RegularitySample {
            s,
            phi: p0,
            phi_positive: p0 > T::zero(),
            min_indicator: min_ind,
            t_at_min: t_min,
            indicator_positive: min_ind > T::zero(),
            denominator,
            denominator_ok: denominator.abs() > T::lit(METRIC_GUARD) * scale,
        });
    }
    let all_ok = samples.iter().all(|x| x.phi_positive && x.indicator_positive && x.denominator_ok);
    let classification = if !all_ok {
        RegularityClass::Irregular
    } else if spec.is_positive_only() {
        RegularityClass::PositivelyAlmostRegular
    } else {
        RegularityClass::Regular
    };
    Ok(RegularityReport { family: spec.family_name(), b_sq, b0, samples, classification })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn randers_jet() {
        let j = phi_jet(&PhiSpec::randers(), 0.5, 3).unwrap();
        assert_eq!([j.d(0), j.d(1), j.d(2), j.d(3)], [1.5, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn kropina_jet() {
        let j = phi_jet(&PhiSpec::kropina(), 0.5, 2).unwrap();
        assert_eq!([j.d(0), j.d(1), j.d(2)], [2.0, -4.0, 16.0]);
    }

    #[test]
    fn riemannian_jet_at_one() {
        let j = phi_jet(&PhiSpec::riemannian(1.0, 1.0), 1.0, 1).unwrap();
        assert!(close(j.d(0), 2f64.sqrt(), 1e-15));
        assert!(close(j.d(1), 1.0 / 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn out_of_domain_and_order() {
        assert!(matches!(phi_jet(&PhiSpec::kropina(), -0.1, 2), Err(FinslerError::OutOfDomain { .. })));
        assert!(matches!(phi_jet(&PhiSpec::randers(), 0.1, 5), Err(FinslerError::OrderTooHigh { .. })));
    }

    #[test]
    fn q_examples() {
        let q = q_from_phi(&PhiSpec::riemannian(1.0, 1.0), 0.5).unwrap();
        assert!(close(q.d(0), 0.5, 1e-15));
        assert!(close(q.d(1), 1.0, 1e-14));
        assert!(q.d(2).abs() < 1e-13);
        let q = q_from_phi(&PhiSpec::kropina(), 0.5).unwrap();
        assert!(close(q.d(0), -1.0, 1e-15));
        let q = q_from_phi(&PhiSpec::randers(), 0.0).unwrap();
        assert!(close(q.d(0), 1.0, 1e-15));
    }

    #[test]
    fn q_denominator_guard() {
        // φ = s has φ - sφ' = 0
        let r = q_from_phi(&PhiSpec::series(vec![0.0, 1.0]), 0.4);
        assert!(matches!(r, Err(FinslerError::DegenerateDenominator { .. })));
    }

    #[test]
    fn phi_from_q_examples() {
        // Q = t: ∫ t/(1+t^2) = ½ ln 2
        let q = QSpec::Linear { c1: 1.0, c2: 0.0, b_sq: 4.0 };
        assert!(close(phi_from_q(&q, 1.0, 0.0, 1.0).unwrap(), 2f64.sqrt(), 1e-12));
        // Q = -1/(2t) reconstructs 1/t; Kropina's Q via FromPhi
        let q = QSpec::FromPhi(Box::new(PhiSpec::kropina()));
        assert!(close(phi_from_q(&q, 2.0, 1.0, 1.0).unwrap(), 0.5, 1e-12));
        assert_eq!(phi_from_q(&q, 1.3, 1.3, 2.5).unwrap(), 2.5);
    }

    #[test]
    fn pole_on_path_detected() {
        // Q = -4s gives 1 + sQ = 1 - 4s², zero at s = 0.5
        let q = QSpec::Linear { c1: -4.0, c2: 0.0, b_sq: 1.0 };
        assert!(matches!(phi_from_q(&q, 0.9, 0.3, 1.0), Err(FinslerError::PoleOnPath { .. })));
    }

    #[test]
    fn shen_berwald_requires_cb2_above_one() {
        let r = phi_jet(&PhiSpec::shen_berwald(1.0, 1.0), 0.5, 4);
        assert!(matches!(r, Err(FinslerError::UnsupportedParameterRange(_))));
    }

    #[test]
    fn landsberg_jet_consistent_with_closed_riemannian_member() {
        // c1 = 0, c2 = 1: Q = s, φ ∝ sqrt(1 + s^2)
        let spec = PhiSpec::shen_landsberg(0.0, 1.0, 0.36);
        let reference = PhiSpec::riemannian(1.0, 1.0);
        let k = phi_jet(&spec, 0.1, 4).unwrap().d(0) / phi_jet(&reference, 0.1, 4).unwrap().d(0);
        for &s in &[-0.4, 0.0, 0.25, 0.5] {
            let a = phi_jet(&spec, s, 4).unwrap();
            let b = phi_jet(&reference, s, 4).unwrap();
            for d in 0..=4 {
                assert!(close(a.d(d), k * b.d(d), 1e-11), "s={s} d={d}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let specs = vec![
            PhiSpec::riemannian(2.0, 3.0),
            PhiSpec::randers().with_c3(2.5),
            PhiSpec::shen_landsberg(1.0, 0.5, 0.36),
            PhiSpec::general_q(QSpec::Berwald { c: 2.0, b_sq: 1.0 }),
            PhiSpec::series(vec![1.0, 0.5, 0.1]),
        ];
        for s in specs {
            let back: PhiSpec<f64> = PhiSpec::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn normalized_landsberg_params() {
        let v = serde_json::json!({"family": "shen_landsberg", "params": {"c2_prime": 0.6, "c_lin": 0.5, "b0": 0.6}});
        let spec: PhiSpec<f64> = PhiSpec::from_json(&v).unwrap();
        match spec.family {
            PhiFamily::ShenLandsberg { c1, c2, b_sq } => {
                assert!(close(c1, 1.0, 1e-15) && c2 == 0.5 && close(b_sq, 0.36, 1e-15));
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn unknown_family_rejected() {
        let v = serde_json::json!({"family": "bogus"});
        assert!(PhiSpec::<f64>::from_json(&v).is_err());
    }

    #[test]
    fn regularity_randers_regular() {
        let grid: Vec<f64> = (0..19).map(|k| -0.9 + 0.1 * k as f64).collect();
        let r = regularity_check(&PhiSpec::randers(), 0.36, 1.0, &grid).unwrap();
        assert_eq!(r.classification, RegularityClass::Regular);
    }

    #[test]
    fn regularity_linear_sqrt_denominator_fails() {
        let grid = [-0.3, 0.0, 0.2, 0.4];
        let r = regularity_check(&PhiSpec::linear_sqrt(0.5, 1.0, 0.36), 0.36, 1.0, &grid).unwrap();
        assert!(r.samples.iter().all(|x| !x.denominator_ok));
        assert_eq!(r.classification, RegularityClass::Irregular);
    }

    #[test]
    fn regularity_shen_berwald_fails_indicator_near_b0() {
        // φ - sφ' > 0 but φ - sφ' + (b0^2 - s^2)φ'' < 0 on (0, 1): the family is not
        // positive definite at b = b0, so the verdict is Irregular.
        let grid: Vec<f64> = (1..10).map(|k| 0.1 * k as f64).chain([1e-3]).collect();
        let spec = PhiSpec::shen_berwald(2.0, 1.0);
        let r = regularity_check(&spec, 1.0, 1.0, &grid).unwrap();
        assert!(r.samples.iter().all(|x| x.phi_positive && x.denominator_ok));
        assert!(r.samples.iter().all(|x| !x.indicator_positive));
        assert_eq!(r.classification, RegularityClass::Irregular);
        assert!(spec.is_positive_only());
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(regularity_check(&PhiSpec::randers(), 0.36, 1.0, &[]), Err(FinslerError::EmptyGrid)));
    }
}
