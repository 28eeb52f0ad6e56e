//! Kropina T-coefficients: recomputed values, oracle confirmation, and the
//! comparison against the printed coefficients
//! `Φ = 2/(α²b²s²)`, `Ψ = 2/(αb²s³)`, `Ω = 6/(αb²s⁵)`.
//!
//! The recomputation gives `Φ = 2/(αb²s)`; only Φ disagrees, and the printed
//! Φ has the wrong degree of homogeneity in `y` (−2 instead of −1).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::Frame;
use crate::error::Result;
use crate::geometry::MetricPoint;
use crate::oracle::{compare, oracle_t};
use crate::phi::PhiSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientTriple {
    #[serde(rename = "Phi")]
    pub phi: f64,
    #[serde(rename = "Psi")]
    pub psi: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KropinaSample {
    pub s: f64,
    pub alpha: f64,
    pub recomputed: CoefficientTriple,
    pub printed: CoefficientTriple,
    /// `|printed − recomputed| / |recomputed|` per coefficient.
    pub discrepancy: BTreeMap<String, f64>,
    /// Relative deviation of the assembled T from the oracle T.
    pub oracle_max_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KropinaAudit {
    pub b_sq: f64,
    pub samples: Vec<KropinaSample>,
    pub oracle_max_rel: f64,
    pub oracle_agrees: bool,
    /// Largest discrepancy per coefficient over all samples.
    pub max_discrepancy: BTreeMap<String, f64>,
}

/// Printed Kropina coefficients at `(α, s)`.
pub fn kropina_printed<T: Scalar>(alpha: T, s: T, b_sq: T) -> [T; 3] {
    let two = T::lit(2.0);
    [
        two / (alpha * alpha * b_sq * s * s),
        two / (alpha * b_sq * s.powi(3)),
        T::lit(6.0) / (alpha * b_sq * s.powi(5)),
    ]
}

/// Runs the audit at every `s` of `grid` and every direction scale in `lambdas`.
pub fn kropina_audit<T: Scalar>(mp: &MetricPoint<T>, grid: &[T], lambdas: &[T], tol: T) -> Result<KropinaAudit> {
    let spec = PhiSpec::kropina();
    let mut samples = Vec::new();
    let mut worst_oracle = T::zero();
    let mut max_disc: BTreeMap<String, f64> = BTreeMap::new();
    for &s in grid {
        for &lambda in lambdas {
            let y = mp.direction_for_s(s, None)?.scaled(lambda);
            let frame = Frame::new(mp, &y, &spec)?;
            let c = frame.t_coefficients()?;
            let ot = oracle_t(mp, &y, &spec)?;
            let cmp = compare("T", &frame.t_lower()?.to_dense(), &ot.total, Some(ot.term_scale()))?;
            worst_oracle = worst_oracle.max(T::lit(cmp.max_rel));
            let alpha = frame.geom.alpha;
            let printed = kropina_printed(alpha, frame.geom.s, mp.b_sq);
            let recomputed = [c.phi_coef, c.psi_coef, c.omega_coef];
            let mut discrepancy = BTreeMap::new();
            for (name, (p, r)) in ["Phi", "Psi", "Omega"].iter().zip(printed.iter().zip(&recomputed)) {
                let d = ((*p - *r).abs() / r.abs()).to_f64_lossy();
                discrepancy.insert(name.to_string(), d);
                let e = max_disc.entry(name.to_string()).or_insert(0.0);
                *e = e.max(d);
            }
            let triple = |v: [T; 3]| CoefficientTriple {
                phi: v[0].to_f64_lossy(),
                psi: v[1].to_f64_lossy(),
                omega: v[2].to_f64_lossy(),
            };
            samples.push(KropinaSample {
                s: frame.geom.s.to_f64_lossy(),
                alpha: alpha.to_f64_lossy(),
                recomputed: triple(recomputed),
                printed: triple(printed),
                discrepancy,
                oracle_max_rel: cmp.max_rel,
            });
        }
    }
    Ok(KropinaAudit {
        b_sq: mp.b_sq.to_f64_lossy(),
        samples,
        oracle_max_rel: worst_oracle.to_f64_lossy(),
        oracle_agrees: worst_oracle <= tol,
        max_discrepancy: max_disc,
    })
}
