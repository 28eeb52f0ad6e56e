//! The acceptance battery: nine criteria, each a pass/fail with details.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::audit::kropina_audit;
use crate::classifier::{classify, default_grid, sigma_t_condition_test, t_condition_test, VerdictKind};
use crate::classifier::{DEFAULT_GRID_SIZE, DEFAULT_TOL};
use crate::engine::Frame;
use crate::error::Result;
use crate::fixtures;
use crate::geometry::{Direction, MetricPoint};
use crate::linalg::{dot, Matrix};
use crate::ode_lab::{asanov_phi_check, linspace, residual_landsberg_ode, residual_trivial_ode, special_case_check};
use crate::oracle::{verify_point, PointVerification};
use crate::phi::{PhiSpec, QSpec};

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const SUITE_LIMIT_MS: f64 = 60_000.0;

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    pub directions_per_family: usize,
    pub grid_size: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, directions_per_family: 20, grid_size: DEFAULT_GRID_SIZE }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub elapsed_ms: f64,
    pub limit_ms: Option<f64>,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
    pub elapsed_ms: f64,
    pub limit_ms: f64,
}

pub const CRITERIA: [(u32, &str, Option<f64>); 9] = [
    (1, "Randers coefficients", Some(1_000.0)),
    (2, "oracle equivalence", Some(20_000.0)),
    (3, "T-condition class", None),
    (4, "sigma-T-condition class", None),
    (5, "ODE residuals", None),
    (6, "Riemannian equivalence chain", None),
    (7, "property battery", None),
    (8, "Kropina audit", None),
    (9, "special-case formulas", None),
];

pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let criteria: Vec<CriterionResult> = CRITERIA.iter().map(|&(id, _, _)| run_criterion(id, cfg)).collect();
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    SuiteReport {
        seed: cfg.seed,
        passed: criteria.iter().all(|c| c.passed) && elapsed_ms < SUITE_LIMIT_MS,
        criteria,
        elapsed_ms,
        limit_ms: SUITE_LIMIT_MS,
    }
}

/// Runs one criterion by number (1..=9).
pub fn run_criterion(id: u32, cfg: &SuiteConfig) -> CriterionResult {
    let (_, name, limit_ms) = CRITERIA.iter().copied().find(|c| c.0 == id).expect("criterion id in 1..=9");
    let start = Instant::now();
    let outcome = match id {
        1 => criterion_randers(cfg),
        2 => criterion_oracle(cfg),
        3 => criterion_t_condition(cfg),
        4 => criterion_sigma_t(cfg),
        5 => criterion_ode(cfg),
        6 => criterion_riemannian(cfg),
        7 => criterion_properties(cfg),
        8 => criterion_kropina(cfg),
        _ => criterion_special(cfg),
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let (ok, details) = match outcome {
        Ok(v) => v,
        Err(e) => (false, json!({"error": e.to_string()})),
    };
    CriterionResult {
        id,
        name,
        passed: ok && limit_ms.is_none_or(|l| elapsed_ms < l),
        elapsed_ms,
        limit_ms,
        details,
    }
}

type Outcome = Result<(bool, Value)>;

fn standard() -> Result<MetricPoint<f64>> {
    fixtures::metric_point("standard")
}

fn grid_for(mp: &MetricPoint<f64>, spec: &PhiSpec<f64>, cfg: &SuiteConfig) -> Vec<f64> {
    default_grid(mp, spec, cfg.grid_size)
}

/// Families of the oracle-equivalence criterion with their metric points.
pub fn oracle_families() -> Result<Vec<(&'static str, MetricPoint<f64>, PhiSpec<f64>)>> {
    let std_mp = standard()?;
    let unit = fixtures::metric_point("unit_b")?;
    Ok(vec![
        ("Riemannian(1,1)", std_mp.clone(), PhiSpec::riemannian(1.0, 1.0)),
        ("Randers", std_mp.clone(), PhiSpec::randers()),
        ("Kropina", std_mp.clone(), PhiSpec::kropina()),
        ("ShenBerwald(2,1)", unit, PhiSpec::shen_berwald(2.0, 1.0)),
        ("ShenLandsberg(1,0.5,0.36)", std_mp, PhiSpec::shen_landsberg(1.0, 0.5, 0.36)),
    ])
}

/// Seeded `(s, direction)` fixtures: `s` uniform on the family's grid
/// interval, perpendicular part from a random seed vector, random scale.
pub fn random_directions(
    mp: &MetricPoint<f64>,
    spec: &PhiSpec<f64>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Direction<f64>>> {
    let b = mp.b_norm();
    let (lo, hi) = if spec.is_positive_only() { (0.05 * b, 0.95 * b) } else { (-0.95 * b, 0.95 * b) };
    (0..count)
        .map(|_| {
            let s = rng.gen_range(lo..hi);
            let seed: Vec<f64> = (0..mp.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lambda = rng.gen_range(0.5..2.0);
            Ok(mp.direction_for_s(s, Some(&seed))?.scaled(lambda))
        })
        .collect()
}

/// [`random_directions`] from a fresh generator seeded with `seed`.
pub fn seeded_directions(
    mp: &MetricPoint<f64>,
    spec: &PhiSpec<f64>,
    count: usize,
    seed: u64,
) -> Result<Vec<Direction<f64>>> {
    random_directions(mp, spec, count, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn criterion_randers(cfg: &SuiteConfig) -> Outcome {
    let mp = standard()?;
    let spec = PhiSpec::randers();
    let (mut psi, mut omega, mut phi_rel) = (0.0f64, 0.0f64, 0.0f64);
    let grid = grid_for(&mp, &spec, cfg);
    for &s in &grid {
        let f = Frame::new(&mp, &mp.direction_for_s(s, None)?, &spec)?;
        let c = f.t_coefficients()?;
        let (s, a) = (f.geom.s, f.geom.alpha);
        let want = -(mp.b_sq + s * s + 2.0 * s) / (4.0 * a);
        psi = psi.max(c.psi_coef.abs());
        omega = omega.max(c.omega_coef.abs());
        phi_rel = phi_rel.max((c.phi_coef - want).abs() / want.abs());
    }
    let ok = psi <= 1e-12 && omega <= 1e-12 && phi_rel <= 1e-12;
    Ok((ok, json!({"grid_points": grid.len(), "max_abs_Psi": psi, "max_abs_Omega": omega, "max_rel_Phi": phi_rel})))
}

fn criterion_oracle(cfg: &SuiteConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ok = true;
    let mut per_family = serde_json::Map::new();
    for (name, mp, spec) in oracle_families()? {
        let mut worst = std::collections::BTreeMap::<String, f64>::new();
        for y in random_directions(&mp, &spec, cfg.directions_per_family, &mut rng)? {
            let v: PointVerification = verify_point(&mp, &y, &spec)?;
            for c in &v.comparisons {
                let e = worst.entry(c.quantity.clone()).or_insert(0.0);
                *e = e.max(c.max_rel);
            }
        }
        let family_ok = ["g", "C", "T"].iter().all(|q| worst.get(*q).is_some_and(|&r| r <= 1e-9));
        ok &= family_ok;
        per_family.insert(name.to_string(), json!({"passed": family_ok, "max_rel": worst}));
    }
    Ok((ok, json!({"directions_per_family": cfg.directions_per_family, "families": per_family})))
}

fn criterion_t_condition(cfg: &SuiteConfig) -> Outcome {
    let mp = fixtures::metric_point("unit_b")?;
    let mut ok = true;
    let mut rows = Vec::new();
    for c in [1.5, 2.0, 3.0] {
        let spec = PhiSpec::shen_berwald(c, mp.b_sq);
        let grid = grid_for(&mp, &spec, cfg);
        let t = t_condition_test(&mp, &spec, &grid, 1e-9)?;
        let worst = t.phi_max.max(t.psi_max).max(t.omega_max);
        let verdict = classify(&mp, &spec, &grid, DEFAULT_TOL)?;
        let row_ok = worst <= 1e-9 && verdict.kind == VerdictKind::TCondition;
        ok &= row_ok;
        rows.push(json!({"c": c, "b_sq": mp.b_sq, "max_coefficient": worst, "verdict": verdict.kind,
                         "fitted_c": t.fit.as_ref().map(|f| f.c), "passed": row_ok}));
    }
    Ok((ok, json!({"families": rows})))
}

/// Parameter pairs `(c1, c2)` in the φ-formula convention.
pub const LANDSBERG_PAIRS: [(f64, f64); 4] = [(1.0, 0.5), (1.0, 0.0), (-0.7, 0.3), (0.5, -1.0)];

fn sigma_t_row(mp: &MetricPoint<f64>, spec: &PhiSpec<f64>, cfg: &SuiteConfig) -> Result<(bool, Value)> {
    let grid = grid_for(mp, spec, cfg);
    let st = sigma_t_condition_test(mp, spec, &grid, 1e-9)?;
    let row_ok = st.a_max <= 1e-9 && st.b_max <= 1e-9 && st.sigma_contraction <= 1e-9;
    Ok((
        row_ok,
        json!({"Phi_plus_m2Psi": st.a_max, "threePsi_plus_m2Omega": st.b_max,
               "sigma_contraction": st.sigma_contraction, "skipped_s": st.skipped, "passed": row_ok}),
    ))
}

fn criterion_sigma_t(cfg: &SuiteConfig) -> Outcome {
    let mp = standard()?;
    let mut ok = true;
    let mut rows = Vec::new();
    for (c1, c2) in LANDSBERG_PAIRS {
        let spec = PhiSpec::shen_landsberg(c1, c2, mp.b_sq);
        let (row_ok, mut row) = sigma_t_row(&mp, &spec, cfg)?;
        row["c1"] = json!(c1);
        row["c2"] = json!(c2);
        ok &= row_ok;
        rows.push(row);
    }
    Ok((ok, json!({"b_sq": mp.b_sq, "families": rows})))
}

fn criterion_ode(cfg: &SuiteConfig) -> Outcome {
    let n = cfg.grid_size;
    let mut trivial = Vec::new();
    let mut worst_t = 0.0f64;
    for c in [1.5, 2.0, 3.0] {
        let b_sq = 1.0;
        let q = QSpec::Berwald { c, b_sq };
        let grid = crate::classifier::chebyshev_grid(0.05, 0.95, n);
        let r = grid.iter().map(|&s| residual_trivial_ode(&q, s, b_sq).map(f64::abs)).try_fold(0.0, |m, r| r.map(|v| f64::max(m, v)))?;
        worst_t = worst_t.max(r);
        trivial.push(json!({"c": c, "b_sq": b_sq, "max_residual": r}));
    }
    let mut landsberg = Vec::new();
    let mut worst_l = 0.0f64;
    let b_sq = 0.36f64;
    let b = b_sq.sqrt();
    let grid = crate::classifier::chebyshev_grid(-0.95 * b, 0.95 * b, n);
    for (c1, c2) in [(1.0, 0.0), (0.0, 1.0), (1.0, 0.5), (-0.7, 0.3)] {
        let q = QSpec::Linear { c1, c2, b_sq };
        let r = grid.iter().map(|&s| residual_landsberg_ode(&q, s, b_sq).map(f64::abs)).try_fold(0.0, |m, r| r.map(|v| f64::max(m, v)))?;
        worst_l = worst_l.max(r);
        landsberg.push(json!({"c1": c1, "c2": c2, "b_sq": b_sq, "max_residual": r}));
    }
    // non-solutions
    let cross_l = residual_landsberg_ode(&QSpec::Berwald { c: 2.0f64, b_sq: 1.0 }, 0.5, 1.0)?.abs();
    let cross_t = residual_trivial_ode(&QSpec::Linear { c1: 1.0f64, c2: 0.5, b_sq: 1.0 }, 0.5, 1.0)?.abs();
    let zero_t = residual_trivial_ode(&QSpec::Linear { c1: 0.0f64, c2: 0.0, b_sq: 1.0 }, 0.5, 1.0)?.abs();
    let ok = worst_t <= 1e-10 && worst_l <= 1e-10 && cross_l > 1e-3 && cross_t > 1e-3 && zero_t > 1e-3;
    Ok((
        ok,
        json!({"trivial": trivial, "landsberg": landsberg,
               "non_solutions": {"berwald_in_landsberg_ode": cross_l, "linear_in_trivial_ode": cross_t, "zero_in_trivial_ode": zero_t}}),
    ))
}

fn criterion_riemannian(cfg: &SuiteConfig) -> Outcome {
    let mp = standard()?;
    let mut ok = true;
    let mut rows = Vec::new();
    for (k1, k2) in [(1.0, 1.0), (2.0, 3.0), (0.5, 2.0), (0.0, 1.0)] {
        let spec = PhiSpec::riemannian(k1, k2);
        let (mut r1, mut r2, mut cn, mut tn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for &s in &grid_for(&mp, &spec, cfg) {
            let f = Frame::new(&mp, &mp.direction_for_s(s, None)?, &spec)?;
            r1 = r1.max(f.rho.rho1.abs());
            r2 = r2.max(f.rho.rho2.abs());
            cn = cn.max(f.cartan_lower().max_abs());
            tn = tn.max(f.t_lower()?.max_abs());
        }
        let row_ok = r1.max(r2).max(cn).max(tn) <= 1e-12;
        ok &= row_ok;
        rows.push(json!({"k1": k1, "k2": k2, "rho1": r1, "rho2": r2, "C": cn, "T": tn, "passed": row_ok}));
    }
    let mut others = Vec::new();
    for spec in [PhiSpec::randers(), PhiSpec::kropina()] {
        let min_rho1 = grid_for(&mp, &spec, cfg)
            .iter()
            .map(|&s| Ok(Frame::new(&mp, &mp.direction_for_s(s, None)?, &spec)?.rho.rho1.abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let row_ok = min_rho1 > 0.5;
        ok &= row_ok;
        others.push(json!({"family": spec.family_name(), "min_abs_rho1": min_rho1, "passed": row_ok}));
    }
    Ok((ok, json!({"riemannian": rows, "non_riemannian": others})))
}

fn rel(x: f64, scale: f64) -> f64 {
    x / scale.max(1.0)
}

fn criterion_properties(cfg: &SuiteConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let (mut sym, mut transv, mut homog, mut inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut c3_mismatch = Vec::new();
    let mut families = oracle_families()?;
    families.push(("tilted ShenLandsberg", fixtures::metric_point("tilted")?, PhiSpec::shen_landsberg(0.8, -0.3, f64::NAN)));
    for (name, mp, spec) in families {
        let spec = if spec.b_sq().is_some_and(f64::is_nan) { spec.with_b_sq(mp.b_sq) } else { spec };
        for y in random_directions(&mp, &spec, 4, &mut rng)? {
            let f = Frame::new(&mp, &y, &spec)?;
            let g = f.metric_lower();
            let c = f.cartan_lower();
            let t = f.t_lower()?;
            let v = verify_point(&mp, &y, &spec)?;
            sym = sym.max(v.oracle_symmetry_defect);
            sym = sym.max(c.to_dense().symmetry_defect()).max(t.to_dense().symmetry_defect());
            // y-transversality
            let yv = &y.0;
            let ny = dot(yv, &mp.a.mul_vec(yv)).sqrt();
            let cy = c.to_dense().contract(2, yv)?.max_abs();
            let ty = t.to_dense().contract(3, yv)?.max_abs();
            let hy = f.geom.h.mul_vec(yv).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            transv = transv
                .max(rel(cy, c.max_abs() * ny))
                .max(rel(ty, t.max_abs() * ny))
                .max(rel(hy, f.geom.h.max_abs() * ny));
            // homogeneity: g degree 0, C and T degree -1
            for lambda in [0.5, 2.0] {
                let fl = Frame::new(&mp, &y.scaled(lambda), &spec)?;
                homog = homog
                    .max(rel(fl.metric_lower().sub(&g).max_abs(), g.max_abs()))
                    .max(rel(fl.cartan_lower().to_dense().sub(&c.to_dense().scale(1.0 / lambda)).max_abs(), c.max_abs()))
                    .max(rel(fl.t_lower()?.to_dense().sub(&t.to_dense().scale(1.0 / lambda)).max_abs(), t.max_abs()));
            }
            inv = inv.max(f.metric_upper()?.mul(&g).sub(&Matrix::identity(mp.dim)).max_abs());
        }
        // c3-invariance of verdicts
        let grid = grid_for(&mp, &spec, cfg);
        let v1 = classify(&mp, &spec, &grid, DEFAULT_TOL)?.kind;
        let v2 = classify(&mp, &spec.clone().with_c3(2.5), &grid, DEFAULT_TOL)?.kind;
        if v1 != v2 {
            c3_mismatch.push(json!({"family": name, "c3_1": v1, "c3_2.5": v2}));
        }
    }
    let ok = sym <= 1e-11 && transv <= 1e-10 && homog <= 1e-10 && inv <= 1e-9 && c3_mismatch.is_empty();
    Ok((
        ok,
        json!({"symmetry_defect": sym, "transversality": transv, "homogeneity": homog,
               "inverse_defect": inv, "c3_verdict_mismatches": c3_mismatch}),
    ))
}

fn criterion_kropina(cfg: &SuiteConfig) -> Outcome {
    let mp = standard()?;
    let spec = PhiSpec::kropina();
    let audit = kropina_audit(&mp, &grid_for(&mp, &spec, cfg), &[1.0, 2.0], 1e-9)?;
    Ok((
        audit.oracle_agrees,
        json!({"oracle_max_rel": audit.oracle_max_rel, "printed_max_discrepancy": audit.max_discrepancy,
               "samples": audit.samples.len()}),
    ))
}

fn criterion_special(cfg: &SuiteConfig) -> Outcome {
    let special = special_case_check(1.0, 0.36, &linspace(0.06, 0.54, 9))?;
    let asanov_spec = PhiSpec::asanov(1.0);
    let unit = fixtures::metric_point("unit_b")?;
    let asanov = asanov_phi_check(1.0, &grid_for(&unit, &asanov_spec, cfg))?;
    let (row_ok, row) = sigma_t_row(&unit, &asanov_spec, cfg)?;
    let ok = special.passed && asanov.passed && row_ok;
    Ok((
        ok,
        json!({"arctan_ratio_spread": special.ratio_spread, "printed_prefactor_ratio_spread": special.printed_ratio_spread,
               "asanov": {"q_error_max": asanov.q_error_max, "sigma_a": asanov.sigma_a, "sigma_b": asanov.sigma_b, "criterion_4_checks": row}}),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_directions_are_seeded() {
        let mp = standard().unwrap();
        let spec = PhiSpec::randers();
        let a = random_directions(&mp, &spec, 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = random_directions(&mp, &spec, 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn randers_criterion_passes() {
        let r = run_criterion(1, &SuiteConfig::default());
        assert!(r.passed, "{}", r.details);
    }
}
