//! Invariant suite run against a single instance (and optionally a trace).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::domination::enumerate_dual_vertices;
use crate::dynamics::{check_residual_geometry, Stepper, TraceRecord};
use crate::energy::EnergySolver;
use crate::linalg::{
    bareiss, determinant_f64, determinant_rational, f64_to_rational, nullspace, rational_to_f64, Combinations,
};
use crate::model::{compute_constants, LpInstance, Mode};
use crate::oracle::{decompose, enumerate_bfs, max_scaled_flow, OracleReport};

/// Square submatrices examined by the determinant check.
const DET_SAMPLE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not applicable to this instance, or too large to enumerate.
    Skipped,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        CheckResult { name: name.into(), status, detail: detail.into() }
    }

    fn skipped(name: &str, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), status: CheckStatus::Skipped, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckSummary {
    pub checks: Vec<CheckResult>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "passed": self.passed(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "status": c.status.as_str(),
                "passed": c.passed(),
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Capacity vector probed by the energy checks; all ones when absent.
    pub x0: Option<Vec<f64>>,
    /// Extra random capacity vectors probed by the energy checks.
    pub random_points: usize,
    /// Kernel perturbations per capacity vector.
    pub kernel_probes: usize,
    /// Steps of the directed dynamics run by the dynamics checks.
    pub steps: u64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { x0: None, random_points: 5, kernel_probes: 200, steps: 100, seed: 0 }
    }
}

/// Runs every module suite that applies to `inst`.
pub fn check_instance(inst: &LpInstance, opts: &CheckOptions) -> CheckSummary {
    let m = inst.m();
    let base = opts.x0.clone().unwrap_or_else(|| vec![1.0; m]);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut points = vec![base.clone()];
    for _ in 0..opts.random_points {
        points.push((0..m).map(|_| rng.gen_range(0.1..10.0)).collect());
    }
    let mut out = CheckSummary::default();
    out.checks.push(determinants(inst));
    out.checks.push(constants(inst, &base));
    out.checks.extend(energy_checks(inst, &points, opts.kernel_probes, &mut rng));
    let report = enumerate_bfs(inst);
    match &report {
        Ok(r) => out.checks.extend(oracle_checks(inst, r)),
        Err(e) => out.checks.push(CheckResult::skipped("oracle.bfs_bounds", e.to_string())),
    }
    out.checks.extend(domination_checks(inst, report.as_ref().ok(), &base));
    out.checks.extend(dynamics_checks(inst, &base, opts.steps));
    out
}

/// Residual-geometry check of a directed trace taken with constant step `h`;
/// infers `h` from the first two rows when absent.
pub fn check_trace(records: &[TraceRecord], h: Option<f64>) -> CheckResult {
    const NAME: &str = "trace.residual_geometry";
    let h = match h {
        Some(h) => h,
        None => match records {
            [a, b, ..] if a.residual_inf > 0.0 && b.iter == a.iter + 1 => 1.0 - b.residual_inf / a.residual_inf,
            _ => return CheckResult::skipped(NAME, "cannot infer the step size"),
        },
    };
    match check_residual_geometry(records, h, 1e-9) {
        Ok(()) => CheckResult::new(NAME, true, format!("{} rows, h = {h}", records.len())),
        Err(k) => CheckResult::new(NAME, false, format!("residual off the geometric decay at iteration {k}")),
    }
}

fn determinants(inst: &LpInstance) -> CheckResult {
    const NAME: &str = "linalg.determinants";
    let a = inst.a();
    let n = inst.n();
    let mut worst = 0.0f64;
    for cols in Combinations::new(inst.m(), n).take(DET_SAMPLE) {
        let sub = a.select_columns(&cols);
        let exact = bareiss(&sub.map(|&v| BigInt::from(v))).determinant;
        let rational = determinant_rational(&sub.map(|&v| BigRational::from_integer(v.into())));
        if rational != BigRational::from_integer(exact.clone()) {
            return CheckResult::new(NAME, false, format!("Bareiss and rational determinants differ on {cols:?}"));
        }
        let exact_f = rational_to_f64(&rational);
        let float = determinant_f64(&sub.map(|&v| v as f64));
        worst = worst.max((float - exact_f).abs() / exact_f.abs().max(1.0));
    }
    CheckResult::new(NAME, worst <= 1e-9, format!("max relative float error {worst:e}"))
}

fn constants(inst: &LpInstance, x0: &[f64]) -> CheckResult {
    const NAME: &str = "model.constants";
    let k = match compute_constants(inst, x0) {
        Ok(k) => k,
        Err(e) => return CheckResult::skipped(NAME, e.to_string()),
    };
    let gamma = BigRational::from_integer(k.gamma_a.clone());
    let mut g_pow = BigRational::one();
    for _ in 1..inst.n() {
        g_pow *= &gamma;
    }
    let quarter = BigRational::new(1.into(), 4.into());
    let ok_d = k.d >= BigRational::one();
    let ok_ds = &g_pow * &k.d <= k.d_s;
    let ok_h0 = k.h0.is_positive() && k.h0 <= quarter;
    CheckResult::new(
        NAME,
        ok_d && ok_ds && ok_h0,
        format!("D >= 1: {ok_d}, gamma^(n-1) D <= D_S: {ok_ds}, 0 < h0 <= 1/4: {ok_h0}"),
    )
}

fn energy_checks(inst: &LpInstance, points: &[Vec<f64>], probes: usize, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let names = ["energy.feasibility", "energy.duality", "energy.q_bound", "energy.kernel_optimality"];
    let solver = match EnergySolver::new(inst) {
        Ok(s) => s,
        Err(e) => return names.iter().map(|n| CheckResult::new(n, false, e.to_string())).collect(),
    };
    let a = inst.a_f64();
    let b = inst.b_f64();
    let c = inst.c_f64();
    let b_inf = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let q_bound = compute_constants(inst, &points[0]).ok().map(|k| {
        let gamma = crate::model::bigint_to_f64(&k.gamma_a);
        let d = rational_to_f64(&k.d);
        inst.m() as f64 * d * d * b.iter().map(|v| v.abs()).sum::<f64>() / gamma
    });
    let kernel: Vec<Vec<f64>> =
        nullspace(&inst.a_rational()).iter().map(|v| v.iter().map(rational_to_f64).collect()).collect();
    let (mut res, mut dual, mut qmax, mut kernel_gap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in points {
        let sol = match solver.solve(x) {
            Ok(s) => s,
            Err(e) => return names.iter().map(|n| CheckResult::new(n, false, e.to_string())).collect(),
        };
        let aq = a.mul_vec(&sol.q);
        res = res.max(aq.iter().zip(&b).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max) / b_inf);
        let btp: f64 = b.iter().zip(&sol.p).map(|(b, p)| b * p).sum();
        dual = dual.max((sol.energy - btp).abs() / sol.energy.abs().max(1e-300));
        qmax = qmax.max(sol.q.iter().fold(0.0, |acc, v| acc.max(v.abs())));
        if kernel.is_empty() {
            continue;
        }
        let e0 = weighted_energy(&c, x, &sol.q);
        for _ in 0..probes {
            let scale = 10f64.powf(rng.gen_range(-4.0..0.0));
            let mut f = sol.q.clone();
            for v in &kernel {
                let t = rng.gen_range(-1.0..1.0) * scale;
                for (fe, ve) in f.iter_mut().zip(v) {
                    *fe += t * ve;
                }
            }
            kernel_gap = kernel_gap.max((e0 - weighted_energy(&c, x, &f)) / e0.max(1e-300));
        }
    }
    let mut out = vec![
        CheckResult::new(names[0], res <= 1e-8, format!("max relative residual {res:e}")),
        CheckResult::new(names[1], dual <= 1e-8, format!("max relative |E - b^T p| {dual:e}")),
    ];
    out.push(match q_bound {
        Some(bound) => CheckResult::new(names[2], qmax <= bound, format!("max |q_e| {qmax} against {bound}")),
        None => CheckResult::skipped(names[2], "determinant bound unavailable"),
    });
    out.push(if kernel.is_empty() {
        CheckResult::skipped(names[3], "A has a trivial kernel")
    } else {
        CheckResult::new(names[3], kernel_gap <= 1e-9, format!("max relative energy decrease {kernel_gap:e}"))
    });
    out.extend(zero_cost_check(inst, &solver, points));
    out
}

fn weighted_energy(c: &[f64], x: &[f64], f: &[f64]) -> f64 {
    c.iter().zip(x).zip(f).map(|((c, x), f)| c / x * f * f).sum()
}

/// Compares the block solver with the positive-cost solve in which zero costs
/// are replaced by `1e-8` (relative to the positive ones).
fn zero_cost_check(inst: &LpInstance, solver: &EnergySolver, points: &[Vec<f64>]) -> Option<CheckResult> {
    const NAME: &str = "energy.zero_cost_regularization";
    if !solver.has_zero_costs() {
        return None;
    }
    let c: Vec<i64> = inst.c().iter().map(|&v| if v == 0 { 1 } else { v.saturating_mul(100_000_000) }).collect();
    let reg = match LpInstance::new(inst.a().to_rows(), inst.b().to_vec(), c, inst.mode())
        .map_err(|e| e.to_string())
        .and_then(|i| EnergySolver::new(&i).map_err(|e| e.to_string()))
    {
        Ok(s) => s,
        Err(e) => return Some(CheckResult::skipped(NAME, e)),
    };
    let mut worst = 0.0f64;
    for x in points {
        match (solver.solve(x), reg.solve(x)) {
            (Ok(s), Ok(r)) => {
                worst = worst.max(s.q.iter().zip(&r.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
            (Err(e), _) | (_, Err(e)) => return Some(CheckResult::new(NAME, false, e.to_string())),
        }
    }
    Some(CheckResult::new(NAME, worst <= 1e-4, format!("max |q - q_reg| {worst:e}")))
}

fn oracle_checks(inst: &LpInstance, report: &OracleReport) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let Ok(d) = inst.d() else {
        out.push(CheckResult::skipped("oracle.bfs_bounds", "D unavailable"));
        return out;
    };
    let dg = BigRational::from_integer(d * inst.gamma());
    let b_gamma: BigRational = inst
        .b()
        .iter()
        .map(|&v| BigRational::new(BigInt::from(v).abs(), inst.gamma().clone()))
        .sum();
    let upper = BigRational::from_integer(d.clone()) * b_gamma;
    let lower = BigRational::one() / &dg;
    let a = inst.a_rational();
    let b = inst.b_rational();
    let bad = report.all_bfs.iter().find(|s| {
        a.mul_vec(&s.values) != b
            || s.values.iter().any(|v| !v.is_zero() && (v.abs() < lower || v.abs() > upper))
    });
    out.push(CheckResult::new(
        "oracle.bfs_bounds",
        bad.is_none(),
        match bad {
            Some(s) => format!("basis {:?} violates the bounds", s.basis),
            None => format!("{} basic solutions within [{lower}, {upper}]", report.all_bfs.len()),
        },
    ));
    let phi_floor = BigRational::one() / (&dg * &dg);
    out.push(match &report.phi {
        Some(phi) => CheckResult::new("oracle.phi_lower_bound", *phi >= phi_floor, format!("Phi = {phi}, floor {phi_floor}")),
        None => CheckResult::skipped("oracle.phi_lower_bound", "every basic solution is optimal"),
    });
    let pool: Vec<_> = report.all_bfs.iter().filter(|s| s.feasible_directed).collect();
    out.push(if pool.is_empty() {
        CheckResult::skipped("oracle.decompose_round_trip", "no nonnegative basic solution")
    } else {
        let k = BigRational::from_integer(pool.len().into());
        let mut f = vec![BigRational::zero(); inst.m()];
        for s in &pool {
            for (fe, v) in f.iter_mut().zip(&s.values) {
                *fe += v / &k;
            }
        }
        match decompose(inst, &f) {
            Ok(dec) => {
                let ok = dec.reconstruct() == f;
                CheckResult::new("oracle.decompose_round_trip", ok, format!("{} terms", dec.terms.len()))
            }
            Err(e) => CheckResult::new("oracle.decompose_round_trip", false, e.to_string()),
        }
    });
    out
}

fn domination_checks(inst: &LpInstance, report: Option<&OracleReport>, x: &[f64]) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let set = match enumerate_dual_vertices(inst, Mode::Directed) {
        Ok(s) => s,
        Err(e) => {
            out.push(CheckResult::skipped("domination.feasible_alpha", e.to_string()));
            return out;
        }
    };
    let feasible = report.and_then(|r| r.all_bfs.iter().find(|s| s.feasible_directed));
    out.push(match feasible {
        Some(s) => {
            let (alpha, _) = set.alpha_exact(&s.values);
            CheckResult::new("domination.feasible_alpha", alpha.is_one(), format!("alpha = {alpha}"))
        }
        None => CheckResult::skipped("domination.feasible_alpha", "no feasible basic solution"),
    });
    let xr: Vec<BigRational> = x.iter().map(|&v| f64_to_rational(v)).collect();
    out.push(match max_scaled_flow(inst, &xr, Mode::Directed) {
        Ok((t, _)) => {
            let (alpha, _) = set.alpha_exact(&xr);
            let cut = set.d.iter().map(|d| d.iter().zip(&xr).map(|(d, x)| d * x).sum::<BigRational>()).min();
            match cut {
                Some(cut) => CheckResult::new(
                    "domination.duality",
                    cut == t && alpha <= t,
                    format!("alpha = {alpha}, min cut {cut}, max scaled flow {t}"),
                ),
                None => CheckResult::skipped("domination.duality", "no dual vertices"),
            }
        }
        Err(e) => CheckResult::skipped("domination.duality", e.to_string()),
    });
    out
}

fn dynamics_checks(inst: &LpInstance, x0: &[f64], steps: u64) -> Vec<CheckResult> {
    let names = ["dynamics.residual_geometry", "dynamics.alpha_recurrence", "dynamics.psi_bound"];
    let (solver, consts) = match (EnergySolver::new(inst), compute_constants(inst, x0)) {
        (Ok(s), Ok(k)) if k.h0.is_positive() => (s, k),
        _ => return names.iter().map(|n| CheckResult::skipped(n, "no positive h0")).collect(),
    };
    let h = rational_to_f64(&consts.h0);
    let psi0 = rational_to_f64(&consts.psi0);
    let dual = enumerate_dual_vertices(inst, Mode::Directed).ok();
    let b = inst.b_f64();
    let a = inst.a_f64();
    let residual = |x: &[f64]| {
        a.mul_vec(x).iter().zip(&b).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max)
    };
    let mut st = Stepper::new(&solver);
    let mut x = x0.to_vec();
    let r0 = residual(&x);
    let mut alpha = dual.as_ref().map(|d| d.alpha(&x));
    let (mut geo, mut rec, mut xmax) = (0.0f64, 0.0f64, 0.0f64);
    for k in 1..=steps {
        if st.solve(&x).is_err() {
            return names.iter().map(|n| CheckResult::skipped(n, "solve failed")).collect();
        }
        st.blend(&mut x, h, true);
        if let Some(e) = x.iter().position(|v| *v <= 0.0) {
            let msg = format!("capacity {e} left the positive orthant at step {k}");
            return names.iter().map(|n| CheckResult::skipped(n, msg.clone())).collect();
        }
        let expected = (1.0 - h).powi(k as i32) * r0;
        geo = geo.max((residual(&x) - expected).abs() / r0.max(1.0));
        if let (Some(prev), Some(d)) = (alpha, dual.as_ref()) {
            let next = d.alpha(&x);
            rec = rec.max(((1.0 - next) - (1.0 - h) * (1.0 - prev)).abs());
            alpha = Some(next);
        }
        xmax = xmax.max(x.iter().copied().fold(0.0, f64::max));
    }
    vec![
        CheckResult::new(names[0], geo <= 1e-9, format!("max relative deviation {geo:e} over {steps} steps")),
        match dual {
            Some(_) => CheckResult::new(names[1], rec <= 1e-9, format!("max deviation {rec:e}")),
            None => CheckResult::skipped(names[1], "dual vertices not enumerable"),
        },
        CheckResult::new(names[2], xmax <= psi0, format!("max capacity {xmax} against Psi0 = {psi0}")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, GeneratorSpec};

    #[test]
    fn triangle_passes() {
        let g = generate(&GeneratorSpec::Triangle).unwrap();
        let s = check_instance(&g.instance, &CheckOptions::default());
        assert!(s.passed(), "{:#}", s.to_json());
        assert!(s.get("energy.zero_cost_regularization").is_none());
    }

    #[test]
    fn zero_cost_demo_passes() {
        let g = generate(&GeneratorSpec::ZeroCostDemo).unwrap();
        let s = check_instance(&g.instance, &CheckOptions::default());
        assert!(s.passed(), "{:#}", s.to_json());
        assert_eq!(s.get("energy.zero_cost_regularization").unwrap().status, CheckStatus::Pass);
    }
}
