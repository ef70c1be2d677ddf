//! Exact brute-force ground truth: basic solutions, `opt`, `Phi`, distances,
//! sign-compatible decomposition and rounding.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::json;
use thiserror::Error;

use crate::linalg::{
    binomial, f64_to_rational, independent_rows, inverse_exact, rational_to_f64, solve_linear_exact,
    Combinations, Matrix,
};
use crate::model::{compute_constants, fraction, size_cap, LpInstance, Mode, ModelError};

/// Upper limit on enumerated bases regardless of `PHYSARUM_SIZE_CAP`.
pub const BASIS_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration needs {required} bases, cap is {cap}")]
    SizeCap { required: u128, cap: u128 },
    #[error("no feasible basic solution")]
    Infeasible,
    #[error("A f != b")]
    NotFeasible,
    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn basis_cap() -> u128 {
    size_cap().min(BASIS_CAP)
}

fn zero() -> BigRational {
    BigRational::zero()
}

/// A basic solution `f_B = A_B^{-1} b`, zero off `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicSolution {
    pub basis: Vec<usize>,
    pub values: Vec<BigRational>,
    /// `c^T |f|`.
    pub cost: BigRational,
    pub feasible_directed: bool,
    pub is_optimal: bool,
}

impl BasicSolution {
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(rational_to_f64).collect()
    }
}

/// Every basic solution of `A f = b`, deduplicated by value.
pub fn basic_solutions(inst: &LpInstance) -> Result<Vec<BasicSolution>, OracleError> {
    let (n, m) = (inst.n(), inst.m());
    let required = binomial(m, n);
    let cap = basis_cap();
    if required > cap {
        return Err(OracleError::SizeCap { required, cap });
    }
    let a = inst.a_rational();
    let b = inst.b_rational();
    let c = inst.c_rational();
    let mut out: Vec<BasicSolution> = Vec::new();
    for basis in Combinations::new(m, n) {
        let Ok(fb) = solve_linear_exact(&a.select_columns(&basis), &b) else {
            continue;
        };
        let mut values = vec![zero(); m];
        for (&e, v) in basis.iter().zip(fb) {
            values[e] = v;
        }
        if out.iter().any(|s| s.values == values) {
            continue;
        }
        let cost = values.iter().zip(&c).fold(zero(), |acc, (f, c)| acc + f.abs() * c);
        let feasible_directed = values.iter().all(|v| !v.is_negative());
        out.push(BasicSolution { basis, values, cost, feasible_directed, is_optimal: false });
    }
    Ok(out)
}

/// Ground truth for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub mode: Mode,
    /// Directed: feasible basic solutions. Undirected: all basic solutions.
    pub all_bfs: Vec<BasicSolution>,
    pub opt: BigRational,
    /// `min_{g in N} c^T g - opt`; absent when every candidate is optimal.
    pub phi: Option<BigRational>,
    pub optimal_set: Vec<BasicSolution>,
    pub non_optimal: Vec<BasicSolution>,
}

impl OracleReport {
    pub fn opt_f64(&self) -> f64 {
        rational_to_f64(&self.opt)
    }

    pub fn phi_over_opt(&self) -> Option<BigRational> {
        match &self.phi {
            Some(phi) if self.opt.is_positive() => Some(phi / &self.opt),
            _ => None,
        }
    }

    pub fn unique_optimum(&self) -> bool {
        self.optimal_set.len() == 1
    }

    /// Optimal points as floats; absolute values in undirected mode.
    pub fn optimal_points(&self) -> Vec<Vec<f64>> {
        self.optimal_set
            .iter()
            .map(|s| {
                s.values
                    .iter()
                    .map(|v| match self.mode {
                        Mode::Directed => rational_to_f64(v),
                        Mode::Undirected => rational_to_f64(&v.abs()),
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let sol = |s: &BasicSolution| {
            json!({
                "basis": s.basis,
                "values": s.values.iter().map(fraction).collect::<Vec<_>>(),
                "cost": fraction(&s.cost),
            })
        };
        json!({
            "mode": self.mode.to_string(),
            "opt": fraction(&self.opt),
            "phi": self.phi.as_ref().map(fraction),
            "num_bfs": self.all_bfs.len(),
            "num_optimal": self.optimal_set.len(),
            "optimal": self.optimal_set.iter().map(sol).collect::<Vec<_>>(),
        })
    }
}

/// Enumerates basic solutions and derives `opt`, `Phi` and the optimal set.
pub fn enumerate_bfs(inst: &LpInstance) -> Result<OracleReport, OracleError> {
    let mut all: Vec<BasicSolution> = basic_solutions(inst)?;
    if inst.mode() == Mode::Directed {
        all.retain(|s| s.feasible_directed);
    }
    let opt = all.iter().map(|s| s.cost.clone()).min().ok_or(OracleError::Infeasible)?;
    for s in &mut all {
        s.is_optimal = s.cost == opt;
    }
    let (optimal_set, non_optimal): (Vec<_>, Vec<_>) = all.iter().cloned().partition(|s| s.is_optimal);
    let phi = non_optimal.iter().map(|s| &s.cost - &opt).min();
    Ok(OracleReport { mode: inst.mode(), all_bfs: all, opt, phi, optimal_set, non_optimal })
}

/// `min` over optimal basic solutions of `||x - f*||_inf`.
pub fn dist_to_opt(report: &OracleReport, x: &[f64]) -> f64 {
    report
        .optimal_points()
        .iter()
        .map(|f| f.iter().zip(x).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
        .fold(f64::INFINITY, f64::min)
}

fn check_feasible(inst: &LpInstance, f: &[BigRational]) -> Result<(), OracleError> {
    if f.len() != inst.m() || inst.a_rational().mul_vec(f) != inst.b_rational() {
        return Err(OracleError::NotFeasible);
    }
    Ok(())
}

/// `f = sum_i lambda_i v_i + w` with sign-compatible basic solutions `v_i`,
/// `sum lambda_i = 1` and `A w = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub terms: Vec<(BigRational, Vec<BigRational>)>,
    pub kernel: Vec<BigRational>,
}

impl Decomposition {
    pub fn reconstruct(&self) -> Vec<BigRational> {
        let mut out = self.kernel.clone();
        for (lambda, v) in &self.terms {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += lambda * vi;
            }
        }
        out
    }
}

/// Greedy sign-compatible decomposition: each round removes the basic
/// solution supported on the remainder with the largest removable weight.
pub fn decompose(inst: &LpInstance, f: &[BigRational]) -> Result<Decomposition, OracleError> {
    check_feasible(inst, f)?;
    let candidates = basic_solutions(inst)?;
    decompose_with(&candidates, f)
}

fn decompose_with(candidates: &[BasicSolution], f: &[BigRational]) -> Result<Decomposition, OracleError> {
    let m = f.len();
    let sign: Vec<bool> = f.iter().map(|v| v.is_negative()).collect();
    let flip = |v: &BigRational, e: usize| if sign[e] { -v.clone() } else { v.clone() };
    let mut rest: Vec<BigRational> = (0..m).map(|e| flip(&f[e], e)).collect();
    let mut weight = BigRational::one();
    let mut terms = Vec::new();
    while weight.is_positive() {
        if terms.len() > m {
            return Err(DecompositionFailureKind::TooManyRounds.into());
        }
        let mut best: Option<(BigRational, &BasicSolution)> = None;
        for cand in candidates {
            let mut lambda: Option<BigRational> = None;
            let mut ok = true;
            for e in 0..m {
                let v = flip(&cand.values[e], e);
                if v.is_zero() {
                    continue;
                }
                if v.is_negative() || rest[e].is_zero() {
                    ok = false;
                    break;
                }
                let r = &rest[e] / &v;
                if lambda.as_ref().map_or(true, |l| r < *l) {
                    lambda = Some(r);
                }
            }
            if !ok {
                continue;
            }
            let lambda = lambda.unwrap_or_else(|| weight.clone()).min(weight.clone());
            if best.as_ref().map_or(true, |(l, _)| lambda > *l) {
                best = Some((lambda, cand));
            }
        }
        let Some((lambda, cand)) = best else {
            return Err(DecompositionFailureKind::NoCandidate.into());
        };
        if !lambda.is_positive() {
            return Err(DecompositionFailureKind::ZeroWeight.into());
        }
        for e in 0..m {
            rest[e] -= &lambda * flip(&cand.values[e], e);
        }
        weight -= &lambda;
        terms.push((lambda, cand.values.clone()));
    }
    let kernel = (0..m).map(|e| flip(&rest[e], e)).collect();
    Ok(Decomposition { terms, kernel })
}

enum DecompositionFailureKind {
    TooManyRounds,
    NoCandidate,
    ZeroWeight,
}

impl From<DecompositionFailureKind> for OracleError {
    fn from(k: DecompositionFailureKind) -> Self {
        OracleError::DecompositionFailure(
            match k {
                DecompositionFailureKind::TooManyRounds => "support did not shrink",
                DecompositionFailureKind::NoCandidate => "no sign-compatible basic solution on the remainder",
                DecompositionFailureKind::ZeroWeight => "extracted weight is zero",
            }
            .into(),
        )
    }
}

/// Result of rounding a feasible `g` to a feasible vector vanishing on `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rounded {
    pub f: Vec<BigRational>,
    /// `||f - g||_inf`.
    pub distance: BigRational,
    /// `1 / (D gamma_A)`.
    pub bound: BigRational,
    pub kernel_free: bool,
    /// The index set actually zeroed (`S`, enlarged when `p` is given).
    pub zeroed: Vec<usize>,
    /// Optimum of `min 1_S^T |x|` over feasible sign-compatible `x`.
    pub s_mass_optimum: BigRational,
}

fn inf_dist(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or_else(zero)
}

/// Rounds `g` (with `A g = b`) to a feasible `f` with `f_S = 0`,
/// `f_e g_e >= 0` and `||f - g||_inf < 1/(D gamma_A)`.
///
/// With a potential `p`, `S` is enlarged by `{e : g_e <= 0 or A_e^T p <= 0}`.
pub fn round_to_kernel_free(
    inst: &LpInstance,
    g: &[BigRational],
    s: &[usize],
    p: Option<&[f64]>,
) -> Result<Rounded, OracleError> {
    check_feasible(inst, g)?;
    let m = inst.m();
    let consts = compute_constants(inst, &vec![1.0; m])?;
    let bound = BigRational::one() / (&consts.d * BigRational::from_integer(consts.gamma_a.clone()));
    let mut zeroed: Vec<usize> = s.to_vec();
    if let Some(p) = p {
        let a = inst.a_f64();
        for e in 0..m {
            let atp: f64 = (0..inst.n()).map(|i| a.get(i, e) * p[i]).sum();
            if !g[e].is_positive() || atp <= 0.0 {
                zeroed.push(e);
            }
        }
    }
    zeroed.sort_unstable();
    zeroed.dedup();
    let mass = zeroed.iter().fold(zero(), |acc, &e| acc + g[e].abs());
    if mass >= BigRational::one() / &consts.rho_a {
        return Err(OracleError::PreconditionViolated(format!(
            "sum over S of |g_e| = {} is not below 1/rho_A = {}",
            fraction(&mass),
            fraction(&(BigRational::one() / &consts.rho_a))
        )));
    }
    let candidates = basic_solutions(inst)?;
    let compatible = |v: &[BigRational]| {
        v.iter().zip(g).all(|(vi, gi)| !(vi * gi).is_negative() && (!gi.is_zero() || vi.is_zero()))
    };
    let s_mass_optimum = candidates
        .iter()
        .filter(|c| compatible(&c.values))
        .map(|c| zeroed.iter().fold(zero(), |acc, &e| acc + c.values[e].abs()))
        .min()
        .ok_or(OracleError::Infeasible)?;

    let admissible = |v: &[BigRational]| {
        v.iter().zip(g).all(|(vi, gi)| !(vi * gi).is_negative()) && zeroed.iter().all(|&e| v[e].is_zero())
    };
    let mut f = lift_construction(inst, g, &zeroed).filter(|f| admissible(f));
    if f.is_none() {
        f = candidates
            .iter()
            .filter(|c| admissible(&c.values))
            .min_by(|x, y| inf_dist(&x.values, g).cmp(&inf_dist(&y.values, g)))
            .map(|c| c.values.clone());
    }
    let f = f.ok_or_else(|| OracleError::PreconditionViolated("no admissible feasible point".into()))?;
    let dec = decompose_with(&candidates, &f)?;
    let (f, kernel_free) = if dec.kernel.iter().all(|v| v.is_zero()) {
        (f, true)
    } else {
        let trimmed: Vec<BigRational> = f.iter().zip(&dec.kernel).map(|(a, b)| a - b).collect();
        if inf_dist(&trimmed, g) < bound {
            (trimmed, true)
        } else {
            (f, false)
        }
    };
    let distance = inf_dist(&f, g);
    Ok(Rounded { f, distance, bound, kernel_free, zeroed, s_mass_optimum })
}

/// `f = g + v` off `S`, `f_S = 0`, where `A_B v_B = A_S g_S` on a maximal
/// independent column set `B` of the complement of `S`.
fn lift_construction(inst: &LpInstance, g: &[BigRational], s: &[usize]) -> Option<Vec<BigRational>> {
    let a = inst.a_rational();
    let m = inst.m();
    let rest: Vec<usize> = (0..m).filter(|e| !s.contains(e)).collect();
    let cols = independent_rows(&a.select_columns(&rest).transpose());
    let basis: Vec<usize> = cols.iter().map(|&i| rest[i]).collect();
    let ab = a.select_columns(&basis);
    let rows = independent_rows(&ab);
    let mut target = vec![zero(); inst.n()];
    for &e in s {
        for (i, t) in target.iter_mut().enumerate() {
            *t += a.get(i, e) * &g[e];
        }
    }
    let r: Vec<BigRational> = rows.iter().map(|&i| target[i].clone()).collect();
    let v = solve_linear_exact(&ab.select_rows(&rows), &r).ok()?;
    let mut f = g.to_vec();
    for &e in s {
        f[e] = zero();
    }
    for (&e, ve) in basis.iter().zip(v) {
        f[e] += ve;
    }
    (a.mul_vec(&f) == inst.b_rational()).then_some(f)
}

/// Outcome of the optimality-criterion check.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCheck {
    /// Every non-optimal basic solution `g` has `e` with `g_e > 0` and `f_e < threshold`.
    pub premise: bool,
    pub threshold: BigRational,
    pub kernel_free: bool,
    /// `||f - f*||_inf` for the optimal `f*` assembled from the decomposition.
    pub distance: BigRational,
    /// `eps / (D gamma_A)`.
    pub bound: BigRational,
    pub holds: bool,
}

/// Checks that a kernel-free `f` which is small on some positive entry of
/// every non-optimal basic solution lies within `eps/(D gamma_A)` of an
/// optimal point.
pub fn check_optimality_criterion(
    inst: &LpInstance,
    report: &OracleReport,
    f: &[BigRational],
    eps: f64,
) -> Result<OptimalityCheck, OracleError> {
    check_feasible(inst, f)?;
    let m = inst.m();
    let consts = compute_constants(inst, &vec![1.0; m])?;
    let g = BigRational::from_integer(consts.gamma_a.clone());
    let b1 = BigRational::from_integer(inst.b().iter().map(|v| v.unsigned_abs()).sum::<u64>().into());
    let epsr = f64_to_rational(eps);
    let d3 = &consts.d * &consts.d * &consts.d;
    let threshold =
        &epsr / (BigRational::from_integer((2 * m as i64).into()) * d3 * &g * b1);
    let bound = &epsr / (&consts.d * &g);
    let premise = report.non_optimal.iter().all(|ng| {
        (0..m).any(|e| ng.values[e].is_positive() && f[e] < threshold)
    });
    let dec = decompose(inst, f)?;
    let kernel_free = dec.kernel.iter().all(|v| v.is_zero());
    let anchor = report.optimal_set.first().ok_or(OracleError::Infeasible)?;
    let mut star = vec![zero(); m];
    for (lambda, v) in &dec.terms {
        let target = if report.optimal_set.iter().any(|s| &s.values == v) { v } else { &anchor.values };
        for (s, t) in star.iter_mut().zip(target) {
            *s += lambda * t;
        }
    }
    let distance = inf_dist(f, &star);
    let holds = !(premise && kernel_free) || distance < bound;
    Ok(OptimalityCheck { premise, threshold, kernel_free, distance, bound, holds })
}

/// Solves `max { t : A f = t b, 0 <= f <= x }` (directed) or
/// `max { t : A f = t b, |f| <= x }` (undirected) exactly by enumerating
/// the vertices of the bounded-variable polytope.
pub fn max_scaled_flow(
    inst: &LpInstance,
    x: &[BigRational],
    mode: Mode,
) -> Result<(BigRational, Vec<BigRational>), OracleError> {
    let (n, m) = (inst.n(), inst.m());
    let free = m + 1 - n;
    let required = binomial(m, n - 1).saturating_mul(1u128.checked_shl(free as u32).unwrap_or(u128::MAX));
    let cap = basis_cap();
    if required > cap {
        return Err(OracleError::SizeCap { required, cap });
    }
    let a = inst.a_rational();
    let b = inst.b_rational();
    // Variables u with A u - t b = r and 0 <= u <= ub; f = u - shift.
    let (ub, shift): (Vec<BigRational>, Vec<BigRational>) = match mode {
        Mode::Directed => (x.to_vec(), vec![zero(); m]),
        Mode::Undirected => (x.iter().map(|v| v * BigRational::from_integer(2.into())).collect(), x.to_vec()),
    };
    let r = a.mul_vec(&shift);
    let mut best: Option<(BigRational, Vec<BigRational>)> = None;
    for s in Combinations::new(m, n - 1) {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for &e in &s {
                data.push(a.get(i, e).clone());
            }
            data.push(-b[i].clone());
        }
        let Ok(inv) = inverse_exact(&Matrix::new(n, n, data).expect("square")) else {
            continue;
        };
        let others: Vec<usize> = (0..m).filter(|e| !s.contains(e)).collect();
        for mask in 0u64..(1u64 << others.len()) {
            let mut u = vec![zero(); m];
            let mut rhs = r.clone();
            for (k, &e) in others.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    u[e] = ub[e].clone();
                    for (i, ri) in rhs.iter_mut().enumerate() {
                        *ri -= a.get(i, e) * &ub[e];
                    }
                }
            }
            let sol = inv.mul_vec(&rhs);
            let mut ok = true;
            for (k, &e) in s.iter().enumerate() {
                if sol[k].is_negative() || sol[k] > ub[e] {
                    ok = false;
                    break;
                }
                u[e] = sol[k].clone();
            }
            let t = sol[n - 1].clone();
            if ok && best.as_ref().map_or(true, |(bt, _)| t > *bt) {
                let f = u.iter().zip(&shift).map(|(u, s)| u - s).collect();
                best = Some((t, f));
            }
        }
    }
    best.ok_or(OracleError::Infeasible)
}
