//! Problem representation, validation and the instance constants.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    binomial, determinant, f64_to_rational, independent_rows, int_to_rational, rank, Combinations,
    Matrix,
};

/// Default cap on the number of determinant evaluations or bases.
pub const DEFAULT_SIZE_CAP: u128 = 2_000_000;

/// Reads the enumeration cap, honouring `PHYSARUM_SIZE_CAP`.
pub fn size_cap() -> u128 {
    std::env::var("PHYSARUM_SIZE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SIZE_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("negative cost at column {0}")]
    NegativeCost(usize),
    #[error("fewer columns ({m}) than independent rows ({n})")]
    InfeasibleShape { n: usize, m: usize },
    #[error("Ax = b has no solution")]
    Inconsistent,
    #[error("zero-cost columns are linearly dependent")]
    KernelCostViolation,
    #[error("demand vector b is zero")]
    ZeroDemand,
    #[error("enumeration needs {required} evaluations, cap is {cap}")]
    SizeCap { required: u128, cap: u128 },
    #[error("invalid starting point: {0}")]
    InvalidStart(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Directed,
    Undirected,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Directed => f.write_str("directed"),
            Mode::Undirected => f.write_str("undirected"),
        }
    }
}

/// The on-disk JSON shape of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

/// Unvalidated problem data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawInstance {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    pub mode: Mode,
}

/// `gamma_A`, `D` and `D_S`, each exact. `D` and `D_S` are absent when the
/// enumeration would exceed the size cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterminantBounds {
    pub gamma: BigInt,
    pub d: Option<BigInt>,
    pub d_s: Option<BigInt>,
    pub d_evaluations: u128,
    pub d_s_evaluations: u128,
}

/// A validated instance `min c^T |f|` (or `c^T f, f >= 0`) subject to `Af = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpInstance {
    a: Matrix<i64>,
    b: Vec<i64>,
    c: Vec<i64>,
    mode: Mode,
    dropped_rows: Vec<usize>,
    bounds: DeterminantBounds,
}

impl LpInstance {
    pub fn new(a: Vec<Vec<i64>>, b: Vec<i64>, c: Vec<i64>, mode: Mode) -> Result<Self, ModelError> {
        validate(RawInstance { a, b, c, mode })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.a.cols()
    }

    pub fn a(&self) -> &Matrix<i64> {
        &self.a
    }

    pub fn b(&self) -> &[i64] {
        &self.b
    }

    pub fn c(&self) -> &[i64] {
        &self.c
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Same data, different mode; validation results carry over.
    pub fn with_mode(&self, mode: Mode) -> Self {
        LpInstance { mode, ..self.clone() }
    }

    /// Indices of rows removed as linearly dependent during validation.
    pub fn dropped_rows(&self) -> &[usize] {
        &self.dropped_rows
    }

    pub fn bounds(&self) -> &DeterminantBounds {
        &self.bounds
    }

    pub fn gamma(&self) -> &BigInt {
        &self.bounds.gamma
    }

    pub fn d(&self) -> Result<&BigInt, ModelError> {
        self.bounds.d.as_ref().ok_or(ModelError::SizeCap {
            required: self.bounds.d_evaluations,
            cap: size_cap(),
        })
    }

    pub fn d_s(&self) -> Result<&BigInt, ModelError> {
        self.bounds.d_s.as_ref().ok_or(ModelError::SizeCap {
            required: self.bounds.d_s_evaluations,
            cap: size_cap(),
        })
    }

    /// `D * gamma_A` as a float.
    pub fn d_gamma(&self) -> Result<f64, ModelError> {
        Ok(bigint_to_f64(&(self.d()? * self.gamma())))
    }

    pub fn zero_cost_columns(&self) -> Vec<usize> {
        (0..self.m()).filter(|&e| self.c[e] == 0).collect()
    }

    pub fn a_rational(&self) -> Matrix<BigRational> {
        int_to_rational(&self.a)
    }

    pub fn b_rational(&self) -> Vec<BigRational> {
        self.b.iter().map(|&v| BigRational::from_integer(v.into())).collect()
    }

    pub fn c_rational(&self) -> Vec<BigRational> {
        self.c.iter().map(|&v| BigRational::from_integer(v.into())).collect()
    }

    pub fn a_f64(&self) -> Matrix<f64> {
        self.a.map(|&v| v as f64)
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(|&v| v as f64).collect()
    }

    pub fn c_f64(&self) -> Vec<f64> {
        self.c.iter().map(|&v| v as f64).collect()
    }

    /// `c^T x`.
    pub fn cost(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(&c, &x)| c as f64 * x).sum()
    }

    /// `b - A x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a_f64().mul_vec(x);
        self.b.iter().zip(ax).map(|(&b, v)| b as f64 - v).collect()
    }

    pub fn to_file(&self, x0: Option<Vec<f64>>) -> InstanceFile {
        InstanceFile {
            n: self.n(),
            m: self.m(),
            a: self.a.to_rows(),
            b: self.b.clone(),
            c: self.c.clone(),
            x0,
            mode: Some(self.mode),
        }
    }

    pub fn to_json(&self, x0: Option<Vec<f64>>) -> String {
        serde_json::to_string_pretty(&self.to_file(x0)).expect("instance serializes")
    }
}

/// Parses an instance file, returning the validated instance and the
/// optional starting point.
pub fn parse_instance(text: &str) -> Result<(LpInstance, Option<Vec<f64>>), ModelError> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    from_file(file)
}

pub fn load_instance(path: &Path) -> Result<(LpInstance, Option<Vec<f64>>), ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    parse_instance(&text)
}

pub fn from_file(file: InstanceFile) -> Result<(LpInstance, Option<Vec<f64>>), ModelError> {
    if file.a.len() != file.n || file.b.len() != file.n {
        return Err(ModelError::Malformed(format!(
            "n = {} but A has {} rows and b has {} entries",
            file.n,
            file.a.len(),
            file.b.len()
        )));
    }
    if file.c.len() != file.m || file.a.iter().any(|r| r.len() != file.m) {
        return Err(ModelError::Malformed(format!("m = {} disagrees with A or c", file.m)));
    }
    if let Some(x0) = &file.x0 {
        check_start(x0, file.m)?;
    }
    let inst = validate(RawInstance {
        a: file.a,
        b: file.b,
        c: file.c,
        mode: file.mode.unwrap_or_default(),
    })?;
    Ok((inst, file.x0))
}

/// Checks that `x0` has `m` finite positive entries.
pub fn check_start(x0: &[f64], m: usize) -> Result<(), ModelError> {
    if x0.len() != m {
        return Err(ModelError::InvalidStart(format!("expected {m} entries, got {}", x0.len())));
    }
    if let Some(e) = x0.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ModelError::InvalidStart(format!("entry {e} is not positive")));
    }
    Ok(())
}

/// Validates raw data: drops dependent rows and checks the cost conditions.
pub fn validate(raw: RawInstance) -> Result<LpInstance, ModelError> {
    let n = raw.a.len();
    let m = raw.c.len();
    if raw.b.len() != n {
        return Err(ModelError::Malformed(format!("A has {n} rows, b has {}", raw.b.len())));
    }
    let a = Matrix::from_rows(&raw.a, m).map_err(|e| ModelError::Malformed(e.to_string()))?;
    if let Some(e) = raw.c.iter().position(|&c| c < 0) {
        return Err(ModelError::NegativeCost(e));
    }
    let aq = int_to_rational(&a);
    let keep = independent_rows(&aq);
    let dropped_rows: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let mut ab = Vec::with_capacity(n * (m + 1));
    for i in 0..n {
        ab.extend_from_slice(aq.row(i));
        ab.push(BigRational::from_integer(raw.b[i].into()));
    }
    let ab = Matrix::new(n, m + 1, ab).expect("augmented shape");
    if rank(&ab) != keep.len() {
        return Err(ModelError::Inconsistent);
    }
    let a = a.select_rows(&keep);
    let b: Vec<i64> = keep.iter().map(|&i| raw.b[i]).collect();
    let n = keep.len();
    if m < n {
        return Err(ModelError::InfeasibleShape { n, m });
    }
    let zero: Vec<usize> = (0..m).filter(|&e| raw.c[e] == 0).collect();
    if !zero.is_empty() && rank(&int_to_rational(&a.select_columns(&zero))) != zero.len() {
        return Err(ModelError::KernelCostViolation);
    }
    if n == 0 || b.iter().all(|&v| v == 0) {
        return Err(ModelError::ZeroDemand);
    }
    let bounds = determinant_bounds(&a, size_cap());
    Ok(LpInstance { a, b, c: raw.c, mode: raw.mode, dropped_rows, bounds })
}

/// gcd of the nonzero entries.
pub fn gcd_entries(a: &Matrix<i64>) -> BigInt {
    a.data()
        .iter()
        .filter(|v| **v != 0)
        .fold(BigInt::zero(), |g, &v| g.gcd(&BigInt::from(v)))
}

fn max_abs_minor(a: &Matrix<BigInt>, k: usize) -> BigInt {
    let mut best = BigInt::zero();
    for rows in Combinations::new(a.rows(), k) {
        for cols in Combinations::new(a.cols(), k) {
            let d = determinant(&a.select(&rows, &cols)).abs();
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// Computes `gamma_A`, `D` (over `A / gamma_A`, dimensions `n-1` and `n`)
/// and `D_S` (over `A`, every dimension), subject to `cap`.
pub fn determinant_bounds(a: &Matrix<i64>, cap: u128) -> DeterminantBounds {
    let (n, m) = (a.rows(), a.cols());
    let gamma = gcd_entries(a);
    let count = |k: usize| binomial(n, k).saturating_mul(binomial(m, k));
    let d_evaluations = if n == 0 { 1 } else { count(n - 1).saturating_add(count(n)) };
    let d_s_evaluations = (1..=n).fold(0u128, |acc, k| acc.saturating_add(count(k)));
    let d = (d_evaluations <= cap && !gamma.is_zero()).then(|| {
        let scaled = a.map(|&v| BigInt::from(v) / &gamma);
        let lower = if n == 0 { BigInt::one() } else { max_abs_minor(&scaled, n - 1) };
        lower.max(max_abs_minor(&scaled, n)).max(BigInt::one())
    });
    let d_s = (d_s_evaluations <= cap).then(|| {
        let big = a.map(|&v| BigInt::from(v));
        (1..=n).map(|k| max_abs_minor(&big, k)).max().unwrap_or_else(BigInt::one)
    });
    DeterminantBounds { gamma, d, d_s, d_evaluations, d_s_evaluations }
}

/// Every constant appearing in the step-size and iteration bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConstants {
    pub gamma_a: BigInt,
    pub d: BigRational,
    pub d_s: BigRational,
    pub c_min: BigInt,
    pub c_max: BigInt,
    pub h0: BigRational,
    pub psi0: BigRational,
    pub c1: BigRational,
    pub c2: BigRational,
    pub c3: BigRational,
    pub rho_a: BigRational,
}

fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Computes all constants exactly. `c_min` is the smallest positive cost.
pub fn compute_constants(inst: &LpInstance, x0: &[f64]) -> Result<InstanceConstants, ModelError> {
    check_start(x0, inst.m())?;
    let gamma = inst.gamma().clone();
    let d = int(inst.d()?.clone());
    let d_s = int(inst.d_s()?.clone());
    let g = int(gamma.clone());
    let (n, m) = (inst.n(), inst.m());
    let c_min = inst.c().iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    let c_max = inst.c().iter().copied().max().unwrap_or(0);
    let c1norm = int(inst.c().iter().map(|&c| BigInt::from(c)).sum::<BigInt>());
    let b1 = int(inst.b().iter().map(|&v| BigInt::from(v).abs()).sum::<BigInt>());
    let b1_scaled = &b1 / &g;
    let a_inf = int(inst.a().data().iter().map(|&v| BigInt::from(v).abs()).max().unwrap_or_default());
    let x0_inf = x0.iter().fold(0.0f64, |acc, v| acc.max(*v));
    let h0 = if c1norm.is_zero() {
        BigRational::zero()
    } else {
        int(c_min) / (int(4) * &d * &c1norm)
    };
    let psi0 = (int(m as i64) * &d * &d * &b1_scaled).max(f64_to_rational(x0_inf));
    let c1 = &d * &b1_scaled * &c1norm;
    let d5 = &d * &d * &d * &d * &d;
    let c2 = int(64) * int((m * m * n) as i64) * d5 * &g * &g * &a_inf * &b1;
    let c3 = &d * &d * &d * &g * &b1 * &c1norm;
    let rho_a = (&d * &g).max(int(n as i64) * &d * &d * &a_inf);
    Ok(InstanceConstants {
        gamma_a: gamma,
        d,
        d_s,
        c_min: c_min.into(),
        c_max: c_max.into(),
        h0,
        psi0,
        c1,
        c2,
        c3,
        rho_a,
    })
}

impl InstanceConstants {
    /// JSON object with every field as an exact fraction string.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "gamma_A": self.gamma_a.to_string(),
            "D": fraction(&self.d),
            "D_S": fraction(&self.d_s),
            "c_min": self.c_min.to_string(),
            "c_max": self.c_max.to_string(),
            "h0": fraction(&self.h0),
            "Psi0": fraction(&self.psi0),
            "C1": fraction(&self.c1),
            "C2": fraction(&self.c2),
            "C3": fraction(&self.c3),
            "rho_A": fraction(&self.rho_a),
        })
    }
}

/// `"p/q"`, or `"p"` for integers.
pub fn fraction(v: &BigRational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn bigint_to_f64(v: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::INFINITY)
}
