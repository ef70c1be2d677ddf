//! Dual vertex sets, the domination level `alpha(x)` and preconditioning.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::{
    binomial, f64_to_rational, rational_to_f64, solve_linear_exact, Combinations, Matrix,
};
use crate::model::{compute_constants, size_cap, LpInstance, Mode, ModelError};
use crate::oracle::{max_scaled_flow, OracleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DominationError {
    #[error("enumeration needs {required} bases, cap is {cap}")]
    SizeCap { required: u128, cap: u128 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Vertices `y` of the dual polyhedron together with `A^T y` and the derived
/// cut vectors `d`.
///
/// Directed vertices satisfy `b^T y = 1` and `d = max(0, A^T y)`; undirected
/// vertices satisfy `b^T y = -1` and `d = |A^T y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVertexSet {
    pub mode: Mode,
    pub vertices: Vec<Vec<BigRational>>,
    pub aty: Vec<Vec<BigRational>>,
    pub d: Vec<Vec<BigRational>>,
    aty_f64: Vec<Vec<f64>>,
    d_f64: Vec<Vec<f64>>,
}

impl DualVertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Float value of `alpha(x)`: `min_y y^T A x` (directed) or `min_d d^T x`.
    pub fn alpha(&self, x: &[f64]) -> f64 {
        let rows = match self.mode {
            Mode::Directed => &self.aty_f64,
            Mode::Undirected => &self.d_f64,
        };
        rows.iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Values of every functional (`y^T A x` or `d^T x`) at `x`.
    pub fn functionals(&self, x: &[f64]) -> Vec<f64> {
        let rows = match self.mode {
            Mode::Directed => &self.aty_f64,
            Mode::Undirected => &self.d_f64,
        };
        rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Exact `alpha(x)` with the index of a minimizing vertex.
    pub fn alpha_exact(&self, x: &[BigRational]) -> (BigRational, usize) {
        let rows = match self.mode {
            Mode::Directed => &self.aty,
            Mode::Undirected => &self.d,
        };
        let mut best: Option<(BigRational, usize)> = None;
        for (i, r) in rows.iter().enumerate() {
            let v = r.iter().zip(x).fold(BigRational::zero(), |acc, (a, b)| acc + a * b);
            if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, i));
            }
        }
        best.expect("dual vertex set is never empty")
    }
}

/// Enumerates the dual vertices: the solutions of `b^T y = 1`, `A_S^T y = 0`
/// over all column sets `S` of size `n - 1` making the system invertible.
pub fn enumerate_dual_vertices(inst: &LpInstance, mode: Mode) -> Result<DualVertexSet, DominationError> {
    let (n, m) = (inst.n(), inst.m());
    let required = binomial(m, n - 1);
    let cap = size_cap().min(1_000_000);
    if required > cap {
        return Err(DominationError::SizeCap { required, cap });
    }
    let a = inst.a_rational();
    let b = inst.b_rational();
    let sign = match mode {
        Mode::Directed => BigRational::from_integer(1.into()),
        Mode::Undirected => BigRational::from_integer((-1).into()),
    };
    let mut rhs = vec![BigRational::zero(); n];
    rhs[0] = sign;
    let mut vertices: Vec<Vec<BigRational>> = Vec::new();
    for s in Combinations::new(m, n - 1) {
        let mut data = b.clone();
        for &e in &s {
            data.extend(a.column(e));
        }
        let sys = Matrix::new(n, n, data).expect("square system");
        if let Ok(y) = solve_linear_exact(&sys, &rhs) {
            if !vertices.contains(&y) {
                vertices.push(y);
            }
        }
    }
    let at = a.transpose();
    let aty: Vec<Vec<BigRational>> = vertices.iter().map(|y| at.mul_vec(y)).collect();
    let d: Vec<Vec<BigRational>> = aty
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| match mode {
                    Mode::Directed => v.clone().max(BigRational::zero()),
                    Mode::Undirected => v.abs(),
                })
                .collect()
        })
        .collect();
    let to_f = |rows: &Vec<Vec<BigRational>>| -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect()
    };
    Ok(DualVertexSet { mode, aty_f64: to_f(&aty), d_f64: to_f(&d), vertices, aty, d })
}

/// `alpha(x)`, a minimizing vertex and a witness flow.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationCertificate {
    pub alpha: BigRational,
    pub vertex: usize,
    /// `A f = alpha b` with `0 <= f <= x` (directed) or `|f| <= x`
    /// (undirected); absent when `alpha <= 0`.
    pub witness: Option<Vec<BigRational>>,
}

impl DominationCertificate {
    pub fn alpha_f64(&self) -> f64 {
        rational_to_f64(&self.alpha)
    }
}

/// Computes `alpha(x)` exactly and recovers a witness flow from the primal.
pub fn alpha_of(
    inst: &LpInstance,
    set: &DualVertexSet,
    x: &[f64],
) -> Result<DominationCertificate, DominationError> {
    let xr: Vec<BigRational> = x.iter().map(|&v| f64_to_rational(v)).collect();
    let (alpha, vertex) = set.alpha_exact(&xr);
    let witness = if alpha.is_positive() {
        let (t, f) = max_scaled_flow(inst, &xr, set.mode)?;
        let scale = &alpha / &t;
        Some(f.into_iter().map(|v| v * &scale).collect())
    } else {
        None
    };
    Ok(DominationCertificate { alpha, vertex, witness })
}

/// Whether some feasible `f` has `0 <= f <= level * x`.
pub fn weakly_dominated_at(inst: &LpInstance, x: &[f64], level: &BigRational) -> Result<bool, DominationError> {
    let xr: Vec<BigRational> = x.iter().map(|&v| f64_to_rational(v)).collect();
    let (t, _) = max_scaled_flow(inst, &xr, Mode::Directed)?;
    Ok((t * level) >= BigRational::from_integer(1.into()))
}

/// The extended instance `[A | b]` with its starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioned {
    pub instance: LpInstance,
    pub x0: Vec<f64>,
    pub z0: BigRational,
    pub c_prime: BigInt,
}

/// Appends the column `b` with cost `ceil(2 C_1)` and capacity
/// `z0 = 1 + D_S ||x0||_inf ||A||_1 ||b||_1`.
pub fn precondition(inst: &LpInstance, x0: &[f64]) -> Result<Preconditioned, DominationError> {
    let consts = compute_constants(inst, x0)?;
    let two_c1 = consts.c1 * BigRational::from_integer(2.into());
    let c_prime = two_c1.ceil().to_integer();
    let a1: BigInt = inst.a().data().iter().map(|&v| BigInt::from(v).abs()).sum();
    let b1: BigInt = inst.b().iter().map(|&v| BigInt::from(v).abs()).sum();
    let x_inf = x0.iter().fold(0.0f64, |acc, v| acc.max(*v));
    let z0 = BigRational::from_integer(1.into())
        + consts.d_s * f64_to_rational(x_inf) * BigRational::from_integer(a1 * b1);
    let mut rows = inst.a().to_rows();
    for (row, &bi) in rows.iter_mut().zip(inst.b()) {
        row.push(bi);
    }
    let mut c = inst.c().to_vec();
    let cp: i64 = (&c_prime).try_into().map_err(|_| {
        ModelError::Malformed("appended cost does not fit in 64 bits".into())
    })?;
    c.push(cp);
    let instance = LpInstance::new(rows, inst.b().to_vec(), c, inst.mode())?;
    let mut start = x0.to_vec();
    start.push(rational_to_f64(&z0));
    Ok(Preconditioned { instance, x0: start, z0, c_prime })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn parallel() -> LpInstance {
        LpInstance::new(vec![vec![1, 1]], vec![1], vec![1, 2], Mode::Directed).unwrap()
    }

    fn triangle() -> LpInstance {
        LpInstance::new(vec![vec![1, 0, 1], vec![-1, 1, 0]], vec![1, 0], vec![1, 1, 3], Mode::Directed)
            .unwrap()
    }

    #[test]
    fn one_dimensional_dual() {
        let y = enumerate_dual_vertices(&parallel(), Mode::Directed).unwrap();
        assert_eq!(y.vertices, vec![vec![q(1, 1)]]);
        assert_eq!(y.d, vec![vec![q(1, 1), q(1, 1)]]);
    }

    #[test]
    fn alpha_on_parallel_columns() {
        let inst = parallel();
        let y = enumerate_dual_vertices(&inst, Mode::Directed).unwrap();
        let cert = alpha_of(&inst, &y, &[0.5, 0.5]).unwrap();
        assert_eq!(cert.alpha, q(1, 1));
        let cert = alpha_of(&inst, &y, &[0.1, 0.2]).unwrap();
        assert!((cert.alpha_f64() - 0.3).abs() < 1e-15);
        let f = cert.witness.unwrap();
        let total = &f[0] + &f[1];
        assert_eq!(total, cert.alpha);
    }

    #[test]
    fn triangle_cuts() {
        let inst = triangle();
        let y = enumerate_dual_vertices(&inst, Mode::Directed).unwrap();
        // The two source-side cuts {s} and {s, a}.
        assert_eq!(y.len(), 2);
        let cert = alpha_of(&inst, &y, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(cert.alpha, q(2, 1));
        let u = enumerate_dual_vertices(&inst, Mode::Undirected).unwrap();
        assert!((u.alpha(&[1.0, 1.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn feasible_points_have_alpha_one() {
        let inst = triangle();
        let y = enumerate_dual_vertices(&inst, Mode::Directed).unwrap();
        let cert = alpha_of(&inst, &y, &[0.25, 0.25, 0.75]).unwrap();
        assert_eq!(cert.alpha, q(1, 1));
    }

    #[test]
    fn preconditioning_parallel_columns() {
        let p = precondition(&parallel(), &[0.5, 0.5]).unwrap();
        assert_eq!(p.instance.a().to_rows(), vec![vec![1, 1, 1]]);
        assert_eq!(p.c_prime, BigInt::from(6));
        assert_eq!(p.instance.c(), &[1, 2, 6]);
        assert_eq!(p.z0, q(2, 1));
        assert_eq!(p.x0, vec![0.5, 0.5, 2.0]);
    }
}
