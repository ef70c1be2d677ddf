//! Minimum-energy feasible solutions `q` and potentials `p`.

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::linalg::{
    independent_rows, inverse_exact, rational_to_f64, solve_in_place_with, solve_linear_exact, Matrix,
};
use crate::model::LpInstance;

/// Capacities below this value are raised to it before forming `c_e / x_e`.
pub const CLAMP_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnergyError {
    #[error("capacity entry {0} is not a positive finite number")]
    InvalidCapacity(usize),
    #[error("expected {expected} capacities, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the weighted Laplacian is numerically singular")]
    SingularLaplacian,
    #[error("zero-cost columns are linearly dependent")]
    KernelCostViolation,
    #[error("column {0} has zero cost; use the general solver")]
    ZeroCost(usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MinEnergySolution {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub energy: f64,
    /// Some capacity was raised to [`CLAMP_FLOOR`].
    pub clamped: bool,
}

/// The exact, capacity-independent part of the zero-cost block system.
///
/// Rows are permuted so that the top `|Z|` rows of `A_Z` form the invertible
/// block `A'_Z`; the remaining rows give `A''_Z`, and likewise for `A_P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCostBlocks {
    pub zero: Vec<usize>,
    pub positive: Vec<usize>,
    pub row_permutation: Vec<usize>,
    /// `(A'_Z)^{-1}`.
    pub a_z_top_inv: Matrix<BigRational>,
    /// `M = A''_P - A''_Z (A'_Z)^{-1} A'_P`.
    pub schur: Matrix<BigRational>,
    /// `(A'_Z)^{-1} A'_P`.
    pub k: Matrix<BigRational>,
    /// `b'' - A''_Z (A'_Z)^{-1} b'`.
    pub rhs: Vec<BigRational>,
    /// `(A'_Z)^{-1} b'`.
    pub zb: Vec<BigRational>,
    /// `((A'_Z)^T)^{-1} (A''_Z)^T`, so that `p' = -T p''`.
    pub t: Matrix<BigRational>,
}

impl ZeroCostBlocks {
    pub fn new(inst: &LpInstance) -> Result<Self, EnergyError> {
        let a = inst.a_rational();
        let b = inst.b_rational();
        let n = inst.n();
        let zero = inst.zero_cost_columns();
        let positive: Vec<usize> = (0..inst.m()).filter(|e| !zero.contains(e)).collect();
        let a_z = a.select_columns(&zero);
        let top = independent_rows(&a_z);
        if top.len() != zero.len() {
            return Err(EnergyError::KernelCostViolation);
        }
        let bottom: Vec<usize> = (0..n).filter(|i| !top.contains(i)).collect();
        let zt = a.select(&top, &zero);
        let zbot = a.select(&bottom, &zero);
        let pt = a.select(&top, &positive);
        let pbot = a.select(&bottom, &positive);
        let a_z_top_inv = inverse_exact(&zt).map_err(|_| EnergyError::KernelCostViolation)?;
        let k = a_z_top_inv.mul(&pt);
        let zk = zbot.mul(&k);
        let schur = Matrix::new(
            bottom.len(),
            positive.len(),
            pbot.data().iter().zip(zk.data()).map(|(x, y)| x - y).collect(),
        )
        .expect("schur shape");
        let b_top: Vec<BigRational> = top.iter().map(|&i| b[i].clone()).collect();
        let zb = a_z_top_inv.mul_vec(&b_top);
        let zzb = zbot.mul_vec(&zb);
        let rhs = bottom.iter().zip(zzb).map(|(&i, v)| &b[i] - v).collect();
        let t = a_z_top_inv.transpose().mul(&zbot.transpose());
        let mut row_permutation = top;
        row_permutation.extend(bottom);
        Ok(ZeroCostBlocks { zero, positive, row_permutation, a_z_top_inv, schur, k, rhs, zb, t })
    }
}

/// Reusable scratch buffers for [`EnergySolver::solve_into`].
#[derive(Debug, Clone, Default)]
pub struct EnergyWorkspace {
    w: Vec<f64>,
    g: Vec<f64>,
    g_copy: Vec<f64>,
    pp: Vec<f64>,
    delta: Vec<f64>,
    mtp: Vec<f64>,
    scale: Vec<f64>,
}

/// Refinement rounds of the Schur solve.
const MAX_REFINEMENTS: usize = 4;

/// Residual, relative to `max(1, |rhs|)`, below which refinement stops.
const REFINE_TOLERANCE: f64 = 1e-13;

/// Pivot threshold of the equilibrated Laplacian, which has a unit diagonal.
const EQUILIBRATED_PIVOT: f64 = 64.0 * f64::EPSILON;

/// Solves `g y = rhs` after symmetric diagonal scaling to a unit diagonal.
fn solve_equilibrated(g: &[f64], r: usize, scale: &[f64], work: &mut Vec<f64>, rhs: &mut [f64]) -> bool {
    work.clear();
    for a in 0..r {
        for b in 0..r {
            work.push(g[a * r + b] * scale[a] * scale[b]);
        }
    }
    for (v, s) in rhs.iter_mut().zip(scale) {
        *v *= s;
    }
    if solve_in_place_with(work, r, rhs, EQUILIBRATED_PIVOT).is_err() {
        return false;
    }
    for (v, s) in rhs.iter_mut().zip(scale) {
        *v *= s;
    }
    true
}

/// Float solver for one instance; the exact block factors are computed once.
#[derive(Debug, Clone)]
pub struct EnergySolver {
    m: usize,
    n: usize,
    c: Vec<f64>,
    zero: Vec<usize>,
    positive: Vec<usize>,
    perm: Vec<usize>,
    /// Schur complement, column-major: entry (i, j) at `j * r + i`.
    schur_cm: Vec<f64>,
    r: usize,
    rhs: Vec<f64>,
    k: Matrix<f64>,
    zb: Vec<f64>,
    t: Matrix<f64>,
    b: Vec<f64>,
}

impl EnergySolver {
    pub fn new(inst: &LpInstance) -> Result<Self, EnergyError> {
        let blocks = ZeroCostBlocks::new(inst)?;
        let r = blocks.schur.rows();
        let np = blocks.positive.len();
        let mut schur_cm = vec![0.0; r * np];
        for i in 0..r {
            for j in 0..np {
                schur_cm[j * r + i] = rational_to_f64(blocks.schur.get(i, j));
            }
        }
        Ok(EnergySolver {
            m: inst.m(),
            n: inst.n(),
            c: inst.c_f64(),
            zero: blocks.zero.clone(),
            positive: blocks.positive.clone(),
            perm: blocks.row_permutation.clone(),
            schur_cm,
            r,
            rhs: blocks.rhs.iter().map(rational_to_f64).collect(),
            k: blocks.k.map(rational_to_f64),
            zb: blocks.zb.iter().map(rational_to_f64).collect(),
            t: blocks.t.map(rational_to_f64),
            b: inst.b_f64(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn has_zero_costs(&self) -> bool {
        !self.zero.is_empty()
    }

    pub fn solve(&self, x: &[f64]) -> Result<MinEnergySolution, EnergyError> {
        let mut ws = EnergyWorkspace::default();
        let mut out = MinEnergySolution::default();
        self.solve_into(x, &mut ws, &mut out)?;
        Ok(out)
    }

    /// Solves for `q`, `p` at capacities `x`, writing into `out`.
    pub fn solve_into(
        &self,
        x: &[f64],
        ws: &mut EnergyWorkspace,
        out: &mut MinEnergySolution,
    ) -> Result<(), EnergyError> {
        if x.len() != self.m {
            return Err(EnergyError::DimensionMismatch { expected: self.m, got: x.len() });
        }
        let (r, np) = (self.r, self.positive.len());
        out.clamped = false;
        ws.w.clear();
        for &e in &self.positive {
            let xe = x[e];
            if !(xe.is_finite() && xe > 0.0) {
                return Err(EnergyError::InvalidCapacity(e));
            }
            let xe = if xe < CLAMP_FLOOR {
                out.clamped = true;
                CLAMP_FLOOR
            } else {
                xe
            };
            ws.w.push(xe / self.c[e]);
        }
        for &e in &self.zero {
            if !(x[e].is_finite() && x[e] > 0.0) {
                return Err(EnergyError::InvalidCapacity(e));
            }
        }
        ws.g.clear();
        ws.g.resize(r * r, 0.0);
        for j in 0..np {
            let col = &self.schur_cm[j * r..(j + 1) * r];
            let w = ws.w[j];
            for a in 0..r {
                let wa = w * col[a];
                if wa == 0.0 {
                    continue;
                }
                for b in a..r {
                    ws.g[a * r + b] += wa * col[b];
                }
            }
        }
        for a in 0..r {
            for b in 0..a {
                ws.g[a * r + b] = ws.g[b * r + a];
            }
        }
        ws.scale.clear();
        for a in 0..r {
            let d = ws.g[a * r + a];
            if !(d > 0.0 && d.is_finite()) {
                return Err(EnergyError::SingularLaplacian);
            }
            ws.scale.push(1.0 / d.sqrt());
        }
        ws.pp.clone_from(&self.rhs);
        if !solve_equilibrated(&ws.g, r, &ws.scale, &mut ws.g_copy, &mut ws.pp) {
            return Err(EnergyError::SingularLaplacian);
        }
        self.positive_flow(ws);
        // Refinement on the residual of M q_P = rhs.
        let target = REFINE_TOLERANCE * self.rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut last = f64::INFINITY;
        for round in 0..MAX_REFINEMENTS {
            ws.delta.clear();
            for i in 0..r {
                let mut s = self.rhs[i];
                for j in 0..np {
                    s -= self.schur_cm[j * r + i] * ws.mtp[j];
                }
                ws.delta.push(s);
            }
            let norm = ws.delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if round > 0 && (norm <= target || norm >= last) {
                break;
            }
            last = norm;
            if !solve_equilibrated(&ws.g, r, &ws.scale, &mut ws.g_copy, &mut ws.delta) {
                break;
            }
            for i in 0..r {
                ws.pp[i] += ws.delta[i];
            }
            for (j, w) in ws.w.iter().enumerate() {
                let col = &self.schur_cm[j * r..(j + 1) * r];
                let s: f64 = col.iter().zip(&ws.delta).map(|(a, b)| a * b).sum();
                ws.mtp[j] += w * s;
            }
        }
        out.q.clear();
        out.q.resize(self.m, 0.0);
        let mut energy = 0.0;
        for (j, &e) in self.positive.iter().enumerate() {
            out.q[e] = ws.mtp[j];
            energy += ws.mtp[j] * ws.mtp[j] / ws.w[j];
        }
        for (i, &e) in self.zero.iter().enumerate() {
            let mut s = self.zb[i];
            for (j, &ep) in self.positive.iter().enumerate() {
                s -= self.k.get(i, j) * out.q[ep];
            }
            out.q[e] = s;
        }
        out.p.clear();
        out.p.resize(self.n, 0.0);
        let kz = self.zero.len();
        for (i, &row) in self.perm[..kz].iter().enumerate() {
            let mut s = 0.0;
            for j in 0..r {
                s -= self.t.get(i, j) * ws.pp[j];
            }
            out.p[row] = s;
        }
        for (j, &row) in self.perm[kz..].iter().enumerate() {
            out.p[row] = ws.pp[j];
        }
        out.energy = energy;
        Ok(())
    }

    /// `q_P = w * (M^T p'')`, stored in `ws.mtp`.
    fn positive_flow(&self, ws: &mut EnergyWorkspace) {
        let r = self.r;
        ws.mtp.clear();
        for (j, w) in ws.w.iter().enumerate() {
            let col = &self.schur_cm[j * r..(j + 1) * r];
            let s: f64 = col.iter().zip(&ws.pp).map(|(a, b)| a * b).sum();
            ws.mtp.push(w * s);
        }
    }

    /// `b^T p`.
    pub fn dual_energy(&self, p: &[f64]) -> f64 {
        self.b.iter().zip(p).map(|(b, p)| b * p).sum()
    }
}

/// Minimum-energy solve for strictly positive costs.
pub fn solve_positive(inst: &LpInstance, x: &[f64]) -> Result<MinEnergySolution, EnergyError> {
    if let Some(e) = inst.c().iter().position(|&c| c == 0) {
        return Err(EnergyError::ZeroCost(e));
    }
    EnergySolver::new(inst)?.solve(x)
}

/// Minimum-energy solve allowing zero-cost columns.
pub fn solve_general(inst: &LpInstance, x: &[f64]) -> Result<MinEnergySolution, EnergyError> {
    EnergySolver::new(inst)?.solve(x)
}

/// `sum_e (c_e / x_e) f_e^2`; infinite when `f_e != 0` where `x_e == 0`.
pub fn energy(inst: &LpInstance, x: &[f64], f: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((&c, &xe), &fe) in inst.c().iter().zip(x).zip(f) {
        if fe == 0.0 || c == 0 {
            continue;
        }
        if xe <= 0.0 {
            return f64::INFINITY;
        }
        total += c as f64 / xe * fe * fe;
    }
    total
}

/// Exact `(q, p)` for positive costs and rational capacities.
pub fn solve_positive_exact(
    inst: &LpInstance,
    x: &[BigRational],
) -> Result<(Vec<BigRational>, Vec<BigRational>), EnergyError> {
    if let Some(e) = inst.c().iter().position(|&c| c == 0) {
        return Err(EnergyError::ZeroCost(e));
    }
    let a = inst.a_rational();
    let c = inst.c_rational();
    let (n, m) = (inst.n(), inst.m());
    let w: Vec<BigRational> = x.iter().zip(&c).map(|(x, c)| x / c).collect();
    let mut l = Matrix::filled(n, n, BigRational::zero());
    for i in 0..n {
        for j in 0..n {
            let mut s = BigRational::zero();
            for e in 0..m {
                s += &w[e] * a.get(i, e) * a.get(j, e);
            }
            l.set(i, j, s);
        }
    }
    let p = solve_linear_exact(&l, &inst.b_rational()).map_err(|_| EnergyError::SingularLaplacian)?;
    let q = (0..m)
        .map(|e| {
            let s = (0..n).fold(BigRational::zero(), |acc, i| acc + a.get(i, e) * &p[i]);
            &w[e] * s
        })
        .collect();
    Ok((q, p))
}
