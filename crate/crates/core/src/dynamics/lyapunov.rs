use super::DynamicsError;
use crate::domination::DualVertexSet;
use crate::energy::EnergySolver;
use crate::model::LpInstance;

/// Lyapunov quantities at one capacity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// `d^T x` for every cut vector `d`.
    pub c_d: Vec<f64>,
    /// `min_d d^T x`.
    pub c_opt: f64,
    /// `c^T x / C_opt`.
    pub v: f64,
    /// `sum_e c_e |q_e| / C_opt - c^T x / C_opt^2`.
    pub h: f64,
    /// `h <= 1e-9`.
    pub h_nonpositive: bool,
}

/// Evaluates the Lyapunov quantities; `dual` must hold undirected vertices.
pub fn lyapunov_report(
    inst: &LpInstance,
    solver: &EnergySolver,
    x: &[f64],
    dual: &DualVertexSet,
) -> Result<LyapunovReport, DynamicsError> {
    let sol = solver.solve(x)?;
    let c_d: Vec<f64> = dual
        .d
        .iter()
        .map(|d| d.iter().map(crate::linalg::rational_to_f64).zip(x).map(|(a, b)| a * b).sum())
        .collect();
    let c_opt = c_d.iter().copied().fold(f64::INFINITY, f64::min);
    let c = inst.c_f64();
    let cost: f64 = c.iter().zip(x).map(|(c, x)| c * x).sum();
    let flow: f64 = c.iter().zip(&sol.q).map(|(c, q)| c * q.abs()).sum();
    let h = flow / c_opt - cost / (c_opt * c_opt);
    Ok(LyapunovReport { c_d, c_opt, v: cost / c_opt, h, h_nonpositive: h <= 1e-9 })
}
