use super::{DynamicsError, Probe, Stepper, TraceRecord};
use crate::domination::DualVertexSet;
use crate::energy::EnergySolver;
use crate::model::LpInstance;
use crate::oracle::OracleReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(format!("unknown integrator {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousConfig<'a> {
    pub t_end: f64,
    pub dt: f64,
    pub method: Integrator,
    /// Record every `sample_stride`-th step (and always the endpoints).
    pub sample_stride: u64,
    /// Keep the full capacity vector of every sample.
    pub keep_states: bool,
    /// Upper envelope level `D ||b/gamma_A||_1`; checked when present.
    pub envelope: Option<f64>,
    pub envelope_tol: f64,
    pub oracle: Option<&'a OracleReport>,
    /// Undirected dual vertices; enables `alpha` and the Lyapunov column.
    pub dual: Option<&'a DualVertexSet>,
}

impl<'a> ContinuousConfig<'a> {
    pub fn new(t_end: f64, dt: f64) -> Self {
        ContinuousConfig {
            t_end,
            dt,
            method: Integrator::Rk4,
            sample_stride: 1,
            keep_states: false,
            envelope: None,
            envelope_tol: 1e-3,
            oracle: None,
            dual: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousOutcome {
    pub samples: Vec<TraceRecord>,
    /// `(time, x)` per sample when `keep_states` is set.
    pub states: Vec<(f64, Vec<f64>)>,
    pub x: Vec<f64>,
    pub clamped: bool,
}

fn derivative(st: &mut Stepper<'_>, x: &[f64], out: &mut [f64]) -> Result<(), DynamicsError> {
    let sol = st.solve(x)?;
    for ((o, q), xe) in out.iter_mut().zip(&sol.q).zip(x) {
        *o = q.abs() - xe;
    }
    Ok(())
}

/// Integrates `x' = |q(x)| - x` over `[0, t_end]` with fixed step `dt`.
pub fn integrate_continuous(
    inst: &LpInstance,
    solver: &EnergySolver,
    x0: &[f64],
    cfg: &ContinuousConfig<'_>,
) -> Result<ContinuousOutcome, DynamicsError> {
    if !(cfg.dt > 0.0 && cfg.dt <= 1e-2) {
        return Err(DynamicsError::InvalidConfig(format!("dt must lie in (0, 0.01], got {}", cfg.dt)));
    }
    if !(cfg.t_end >= 0.0 && cfg.t_end.is_finite()) {
        return Err(DynamicsError::InvalidConfig(format!("invalid horizon {}", cfg.t_end)));
    }
    let steps = (cfg.t_end / cfg.dt).round() as u64;
    let m = x0.len();
    let probe = Probe::new(inst, cfg.oracle, cfg.dual);
    let c = inst.c_f64();
    let mut st = Stepper::new(solver);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    let mut out = ContinuousOutcome { samples: Vec::new(), states: Vec::new(), x: Vec::new(), clamped: false };
    for step in 0..=steps {
        let t = step as f64 * cfg.dt;
        if let Some(level) = cfg.envelope {
            check_envelope(x0, &x, t, level, cfg.envelope_tol)?;
        }
        let sample = step == steps || (cfg.sample_stride > 0 && step % cfg.sample_stride == 0);
        if sample {
            let sol = st.solve(&x)?;
            out.clamped |= sol.clamped;
            let mut rec = probe.record(&x, sol, step, t);
            if let Some(dual) = cfg.dual {
                let c_opt = dual.alpha(&x);
                let flow: f64 = c.iter().zip(&sol.q).map(|(c, q)| c * q.abs()).sum();
                let cost: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
                rec.lyap_h = Some(flow / c_opt - cost / (c_opt * c_opt));
            }
            out.samples.push(rec);
            if cfg.keep_states {
                out.states.push((t, x.clone()));
            }
        }
        if step == steps {
            break;
        }
        let dt = cfg.dt;
        match cfg.method {
            Integrator::Euler => {
                derivative(&mut st, &x, &mut k1)?;
                for (xe, k) in x.iter_mut().zip(&k1) {
                    *xe += dt * k;
                }
            }
            Integrator::Rk4 => {
                derivative(&mut st, &x, &mut k1)?;
                for i in 0..m {
                    tmp[i] = x[i] + 0.5 * dt * k1[i];
                }
                derivative(&mut st, &tmp, &mut k2)?;
                for i in 0..m {
                    tmp[i] = x[i] + 0.5 * dt * k2[i];
                }
                derivative(&mut st, &tmp, &mut k3)?;
                for i in 0..m {
                    tmp[i] = x[i] + dt * k3[i];
                }
                derivative(&mut st, &tmp, &mut k4)?;
                for i in 0..m {
                    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        out.clamped |= st.solution().clamped;
    }
    out.x = x;
    Ok(out)
}

/// `x0 e^{-t} - tol <= x(t) <= B + max(0, x0 - B) e^{-t} + tol`.
pub fn check_envelope(x0: &[f64], x: &[f64], t: f64, level: f64, tol: f64) -> Result<(), DynamicsError> {
    let decay = (-t).exp();
    for (index, (&a, &v)) in x0.iter().zip(x).enumerate() {
        let lower = a * decay - tol;
        let upper = level + (a - level).max(0.0) * decay + tol;
        if v < lower || v > upper {
            return Err(DynamicsError::EnvelopeViolation { time: t, index, value: v, lower, upper });
        }
    }
    Ok(())
}
