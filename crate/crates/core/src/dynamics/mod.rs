//! Discrete directed and undirected dynamics, step-size planning and the
//! run loop.

mod continuous;
mod lyapunov;
mod plan;
mod trace;

pub use continuous::{integrate_continuous, ContinuousConfig, ContinuousOutcome, Integrator};
pub use lyapunov::{lyapunov_report, LyapunovReport};
pub use plan::{plan_steps, Regime, StepPlan};
pub use trace::{check_residual_geometry, read_trace_csv, write_trace_csv, TraceRecord, TRACE_HEADER};

use thiserror::Error;

use crate::domination::DualVertexSet;
use crate::energy::{EnergyError, EnergySolver, EnergyWorkspace, MinEnergySolution};
use crate::model::{LpInstance, Mode};
use crate::oracle::OracleReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("capacity {index} became non-positive at iteration {iter}; the step size is too large")]
    NonPositiveCapacity { index: usize, iter: u64 },
    #[error("starting point is not strongly dominating (alpha = {0})")]
    NotStronglyDominating(f64),
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("entry {index} left the bounded envelope at t = {time}: {value} not in [{lower}, {upper}]")]
    EnvelopeViolation { time: f64, index: usize, value: f64, lower: f64, upper: f64 },
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Capacities plus the iteration count and elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityState {
    pub x: Vec<f64>,
    pub iter: u64,
    pub time: f64,
}

impl CapacityState {
    pub fn new(x: Vec<f64>) -> Self {
        CapacityState { x, iter: 0, time: 0.0 }
    }
}

/// Owns the scratch space for repeated steps on one instance.
#[derive(Debug)]
pub struct Stepper<'a> {
    solver: &'a EnergySolver,
    ws: EnergyWorkspace,
    sol: MinEnergySolution,
}

impl<'a> Stepper<'a> {
    pub fn new(solver: &'a EnergySolver) -> Self {
        Stepper { solver, ws: EnergyWorkspace::default(), sol: MinEnergySolution::default() }
    }

    /// Solves at `x`; the result stays available through [`Stepper::solution`].
    pub fn solve(&mut self, x: &[f64]) -> Result<&MinEnergySolution, DynamicsError> {
        self.solver.solve_into(x, &mut self.ws, &mut self.sol)?;
        Ok(&self.sol)
    }

    pub fn solution(&self) -> &MinEnergySolution {
        &self.sol
    }

    /// Blends `x` towards the last solution: `(1-h) x + h q` or `+ h |q|`.
    pub fn blend(&self, x: &mut [f64], h: f64, directed: bool) {
        for (xe, &qe) in x.iter_mut().zip(&self.sol.q) {
            let target = if directed { qe } else { qe.abs() };
            *xe = (1.0 - h) * *xe + h * target;
        }
    }
}

fn check_step(h: f64) -> Result<(), DynamicsError> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(DynamicsError::InvalidStep(h))
    }
}

fn first_non_positive(x: &[f64]) -> Option<usize> {
    x.iter().position(|v| !(*v > 0.0))
}

/// One step of `x' = (1-h) x + h q`.
pub fn step_directed(solver: &EnergySolver, state: &CapacityState, h: f64) -> Result<CapacityState, DynamicsError> {
    check_step(h)?;
    let mut st = Stepper::new(solver);
    st.solve(&state.x)?;
    let mut x = state.x.clone();
    st.blend(&mut x, h, true);
    if let Some(index) = first_non_positive(&x) {
        return Err(DynamicsError::NonPositiveCapacity { index, iter: state.iter + 1 });
    }
    Ok(CapacityState { x, iter: state.iter + 1, time: state.time + h })
}

/// One step of `x' = (1-h) x + h |q|`.
pub fn step_undirected(solver: &EnergySolver, state: &CapacityState, h: f64) -> Result<CapacityState, DynamicsError> {
    check_step(h)?;
    let mut st = Stepper::new(solver);
    st.solve(&state.x)?;
    let mut x = state.x.clone();
    st.blend(&mut x, h, false);
    Ok(CapacityState { x, iter: state.iter + 1, time: state.time + h })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    IterationCap,
    Diverged,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::IterationCap => "iteration-cap",
            Verdict::Diverged => "diverged",
        })
    }
}

/// Step sizes per iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Plan(StepPlan),
}

impl Schedule {
    pub fn step(&self, iter: u64) -> f64 {
        match self {
            Schedule::Constant(h) => *h,
            Schedule::Plan(p) => {
                if iter < p.phase1_steps {
                    p.h
                } else {
                    p.phase2_step
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    pub mode: Mode,
    pub schedule: Schedule,
    pub eps: f64,
    pub max_iters: u64,
    /// Record every `trace_stride`-th iteration; 0 keeps only the endpoints.
    pub trace_stride: u64,
    pub oracle: Option<&'a OracleReport>,
    pub dual: Option<&'a DualVertexSet>,
    /// `D gamma_A`; the oracle stopping threshold is `eps / dist_scale`.
    pub dist_scale: f64,
    /// `Psi0`; the run is declared diverged past ten times this bound.
    pub psi0: Option<f64>,
}

impl<'a> RunConfig<'a> {
    pub fn new(mode: Mode, schedule: Schedule, eps: f64, max_iters: u64) -> Self {
        RunConfig {
            mode,
            schedule,
            eps,
            max_iters,
            trace_stride: 1,
            oracle: None,
            dual: None,
            dist_scale: 1.0,
            psi0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub state: CapacityState,
    pub trace: Vec<TraceRecord>,
    /// Some capacity hit the clamp floor during a solve.
    pub clamped: bool,
    pub last: TraceRecord,
}

fn inf_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Float copies of the instance data plus cached optimal points, used to
/// evaluate trace quantities without reconverting every iteration.
pub(crate) struct Probe<'a> {
    a: crate::linalg::Matrix<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    optimal: Option<Vec<Vec<f64>>>,
    dual: Option<&'a DualVertexSet>,
}

impl<'a> Probe<'a> {
    pub(crate) fn new(inst: &LpInstance, oracle: Option<&OracleReport>, dual: Option<&'a DualVertexSet>) -> Self {
        Probe {
            a: inst.a_f64(),
            b: inst.b_f64(),
            c: inst.c_f64(),
            optimal: oracle.map(|o| o.optimal_points()),
            dual,
        }
    }

    pub(crate) fn residual_inf(&self, x: &[f64]) -> f64 {
        let (n, m) = (self.a.rows(), self.a.cols());
        let mut worst = 0.0f64;
        for i in 0..n {
            let row = &self.a.data()[i * m..(i + 1) * m];
            let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            worst = worst.max((self.b[i] - ax).abs());
        }
        worst
    }

    pub(crate) fn dist(&self, x: &[f64]) -> Option<f64> {
        self.optimal.as_ref().map(|pts| {
            pts.iter()
                .map(|f| f.iter().zip(x).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub(crate) fn record(&self, x: &[f64], sol: &MinEnergySolution, iter: u64, time: f64) -> TraceRecord {
        TraceRecord {
            iter,
            time,
            cost: self.c.iter().zip(x).map(|(c, x)| c * x).sum(),
            residual_inf: self.residual_inf(x),
            alpha: self.dual.map(|d| d.alpha(x)),
            energy: self.b.iter().zip(&sol.p).map(|(b, p)| b * p).sum(),
            x_min: x.iter().copied().fold(f64::INFINITY, f64::min),
            x_max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            dist_inf: self.dist(x),
            lyap_h: None,
        }
    }
}

/// Runs the discrete dynamics until the stopping rule fires.
///
/// With an oracle the run stops once `dist(x, X*) < eps / dist_scale`;
/// otherwise once the fixed-point gap `||x - q||_inf` (directed, together
/// with the residual) or `||x - |q| ||_inf` (undirected) drops below `eps`.
pub fn run(
    inst: &LpInstance,
    solver: &EnergySolver,
    x0: &[f64],
    cfg: &RunConfig<'_>,
) -> Result<RunOutcome, DynamicsError> {
    if !(cfg.eps > 0.0) {
        return Err(DynamicsError::InvalidConfig(format!("eps must be positive, got {}", cfg.eps)));
    }
    let directed = cfg.mode == Mode::Directed;
    let mut st = Stepper::new(solver);
    let mut x = x0.to_vec();
    let mut time = 0.0;
    let mut trace = Vec::new();
    let mut clamped = false;
    let threshold = cfg.eps / cfg.dist_scale;
    let probe = Probe::new(inst, cfg.oracle, cfg.dual);
    let mut iter = 0u64;
    loop {
        st.solve(&x)?;
        clamped |= st.solution().clamped;
        let traced = cfg.trace_stride > 0 && iter % cfg.trace_stride == 0;
        let verdict = if let Some(d) = probe.dist(&x) {
            (d < threshold).then_some(Verdict::Converged)
        } else {
            let q = &st.solution().q;
            let gap = inf_norm(x.iter().zip(q).map(|(a, b)| if directed { a - b } else { a - b.abs() }));
            let res = if directed { probe.residual_inf(&x) } else { 0.0 };
            (gap.max(res) < cfg.eps).then_some(Verdict::Converged)
        }
        .or_else(|| (iter >= cfg.max_iters).then_some(Verdict::IterationCap))
        .or_else(|| {
            cfg.psi0.and_then(|psi| (inf_norm(x.iter().copied()) > 10.0 * psi).then_some(Verdict::Diverged))
        });
        if traced || verdict.is_some() {
            let rec = probe.record(&x, st.solution(), iter, time);
            if let Some(verdict) = verdict {
                if !trace.last().map_or(false, |r: &TraceRecord| r.iter == iter) {
                    trace.push(rec.clone());
                }
                return Ok(RunOutcome {
                    verdict,
                    state: CapacityState { x, iter, time },
                    trace,
                    clamped,
                    last: rec,
                });
            }
            trace.push(rec);
        }
        let h = cfg.schedule.step(iter);
        check_step(h)?;
        st.blend(&mut x, h, directed);
        if directed {
            if let Some(index) = first_non_positive(&x) {
                return Err(DynamicsError::NonPositiveCapacity { index, iter: iter + 1 });
            }
        }
        time += h;
        iter += 1;
    }
}
