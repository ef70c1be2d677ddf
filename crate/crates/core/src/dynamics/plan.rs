use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use super::DynamicsError;
use crate::linalg::rational_to_f64;
use crate::model::InstanceConstants;

/// Step-size regime selected by the starting domination level `alpha0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `alpha0 = 1`.
    Feasible,
    /// `alpha0 in [1/2, 1)`.
    Low,
    /// `alpha0 in (1, 1/h0]`.
    High,
    /// `alpha0 < 1/2`.
    Tiny,
    /// `alpha0 > 1/h0`.
    Huge,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Feasible => "feasible",
            Regime::Low => "low",
            Regime::High => "high",
            Regime::Tiny => "tiny",
            Regime::Huge => "huge",
        })
    }
}

/// A two-phase step schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub regime: Regime,
    /// Step size of the first phase; for the in-range regimes this is the
    /// regime cap and the first phase is empty.
    pub h: f64,
    pub phase1_steps: u64,
    /// `min((Phi/opt) h0^2 / 2, h0 / 2)`.
    pub phase2_step: f64,
    /// `4 C1 / (h Phi) ln(C2 Psi0 / (eps min(1, x0_min)))` for the phase-2 step.
    pub phase2_iterations: f64,
    pub phi_over_opt: f64,
    pub phi: f64,
}

/// Chooses the regime and step sizes.
///
/// `phi_over_opt` defaults to `1/C3` and `phi` to `1/(D gamma_A)^2`, the
/// constructive lower bounds.
pub fn plan_steps(
    consts: &InstanceConstants,
    x0: &[f64],
    alpha0: &BigRational,
    phi_over_opt: Option<&BigRational>,
    phi: Option<&BigRational>,
    eps: f64,
) -> Result<StepPlan, DynamicsError> {
    if !alpha0.is_positive() {
        return Err(DynamicsError::NotStronglyDominating(rational_to_f64(alpha0)));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DynamicsError::InvalidConfig(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !consts.h0.is_positive() {
        return Err(DynamicsError::InvalidConfig("h0 is zero: costs are all zero".into()));
    }
    let one = BigRational::one();
    let half = BigRational::new(1.into(), 2.into());
    let quarter = BigRational::new(1.into(), 4.into());
    let h0 = &consts.h0;
    let ratio = phi_over_opt.cloned().unwrap_or_else(|| &one / &consts.c3);
    let dg = &consts.d * BigRational::from_integer(consts.gamma_a.clone());
    let phi = phi.cloned().unwrap_or_else(|| &one / (&dg * &dg));
    let (regime, h, phase1_steps) = if *alpha0 == one {
        (Regime::Feasible, h0.clone(), 0)
    } else if *alpha0 >= half && *alpha0 < one {
        (Regime::Low, h0 * &half, 0)
    } else if *alpha0 > one && *alpha0 <= &one / h0 {
        (Regime::High, h0.clone(), 0)
    } else if *alpha0 < half {
        let ah = alpha0 * h0;
        let h = &ratio * &ah * &ah;
        let steps = (&one / &h).ceil().to_integer().to_u64().unwrap_or(u64::MAX);
        (Regime::Tiny, h, steps)
    } else {
        let h = ratio.clone().min(quarter);
        let target = rational_to_f64(&(h0 * (alpha0 - &one) / (&one - h0)));
        let hf = rational_to_f64(&h);
        let steps = (target.ln() / -(1.0 - hf).ln()).floor().max(0.0);
        (Regime::Huge, h, steps as u64)
    };
    let phase2 = (&ratio * h0 * h0 * &half).min(h0 * &half);
    let phase2_step = rational_to_f64(&phase2);
    let phi_f = rational_to_f64(&phi);
    let x_min = x0.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    let log_arg = rational_to_f64(&consts.c2) * rational_to_f64(&consts.psi0) / (eps * x_min);
    let phase2_iterations = 4.0 * rational_to_f64(&consts.c1) / (phase2_step * phi_f) * log_arg.ln();
    Ok(StepPlan {
        regime,
        h: rational_to_f64(&h),
        phase1_steps,
        phase2_step,
        phase2_iterations,
        phi_over_opt: rational_to_f64(&ratio),
        phi: phi_f,
    })
}
