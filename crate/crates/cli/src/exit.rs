//! Exit codes and the mapping from library errors.

use physarum_core::domination::DominationError;
use physarum_core::dynamics::DynamicsError;
use physarum_core::energy::EnergyError;
use physarum_core::instances::InstanceError;
use physarum_core::oracle::OracleError;
use physarum_core::ModelError;

pub const CONVERGED: u8 = 0;
pub const CHECK_FAILED: u8 = 1;
pub const ITERATION_CAP: u8 = 2;
pub const INVALID: u8 = 3;
pub const NOT_DOMINATING: u8 = 4;
pub const SIZE_CAP: u8 = 5;
pub const DYNAMICS: u8 = 6;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Failure::new(INVALID, message)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let code = if matches!(e, ModelError::SizeCap { .. }) { SIZE_CAP } else { INVALID };
        Failure::new(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::SizeCap { .. } => Failure::new(SIZE_CAP, e.to_string()),
            OracleError::Model(m) => m.into(),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

impl From<DominationError> for Failure {
    fn from(e: DominationError) -> Self {
        match e {
            DominationError::SizeCap { .. } => Failure::new(SIZE_CAP, e.to_string()),
            DominationError::Model(m) => m.into(),
            DominationError::Oracle(o) => o.into(),
        }
    }
}

impl From<EnergyError> for Failure {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::SingularLaplacian => Failure::new(DYNAMICS, e.to_string()),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        let code = match &e {
            DynamicsError::NotStronglyDominating(_) => NOT_DOMINATING,
            DynamicsError::InvalidConfig(_) | DynamicsError::InvalidStep(_) => INVALID,
            _ => DYNAMICS,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::Model(m) => m.into(),
            _ => Failure::invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::invalid(e.to_string())
    }
}
