//! Physarum dynamics for linear programs in equality form, together with an
//! exact brute-force oracle for small instances.

pub mod domination;
pub mod dynamics;
pub mod energy;
pub mod format;
pub mod instances;
pub mod invariants;
pub mod linalg;
pub mod model;
pub mod oracle;

pub use domination::{alpha_of, enumerate_dual_vertices, precondition, DominationCertificate, DualVertexSet};
pub use dynamics::{
    integrate_continuous, plan_steps, run, step_directed, step_undirected, CapacityState, Regime,
    RunConfig, RunOutcome, StepPlan, TraceRecord, Verdict,
};
pub use energy::{energy, solve_general, solve_positive, EnergySolver, MinEnergySolution};
pub use model::{compute_constants, validate, InstanceConstants, LpInstance, Mode, ModelError};
pub use oracle::{decompose, dist_to_opt, enumerate_bfs, round_to_kernel_free, BasicSolution, OracleReport};
