//! Time integration around a line soliton: the ZK equation itself, the
//! modulated system for `u = τ_ρ(v + Q_c)`, its cut-off and linearized
//! variants, the semigroup of the linear system and the tangent flow.

mod estimates;
mod etd;
mod modulated;
mod reference;
mod semigroup;
pub mod snapshot;
mod tangent;

pub use estimates::{localized_estimates, LocalizedEstimates};
pub use etd::{step_full, Etdrk4, FullFlow};
pub use modulated::{
    chi, chi_delta, rhs_modulated, step_linear, step_localized, step_modulated, Coupling, CutoffParams, ModRhs,
    ModulatedFlow, ModulatedState, StageCoef, MAX_CONDITION,
};
pub use reference::Reference;
pub use semigroup::{apply_semigroup, conservation_report, ConservationReport, Semigroup};
pub use tangent::{directional_derivative_errors, step_prescribed, step_tangent, ReferenceTrajectory, TangentState};

#[derive(Debug, thiserror::Error)]
pub enum DynError {
    #[error("solution blew up: sup norm {value:.3e} exceeds cap {cap:.3e}")]
    Blowup { value: f64, cap: f64 },
    #[error("non-finite values in the state")]
    NonFinite,
    #[error("speed left the admissible range: {0}")]
    BadSpeed(f64),
    #[error("modulation matrix is singular (condition number {condition:.3e})")]
    SingularModulation { condition: f64 },
    #[error("reference trajectory has {available} steps, step {step} requested")]
    TrajectoryMismatch { step: usize, available: usize },
    #[error("time step {flow} differs from the recorded trajectory step {trajectory}")]
    StepMismatch { flow: f64, trajectory: f64 },
    #[error("snapshot I/O: {0}")]
    Io(String),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Decomp(#[from] zk_decomp::DecompError),
}

/// Sum of `u`, the sampled soliton `τ_ρQ_c`, for rebuilding full states.
pub fn assemble_state(state: &ModulatedState) -> zk_grid::Field2D {
    let q = zk_soliton::SolitonProfile::sample_unchecked(state.c, state.v.grid());
    let mut u = zk_grid::Field2D::from_profile(&q.q);
    u.axpy(1.0, &state.v);
    u.translate(state.rho)
}
