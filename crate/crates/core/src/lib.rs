//! Numerical machinery for Tonelli Hamilton-Jacobi equations.
//!
//! The crate computes fundamental solutions `A_t(x, y)` by action
//! minimization, evaluates the Lax-Oleinik sup- and inf-convolutions built on
//! them, estimates superdifferentials of semiconcave solutions, and traces
//! singular generalized characteristics on `R^n` and on the flat torus.

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod action;
pub mod error;
pub mod export;
pub mod field;
pub mod fixtures;
pub mod lax_oleinik;
pub mod linalg;
pub mod models;
pub mod propagation;
pub mod singularity;
pub mod weak_kam;

pub use action::{
    fundamental_solution, fundamental_solution_with, main_regularity_check, minimize_action,
    probe_convexity, probe_convexity_with, probe_semiconcavity, probe_semiconcavity_with,
    ActionKernel, ActionOptions, FundamentalSolution, PlanarKernel, RegularityProbeReport,
    RegularityRatios, Trajectory,
};
pub use error::{HjError, Result};
pub use field::{GridData, ScalarField};
pub use fixtures::{fixture_by_id, fixture_field, FixtureSpec};
pub use lax_oleinik::{
    barrier_phi, barrier_psi, inf_convolution, intrinsic_step, step_time, step_time_lambda,
    sup_convolution, ConvolutionOptions, ConvolutionResult, StepTimeOptions,
};
pub use linalg::{Matrix, Vector};
pub use models::{
    check_tonelli, conjugate_bound, energy, lambda0, legendre, model_by_id, velocity_bound_kappa,
    GrowthBounds, Hamiltonian, HamiltonianModel, Lagrangian, LagrangianModel, Provenance,
    SampleSpec, TonelliModel, TonelliReport,
};
pub use propagation::{
    certify_inclusion, energy_monitor, initial_velocity, trace_arc, EnergyOptions, EnergyReport,
    InclusionCertificate, SingularArc, StopReason, TraceOptions,
};
pub use singularity::{
    classify_point, classify_with_estimate, minimal_energy_element, reachable_gradients,
    PointClassification, SamplingOptions, SuperdiffEstimate,
};
pub use weak_kam::{
    fundamental_solution_torus, trace_arc_torus, weak_kam_solve, TorusGrid, TorusKernel,
    TorusSolution, WeakKamOptions, WeakKamResult,
};
