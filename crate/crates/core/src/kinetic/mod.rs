//! Phase-space solver for `∂_t f + v ∂_x f − V'(x) ∂_v f = L f` in one space
//! and one velocity dimension, and the discrete hypocoercivity calculus.

pub mod bounds;
pub mod closure;
pub mod collision;
pub mod hypo;
pub mod run;
pub mod space;
pub mod transport;

pub use bounds::{operator_bound_suite, random_phase_field, BoundSuiteReport, BoundSummary};
pub use closure::{elliptic_moment_recursion, lambda_eps, positivity_window, NashEnvelope, PositivityWindow, ZOde, ZTrajectory};
pub use collision::{CollisionKind, CollisionOperator, CollisionSpec, ScatteringKernel};
pub use hypo::{BoundCheck, DTerms, HypoConfig, HypoState, KineticModel, MacroPairing};
pub use run::{
    elliptic_moment, kinetic_moments, read_snapshot, run_kinetic, write_snapshot, KineticMoments, KineticSolver, RunConfig, Sample,
    Trajectory, TrajectoryProperties, BOUNDARY_MASS_LIMIT,
};
pub use space::PhaseSpace;
pub use transport::{Transport, TransportScheme};
