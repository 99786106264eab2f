//! Numerical laboratory for Fokker-Planck and linear kinetic equations with
//! logarithmic (very weak) confinement.
//!
//! The crate is organised bottom-up:
//!
//! * [`grids`]: radial and phase-space grids with their quadratures,
//! * [`potentials`]: `V_1`, `V_2`, self-similar potentials, profiles and closed-form constants,
//! * [`fp_macro`]: implicit finite-volume solver for the macroscopic equation,
//! * [`spectral`]: weighted Poincaré gaps and ball Poincaré constants,
//! * [`kinetic`]: phase-space solver and the discrete hypocoercivity calculus,
//! * [`inequalities`]: Rayleigh-quotient estimates of Nash, Hardy and CKN constants,
//! * [`rates`]: power-law fitting and verdict bundles.

pub mod error;
pub mod fp_macro;
pub mod grids;
pub mod inequalities;
pub mod kinetic;
pub mod linalg;
pub mod potentials;
pub mod rates;
pub mod spectral;

pub use error::{Error, Result};
pub use grids::{PhaseField, PhaseGrid, RadialField, RadialGrid};
pub use potentials::{PotentialKind, PotentialSpec, ProfileParams, SelfSimilarPotential};
pub use rates::{DecaySeries, RateFit, TheoremId, TheoremVerdict, VerdictBundle};
