//! Benchmark fixtures shared by the criterion targets.

use std::sync::Arc;

use weakconf_core::fp_macro::{Frame, MacroSolverConfig, TimeScheme};
use weakconf_core::kinetic::{CollisionSpec, HypoConfig, KineticModel, KineticSolver, PhaseSpace, ScatteringKernel, TransportScheme};
use weakconf_core::{PhaseField, PhaseGrid, PotentialSpec, RadialField, RadialGrid};

/// Gaussian datum on the decay grid with its solver configuration.
pub fn macro_fixture(scheme: TimeScheme) -> (RadialField, MacroSolverConfig) {
    let grid = Arc::new(RadialGrid::log_uniform(3, 400.0, 0.05, 1e-5).expect("grid"));
    let u0 = RadialField::from_fn(grid.clone(), |r| (-r * r / 2.0).exp()).expect("datum");
    let mut cfg = MacroSolverConfig::new(PotentialSpec::v2(0.4), grid, 0.05, 0.05, Frame::Original);
    cfg.scheme = scheme;
    (u0, cfg)
}

pub fn spectral_grid(d: usize, h: f64) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::log_uniform(d, 16.0, h, 1e-4).expect("grid"))
}

/// Phase-space model with the two-bump datum used by the kinetic runs.
pub fn kinetic_fixture(nx: usize, nv: usize, scattering: bool) -> (KineticModel, PhaseField, HypoConfig) {
    let grid = PhaseGrid::new(nx, nv, 60.0, 8.0).expect("grid");
    let space = PhaseSpace::new(Arc::new(grid), PotentialSpec::v2(0.5)).expect("space");
    let spec = if scattering {
        CollisionSpec::scattering(ScatteringKernel::nonsymmetric_example(&space), 2.3)
    } else {
        CollisionSpec::fokker_planck()
    };
    let model = KineticModel::from_space(space, spec).expect("model");
    let lm = model.collision.lambda_m().expect("lambda_m");
    let cfg = HypoConfig::new(0.05, lm, PotentialSpec::v2(0.5), model.sigma_bar()).expect("hypo config");
    let f0 = PhaseField::from_fn(model.grid().clone(), |x, v| {
        (-(x - 2.0).powi(2) / 2.0 - (v - 1.0).powi(2) / 0.5).exp() + 0.5 * (-(x + 3.0).powi(2) - v * v).exp()
    })
    .expect("datum");
    (model, f0, cfg)
}

pub fn kinetic_solver(model: KineticModel) -> KineticSolver {
    KineticSolver::new(model, TransportScheme::Muscl)
}
