//! Spectral gaps of the weighted Poincaré problems `−Δ + ∇Φ·∇` on `L²(e^{−Φ})`.
//!
//! The Schrödinger operator `−Δ + ψ` with `ψ = ¼|∇Φ|² − ½ΔΦ` is unitarily
//! equivalent through `w = f e^{−Φ/2}`. Discretization reuses the
//! finite-volume form of the Fokker-Planck solver: `S g = λ M g` with `S` the
//! face-conductance Laplacian and `M = diag(w_i e^{−Φ_i})`, symmetrized as
//! `M^{−1/2} S M^{−1/2}`. The outer face carries a Dirichlet condition.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp_macro::{bernoulli, FvOperator};
use crate::grids::RadialGrid;
use crate::linalg::{solve_tridiagonal, SymTridiagonal};
use crate::potentials::SelfSimilarPotential;

/// Relative bisection tolerance for eigenvalues.
const EIG_TOL: f64 = 1e-12;
/// Eigenvalues within this relative distance of 4 are flagged.
pub const CONTINUUM_BAND: f64 = 0.02;
/// Tail mass beyond `r_max/2` above which a result is flagged.
pub const TAIL_WARNING: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct SpectralProblem {
    pub d: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub mode_k: u32,
    pub grid: Arc<RadialGrid>,
    pub count: usize,
}

impl SpectralProblem {
    pub fn new(gamma: f64, sigma: f64, mode_k: u32, grid: Arc<RadialGrid>, count: usize) -> Self {
        Self { d: grid.d(), gamma, sigma, mode_k, grid, count }
    }

    fn validate(&self) -> Result<()> {
        if self.grid.d() != self.d {
            return Err(Error::Domain(format!("grid dimension {} differs from d = {}", self.grid.d(), self.d)));
        }
        if self.count == 0 || self.count + 1 >= self.grid.len() {
            return Err(Error::Domain(format!("cannot extract {} eigenvalues from {} nodes", self.count, self.grid.len())));
        }
        if self.sigma == 0.0 && !(self.gamma < self.d as f64) {
            return Err(Error::Domain(format!("sigma = 0 needs gamma < d, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn centrifugal(&self) -> f64 {
        let k = self.mode_k as f64;
        k * (k + self.d as f64 - 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub d: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub mode_k: u32,
    pub eigenvalues: Vec<f64>,
    /// Fraction of each eigenfunction's `L²(e^{−Φ})` mass beyond `r_max/2`.
    pub tails: Vec<f64>,
    pub continuum_adjacent: Vec<bool>,
    /// Set when some tail exceeds [`TAIL_WARNING`].
    pub tail_warning: bool,
}

/// Symmetric tridiagonal `M^{−1/2} S M^{−1/2}` and `M^{1/2}` for a potential
/// given at the nodes; `dirichlet` adds the outer-face conductance.
fn symmetrized(grid: &RadialGrid, pot: &[f64], pot_outer: Option<f64>, centrifugal: f64) -> Result<(SymTridiagonal, Vec<f64>)> {
    let op = FvOperator::assemble(grid, pot, centrifugal);
    let n = grid.len();
    let (_, mut diag, off) = op.pencil(0.0, 1.0);
    if let Some(phi_b) = pot_outer {
        let last = n - 1;
        let f = grid.r_max();
        let h = f - grid.nodes()[last];
        let area = *grid.face_areas().last().unwrap();
        diag[last] += area / h * bernoulli(phi_b - pot[last]) * (-pot[last]).exp();
    }
    let sqrt_m: Vec<f64> = op.mass.iter().map(|m| m.sqrt()).collect();
    if let Some(i) = sqrt_m.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::NonFinite(format!("weight e^(-Phi) underflows or overflows at node {i}; reduce r_max")));
    }
    let d: Vec<f64> = diag.iter().zip(&op.mass).map(|(a, m)| a / m).collect();
    let o: Vec<f64> = off.iter().enumerate().map(|(i, a)| a / (sqrt_m[i] * sqrt_m[i + 1])).collect();
    Ok((SymTridiagonal::new(d, o)?, sqrt_m))
}

fn tail_fraction(grid: &RadialGrid, y: &[f64]) -> f64 {
    let half = 0.5 * grid.r_max();
    let total: f64 = y.iter().map(|v| v * v).sum();
    let tail: f64 = grid.nodes().iter().zip(y).filter(|(r, _)| **r > half).map(|(_, v)| v * v).sum();
    tail / total
}

/// Lowest eigenvalues of the weighted Poincaré operator in one
/// spherical-harmonic sector. In the radial sector the constant mode is
/// deflated, so the first value returned is the spectral gap.
pub fn poincare_gap(problem: &SpectralProblem) -> Result<SpectralResult> {
    problem.validate()?;
    let phi = SelfSimilarPotential::new(problem.gamma, problem.sigma)?;
    let grid = &problem.grid;
    let pot: Vec<f64> = grid.nodes().iter().map(|&r| phi.phi(r)).collect();
    let (a, _) = symmetrized(grid, &pot, Some(phi.phi(grid.r_max())), problem.centrifugal())?;
    let skip = usize::from(problem.mode_k == 0);
    if skip == 1 && !(a.eigenvalue(0, EIG_TOL)? < 1e-2 * a.eigenvalue(1, EIG_TOL)?) {
        return Err(Error::Solver("radial sector has no near-zero constant mode; r_max is too small".into()));
    }
    let mut eigenvalues = Vec::with_capacity(problem.count);
    let mut tails = Vec::with_capacity(problem.count);
    for k in skip..skip + problem.count {
        let lambda = a.eigenvalue(k, EIG_TOL)?;
        if !lambda.is_finite() {
            return Err(Error::Solver(format!("eigenvalue {k} did not converge")));
        }
        let y = a.eigenvector(lambda)?;
        tails.push(tail_fraction(grid, &y));
        eigenvalues.push(lambda);
    }
    let continuum_adjacent = eigenvalues.iter().map(|l| ((l - 4.0) / 4.0).abs() < CONTINUUM_BAND).collect();
    let tail_warning = tails.iter().any(|&t| t > TAIL_WARNING);
    Ok(SpectralResult {
        d: problem.d,
        gamma: problem.gamma,
        sigma: problem.sigma,
        mode_k: problem.mode_k,
        eigenvalues,
        tails,
        continuum_adjacent,
        tail_warning,
    })
}

/// Poincaré constant `λ_{γ,σ}`: the smallest gap over the sectors `k = 0, 1, 2`.
/// Higher sectors have larger centrifugal barriers.
pub fn weighted_poincare_gap(gamma: f64, sigma: f64, grid: Arc<RadialGrid>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for k in 0..=2 {
        let res = poincare_gap(&SpectralProblem::new(gamma, sigma, k, grid.clone(), 1))?;
        best = best.min(res.eigenvalues[0]);
    }
    Ok(best)
}

/// `λ_{γ,σ}` along a sorted list of `σ` values.
pub fn sigma_continuity_scan(gamma: f64, sigmas: &[f64], grid: Arc<RadialGrid>) -> Result<Vec<f64>> {
    if sigmas.windows(2).any(|w| w[1] < w[0]) || sigmas.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::Domain("sigmas must be sorted and lie in [0, 1]".into()));
    }
    sigmas.iter().map(|&s| weighted_poincare_gap(gamma, s, grid.clone())).collect()
}

/// CSV rows `d,gamma,sigma,mode,index,eigenvalue,tail_diag`.
pub fn spectrum_csv(results: &[SpectralResult]) -> String {
    let mut out = String::from("d,gamma,sigma,mode,index,eigenvalue,tail_diag\n");
    for r in results {
        for (i, (l, t)) in r.eigenvalues.iter().zip(&r.tails).enumerate() {
            let _ = writeln!(out, "{},{},{},{},{},{:e},{:e}", r.d, r.gamma, r.sigma, r.mode_k, i, l, t);
        }
    }
    out
}

/// Sector values of the ball Poincaré constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPoincare {
    /// Radial functions with zero `|x|^{k−γ}`-weighted mean.
    pub radial: f64,
    /// Lowest non-radial value (`k = 1` for `d ≥ 2`, odd functions for `d = 1`);
    /// these satisfy the constraint automatically.
    pub nonradial: f64,
    /// `min(radial, nonradial)`.
    pub lambda: f64,
}

/// Best `λ` in `∫_{B_R} w² |x|^{−γ} ≤ λ^{−1} ∫_{B_R} |∇w|² |x|^{−γ}` for `w`
/// with `∫_{B_R} w |x|^{k−γ} = 0`, with natural (Neumann) conditions at `R`.
pub fn ball_poincare_constant(grid: Arc<RadialGrid>, gamma: f64, k_weight: f64) -> Result<BallPoincare> {
    let d = grid.d();
    if !(gamma >= 0.0 && gamma < d as f64) || !(k_weight >= 0.5 * gamma) {
        return Err(Error::Domain(format!("ball Poincare needs 0 <= gamma < d and k >= gamma/2 (gamma = {gamma}, k = {k_weight})")));
    }
    let pot: Vec<f64> = grid.nodes().iter().map(|&r| gamma * r.ln()).collect();
    let (a, sqrt_m) = symmetrized(&grid, &pot, None, 0.0)?;
    let n: Vec<f64> = grid.nodes().iter().zip(grid.weights()).map(|(&r, &w)| w * r.powf(k_weight - gamma)).collect();
    let op = FvOperator::assemble(&grid, &pot, 0.0);
    let radial = constrained_lowest(&op, &n, a.eigenvalue(1, EIG_TOL)?)?;
    let nonradial = if d == 1 {
        // odd functions: g(0) = 0 imposed through the face at the origin
        let (mut odd, _) = symmetrized(&grid, &pot, None, 0.0)?;
        let h = grid.nodes()[0];
        odd.diag[0] += grid.face_areas()[0] * (-pot[0]).exp() / h / (sqrt_m[0] * sqrt_m[0]);
        odd.eigenvalue(0, EIG_TOL)?
    } else {
        let (b, _) = symmetrized(&grid, &pot, None, (d - 1) as f64)?;
        b.eigenvalue(0, EIG_TOL)?
    };
    Ok(BallPoincare { radial, nonradial, lambda: radial.min(nonradial) })
}

/// Lowest eigenvalue of `S g = λ M g` on `{nᵀ g = 0}`, from the secular
/// equation `nᵀ(S − λM)^{−1} n = 0` on `(0, μ_1)`. `S` is the Neumann
/// operator, whose null vector (constants) is exact in `g` form.
fn constrained_lowest(op: &FvOperator, n: &[f64], mu1: f64) -> Result<f64> {
    let secular = |lambda: f64| -> Result<f64> {
        let (lower, diag, upper) = op.pencil(-lambda, 1.0);
        let y = solve_tridiagonal(&lower, &diag, &upper, n)?;
        Ok(n.iter().zip(&y).map(|(p, q)| p * q).sum())
    };
    let (mut lo, mut hi) = (1e-6 * mu1, mu1 * (1.0 - 1e-10));
    if secular(hi)? <= 0.0 {
        // n is orthogonal to the second eigenvector; the root sits at μ_1
        return Ok(mu1);
    }
    if secular(lo)? >= 0.0 {
        return Err(Error::Solver("constraint is orthogonal to constants; no admissible mode below mu_1".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if secular(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= EIG_TOL * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
