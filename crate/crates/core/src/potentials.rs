//! Confinement potentials, self-similar profiles and closed-form constants.

use crate::error::{Error, Result};
use crate::grids::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PotentialKind {
    NoPotential,
    /// `γ log r`
    V1,
    /// `γ log ⟨r⟩ = (γ/2) log(1 + r²)`
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub gamma: f64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::Domain("gamma must be finite".into()));
        }
        if kind == PotentialKind::NoPotential && gamma != 0.0 {
            return Err(Error::Domain(format!("NoPotential requires gamma = 0, got {gamma}")));
        }
        Ok(Self { kind, gamma })
    }

    pub fn none() -> Self {
        Self { kind: PotentialKind::NoPotential, gamma: 0.0 }
    }

    pub fn v1(gamma: f64) -> Self {
        Self { kind: PotentialKind::V1, gamma }
    }

    pub fn v2(gamma: f64) -> Self {
        Self { kind: PotentialKind::V2, gamma }
    }

    /// The `σ` of the matching self-similar potential: 0 for `V1`, 1 for `V2`.
    pub fn sigma(&self) -> f64 {
        match self.kind {
            PotentialKind::V2 => 1.0,
            _ => 0.0,
        }
    }

    /// Decay-theorem experiments need `γ < d`.
    pub fn check_decay_range(&self, d: usize) -> Result<()> {
        if self.gamma >= d as f64 {
            return Err(Error::Precondition(format!("decay experiments need gamma < d, got gamma = {} with d = {d}", self.gamma)));
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        eval_potential(*self, r)
    }

    /// `V'(r)`.
    pub fn grad(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::NoPotential => 0.0,
            PotentialKind::V1 => self.gamma / r,
            PotentialKind::V2 => self.gamma * r / (1.0 + r * r),
        }
    }

    /// `V''(r)`.
    pub fn hess(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::NoPotential => 0.0,
            PotentialKind::V1 => -self.gamma / (r * r),
            PotentialKind::V2 => self.gamma * (1.0 - r * r) / (1.0 + r * r).powi(2),
        }
    }
}

/// `⟨r⟩ = sqrt(1 + r²)`.
pub fn japanese_bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

pub fn eval_potential(spec: PotentialSpec, r: f64) -> Result<f64> {
    match spec.kind {
        PotentialKind::NoPotential => Ok(0.0),
        PotentialKind::V1 => {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("V1 is singular at r = {r}")));
            }
            Ok(spec.gamma * r.ln())
        }
        PotentialKind::V2 => Ok(0.5 * spec.gamma * (r * r).ln_1p()),
    }
}

/// `Φ_{γ,σ}(ξ) = ½|ξ|² + (γ/2) log(σ + |ξ|²)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SelfSimilarPotential {
    pub gamma: f64,
    pub sigma: f64,
}

impl SelfSimilarPotential {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("need sigma >= 0 and finite gamma, got {sigma}, {gamma}")));
        }
        Ok(Self { gamma, sigma })
    }

    pub fn phi(&self, r: f64) -> f64 {
        let x = self.sigma + r * r;
        let log_term = if self.gamma == 0.0 { 0.0 } else { 0.5 * self.gamma * x.ln() };
        0.5 * r * r + log_term
    }

    /// `∂_r Φ = r (1 + γ/X)`.
    pub fn dphi(&self, r: f64) -> f64 {
        r * (1.0 + self.gamma / (self.sigma + r * r))
    }

    /// `ΔΦ = d + (d−2)γ/X + 2γσ/X²`.
    pub fn laplacian(&self, d: usize, r: f64) -> f64 {
        let x = self.sigma + r * r;
        let df = d as f64;
        df + (df - 2.0) * self.gamma / x + 2.0 * self.gamma * self.sigma / (x * x)
    }

    pub fn psi(&self, d: usize, r: f64) -> Result<f64> {
        schrodinger_psi(d, self.gamma, self.sigma, r)
    }
}

/// `ψ = ¼|∇Φ|² − ½ΔΦ` in closed form, with `X = r² + σ`:
/// `4ψ = X − (2d+σ−2γ) − γ(2d+2σ−γ−4)/X − γσ(γ+4)/X²`.
pub fn schrodinger_psi(d: usize, gamma: f64, sigma: f64, r: f64) -> Result<f64> {
    let x = r * r + sigma;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("psi needs r² + sigma > 0 (r = {r}, sigma = {sigma})")));
    }
    let df = d as f64;
    let four_psi =
        x - (2.0 * df + sigma - 2.0 * gamma) - gamma * (2.0 * df + 2.0 * sigma - gamma - 4.0) / x - gamma * sigma * (gamma + 4.0) / (x * x);
    Ok(0.25 * four_psi)
}

/// Parameters of the profiles `c (σ + r²)^{−γ/2} e^{−r²/2}` and their
/// self-similar evolution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProfileParams {
    pub c_star: f64,
    pub gamma: f64,
    pub d: usize,
    pub sigma: f64,
}

impl ProfileParams {
    pub fn new(c_star: f64, gamma: f64, d: usize, sigma: f64) -> Result<Self> {
        if !(c_star > 0.0) || d == 0 || !(sigma == 0.0 || sigma == 1.0) {
            return Err(Error::Domain(format!("profile needs c_star > 0, d >= 1 and sigma in {{0, 1}} (got {c_star}, {d}, {sigma})")));
        }
        Ok(Self { c_star, gamma, d, sigma })
    }

    /// Chooses `c_star` so that the `t = 0` profile has the given mass on `grid`.
    pub fn mass_matched(gamma: f64, d: usize, sigma: f64, mass: f64, grid: &RadialGrid) -> Result<Self> {
        if grid.d() != d {
            return Err(Error::Domain(format!("grid dimension {} differs from d = {d}", grid.d())));
        }
        let unit = Self::new(1.0, gamma, d, sigma)?;
        let mut m1 = 0.0;
        for (&r, &w) in grid.nodes().iter().zip(grid.weights()) {
            m1 += w * unit.u_star(0.0, r)?;
        }
        if !(mass > 0.0) || !(m1 > 0.0) {
            return Err(Error::Domain(format!("mass matching needs positive masses (target {mass}, unit {m1})")));
        }
        Ok(Self { c_star: mass / m1, ..unit })
    }

    /// `c (1+2t)^{−(d−γ)/2} (σ + r²)^{−γ/2} exp(−r²/(2(1+2t)))`.
    pub fn u_star(&self, t: f64, r: f64) -> Result<f64> {
        let x = self.sigma + r * r;
        if self.gamma > 0.0 && !(x > 0.0) {
            return Err(Error::Domain("u_star is singular at r = 0 when sigma = 0 and gamma > 0".into()));
        }
        let s = 1.0 + 2.0 * t;
        let df = self.d as f64;
        let weight = if self.gamma == 0.0 { 1.0 } else { x.powf(-0.5 * self.gamma) };
        Ok(self.c_star * s.powf(-0.5 * (df - self.gamma)) * weight * (-r * r / (2.0 * s)).exp())
    }

    /// Self-similar profile `c (σ e^{−2τ} + ξ²)^{−γ/2} e^{−ξ²/2}`.
    pub fn v_star(&self, tau: f64, xi: f64) -> Result<f64> {
        let x = self.sigma * (-2.0 * tau).exp() + xi * xi;
        if self.gamma > 0.0 && !(x > 0.0) {
            return Err(Error::Domain("v_star is singular at the origin when sigma = 0 and gamma > 0".into()));
        }
        let weight = if self.gamma == 0.0 { 1.0 } else { x.powf(-0.5 * self.gamma) };
        Ok(self.c_star * weight * (-0.5 * xi * xi).exp())
    }
}

pub fn u_star(params: ProfileParams, t: f64, r: f64) -> Result<f64> {
    params.u_star(t, r)
}

/// `(e / (2|γ| t))^{γ/2}`: for `γ < 0` this is `max_r r^{−γ} e^{−r²/(4t)}`.
pub fn unif_max_bound(gamma: f64, t: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Err(Error::Domain("unif_max_bound is degenerate at gamma = 0".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("unif_max_bound needs t > 0, got {t}")));
    }
    Ok((std::f64::consts::E / (2.0 * gamma.abs() * t)).powf(0.5 * gamma))
}

/// Stated gap of the weighted Poincaré inequality for `σ = 0`:
/// `min{4, 4(d−γ), d−1}` for `d ≥ 2` and `4(1−γ)` for `d = 1`.
/// `γ = 0` is accepted and continues the formula.
pub fn lambda_star(d: usize, gamma: f64) -> Result<f64> {
    let df = d as f64;
    if d == 0 || !(gamma >= 0.0 && gamma < df) {
        return Err(Error::Domain(format!("lambda_star needs 0 <= gamma < d, got gamma = {gamma}, d = {d}")));
    }
    Ok(if d == 1 { 4.0 * (1.0 - gamma) } else { 4f64.min(4.0 * (df - gamma)).min(df - 1.0) })
}

/// `ζ_p = (d/2)(1 − 1/p) + min{4, 4(d−γ), d−1} / (2p)`; `p = ∞` is allowed.
pub fn zeta_p(d: usize, gamma: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("zeta_p needs p >= 1, got {p}")));
    }
    let df = d as f64;
    if d == 0 || !(gamma >= 0.0 && gamma < df) {
        return Err(Error::Domain(format!("zeta_p needs 0 <= gamma < d, got gamma = {gamma}, d = {d}")));
    }
    let m = 4f64.min(4.0 * (df - gamma)).min(df - 1.0);
    Ok(0.5 * df * (1.0 - 1.0 / p) + m / (2.0 * p))
}

/// `c = (4/d) min{1, 1 − 2γ/(d−2)} C_Nash^{−1} (‖u₀‖₂ / ‖u₀‖₁)^{4/d}`,
/// valid for `d ≥ 3` and `γ < (d−2)/2`.
pub fn theorem1_rate_constant(d: usize, gamma: f64, c_nash: f64, norm1: f64, norm2: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::Domain(format!("the L² decay estimate needs d >= 3, got {d}")));
    }
    let df = d as f64;
    if !(gamma < 0.5 * (df - 2.0)) {
        return Err(Error::Domain(format!("the L² decay estimate needs gamma < (d-2)/2 = {}, got {gamma}", 0.5 * (df - 2.0))));
    }
    if !(c_nash > 0.0 && norm1 > 0.0 && norm2 > 0.0) {
        return Err(Error::Domain("Nash constant and norms must be positive".into()));
    }
    let factor = 1f64.min(1.0 - 2.0 * gamma / (df - 2.0));
    Ok(4.0 / df * factor / c_nash * (norm2 / norm1).powf(4.0 / df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn potential_values() {
        assert_eq!(eval_potential(PotentialSpec::v2(2.0), 0.0).unwrap(), 0.0);
        assert!((eval_potential(PotentialSpec::v1(3.0), E).unwrap() - 3.0).abs() < 1e-15);
        assert!((eval_potential(PotentialSpec::v2(1.0), 3f64.sqrt()).unwrap() - LN_2).abs() < 1e-15);
        assert!(eval_potential(PotentialSpec::v1(1.0), 0.0).is_err());
        assert!(PotentialSpec::new(PotentialKind::NoPotential, 1.0).is_err());
    }

    #[test]
    fn potential_derivatives_match_differences() {
        for spec in [PotentialSpec::v1(1.3), PotentialSpec::v2(0.7)] {
            for r in [0.3, 1.0, 4.0] {
                let h = 1e-5;
                let fd = (spec.eval(r + h).unwrap() - spec.eval(r - h).unwrap()) / (2.0 * h);
                assert!((fd - spec.grad(r)).abs() < 1e-8);
                let fd2 = (spec.grad(r + h) - spec.grad(r - h)) / (2.0 * h);
                assert!((fd2 - spec.hess(r)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn profile_examples() {
        let p = ProfileParams::new(1.0, 1.7, 3, 0.0).unwrap();
        assert!((p.u_star(0.0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let p = ProfileParams::new(1.0, 1.0, 3, 0.0).unwrap();
        let ratio = p.u_star(4.0, 0.8).unwrap() / p.u_star(0.0, 0.8).unwrap();
        // the Gaussian factor also moves, so compare at fixed r with it removed
        let gauss = (-0.64 / 18.0f64).exp() / (-0.32f64).exp();
        assert!((ratio / gauss - 1.0 / 9.0).abs() < 1e-14);
        assert!(p.u_star(0.0, 0.0).is_err());
    }

    #[test]
    fn heat_kernel_mass_is_conserved() {
        let g = RadialGrid::log_uniform(3, 30.0, 0.0002, 1e-6).unwrap();
        let p = ProfileParams::new(1.0, 0.0, 3, 0.0).unwrap();
        let m0 = g.integrate(|r| p.u_star(0.0, r).unwrap());
        let m1 = g.integrate(|r| p.u_star(3.0, r).unwrap());
        assert!((m0 - m1).abs() < 1e-8 * m0, "{m0} {m1}");
        // (2π)^{3/2} from the closed-form Gaussian integral
        assert!((m0 - (2.0 * std::f64::consts::PI).powf(1.5)).abs() < 1e-4 * m0);
    }

    #[test]
    fn mass_matching() {
        let g = RadialGrid::log_uniform(3, 12.0, 0.02, 1e-6).unwrap();
        let p = ProfileParams::mass_matched(2.5, 3, 0.0, 4.2, &g).unwrap();
        let m = g.integrate(|r| p.u_star(0.0, r).unwrap());
        assert!((m - 4.2).abs() < 1e-12);
    }

    #[test]
    fn v_star_two_is_nondecreasing_in_tau() {
        let p = ProfileParams::new(1.0, 1.5, 3, 1.0).unwrap();
        for &xi in &[0.0, 0.1, 0.5, 1.0, 3.0] {
            let mut prev = p.v_star(0.0, xi).unwrap();
            for k in 1..40 {
                let v = p.v_star(0.25 * k as f64, xi).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn v_star_matches_u_star_under_rescaling() {
        let p = ProfileParams::new(2.0, 1.2, 3, 1.0).unwrap();
        let t: f64 = 3.0;
        let s = 1.0 + 2.0 * t;
        let tau = 0.5 * s.ln();
        for r in [0.0, 0.4, 2.0] {
            let xi = r / s.sqrt();
            let u = p.u_star(t, r).unwrap();
            let v = p.v_star(tau, xi).unwrap() * s.powf(-1.5);
            assert!((u - v).abs() < 1e-14 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn unif_bound() {
        assert!((unif_max_bound(2.0, E / 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((unif_max_bound(2.0, E / 8.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(unif_max_bound(0.0, 1.0).is_err());
        // brute-force maximisation; the maximum exists for γ < 0
        let (gamma, t) = (-1.3f64, 0.7f64);
        let n = 2_000_000;
        let best = (1..=n)
            .map(|i| {
                let r = 10.0 * i as f64 / n as f64;
                r.powf(-gamma) * (-r * r / (4.0 * t)).exp()
            })
            .fold(0.0f64, f64::max);
        assert!((best - unif_max_bound(gamma, t).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn lambda_star_examples() {
        assert_eq!(lambda_star(3, 1.0).unwrap(), 2.0);
        assert_eq!(lambda_star(1, 0.25).unwrap(), 3.0);
        assert!((lambda_star(5, 4.9).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(lambda_star(3, 0.0).unwrap(), 2.0);
        assert!(lambda_star(3, 3.0).is_err());
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta_p(3, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(zeta_p(3, 1.0, f64::INFINITY).unwrap(), 1.5);
        assert!((zeta_p(3, 2.5, 2.0).unwrap() - 1.25).abs() < 1e-15);
        for d in 2..6 {
            for g in [0.1, 0.5 * d as f64, d as f64 - 0.05] {
                assert_eq!(zeta_p(d, g, 1.0).unwrap(), 0.5 * lambda_star(d, g).unwrap());
            }
        }
    }

    #[test]
    fn rate_constant() {
        assert!((theorem1_rate_constant(3, 0.0, 1.0, 1.0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((theorem1_rate_constant(4, 0.5, 1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(theorem1_rate_constant(5, -1.0, 1.0, 1.0, 1.0).unwrap(), theorem1_rate_constant(5, 0.0, 1.0, 1.0, 1.0).unwrap());
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let c = theorem1_rate_constant(5, 1.5 * k as f64 / 50.0, 1.0, 1.0, 1.0).unwrap();
            assert!(c <= prev);
            prev = c;
        }
        let err = theorem1_rate_constant(3, 0.5, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("(d-2)/2"));
    }

    #[test]
    fn psi_closed_form() {
        for r in [0.5, 1.0, 2.0, 3.0] {
            let got = schrodinger_psi(3, 0.0, 0.0, r).unwrap();
            assert!((got - (r * r - 6.0) / 4.0).abs() < 1e-14);
        }
        let big = schrodinger_psi(3, 1.0, 0.0, 100.0).unwrap();
        assert!((big / 2500.0 - 1.0).abs() < 1e-3);
        assert!(schrodinger_psi(3, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn psi_matches_finite_differences_of_phi() {
        // ¼|Φ'|² − ½(Φ'' + (d−1)Φ'/r) with Φ differenced numerically
        for &(d, gamma, sigma) in &[(3usize, 1.5, 1.0), (3, 1.5, 0.3), (4, 2.2, 0.0), (5, 0.7, 1.0)] {
            let phi = SelfSimilarPotential::new(gamma, sigma).unwrap();
            for r in [0.5, 1.0, 2.0] {
                let h = 1e-4;
                let d1 = (phi.phi(r + h) - phi.phi(r - h)) / (2.0 * h);
                let d2 = (phi.phi(r + h) - 2.0 * phi.phi(r) + phi.phi(r - h)) / (h * h);
                let lap = d2 + (d as f64 - 1.0) * d1 / r;
                let fd = 0.25 * d1 * d1 - 0.5 * lap;
                let exact = schrodinger_psi(d, gamma, sigma, r).unwrap();
                assert!((fd - exact).abs() < 1e-6, "({d},{gamma},{sigma}) r={r}: {fd} vs {exact}");
            }
        }
    }
}
