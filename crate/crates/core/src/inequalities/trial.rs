//! Analytic radial trial functions and quadrature in `s = ln r`.

use serde::{Deserialize, Serialize};

use crate::grids::{unit_sphere_area, RadialField, RadialGrid};
use crate::Result;
use std::sync::Arc;

/// Radial trial profile with an analytic derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Trial {
    /// `P(r²) exp(-s r^q)` with `P(x) = Σ c_j x^j`.
    PolyExp { coeffs: Vec<f64>, s: f64, q: f64 },
    /// `r^{-power} sech(eps ln r) exp(-(r e^{-log_cutoff})²)`.
    /// For `power = (d-2)/2` and small `eps` this nearly saturates Hardy's inequality.
    HardyLike { power: f64, eps: f64, log_cutoff: f64 },
    /// `r^power · inner(r)`.
    Power { power: f64, inner: Box<Trial> },
}

fn sech(x: f64) -> f64 {
    let a = x.abs();
    2.0 * (-a).exp() / (1.0 + (-2.0 * a).exp())
}

impl Trial {
    pub fn gaussian() -> Self {
        Trial::PolyExp { coeffs: vec![1.0], s: 0.5, q: 2.0 }
    }

    /// `(r^p u(r), r^p u'(r))`, evaluated without forming large powers separately.
    pub fn scaled(&self, r: f64, p: f64) -> (f64, f64) {
        match self {
            Trial::PolyExp { coeffs, s, q } => {
                let x = r * r;
                let (mut poly, mut dpoly) = (0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    dpoly = dpoly * x + poly;
                    poly = poly * x + c;
                }
                let rq = r.powf(*q);
                let e = (-s * rq).exp();
                if e == 0.0 {
                    return (0.0, 0.0);
                }
                let rp = r.powf(p);
                let u = poly * e;
                let du = (2.0 * r * dpoly - s * q * rq / r * poly) * e;
                (rp * u, rp * du)
            }
            Trial::HardyLike { power, eps, log_cutoff } => {
                let ls = r.ln();
                let z = (2.0 * (ls - log_cutoff)).exp();
                let core = ((p - power) * ls - z).exp() * sech(eps * ls);
                let slope = -power - eps * (eps * ls).tanh() - 2.0 * z;
                (core, core * slope / r)
            }
            Trial::Power { power, inner } => {
                let (a, b) = inner.scaled(r, p + power);
                let (c, _) = inner.scaled(r, p + power - 1.0);
                (a, b + power * c)
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.scaled(r, 0.0).0
    }

    /// Range of `ln r` outside which every integrand used here is negligible.
    pub fn log_range(&self) -> (f64, f64) {
        match self {
            Trial::PolyExp { coeffs, s, q } => {
                let deg = 2.0 * (coeffs.len() as f64 - 1.0);
                let hi = ((90.0 + 3.0 * deg) / s).powf(1.0 / q);
                (-80.0, hi.ln() + 0.5)
            }
            Trial::HardyLike { eps, log_cutoff, .. } => (-40.0 / eps, log_cutoff + 4.0),
            Trial::Power { inner, .. } => inner.log_range(),
        }
    }

    /// Step in `ln r` resolving the sharpest feature of the profile.
    fn log_step(&self) -> f64 {
        match self {
            Trial::PolyExp { q, .. } => (0.1 / q).min(0.01),
            Trial::HardyLike { .. } => 0.01,
            Trial::Power { inner, .. } => inner.log_step(),
        }
    }

    /// Samples the trial on the nodes of a radial grid.
    pub fn to_field(&self, grid: Arc<RadialGrid>) -> Result<RadialField> {
        RadialField::from_fn(grid, |r| if r > 0.0 { self.value(r) } else { self.value(1e-300) })
    }
}

/// `|S^{d-1}| ∫_0^∞ f(r, r^p u, r^p u') ds` by the trapezoid rule in `s = ln r`.
/// Choosing `p` so that `f` has no leftover powers of `r` keeps every term bounded.
pub fn log_quad(trial: &Trial, d: usize, p: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let (lo, hi) = trial.log_range();
    let h0 = trial.log_step();
    let n = ((hi - lo) / h0).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let s = lo + h * i as f64;
        let r = s.exp();
        let (a, b) = trial.scaled(r, p);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * f(r, a, b);
    }
    unit_sphere_area(d) * h * sum
}

/// Radial integrals shared by the quotients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2_sq: f64,
    pub grad_sq: f64,
}

impl Norms {
    pub fn of(trial: &Trial, d: usize) -> Self {
        let df = d as f64;
        Self {
            l1: log_quad(trial, d, df, |_, u, _| u.abs()),
            l2_sq: log_quad(trial, d, df / 2.0, |_, u, _| u * u),
            grad_sq: log_quad(trial, d, df / 2.0, |_, _, du| du * du),
        }
    }
}

/// `∫ u² / |x|²`.
pub fn hardy_integral(trial: &Trial, d: usize) -> f64 {
    log_quad(trial, d, (d as f64 - 2.0) / 2.0, |_, u, _| u * u)
}

/// `∫ u² ⟨x⟩^{-m}`.
pub fn bracket_integral(trial: &Trial, d: usize, m: f64) -> f64 {
    log_quad(trial, d, d as f64 / 2.0, |r, u, _| u * u * (1.0 + r * r).powf(-m / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_norms_match_closed_forms() {
        for d in 1..=5 {
            let n = Norms::of(&Trial::gaussian(), d);
            let df = d as f64;
            assert!((n.l1 / (2.0 * PI).powf(df / 2.0) - 1.0).abs() < 1e-12);
            assert!((n.l2_sq / PI.powf(df / 2.0) - 1.0).abs() < 1e-12);
            assert!((n.grad_sq / (df / 2.0 * PI.powf(df / 2.0)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let trials = [
            Trial::PolyExp { coeffs: vec![1.0, -0.3, 0.2], s: 0.7, q: 3.5 },
            Trial::HardyLike { power: 0.5, eps: 0.4, log_cutoff: 2.0 },
            Trial::Power { power: 0.75, inner: Box::new(Trial::gaussian()) },
        ];
        for t in &trials {
            for &r in &[0.3, 1.1, 2.4] {
                let h = 1e-6;
                let fd = (t.value(r + h) - t.value(r - h)) / (2.0 * h);
                let (_, du) = t.scaled(r, 0.0);
                assert!((fd - du).abs() < 1e-7 * (1.0 + du.abs()), "{t:?} r={r}: {fd} vs {du}");
            }
        }
    }

    #[test]
    fn hardy_like_quotient_matches_sech_formula() {
        // with u = r^{-(d-2)/2} w(ln r), the Hardy quotient is (d-2)²/4 + ∫w'²/∫w²
        for &(d, eps) in &[(3usize, 0.3), (4, 0.5)] {
            let t = Trial::HardyLike { power: (d as f64 - 2.0) / 2.0, eps, log_cutoff: 12.0 / eps };
            let q = Norms::of(&t, d).grad_sq / hardy_integral(&t, d);
            let expect = (d as f64 - 2.0).powi(2) / 4.0 + eps * eps / 3.0;
            assert!((q - expect).abs() < 1e-6, "d={d}: {q} vs {expect}");
        }
    }
}
