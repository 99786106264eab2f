//! Scalar closures: the coercivity rate `λ_ε`, the Nash-type envelope `Φ`
//! with its inverse, the decay ODE for `z = H[f]`, and the moment recursion
//! for the elliptic weight `w`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rates::{fit_decay_exponent, DecaySeries, FitAxis, FitWindow, RateFit};
use crate::{Error, Result};

/// `λ_ε = ½(λ_m − √((λ_m − 2ε)² + ε²(m_γ + √2 σ̄)²))`. May be `≤ 0` for large `ε`.
pub fn lambda_eps(lambda_m: f64, eps: f64, m_gamma: f64, sigma_bar: f64) -> f64 {
    let c = m_gamma + std::f64::consts::SQRT_2 * sigma_bar;
    0.5 * (lambda_m - ((lambda_m - 2.0 * eps).powi(2) + eps * eps * c * c).sqrt())
}

/// Range of `ε` with `λ_ε > 0`, located by a uniform scan of `(0, λ_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityWindow {
    pub lower: f64,
    pub upper: f64,
    pub best_eps: f64,
    pub best_lambda: f64,
}

pub fn positivity_window(lambda_m: f64, m_gamma: f64, sigma_bar: f64, samples: usize) -> Result<PositivityWindow> {
    if !(lambda_m > 0.0 && m_gamma > 0.0 && sigma_bar > 0.0) || samples < 2 {
        return Err(Error::Domain("positivity window needs positive constants and at least two samples".into()));
    }
    let mut window: Option<PositivityWindow> = None;
    for k in 1..samples {
        let eps = lambda_m * k as f64 / samples as f64;
        let l = lambda_eps(lambda_m, eps, m_gamma, sigma_bar);
        if l <= 0.0 {
            continue;
        }
        let w = window.get_or_insert(PositivityWindow { lower: eps, upper: eps, best_eps: eps, best_lambda: l });
        w.upper = eps;
        if l > w.best_lambda {
            w.best_eps = eps;
            w.best_lambda = l;
        }
    }
    window.ok_or_else(|| Error::Domain("λ_ε is nonpositive on the whole scan".into()))
}

/// `Φ(s; M) = 2s + K M^{2(1−a)} s^a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashEnvelope {
    pub k_const: f64,
    pub a: f64,
}

impl NashEnvelope {
    pub fn new(k_const: f64, a: f64) -> Result<Self> {
        if !(k_const > 0.0) || !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("Φ needs K > 0 and a ∈ (0, 1), got K = {k_const}, a = {a}")));
        }
        Ok(Self { k_const, a })
    }

    /// `a = (d + 2k − γ) / (d + 2 + 2k − γ)`
    pub fn exponent(d: f64, gamma: f64, k: f64) -> f64 {
        (d + 2.0 * k - gamma) / (d + 2.0 + 2.0 * k - gamma)
    }

    pub fn eval(&self, s: f64, m: f64) -> Result<f64> {
        if s < 0.0 || !s.is_finite() {
            return Err(Error::Domain(format!("Φ is defined for s ≥ 0, got {s}")));
        }
        if !(m > 0.0) {
            return Err(Error::Domain(format!("Φ needs a positive moment, got {m}")));
        }
        Ok(2.0 * s + self.k_const * m.powf(2.0 * (1.0 - self.a)) * s.powf(self.a))
    }

    /// `Φ^{-1}(y; M)` by bisection on a log-bracket.
    pub fn inverse(&self, y: f64, m: f64) -> Result<f64> {
        if y < 0.0 || !y.is_finite() {
            return Err(Error::Domain(format!("Φ⁻¹ is defined for y ≥ 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        // Φ(s) ≥ 2s and Φ(s) ≥ c s^a give the bracket
        let c = self.k_const * m.powf(2.0 * (1.0 - self.a));
        let mut hi = (0.5 * y).min((y / c).powf(1.0 / self.a));
        let mut lo = 0.0;
        if self.eval(hi, m)? < y {
            return Err(Error::Solver("Φ⁻¹ bracket failed".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid, m)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Inputs of the decay ODE `z' = −λ_ε Φ^{-1}(2z/(1+ε); C_k (1+t)^{k/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZOde {
    pub lambda_eps: f64,
    pub epsilon: f64,
    pub c_k: f64,
    pub k: f64,
    pub envelope: NashEnvelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZTrajectory {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
}

impl ZTrajectory {
    /// Power-law exponent of `z` in `1 + t` over the last decade.
    pub fn tail_exponent(&self) -> Result<RateFit> {
        let series = DecaySeries::new("z", self.times.clone(), self.z.clone())?;
        fit_decay_exponent(&series, FitWindow::last_decade(&series), FitAxis::default())
    }
}

impl ZOde {
    /// `(1 + k(1 − 1/a)) / (1 − 1/a)`, which equals `(γ − d)/2`.
    pub fn predicted_exponent(&self) -> f64 {
        let b = 1.0 - 1.0 / self.envelope.a;
        (1.0 + self.k * b) / b
    }

    fn rhs(&self, t: f64, z: f64) -> Result<f64> {
        let m = self.c_k * (1.0 + t).powf(0.5 * self.k);
        Ok(-self.lambda_eps * self.envelope.inverse(2.0 * z.max(0.0) / (1.0 + self.epsilon), m)?)
    }

    /// RK4 in `τ = ln(1+t)` and `y = ln z`, sampled at every step.
    pub fn integrate(&self, z0: f64, t_end: f64, steps_per_unit_tau: usize) -> Result<ZTrajectory> {
        if !(z0 > 0.0) || !(t_end > 0.0) {
            return Err(Error::Domain("z-ODE needs z0 > 0 and t_end > 0".into()));
        }
        let tau_end = t_end.ln_1p();
        let n = ((tau_end * steps_per_unit_tau as f64).ceil() as usize).max(1);
        let h = tau_end / n as f64;
        let f = |tau: f64, y: f64| -> Result<f64> {
            let t = tau.exp_m1();
            let z = y.exp();
            Ok((1.0 + t) * self.rhs(t, z)? / z)
        };
        let mut traj = ZTrajectory { times: vec![0.0], z: vec![z0] };
        let mut y = z0.ln();
        for step in 0..n {
            let tau = step as f64 * h;
            let k1 = f(tau, y)?;
            let k2 = f(tau + 0.5 * h, y + 0.5 * h * k1)?;
            let k3 = f(tau + 0.5 * h, y + 0.5 * h * k2)?;
            let k4 = f(tau + h, y + h * k3)?;
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            traj.times.push((tau + h).exp_m1());
            traj.z.push(y.exp());
        }
        Ok(traj)
    }
}

/// `M_ℓ = ℓ(ℓ−2+d−γ) M_{ℓ−2} − ℓ(ℓ−2−γ) M_{ℓ−4} + J_ℓ`, the identity obtained by
/// testing `w − 𝓛w = u` against `⟨x⟩^ℓ`. `moments` maps `ℓ'` to `M_{ℓ'}`;
/// nonpositive orders that are missing fall back to `M_0`, an upper bound.
pub fn elliptic_moment_recursion(ell: i32, d: f64, gamma: f64, moments: &BTreeMap<i32, f64>, j_ell: f64) -> Result<f64> {
    let lookup = |k: i32| -> Result<f64> {
        if let Some(&m) = moments.get(&k) {
            return Ok(m);
        }
        if k <= 0 {
            if let Some(&m0) = moments.get(&0) {
                return Ok(m0);
            }
        }
        Err(Error::Insufficient(format!("moment recursion for ℓ = {ell} needs M_{k}")))
    };
    let l = ell as f64;
    let c2 = l * (l - 2.0 + d - gamma);
    let c4 = l * (l - 2.0 - gamma);
    let m2 = if c2 == 0.0 { 0.0 } else { lookup(ell - 2)? };
    let m4 = if c4 == 0.0 { 0.0 } else { lookup(ell - 4)? };
    Ok(c2 * m2 - c4 * m4 + j_ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn lambda_eps_values() {
        assert_eq!(lambda_eps(1.0, 0.0, 3.0, FRAC_1_SQRT_2), 0.0);
        let direct = 0.5 * (1.0 - (0.64f64 + 0.16).sqrt());
        assert!((lambda_eps(1.0, 0.1, 3.0, FRAC_1_SQRT_2) - direct).abs() < 1e-15);
        assert!((direct - 0.0528).abs() < 1e-4);
    }

    #[test]
    fn window_matches_closed_form_edge() {
        // λ_ε > 0 ⇔ ε < 4λ_m / (4 + c²)
        for (lm, mg, sb) in [(1.0, 3.0, FRAC_1_SQRT_2), (0.7, 4.5, 2.3)] {
            let c: f64 = mg + std::f64::consts::SQRT_2 * sb;
            let edge = 4.0 * lm / (4.0 + c * c);
            let w = positivity_window(lm, mg, sb, 100_000).unwrap();
            assert!((w.upper - edge).abs() < 2e-5 * lm);
            assert!(w.lower > 0.0 && w.best_lambda > 0.0 && w.best_eps < lm / 2.0);
        }
    }

    #[test]
    fn envelope_and_inverse() {
        let phi = NashEnvelope::new(1.7, 0.8).unwrap();
        assert_eq!(phi.eval(0.0, 3.0).unwrap(), 0.0);
        assert!(phi.eval(-1.0, 3.0).is_err());
        for y in [1e-12, 1e-6, 0.3, 5.0, 1e4] {
            let s = phi.inverse(y, 2.5).unwrap();
            assert!((phi.eval(s, 2.5).unwrap() - y).abs() <= 1e-10 * y);
        }
        assert!((NashEnvelope::exponent(3.0, 1.0, 3.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn recursion_trivial_and_missing() {
        let m: BTreeMap<i32, f64> = [(0, 0.0), (-2, 0.0)].into_iter().collect();
        assert_eq!(elliptic_moment_recursion(2, 3.0, 1.0, &m, 0.0).unwrap(), 0.0);
        assert!(elliptic_moment_recursion(6, 3.0, 1.0, &m, 0.0).is_err());
    }

    #[test]
    fn z_ode_decreases() {
        let ode = ZOde { lambda_eps: 0.05, epsilon: 0.1, c_k: 1.0, k: 3.0, envelope: NashEnvelope::new(1.0, 0.8).unwrap() };
        assert!((ode.predicted_exponent() + 1.0).abs() < 1e-12);
        let tr = ode.integrate(1.0, 1e3, 50).unwrap();
        assert!(tr.z.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn z_ode_tail_exponent() {
        let lambda = lambda_eps(1.0, 0.1, 3.0, FRAC_1_SQRT_2);
        let ode = ZOde { lambda_eps: lambda, epsilon: 0.1, c_k: 1.0, k: 3.0, envelope: NashEnvelope::new(1.0, 0.8).unwrap() };
        let fit = ode.integrate(1.0, 1e10, 40).unwrap().tail_exponent().unwrap();
        assert!((fit.exponent + 1.0).abs() < 0.1, "{}", fit.exponent);
    }
}
