//! Weighted integrals of a translated radial bump.

use crate::grids::unit_sphere_area;

/// Smooth bump `exp(-1/(1-ρ²))` on the unit ball and its radial derivative.
pub fn bump(rho: f64) -> (f64, f64) {
    if rho >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - rho * rho;
    let v = (-1.0 / w).exp();
    (v, -2.0 * rho / (w * w) * v)
}

/// Integrals of the bump centred at distance `n` from the origin.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedIntegrals {
    /// `∫ W v²`
    pub l2: f64,
    /// `∫ W |∇v|²`
    pub grad: f64,
    /// `∫ W_1 |v|`
    pub l1: f64,
}

const N_RHO: usize = 400;
const N_ANGLE: usize = 64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Angular rule for the spherical mean: nodes `t = cos θ` with weights for
/// `(1 - t²)^{(d-3)/2}`. Odd `d` uses Gauss-Legendre in `t` (polynomial weight);
/// even `d` uses the midpoint rule in `θ`, where `sin^{d-2} θ` is smooth and periodic.
fn angular_rule(d: usize) -> Vec<(f64, f64)> {
    if d % 2 == 1 {
        gauss_legendre(N_ANGLE).into_iter().map(|(t, w)| (t, w * (1.0 - t * t).powi((d as i32 - 3) / 2))).collect()
    } else {
        let h = std::f64::consts::PI / (2 * N_ANGLE) as f64;
        (0..2 * N_ANGLE)
            .map(|j| {
                let th = (j as f64 + 0.5) * h;
                (th.cos(), h * th.sin().powi(d as i32 - 2))
            })
            .collect()
    }
}

/// `w2` weighs the quadratic terms and `w1` the linear term; both are functions of `|x|`.
pub fn shifted_integrals(d: usize, n: f64, w2: impl Fn(f64) -> f64, w1: impl Fn(f64) -> f64) -> ShiftedIntegrals {
    let mut acc = ShiftedIntegrals { l2: 0.0, grad: 0.0, l1: 0.0 };
    let h = 1.0 / N_RHO as f64;
    let rule = if d >= 2 { angular_rule(d) } else { Vec::new() };
    let norm: f64 = rule.iter().map(|p| p.1).sum();
    for i in 0..N_RHO {
        let rho = (i as f64 + 0.5) * h;
        let (v, dv) = bump(rho);
        // spherical means of the weights over |y| = rho
        let (m2, m1) = if d == 1 {
            (0.5 * (w2((n + rho).abs()) + w2((n - rho).abs())), 0.5 * (w1((n + rho).abs()) + w1((n - rho).abs())))
        } else {
            let (mut s2, mut s1) = (0.0, 0.0);
            for &(t, w) in &rule {
                let x = (rho * rho + n * n + 2.0 * rho * n * t).max(0.0).sqrt();
                s2 += w * w2(x);
                s1 += w * w1(x);
            }
            (s2 / norm, s1 / norm)
        };
        let shell = unit_sphere_area(d) * rho.powi(d as i32 - 1) * h;
        acc.l2 += shell * m2 * v * v;
        acc.grad += shell * m2 * dv * dv;
        acc.l1 += shell * m1 * v;
    }
    acc
}
