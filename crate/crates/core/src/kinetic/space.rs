//! Discrete phase space `(x, v) ∈ R × R` with the weighted inner product
//! `⟨f, g⟩ = Σ f g e^V / M dx dv` and the macroscopic operators built on it.

use std::sync::Arc;

use crate::grids::{PhaseField, PhaseGrid};
use crate::linalg::BandedMatrix;
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::{Error, Result};

/// Grid, potential and the discrete equilibrium `𝓜 = M(v) e^{-V(x)}`.
///
/// `M` is a Gaussian whose width is tuned so that `Σ M dv = 1` and
/// `Σ v² M dv = 1` hold exactly on the grid. Face values of `M` are defined by
/// `M_{j+1/2} - M_{j-1/2} = -v_j M_j dv`, the discrete form of `M' = -v M`,
/// and vanish at both velocity ends. `e^{-V}` vanishes on the two outer
/// x-faces, which closes the box with a reflecting wall while keeping `𝓜`
/// exactly stationary for the discrete transport.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    pub grid: Arc<PhaseGrid>,
    pub potential: PotentialSpec,
    /// `e^{-V(x_i)}`
    pub e: Vec<f64>,
    /// `e^{-V}` on x-faces, `nx + 1` entries, zero at the walls
    pub e_face: Vec<f64>,
    /// Discrete force `-V'(x_i) = (e_{i+1/2} - e_{i-1/2}) / (dx e_i)`.
    pub force: Vec<f64>,
    /// `M(v_j)`
    pub m: Vec<f64>,
    /// `M` on v-faces, `nv + 1` entries
    pub m_face: Vec<f64>,
    /// Symmetric pentadiagonal `e + Gᵀ e^{-1} G` of the elliptic problem.
    elliptic: BandedMatrix,
}

fn discrete_maxwellian(v: &[f64], dv: f64) -> Vec<f64> {
    let moment = |s: f64| {
        let w: Vec<f64> = v.iter().map(|x| (-x * x / (2.0 * s * s)).exp()).collect();
        let z: f64 = w.iter().sum();
        v.iter().zip(&w).map(|(x, w)| x * x * w).sum::<f64>() / z
    };
    // the second moment grows with the width
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moment(mid) < 1.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    let s = 0.5 * (lo + hi);
    let w: Vec<f64> = v.iter().map(|x| (-x * x / (2.0 * s * s)).exp()).collect();
    let z: f64 = w.iter().sum::<f64>() * dv;
    w.into_iter().map(|x| x / z).collect()
}

impl PhaseSpace {
    /// Only `V_2` (or no potential) is supported.
    pub fn new(grid: Arc<PhaseGrid>, potential: PotentialSpec) -> Result<Self> {
        if potential.kind == PotentialKind::V1 {
            return Err(Error::Domain("kinetic runs support V2 only; V1 is singular at x = 0".into()));
        }
        let (nx, nv, dx, dv) = (grid.nx, grid.nv, grid.dx, grid.dv);
        let pot = |x: f64| potential.eval(x.abs());
        let e = grid.x().iter().map(|&x| pot(x).map(|p| (-p).exp())).collect::<Result<Vec<_>>>()?;
        let mut e_face = vec![0.0; nx + 1];
        for (i, ef) in e_face.iter_mut().enumerate().take(nx).skip(1) {
            *ef = (-pot(-grid.x_max + i as f64 * dx)?).exp();
        }
        let force = (0..nx).map(|i| (e_face[i + 1] - e_face[i]) / (dx * e[i])).collect();
        let m = discrete_maxwellian(grid.v(), dv);
        let mut m_face = vec![0.0; nv + 1];
        for j in 0..nv {
            m_face[j + 1] = m_face[j] - dv * grid.v()[j] * m[j];
        }
        m_face[nv] = 0.0;
        // symmetric grid: the faces are symmetric too
        for j in 0..nv / 2 {
            let s = 0.5 * (m_face[j] + m_face[nv - j]);
            m_face[j] = s;
            m_face[nv - j] = s;
        }
        let mut space = Self { grid, potential, e, e_face, force, m, m_face, elliptic: BandedMatrix::zeros(nx, 2) };
        space.elliptic = space.assemble_elliptic();
        Ok(space)
    }

    pub fn nx(&self) -> usize {
        self.grid.nx
    }

    pub fn nv(&self) -> usize {
        self.grid.nv
    }

    /// Stencil of `G u ≈ e^{-V} u'` at cell `i`: coefficients of `u_{i-1}, u_i, u_{i+1}`.
    fn grad_stencil(&self, i: usize) -> [f64; 3] {
        let h2 = 2.0 * self.grid.dx;
        let (l, r) = (self.e_face[i], self.e_face[i + 1]);
        [-l / h2, (l - r) / h2, r / h2]
    }

    /// `(G u)_i = [e_{i+1/2}(u_{i+1} - u_i) + e_{i-1/2}(u_i - u_{i-1})] / (2 dx)`.
    pub fn grad(&self, u: &[f64]) -> Vec<f64> {
        let n = self.nx();
        (0..n)
            .map(|i| {
                let c = self.grad_stencil(i);
                let mut s = c[1] * u[i];
                if i > 0 {
                    s += c[0] * u[i - 1];
                }
                if i + 1 < n {
                    s += c[2] * u[i + 1];
                }
                s
            })
            .collect()
    }

    /// Matrix transpose of [`grad`](Self::grad).
    pub fn grad_t(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.nx();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let c = self.grad_stencil(i);
            out[i] += c[1] * phi[i];
            if i > 0 {
                out[i - 1] += c[0] * phi[i];
            }
            if i + 1 < n {
                out[i + 1] += c[2] * phi[i];
            }
        }
        out
    }

    fn assemble_elliptic(&self) -> BandedMatrix {
        let n = self.nx();
        let mut a = BandedMatrix::zeros(n, 2);
        for k in 0..n {
            a.add(k, k, self.e[k]);
        }
        for i in 0..n {
            let c = self.grad_stencil(i);
            let cols: Vec<(usize, f64)> = [(i as isize - 1, c[0]), (i as isize, c[1]), (i as isize + 1, c[2])]
                .into_iter()
                .filter(|&(k, _)| k >= 0 && (k as usize) < n)
                .map(|(k, v)| (k as usize, v))
                .collect();
            for &(k, ck) in &cols {
                for &(l, cl) in &cols {
                    a.add(k, l, ck * cl / self.e[i]);
                }
            }
        }
        a
    }

    /// `ρ[f]_i = Σ_j f_ij dv`
    pub fn rho(&self, f: &PhaseField) -> Vec<f64> {
        let dv = self.grid.dv;
        (0..self.nx()).map(|i| f.row(i).iter().sum::<f64>() * dv).collect()
    }

    /// `j[f]_i = Σ_j v_j f_ij dv`
    pub fn current(&self, f: &PhaseField) -> Vec<f64> {
        let (dv, v) = (self.grid.dv, self.grid.v());
        (0..self.nx()).map(|i| f.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * dv).collect()
    }

    /// `u[f] = e^V ρ[f]`
    pub fn u_of(&self, f: &PhaseField) -> Vec<f64> {
        self.rho(f).iter().zip(&self.e).map(|(r, e)| r / e).collect()
    }

    /// `u M e^{-V}` as a phase field.
    pub fn macro_field(&self, u: &[f64]) -> PhaseField {
        let mut out = PhaseField::zeros(self.grid.clone());
        let nv = self.nv();
        for i in 0..self.nx() {
            let c = u[i] * self.e[i];
            for j in 0..nv {
                out.values[i * nv + j] = c * self.m[j];
            }
        }
        out
    }

    /// `v_j M_j φ_i` as a phase field.
    pub fn odd_field(&self, phi: &[f64]) -> PhaseField {
        let mut out = PhaseField::zeros(self.grid.clone());
        let (nv, v) = (self.nv(), self.grid.v());
        for i in 0..self.nx() {
            for j in 0..nv {
                out.values[i * nv + j] = phi[i] * v[j] * self.m[j];
            }
        }
        out
    }

    /// `⟨f, g⟩ = Σ f g e^V / M dx dv`
    pub fn inner(&self, f: &PhaseField, g: &PhaseField) -> f64 {
        let nv = self.nv();
        let mut s = 0.0;
        for i in 0..self.nx() {
            let mut row = 0.0;
            for j in 0..nv {
                let k = i * nv + j;
                row += f.values[k] * g.values[k] / self.m[j];
            }
            s += row / self.e[i];
        }
        s * self.grid.dx * self.grid.dv
    }

    pub fn norm_sq(&self, f: &PhaseField) -> f64 {
        self.inner(f, f)
    }

    /// `⟨a, b⟩_V = Σ a b e^{-V} dx`
    pub fn inner_v(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.e).map(|((x, y), e)| x * y * e).sum::<f64>() * self.grid.dx
    }

    /// `Π f = M ρ[f]`
    pub fn project_pi(&self, f: &PhaseField) -> PhaseField {
        let u = self.u_of(f);
        self.macro_field(&u)
    }

    /// `(Id - Π) f`
    pub fn micro_part(&self, f: &PhaseField) -> PhaseField {
        let p = self.project_pi(f);
        let mut out = f.clone();
        out.values.iter_mut().zip(&p.values).for_each(|(a, b)| *a -= b);
        out
    }

    /// Solves `w - 𝓛w = u` with `𝓛 = -e^V Gᵀ e^V G`, the discrete form of
    /// `e^V ∂_x(e^{-V} ∂_x ·)` with zero flux at the walls.
    pub fn solve_w(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.nx() {
            return Err(Error::Domain(format!("solve_w: expected {} values, got {}", self.nx(), u.len())));
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("solve_w: u is not finite at node {i}")));
        }
        let rhs: Vec<f64> = u.iter().zip(&self.e).map(|(a, e)| a * e).collect();
        self.elliptic.solve(&rhs)
    }

    /// `𝓛 w`
    pub fn l_op(&self, w: &[f64]) -> Vec<f64> {
        let gw = self.grad(w);
        let q: Vec<f64> = gw.iter().zip(&self.e).map(|(g, e)| g / e).collect();
        self.grad_t(&q).iter().zip(&self.e).map(|(a, e)| -a / e).collect()
    }

    /// `‖∇w‖_V² = Σ (G w)² e^V dx`
    pub fn grad_norm_sq(&self, w: &[f64]) -> f64 {
        self.grad(w).iter().zip(&self.e).map(|(g, e)| g * g / e).sum::<f64>() * self.grid.dx
    }

    /// `‖Hess w‖_V²` with the discrete second derivative `w'' = 𝓛w + V'w'`.
    /// `V'` is the potential's own gradient, not the discrete force, which also
    /// carries the wall; `𝓛` already closes the walls with `w' = 0`.
    pub fn hessian_norm_sq(&self, w: &[f64]) -> f64 {
        let q: Vec<f64> = self.grad(w).iter().zip(&self.e).map(|(g, e)| g / e).collect();
        let lw = self.l_op(w);
        self.grid
            .x()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let dv = x.signum() * self.potential.grad(x.abs());
                let h = lw[i] + dv * q[i];
                h * h * self.e[i]
            })
            .sum::<f64>()
            * self.grid.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn space(nx: usize, nv: usize, x_max: f64, gamma: f64) -> PhaseSpace {
        let grid = Arc::new(PhaseGrid::new(nx, nv, x_max, 8.0).unwrap());
        PhaseSpace::new(grid, PotentialSpec::v2(gamma)).unwrap()
    }

    #[test]
    fn maxwellian_moments_are_exact() {
        let s = space(16, 64, 5.0, 0.5);
        let dv = s.grid.dv;
        let m0: f64 = s.m.iter().sum::<f64>() * dv;
        let m2: f64 = s.m.iter().zip(s.grid.v()).map(|(m, v)| m * v * v).sum::<f64>() * dv;
        assert!((m0 - 1.0).abs() < 1e-14 && (m2 - 1.0).abs() < 1e-12, "{m0} {m2}");
        assert!(s.m_face[1..s.nv()].iter().all(|&x| x > 0.0));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let s = space(16, 32, 5.0, 0.5);
        let f = PhaseField::from_fn(s.grid.clone(), |x, v| (1.0 + x).sin() * (-(v - 0.7) * (v - 0.7)).exp() + 0.1 * v).unwrap();
        let p = s.project_pi(&f);
        let pp = s.project_pi(&p);
        for (a, b) in p.values.iter().zip(&pp.values) {
            assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
        }
        let micro = s.micro_part(&f);
        assert!(s.inner(&micro, &p).abs() < 1e-12 * s.norm_sq(&f));
    }

    #[test]
    fn maxwellian_times_density_is_invariant() {
        let s = space(16, 64, 5.0, 0.5);
        let f = PhaseField::from_fn(s.grid.clone(), |x, _| 1.0 + 0.5 * x.cos()).unwrap();
        let mut g = f.clone();
        let nv = s.nv();
        for i in 0..s.nx() {
            for j in 0..nv {
                g.values[i * nv + j] *= s.m[j];
            }
        }
        let p = s.project_pi(&g);
        for (a, b) in g.values.iter().zip(&p.values) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn odd_field_has_no_density() {
        let s = space(16, 32, 5.0, 0.5);
        let f = PhaseField::from_fn(s.grid.clone(), |x, v| v * (-v * v).exp() * (1.0 + x * x)).unwrap();
        assert!(s.rho(&f).iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn solve_w_trivial_cases() {
        let s = space(64, 16, 10.0, 0.5);
        assert!(s.solve_w(&vec![0.0; 64]).unwrap().iter().all(|&w| w == 0.0));
        let w = s.solve_w(&vec![2.5; 64]).unwrap();
        assert!(w.iter().all(|&x| (x - 2.5).abs() < 1e-12));
        let u: Vec<f64> = s.grid.x().iter().map(|x| (-x * x / 4.0).exp()).collect();
        assert!(s.solve_w(&u).unwrap().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn solve_w_matches_fourier_symbol() {
        let s = space(2048, 8, 100.0, 0.0);
        let omega = 2.0 * std::f64::consts::PI / 10.0;
        let u: Vec<f64> = s.grid.x().iter().map(|x| (omega * x).cos()).collect();
        let w = s.solve_w(&u).unwrap();
        for (i, &x) in s.grid.x().iter().enumerate() {
            if x.abs() < 50.0 {
                assert!((w[i] - u[i] / (1.0 + omega * omega)).abs() < 1e-3, "x={x}");
            }
        }
    }

    #[test]
    fn elliptic_operator_is_self_adjoint() {
        let s = space(40, 8, 6.0, 1.3);
        let a: Vec<f64> = s.grid.x().iter().map(|x| (0.7 * x).sin() + 0.2).collect();
        let b: Vec<f64> = s.grid.x().iter().map(|x| (-x * x / 8.0).exp()).collect();
        let lhs = s.inner_v(&s.l_op(&a), &b);
        let rhs = s.inner_v(&a, &s.l_op(&b));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        assert!((s.inner_v(&s.l_op(&a), &a) + s.grad_norm_sq(&a)).abs() < 1e-12);
    }
}
