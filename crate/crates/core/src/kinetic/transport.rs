//! Finite-volume discretisation of `T = v ∂_x − V'(x) ∂_v` written in the
//! variable `h = f / (M e^{-V})`. Face fluxes are `c · h_face`, where the face
//! coefficients `c` make `T(M e^{-V}) = 0` exactly. With centred face values
//! `T` is exactly skew-adjoint in `L²(1/𝓜)`; upwinding adds a symmetric
//! nonnegative part.

use serde::{Deserialize, Serialize};

use super::space::PhaseSpace;
use crate::grids::PhaseField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportScheme {
    /// Skew-adjoint, used for the analysis operator only.
    Centered,
    /// First-order upwind: positive and `L²(1/𝓜)`-contractive under CFL.
    Upwind,
    /// Second-order MUSCL with a minmod limiter on `h`.
    Muscl,
}

impl TransportScheme {
    /// Stable fraction of the forward-Euler CFL number.
    fn cfl(self) -> f64 {
        match self {
            TransportScheme::Centered => 0.1,
            TransportScheme::Upwind => 0.9,
            TransportScheme::Muscl => 0.45,
        }
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Face value of `h` between cells `l` and `r`; `ll` and `rr` are the next
/// neighbours outwards (`None` at a wall).
#[inline]
fn face_value(scheme: TransportScheme, c: f64, ll: Option<f64>, l: f64, r: f64, rr: Option<f64>) -> f64 {
    match scheme {
        TransportScheme::Centered => 0.5 * (l + r),
        TransportScheme::Upwind => {
            if c >= 0.0 {
                l
            } else {
                r
            }
        }
        TransportScheme::Muscl => {
            if c >= 0.0 {
                l + 0.5 * ll.map_or(0.0, |ll| minmod(l - ll, r - l))
            } else {
                r - 0.5 * rr.map_or(0.0, |rr| minmod(rr - r, r - l))
            }
        }
    }
}

/// Precomputed face coefficients for one phase space.
#[derive(Debug, Clone)]
pub struct Transport {
    nx: usize,
    nv: usize,
    dx: f64,
    dv: f64,
    /// `𝓜_ij = M_j e^{-V(x_i)}`
    weight: Vec<f64>,
    /// x-faces `(i+1/2, j)` for `i = 0..nx-1`: `v_j M_j e^{-V(x_{i+1/2})}`
    cx: Vec<f64>,
    /// v-faces `(i, j+1/2)` for `j = 0..nv-1`: `−V'_i e^{-V(x_i)} M_{j+1/2}`
    cv: Vec<f64>,
    /// largest outflow rate relative to `𝓜`
    rate: f64,
}

impl Transport {
    pub fn new(space: &PhaseSpace) -> Self {
        let (nx, nv, dx, dv) = (space.nx(), space.nv(), space.grid.dx, space.grid.dv);
        let v = space.grid.v();
        let mut weight = vec![0.0; nx * nv];
        let mut cx = vec![0.0; (nx - 1) * nv];
        let mut cv = vec![0.0; nx * (nv - 1)];
        for i in 0..nx {
            for j in 0..nv {
                weight[i * nv + j] = space.e[i] * space.m[j];
                if i + 1 < nx {
                    cx[i * nv + j] = v[j] * space.m[j] * space.e_face[i + 1];
                }
                if j + 1 < nv {
                    cv[i * (nv - 1) + j] = space.force[i] * space.e[i] * space.m_face[j + 1];
                }
            }
        }
        let mut t = Self { nx, nv, dx, dv, weight, cx, cv, rate: 0.0 };
        t.rate = t.max_rate();
        t
    }

    fn max_rate(&self) -> f64 {
        let (nx, nv) = (self.nx, self.nv);
        let mut worst: f64 = 0.0;
        for i in 0..nx {
            for j in 0..nv {
                let mut out = 0.0;
                if i + 1 < nx {
                    out += self.cx[i * nv + j].max(0.0) / self.dx;
                }
                if i > 0 {
                    out += (-self.cx[(i - 1) * nv + j]).max(0.0) / self.dx;
                }
                if j + 1 < nv {
                    out += self.cv[i * (nv - 1) + j].max(0.0) / self.dv;
                }
                if j > 0 {
                    out += (-self.cv[i * (nv - 1) + j - 1]).max(0.0) / self.dv;
                }
                worst = worst.max(out / self.weight[i * nv + j]);
            }
        }
        worst
    }

    /// Largest forward-Euler step of the given scheme.
    pub fn max_dt(&self, scheme: TransportScheme) -> f64 {
        scheme.cfl() / self.rate
    }

    /// `T f` (the divergence of the fluxes) written into `out`.
    pub fn apply_into(&self, f: &[f64], scheme: TransportScheme, out: &mut [f64]) {
        let (nx, nv) = (self.nx, self.nv);
        let h: Vec<f64> = f.iter().zip(&self.weight).map(|(a, w)| a / w).collect();
        out.iter_mut().for_each(|o| *o = 0.0);
        // x-fluxes
        for i in 0..nx - 1 {
            for j in 0..nv {
                let c = self.cx[i * nv + j];
                if c == 0.0 {
                    continue;
                }
                let at = |k: usize| h[k * nv + j];
                let ll = (i > 0).then(|| at(i - 1));
                let rr = (i + 2 < nx).then(|| at(i + 2));
                let flux = c * face_value(scheme, c, ll, at(i), at(i + 1), rr) / self.dx;
                out[i * nv + j] += flux;
                out[(i + 1) * nv + j] -= flux;
            }
        }
        // v-fluxes
        for i in 0..nx {
            let row = &h[i * nv..(i + 1) * nv];
            for j in 0..nv - 1 {
                let c = self.cv[i * (nv - 1) + j];
                if c == 0.0 {
                    continue;
                }
                let ll = (j > 0).then(|| row[j - 1]);
                let rr = (j + 2 < nv).then(|| row[j + 2]);
                let flux = c * face_value(scheme, c, ll, row[j], row[j + 1], rr) / self.dv;
                out[i * nv + j] += flux;
                out[i * nv + j + 1] -= flux;
            }
        }
    }

    pub fn apply(&self, f: &PhaseField, scheme: TransportScheme) -> PhaseField {
        let mut out = PhaseField::zeros(f.grid.clone());
        self.apply_into(&f.values, scheme, &mut out.values);
        out
    }

    /// Advances `∂_t f + T f = 0` over `dt` with SSP-RK2, sub-cycled to the CFL limit.
    pub fn advance(&self, f: &mut PhaseField, dt: f64, scheme: TransportScheme) -> Result<()> {
        if scheme == TransportScheme::Centered {
            return Err(Error::Domain("the centred scheme is not used for time stepping".into()));
        }
        if dt <= 0.0 {
            return Ok(());
        }
        let steps = (dt / self.max_dt(scheme)).ceil().max(1.0) as usize;
        let h = dt / steps as f64;
        let n = f.values.len();
        let mut k = vec![0.0; n];
        let mut stage = vec![0.0; n];
        for _ in 0..steps {
            self.apply_into(&f.values, scheme, &mut k);
            for ((s, a), b) in stage.iter_mut().zip(&f.values).zip(&k) {
                *s = a - h * b;
            }
            self.apply_into(&stage, scheme, &mut k);
            for ((a, s), b) in f.values.iter_mut().zip(&stage).zip(&k) {
                *a = 0.5 * (*a + s - h * b);
            }
        }
        if let Some(k) = f.values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("transport produced a non-finite value at cell {k}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::PhaseGrid;
    use crate::potentials::PotentialSpec;
    use std::sync::Arc;

    fn space(nx: usize, nv: usize, gamma: f64) -> PhaseSpace {
        let grid = Arc::new(PhaseGrid::new(nx, nv, 8.0, 7.0).unwrap());
        let pot = if gamma == 0.0 { PotentialSpec::none() } else { PotentialSpec::v2(gamma) };
        PhaseSpace::new(grid, pot).unwrap()
    }

    fn bump(s: &PhaseSpace) -> PhaseField {
        PhaseField::from_fn(s.grid.clone(), |x, v| (-(x - 1.0).powi(2) - (v - 0.5).powi(2)).exp() * (1.0 + 0.2 * x.sin())).unwrap()
    }

    #[test]
    fn equilibrium_is_stationary() {
        let s = space(32, 32, 0.7);
        let t = Transport::new(&s);
        let eq = s.macro_field(&vec![1.0; 32]);
        for scheme in [TransportScheme::Centered, TransportScheme::Upwind, TransportScheme::Muscl] {
            let tf = t.apply(&eq, scheme);
            assert!(tf.values.iter().all(|x| x.abs() < 1e-14), "{scheme:?}");
        }
    }

    #[test]
    fn centred_operator_is_skew() {
        let s = space(24, 24, 0.7);
        let t = Transport::new(&s);
        let f = bump(&s);
        let g = PhaseField::from_fn(s.grid.clone(), |x, v| (0.3 * x).cos() * (-(v * v) / 3.0).exp() * (1.0 + v)).unwrap();
        let a = s.inner(&t.apply(&f, TransportScheme::Centered), &g);
        let b = s.inner(&f, &t.apply(&g, TransportScheme::Centered));
        assert!((a + b).abs() < 1e-10 * a.abs().max(1.0), "{a} {b}");
        assert!(s.inner(&t.apply(&f, TransportScheme::Centered), &f).abs() < 1e-10);
        assert!(s.inner(&t.apply(&f, TransportScheme::Upwind), &f) > 0.0);
    }

    #[test]
    fn macroscopic_image_is_gradient() {
        let s = space(24, 24, 0.7);
        let t = Transport::new(&s);
        let u: Vec<f64> = s.grid.x().iter().map(|x| (-x * x / 5.0).exp()).collect();
        let tf = t.apply(&s.macro_field(&u), TransportScheme::Centered);
        let want = s.odd_field(&s.grad(&u));
        for (a, b) in tf.values.iter().zip(&want.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn advance_conserves_mass_and_sign() {
        let s = space(48, 48, 0.7);
        let t = Transport::new(&s);
        for scheme in [TransportScheme::Upwind, TransportScheme::Muscl] {
            let mut f = bump(&s);
            let m0 = f.mass();
            let n0 = s.norm_sq(&f);
            t.advance(&mut f, 1.0, scheme).unwrap();
            assert!((f.mass() - m0).abs() < 1e-12 * m0);
            assert!(f.values.iter().all(|&x| x >= 0.0), "{scheme:?}");
            assert!(s.norm_sq(&f) <= n0);
        }
    }

    #[test]
    fn free_transport_shifts_by_v_t() {
        // V = 0: f(x, v, t) = f0(x − v t, v)
        let s = space(400, 16, 0.0);
        let tr = Transport::new(&s);
        let profile = |x: f64| (-x * x).exp();
        let mut f = PhaseField::from_fn(s.grid.clone(), |x, v| profile(x + 2.0) * (-v * v / 2.0).exp()).unwrap();
        let time = 1.0;
        tr.advance(&mut f, time, TransportScheme::Muscl).unwrap();
        let (nv, v) = (s.nv(), s.grid.v());
        let mut err: f64 = 0.0;
        for (i, &x) in s.grid.x().iter().enumerate() {
            for j in 0..nv {
                let exact = profile(x - v[j] * time + 2.0) * (-v[j] * v[j] / 2.0).exp();
                err = err.max((f.values[i * nv + j] - exact).abs());
            }
        }
        assert!(err < 0.05, "max error {err}");
    }
}
