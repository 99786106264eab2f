//! Collision operators in velocity: the linear Fokker-Planck operator
//! `∂_v(M ∂_v(f/M))` and linear scattering `∫σ(v,v')(f(v')M(v) − f(v)M(v')) dv'`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::space::PhaseSpace;
use crate::grids::PhaseField;
use crate::linalg::{solve_tridiagonal, SymTridiagonal};
use crate::{Error, Result};

/// Tolerance for the discrete H2 balance `Σ_j (σ_kj − σ_jk) M_j dv`.
pub const H2_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CollisionKind {
    FokkerPlanck,
    Scattering,
}

/// Scattering rate `σ(v, v')`.
#[derive(Clone)]
pub struct ScatteringKernel {
    pub name: String,
    rate: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ScatteringKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScatteringKernel({})", self.name)
    }
}

impl ScatteringKernel {
    pub fn new(name: impl Into<String>, rate: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), rate: Arc::new(rate) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_, _| c)
    }

    /// `1.5 + 0.3 e^{−(v−v')²} + 0.25(φ(v)ψ(v') − ψ(v)φ(v'))` with `φ = tanh` and
    /// `ψ = sech² − ⟨sech²⟩_M`. The antisymmetric part is balanced against the
    /// discrete Maxwellian of `space`, so H2 holds to roundoff; `σ ∈ [1.2, 2.1]`.
    pub fn nonsymmetric_example(space: &PhaseSpace) -> Self {
        let sech2 = |v: f64| 1.0 / v.cosh().powi(2);
        let dv = space.grid.dv;
        let mean: f64 = space.grid.v().iter().zip(&space.m).map(|(&v, m)| sech2(v) * m).sum::<f64>() * dv;
        Self::new("nonsymmetric", move |v, w| {
            let psi = |x: f64| sech2(x) - mean;
            1.5 + 0.3 * (-(v - w) * (v - w)).exp() + 0.25 * (v.tanh() * psi(w) - psi(v) * w.tanh())
        })
    }

    pub fn eval(&self, v: f64, w: f64) -> f64 {
        (self.rate)(v, w)
    }
}

#[derive(Debug, Clone)]
pub struct CollisionSpec {
    pub kind: CollisionKind,
    pub sigma: Option<ScatteringKernel>,
    /// Upper bound of `σ`; `1/√2` by convention for Fokker-Planck.
    pub sigma_bar: f64,
}

impl CollisionSpec {
    pub fn fokker_planck() -> Self {
        Self { kind: CollisionKind::FokkerPlanck, sigma: None, sigma_bar: std::f64::consts::FRAC_1_SQRT_2 }
    }

    pub fn scattering(kernel: ScatteringKernel, sigma_bar: f64) -> Self {
        Self { kind: CollisionKind::Scattering, sigma: Some(kernel), sigma_bar }
    }
}

enum Implicit {
    /// `(I − dt L)` as three diagonals
    Tri { lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64> },
    /// `(I − dt L)^{-1}`, row-major
    Dense(Vec<f64>),
}

/// `L` on the velocity grid of a [`PhaseSpace`], acting row by row in `x`.
#[derive(Clone)]
pub struct CollisionOperator {
    pub spec: CollisionSpec,
    nv: usize,
    dv: f64,
    m: Vec<f64>,
    m_face: Vec<f64>,
    /// dense `L_jk` for scattering, row-major
    dense: Vec<f64>,
    implicit: Option<(f64, Arc<Implicit>)>,
}

impl fmt::Debug for CollisionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CollisionOperator").field("spec", &self.spec).field("nv", &self.nv).finish()
    }
}

impl CollisionOperator {
    /// Validates H1 (`1 ≤ σ ≤ σ̄` at all grid pairs) and the discrete H2 balance.
    pub fn new(space: &PhaseSpace, spec: CollisionSpec) -> Result<Self> {
        let (nv, dv) = (space.nv(), space.grid.dv);
        let v = space.grid.v();
        let mut dense = Vec::new();
        if spec.kind == CollisionKind::Scattering {
            let kernel = spec.sigma.as_ref().ok_or_else(|| Error::Precondition("scattering collisions need a rate σ(v, v')".into()))?;
            if !(spec.sigma_bar >= 1.0) {
                return Err(Error::Precondition(format!("σ̄ must be at least 1, got {}", spec.sigma_bar)));
            }
            let mut sigma = vec![0.0; nv * nv];
            for j in 0..nv {
                for k in 0..nv {
                    let s = kernel.eval(v[j], v[k]);
                    if !(s >= 1.0 - 1e-12 && s <= spec.sigma_bar + 1e-12) {
                        return Err(Error::Precondition(format!(
                            "H1 violated: σ({}, {}) = {s} outside [1, {}]",
                            v[j], v[k], spec.sigma_bar
                        )));
                    }
                    sigma[j * nv + k] = s;
                }
            }
            for k in 0..nv {
                let h2: f64 = (0..nv).map(|j| (sigma[k * nv + j] - sigma[j * nv + k]) * space.m[j]).sum::<f64>() * dv;
                if h2.abs() > H2_TOL {
                    return Err(Error::Precondition(format!("H2 violated at v = {}: balance {h2:e}", v[k])));
                }
            }
            dense = vec![0.0; nv * nv];
            for j in 0..nv {
                let mut out = 0.0;
                for k in 0..nv {
                    if k != j {
                        dense[j * nv + k] = sigma[j * nv + k] * space.m[j] * dv;
                        out += sigma[j * nv + k] * space.m[k] * dv;
                    }
                }
                dense[j * nv + j] = -out;
            }
        }
        Ok(Self { spec, nv, dv, m: space.m.clone(), m_face: space.m_face.clone(), dense, implicit: None })
    }

    pub fn kind(&self) -> CollisionKind {
        self.spec.kind
    }

    /// `L` applied to one velocity row.
    pub fn apply_row(&self, f: &[f64], out: &mut [f64]) {
        let nv = self.nv;
        match self.spec.kind {
            CollisionKind::FokkerPlanck => {
                let dv2 = self.dv * self.dv;
                let h = |j: usize| f[j] / self.m[j];
                for j in 0..nv {
                    let right = if j + 1 < nv { self.m_face[j + 1] * (h(j + 1) - h(j)) } else { 0.0 };
                    let left = if j > 0 { self.m_face[j] * (h(j) - h(j - 1)) } else { 0.0 };
                    out[j] = (right - left) / dv2;
                }
            }
            CollisionKind::Scattering => {
                for j in 0..nv {
                    let row = &self.dense[j * nv..(j + 1) * nv];
                    out[j] = row.iter().zip(f).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `L f` on every x-row.
    pub fn apply(&self, f: &PhaseField) -> PhaseField {
        let mut out = PhaseField::zeros(f.grid.clone());
        let nv = self.nv;
        for (src, dst) in f.values.chunks(nv).zip(out.values.chunks_mut(nv)) {
            self.apply_row(src, dst);
        }
        out
    }

    fn build_implicit(&self, dt: f64) -> Result<Implicit> {
        let nv = self.nv;
        match self.spec.kind {
            CollisionKind::FokkerPlanck => {
                let dv2 = self.dv * self.dv;
                let mut lower = vec![0.0; nv - 1];
                let mut upper = vec![0.0; nv - 1];
                let mut diag = vec![1.0; nv];
                for j in 0..nv {
                    if j + 1 < nv {
                        let c = dt * self.m_face[j + 1] / dv2;
                        diag[j] += c / self.m[j];
                        upper[j] = -c / self.m[j + 1];
                    }
                    if j > 0 {
                        let c = dt * self.m_face[j] / dv2;
                        diag[j] += c / self.m[j];
                        lower[j - 1] = -c / self.m[j - 1];
                    }
                }
                Ok(Implicit::Tri { lower, diag, upper })
            }
            CollisionKind::Scattering => {
                let a = DMatrix::from_fn(nv, nv, |j, k| (j == k) as u8 as f64 - dt * self.dense[j * nv + k]);
                let inv = a.try_inverse().ok_or_else(|| Error::Solver("I − dt L is singular".into()))?;
                Ok(Implicit::Dense((0..nv * nv).map(|k| inv[(k / nv, k % nv)]).collect()))
            }
        }
    }

    /// One implicit Euler step `f ← (I − dt L)^{-1} f`, row by row. The
    /// factorisation is cached for the last `dt`.
    pub fn implicit_step(&mut self, f: &mut PhaseField, dt: f64) -> Result<()> {
        let fresh = match &self.implicit {
            Some((t, imp)) if *t == dt => imp.clone(),
            _ => {
                let imp = Arc::new(self.build_implicit(dt)?);
                self.implicit = Some((dt, imp.clone()));
                imp
            }
        };
        let nv = self.nv;
        let mut tmp = vec![0.0; nv];
        for row in f.values.chunks_mut(nv) {
            match fresh.as_ref() {
                Implicit::Tri { lower, diag, upper } => {
                    let sol = solve_tridiagonal(lower, diag, upper, row)?;
                    row.copy_from_slice(&sol);
                }
                Implicit::Dense(inv) => {
                    for (j, t) in tmp.iter_mut().enumerate() {
                        *t = inv[j * nv..(j + 1) * nv].iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                    }
                    row.copy_from_slice(&tmp);
                }
            }
        }
        Ok(())
    }

    /// The discrete microscopic coercivity constant: the largest `λ` with
    /// `−⟨Lf, f⟩ ≥ λ ‖(Id − Π)f‖²` for every `f`, i.e. the second eigenvalue of the
    /// symmetrised `−L` in `L²(1/M)`.
    pub fn lambda_m(&self) -> Result<f64> {
        let nv = self.nv;
        let dv = self.dv;
        match self.spec.kind {
            CollisionKind::FokkerPlanck => {
                // −⟨Lf,f⟩ = Σ m_{j+1/2} (h_{j+1} − h_j)² / dv with weight M_j dv
                let mut diag = vec![0.0; nv];
                let mut off = vec![0.0; nv - 1];
                for j in 0..nv - 1 {
                    let c = self.m_face[j + 1] / dv;
                    diag[j] += c;
                    diag[j + 1] += c;
                    off[j] = -c / ((self.m[j] * dv) * (self.m[j + 1] * dv)).sqrt();
                }
                for j in 0..nv {
                    diag[j] /= self.m[j] * dv;
                }
                SymTridiagonal::new(diag, off)?.eigenvalue(1, 1e-12)
            }
            CollisionKind::Scattering => {
                // quadratic form in h = f/M: −Σ h_j L_jk M_k h_k dv
                let q = DMatrix::from_fn(nv, nv, |j, k| {
                    let a = self.dense[j * nv + k] * self.m[k];
                    let b = self.dense[k * nv + j] * self.m[j];
                    let w = (self.m[j] * self.m[k]).sqrt() * dv;
                    -0.5 * (a + b) * dv / w
                });
                let mut ev: Vec<f64> = SymmetricEigen::new(q).eigenvalues.iter().copied().collect();
                ev.sort_by(f64::total_cmp);
                Ok(ev[1])
            }
        }
    }
}
