//! The twisted functional `H[f] = ½‖f‖² + ε⟨Af, f⟩`, its dissipation `D[f]`
//! and the operator bounds behind the coercivity of `D`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::closure::lambda_eps;
use super::collision::{CollisionOperator, CollisionSpec};
use super::space::PhaseSpace;
use super::transport::{Transport, TransportScheme};
use crate::grids::{PhaseField, PhaseGrid};
use crate::potentials::PotentialSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypoConfig {
    pub epsilon: f64,
    pub lambda_m: f64,
    pub m_gamma: f64,
    pub potential: PotentialSpec,
}

impl HypoConfig {
    /// `m_γ = 3 max{1, γ}`; fails when `λ_ε ≤ 0`.
    pub fn new(epsilon: f64, lambda_m: f64, potential: PotentialSpec, sigma_bar: f64) -> Result<Self> {
        let cfg = Self { epsilon, lambda_m, m_gamma: 3.0 * potential.gamma.max(1.0), potential };
        cfg.validate(sigma_bar)?;
        Ok(cfg)
    }

    pub fn lambda_eps(&self, sigma_bar: f64) -> f64 {
        lambda_eps(self.lambda_m, self.epsilon, self.m_gamma, sigma_bar)
    }

    pub fn validate(&self, sigma_bar: f64) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain(format!("ε must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.lambda_m > 0.0) {
            return Err(Error::Domain(format!("λ_m must be positive, got {}", self.lambda_m)));
        }
        let l = self.lambda_eps(sigma_bar);
        if !(l > 0.0) {
            return Err(Error::Domain(format!("ε = {} lies outside the positivity window (λ_ε = {l})", self.epsilon)));
        }
        Ok(())
    }
}

/// The five contributions to `D[f]` (the last three before the factor `ε`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DTerms {
    /// `−⟨Lf, f⟩`
    pub micro_dissipation: f64,
    /// `⟨ATΠf, Πf⟩`
    pub macro_pair: f64,
    /// `⟨AT(Id−Π)f, f⟩`
    pub at_micro: f64,
    /// `−⟨TAf, f⟩`
    pub ta: f64,
    /// `−⟨ALf, f⟩`
    pub al: f64,
}

impl DTerms {
    pub fn total(&self, epsilon: f64) -> f64 {
        self.micro_dissipation + epsilon * (self.macro_pair + self.at_micro + self.ta + self.al)
    }
}

#[derive(Debug, Clone)]
pub struct HypoState {
    pub f: PhaseField,
    /// `u = e^V ρ[f]`
    pub u: Vec<f64>,
    /// `w − 𝓛w = u`
    pub w: Vec<f64>,
    pub h: f64,
    pub d: f64,
    pub terms: DTerms,
    /// `‖(Id − Π)f‖²`
    pub micro: f64,
    pub macro_pair: f64,
    pub mass: f64,
    pub l2_sq: f64,
}

/// `⟨ATΠf, Πf⟩ = ‖∇w‖_V² + ‖𝓛w‖_V²` with the two sub-bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroPairing {
    pub value: f64,
    pub grad_sq: f64,
    pub lw_sq: f64,
    pub u_sq: f64,
}

impl MacroPairing {
    /// `(5/4)‖u‖² − value`
    pub fn margin(&self) -> f64 {
        1.25 * self.u_sq - self.value
    }

    /// `¼‖u‖² − ‖∇w‖²`
    pub fn grad_margin(&self) -> f64 {
        0.25 * self.u_sq - self.grad_sq
    }
}

/// One inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-12 * self.rhs.abs() + 1e-300
    }

    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            0.0
        }
    }
}

/// Phase space, transport and collision operators bundled with the derived operators `A`, `A*`.
#[derive(Debug, Clone)]
pub struct KineticModel {
    pub space: Arc<PhaseSpace>,
    pub transport: Arc<Transport>,
    pub collision: CollisionOperator,
}

impl KineticModel {
    pub fn new(grid: PhaseGrid, potential: PotentialSpec, spec: CollisionSpec) -> Result<Self> {
        let space = PhaseSpace::new(Arc::new(grid), potential)?;
        Self::from_space(space, spec)
    }

    pub fn from_space(space: PhaseSpace, spec: CollisionSpec) -> Result<Self> {
        let transport = Transport::new(&space);
        let collision = CollisionOperator::new(&space, spec)?;
        Ok(Self { space: Arc::new(space), transport: Arc::new(transport), collision })
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.space.grid
    }

    pub fn sigma_bar(&self) -> f64 {
        self.collision.spec.sigma_bar
    }

    /// Skew-adjoint `T f`.
    pub fn t_op(&self, f: &PhaseField) -> PhaseField {
        self.transport.apply(f, TransportScheme::Centered)
    }

    pub fn l_op(&self, f: &PhaseField) -> PhaseField {
        self.collision.apply(f)
    }

    /// Density `g` of `Af = g M e^{-V}`: `(e + Gᵀe^{-1}G) g = Gᵀ(j/e)`.
    pub fn a_density(&self, f: &PhaseField) -> Result<Vec<f64>> {
        let s = &self.space;
        let q: Vec<f64> = s.current(f).iter().zip(&s.e).map(|(j, e)| j / e).collect();
        let rhs = s.grad_t(&q);
        // the elliptic solve takes u and multiplies by e
        let u: Vec<f64> = rhs.iter().zip(&s.e).map(|(r, e)| r / e).collect();
        s.solve_w(&u)
    }

    pub fn a_op(&self, f: &PhaseField) -> Result<PhaseField> {
        Ok(self.space.macro_field(&self.a_density(f)?))
    }

    /// `A* f = v M (G w)` with `w − 𝓛w = u[f]`.
    pub fn a_star(&self, f: &PhaseField) -> Result<PhaseField> {
        let w = self.space.solve_w(&self.space.u_of(f))?;
        Ok(self.space.odd_field(&self.space.grad(&w)))
    }

    pub fn macro_pairing(&self, f: &PhaseField) -> Result<MacroPairing> {
        let s = &self.space;
        let u = s.u_of(f);
        let w = s.solve_w(&u)?;
        let lw = s.l_op(&w);
        let grad_sq = s.grad_norm_sq(&w);
        let lw_sq = s.inner_v(&lw, &lw);
        Ok(MacroPairing { value: grad_sq + lw_sq, grad_sq, lw_sq, u_sq: s.inner_v(&u, &u) })
    }

    /// `H`, `D` and their ingredients. `D`'s five terms are evaluated concurrently.
    pub fn functionals(&self, f: &PhaseField, cfg: &HypoConfig) -> Result<HypoState> {
        let s = &self.space;
        let rho = s.rho(f);
        let u = s.u_of(f);
        let w = s.solve_w(&u)?;
        let g = self.a_density(f)?;
        let micro_f = s.micro_part(f);
        let a_star = s.odd_field(&s.grad(&w));
        let dx = s.grid.dx;

        let (micro_dissipation, at_micro, al, ta) = std::thread::scope(|scope| {
            let d1 = scope.spawn(|| -s.inner(&self.l_op(f), f));
            let t3 = scope.spawn(|| s.inner(&self.t_op(&micro_f), &a_star));
            let t5 = scope.spawn(|| -s.inner(&self.l_op(&micro_f), &a_star));
            let j = s.current(f);
            let t4 = -s.grad(&g).iter().zip(&j).zip(&s.e).map(|((a, b), e)| a * b / e).sum::<f64>() * dx;
            (d1.join().expect("D term"), t3.join().expect("D term"), t5.join().expect("D term"), t4)
        });
        let macro_pair = u.iter().zip(&w).zip(&rho).map(|((u, w), r)| (u - w) * r).sum::<f64>() * dx;
        let terms = DTerms { micro_dissipation, macro_pair, at_micro, ta, al };
        let l2_sq = s.norm_sq(f);
        let af = g.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>() * dx;
        Ok(HypoState {
            h: 0.5 * l2_sq + cfg.epsilon * af,
            d: terms.total(cfg.epsilon),
            terms,
            micro: s.norm_sq(&micro_f),
            macro_pair,
            mass: f.mass(),
            l2_sq,
            f: f.clone(),
            u,
            w,
        })
    }

    /// All operator bounds used to show `D ≥ λ_ε (micro + macro_pair)`.
    pub fn operator_bounds(&self, f: &PhaseField, cfg: &HypoConfig) -> Result<Vec<BoundCheck>> {
        let s = &self.space;
        let st = self.functionals(f, cfg)?;
        let micro = st.micro.sqrt();
        let g = self.a_density(f)?;
        let a_norm = s.inner_v(&g, &g).sqrt();
        let ta_norm = s.grad_norm_sq(&g).sqrt();
        let mp = self.macro_pairing(f)?;
        let root = st.macro_pair.max(0.0).sqrt();
        let gamma = cfg.potential.gamma;
        Ok(vec![
            BoundCheck::new("A", a_norm, 0.5 * micro),
            BoundCheck::new("TA", ta_norm, micro),
            BoundCheck::new("AT_Pi", mp.value, 1.25 * mp.u_sq),
            BoundCheck::new("grad_w", mp.grad_sq, 0.25 * mp.u_sq),
            BoundCheck::new("Hessian", s.hessian_norm_sq(&st.w), gamma.max(1.0) * st.macro_pair),
            BoundCheck::new("AT_micro", st.terms.at_micro.abs(), cfg.m_gamma * root * micro),
            BoundCheck::new("AL", st.terms.al.abs(), std::f64::consts::SQRT_2 * self.sigma_bar() * root * micro),
            BoundCheck::new("coercivity", cfg.lambda_eps(self.sigma_bar()) * (st.micro + st.macro_pair), st.d),
        ])
    }
}
