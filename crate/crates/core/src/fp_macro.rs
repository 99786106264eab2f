//! Radial finite-volume solver for `u_t = ∇·(e^{−V} ∇(e^V u))`.
//!
//! Fluxes use Scharfetter–Gummel exponential fitting: across the face between
//! nodes `i` and `i+1` the outward flux is
//! `(A/h) [B(ΔV) u_i − B(−ΔV) u_{i+1}]` with `B(x) = x/(e^x − 1)` and
//! `ΔV = V_{i+1} − V_i`. Column sums of the resulting matrix vanish (mass
//! conservation), off-diagonals are nonpositive (positivity) and nodal values
//! of `e^{−V}` are in its kernel (discrete equilibria).
//!
//! Steps are solved for `g = e^V u`, where the operator is the symmetric
//! weighted graph Laplacian with face conductances `κ = (A/h) B(ΔV) e^{−V_i}`.
//! Constants are then annihilated exactly in floating point.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{RadialField, RadialGrid};
use crate::linalg::solve_tridiagonal;
use crate::potentials::{PotentialKind, PotentialSpec, ProfileParams, SelfSimilarPotential};
use crate::rates::DecaySeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// `(t, x)`.
    Original,
    /// `τ = ½ log(1+2t)`, `ξ = x/√(1+2t)`, `v = (1+2t)^{d/2} u`.
    SelfSimilar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeScheme {
    BackwardEuler,
    CrankNicolson,
}

impl TimeScheme {
    fn theta(self) -> f64 {
        match self {
            TimeScheme::BackwardEuler => 1.0,
            TimeScheme::CrankNicolson => 0.5,
        }
    }
}

pub const MAX_DT: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct MacroSolverConfig {
    pub spec: PotentialSpec,
    pub d: usize,
    pub grid: Arc<RadialGrid>,
    /// Step in the frame's own time variable (`t` or `τ`).
    pub dt: f64,
    /// Final time in the frame's own time variable.
    pub t_end: f64,
    pub frame: Frame,
    /// Spherical-harmonic index; `0` evolves radial densities.
    pub mode_k: u32,
    pub scheme: TimeScheme,
    /// Samples per decade of the geometric output schedule.
    pub samples_per_decade: usize,
    /// Exponent of the `moment_k` series `∫ |x|^k u`.
    pub moment_k: f64,
}

impl MacroSolverConfig {
    pub fn new(spec: PotentialSpec, grid: Arc<RadialGrid>, dt: f64, t_end: f64, frame: Frame) -> Self {
        Self {
            spec,
            d: grid.d(),
            grid,
            dt,
            t_end,
            frame,
            mode_k: 0,
            scheme: TimeScheme::BackwardEuler,
            samples_per_decade: 20,
            moment_k: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.d() != self.d {
            return Err(Error::Domain(format!("grid dimension {} differs from d = {}", self.grid.d(), self.d)));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::Domain(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.spec.kind == PotentialKind::V1 && self.spec.gamma >= self.d as f64 {
            return Err(Error::Domain(format!("V1 needs gamma < d, got {}", self.spec.gamma)));
        }
        if self.samples_per_decade == 0 {
            return Err(Error::Domain("samples_per_decade must be positive".into()));
        }
        Ok(())
    }

    /// `k(k+d−2)`.
    pub fn centrifugal(&self) -> f64 {
        let k = self.mode_k as f64;
        k * (k + self.d as f64 - 2.0)
    }
}

/// `B(x) = x / (e^x − 1)`.
pub(crate) fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// Potential values at the nodes for the frame at time `time`.
pub fn nodal_potential(spec: PotentialSpec, frame: Frame, grid: &RadialGrid, time: f64) -> Result<Vec<f64>> {
    match frame {
        Frame::Original => grid.nodes().iter().map(|&r| spec.eval(r)).collect(),
        Frame::SelfSimilar => {
            let phi = self_similar_potential(spec, time)?;
            Ok(grid.nodes().iter().map(|&r| phi.phi(r)).collect())
        }
    }
}

/// `Φ` at rescaled time `τ`, up to an additive constant: `σ = 0` for V1 and
/// `σ = e^{−2τ}` for V2.
pub fn self_similar_potential(spec: PotentialSpec, tau: f64) -> Result<SelfSimilarPotential> {
    let sigma = match spec.kind {
        PotentialKind::V2 => (-2.0 * tau).exp(),
        _ => 0.0,
    };
    SelfSimilarPotential::new(spec.gamma, sigma)
}

/// Conductances `(A/h) B(ΔV)` and `(A/h) B(−ΔV)` of every interior face.
pub(crate) fn face_coefficients(grid: &RadialGrid, pot: &[f64]) -> Vec<(f64, f64)> {
    let (r, a) = (grid.nodes(), grid.face_areas());
    (0..grid.len() - 1)
        .map(|i| {
            let c = a[i + 1] / (r[i + 1] - r[i]);
            let dv = pot[i + 1] - pot[i];
            (c * bernoulli(dv), c * bernoulli(-dv))
        })
        .collect()
}

/// The operator in `g = e^V u` form: `W du/dt = −S g` with `S` symmetric.
#[derive(Debug, Clone)]
pub(crate) struct FvOperator {
    pub pot: Vec<f64>,
    /// Face conductances between nodes `i` and `i+1`.
    pub kappa: Vec<f64>,
    /// Diagonal part of `S` from the centrifugal term.
    pub extra: Vec<f64>,
    /// `w_i e^{−V_i}`.
    pub mass: Vec<f64>,
}

impl FvOperator {
    pub fn assemble(grid: &RadialGrid, pot: &[f64], centrifugal: f64) -> Self {
        let kappa = face_coefficients(grid, pot).into_iter().zip(pot).map(|((bp, _), v)| bp * (-v).exp()).collect();
        let mass: Vec<f64> = grid.weights().iter().zip(pot).map(|(w, v)| w * (-v).exp()).collect();
        let extra = grid.nodes().iter().zip(&mass).map(|(r, m)| centrifugal * m / (r * r)).collect();
        Self { pot: pot.to_vec(), kappa, extra, mass }
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.extra.iter().zip(g).map(|(e, x)| e * x).collect();
        for (i, &k) in self.kappa.iter().enumerate() {
            let flux = k * (g[i] - g[i + 1]);
            out[i] += flux;
            out[i + 1] -= flux;
        }
        out
    }

    pub fn to_g(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.pot).map(|(x, v)| x * v.exp()).collect()
    }

    /// Tridiagonal `(lower, diag, upper)` of `diag(mass_scale · mass) + shift · S`.
    pub fn pencil(&self, mass_scale: f64, shift: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.mass.len();
        let mut diag: Vec<f64> = (0..n).map(|i| mass_scale * self.mass[i] + shift * self.extra[i]).collect();
        let off: Vec<f64> = self.kappa.iter().map(|k| -shift * k).collect();
        for (i, &k) in self.kappa.iter().enumerate() {
            diag[i] += shift * k;
            diag[i + 1] += shift * k;
        }
        (off.clone(), diag, off)
    }
}

/// Physical time for a frame time.
pub fn physical_time(frame: Frame, time: f64) -> f64 {
    match frame {
        Frame::Original => time,
        Frame::SelfSimilar => 0.5 * (2.0 * time).exp_m1(),
    }
}

/// Rescaled time `τ = ½ log(1 + 2t)`.
pub fn rescaled_time(t: f64) -> f64 {
    0.5 * (2.0 * t).ln_1p()
}

/// Advances `state` from frame time `time` by one step of `cfg.dt`.
pub fn step_macro(state: &RadialField, cfg: &MacroSolverConfig, time: f64) -> Result<RadialField> {
    cfg.validate()?;
    let mut values = state.values.clone();
    let mut stepper = Stepper::new(cfg)?;
    stepper.step(&mut values, time, cfg.dt)?;
    RadialField::new(state.grid.clone(), values)
}

struct Stepper<'a> {
    cfg: &'a MacroSolverConfig,
    frozen: Option<FvOperator>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a MacroSolverConfig) -> Result<Self> {
        let time_dependent = cfg.frame == Frame::SelfSimilar && cfg.spec.kind == PotentialKind::V2;
        let frozen = if time_dependent { None } else { Some(Self::assemble(cfg, 0.0)?) };
        Ok(Self { cfg, frozen })
    }

    fn assemble(cfg: &MacroSolverConfig, time: f64) -> Result<FvOperator> {
        let pot = nodal_potential(cfg.spec, cfg.frame, &cfg.grid, time)?;
        Ok(FvOperator::assemble(&cfg.grid, &pot, cfg.centrifugal()))
    }

    /// θ-scheme `W(u' − u) = −dt [θ S' g' + (1−θ) S g]`, solved for the
    /// increment of `g' = e^{V'} u'` over `e^{V'} u`.
    fn step(&mut self, u: &mut Vec<f64>, time: f64, dt: f64) -> Result<()> {
        let theta = self.cfg.scheme.theta();
        let (op_new, op_old) = match &self.frozen {
            Some(op) => (op.clone(), None),
            None => (Self::assemble(self.cfg, time + dt)?, Some(Self::assemble(self.cfg, time)?)),
        };
        let g_tilde = op_new.to_g(u);
        let mut rhs: Vec<f64> = op_new.apply(&g_tilde).iter().map(|k| -theta * dt * k).collect();
        if theta < 1.0 {
            let old = op_old.as_ref().unwrap_or(&op_new);
            let sg = old.apply(&old.to_g(u));
            for (r, k) in rhs.iter_mut().zip(sg) {
                *r -= (1.0 - theta) * dt * k;
            }
        }
        let (lower, diag, upper) = op_new.pencil(1.0, theta * dt);
        let delta =
            solve_tridiagonal(&lower, &diag, &upper, &rhs).map_err(|e| Error::Solver(format!("implicit step at time {time}: {e}")))?;
        let next: Vec<f64> = g_tilde.iter().zip(&delta).zip(&op_new.pot).map(|((g, dg), v)| (g + dg) * (-v).exp()).collect();
        if let Some(i) = next.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("macro step at time {time} produced a non-finite value at node {i}")));
        }
        *u = next;
        Ok(())
    }
}

/// Solution snapshots on a geometric time schedule plus derived series.
///
/// Series are reported in physical variables `(t, u)` whatever the frame.
#[derive(Debug, Clone)]
pub struct MacroTrajectory {
    pub frame: Frame,
    pub spec: PotentialSpec,
    pub mode_k: u32,
    /// Frame times of the snapshots.
    pub times: Vec<f64>,
    pub snapshots: Vec<RadialField>,
    pub series: BTreeMap<String, DecaySeries>,
}

impl MacroTrajectory {
    pub fn physical_times(&self) -> Vec<f64> {
        self.times.iter().map(|&t| physical_time(self.frame, t)).collect()
    }

    pub fn series(&self, key: &str) -> Result<&DecaySeries> {
        self.series.get(key).ok_or_else(|| Error::Domain(format!("trajectory has no series '{key}'")))
    }

    /// `time,value,series` rows for every series.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value,series\n");
        for (name, s) in &self.series {
            for (t, v) in s.times.iter().zip(&s.values) {
                out.push_str(&format!("{t:e},{v:e},{name}\n"));
            }
        }
        out
    }
}

/// Step indices of the output schedule: `0`, the last step, and the steps
/// nearest to physical times `T·10^{−j/m}`.
fn sample_steps(frame: Frame, n_steps: usize, dt: f64, per_decade: usize) -> Vec<usize> {
    let t_phys_end = physical_time(frame, n_steps as f64 * dt);
    let mut steps = vec![0, n_steps];
    let mut j = 1;
    loop {
        let t = t_phys_end * 10f64.powf(-(j as f64) / per_decade as f64);
        let time = match frame {
            Frame::Original => t,
            Frame::SelfSimilar => rescaled_time(t),
        };
        let s = (time / dt).round() as usize;
        if s < 1 {
            break;
        }
        steps.push(s);
        j += 1;
    }
    steps.sort_unstable();
    steps.dedup();
    steps
}

struct Observables {
    l2: f64,
    l2_ev: f64,
    mass: f64,
    moment: f64,
}

fn observe(cfg: &MacroSolverConfig, u: &RadialField, time: f64) -> Result<Observables> {
    let t = physical_time(cfg.frame, time);
    let s = match cfg.frame {
        Frame::Original => 1.0,
        Frame::SelfSimilar => 1.0 + 2.0 * t,
    };
    let half = s.sqrt();
    let df = cfg.d as f64;
    let spec = cfg.spec;
    let l2 = u.weighted_norm_sq(|_| 1.0)? * s.powf(-0.5 * df);
    let l2_ev = u.weighted_norm_sq(|xi| spec.eval(xi * half).map(f64::exp).unwrap_or(f64::NAN))? * s.powf(-0.5 * df);
    let mass = u.mass();
    let k = cfg.moment_k;
    let moment = u.weighted_integral(|xi| xi.powf(k))? * s.powf(0.5 * k);
    Ok(Observables { l2, l2_ev, mass, moment })
}

/// Runs `cfg.t_end / cfg.dt` steps and samples the standard series
/// `l2`, `l2_weighted_eV`, `mass` and `moment_k`.
pub fn run_macro(u0: &RadialField, cfg: &MacroSolverConfig) -> Result<MacroTrajectory> {
    cfg.validate()?;
    if !Arc::ptr_eq(&u0.grid, &cfg.grid) && *u0.grid != *cfg.grid {
        return Err(Error::Domain("initial field lives on a different grid".into()));
    }
    if cfg.mode_k == 0 && !u0.is_nonnegative() {
        return Err(Error::Precondition("radial densities must be nonnegative".into()));
    }
    let n_steps = (cfg.t_end / cfg.dt).ceil().max(1.0) as usize;
    let dt = cfg.t_end / n_steps as f64;
    let samples = sample_steps(cfg.frame, n_steps, dt, cfg.samples_per_decade);
    let mut stepper = Stepper::new(cfg)?;
    let mut u = u0.values.clone();
    let mut traj = MacroTrajectory {
        frame: cfg.frame,
        spec: cfg.spec,
        mode_k: cfg.mode_k,
        times: Vec::with_capacity(samples.len()),
        snapshots: Vec::with_capacity(samples.len()),
        series: BTreeMap::new(),
    };
    let names = ["l2", "l2_weighted_eV", "mass", "moment_k"];
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut phys = Vec::new();
    let mut next = 0;
    for n in 0..=n_steps {
        if n > 0 {
            stepper.step(&mut u, (n - 1) as f64 * dt, dt)?;
        }
        if samples.get(next) == Some(&n) {
            next += 1;
            let time = n as f64 * dt;
            let field = RadialField::new(cfg.grid.clone(), u.clone())?;
            let obs = observe(cfg, &field, time)?;
            for (c, v) in cols.iter_mut().zip([obs.l2, obs.l2_ev, obs.mass, obs.moment]) {
                c.push(v);
            }
            phys.push(physical_time(cfg.frame, time));
            traj.times.push(time);
            traj.snapshots.push(field);
        }
    }
    for (name, values) in names.iter().zip(cols) {
        traj.series.insert(name.to_string(), DecaySeries::new(*name, phys.clone(), values)?);
    }
    Ok(traj)
}

/// Pointwise comparison of a trajectory against the profile bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub per_snapshot: Vec<bool>,
    /// `min (bound − u)` over all nodes and snapshots.
    pub worst_margin: f64,
    pub slack: f64,
    pub pass: bool,
}

fn profile_bound(params: &ProfileParams, frame: Frame, time: f64, r: f64) -> Result<f64> {
    match frame {
        Frame::Original => params.u_star(time, r),
        Frame::SelfSimilar => params.v_star(time, r),
    }
}

/// Checks `u ≤ bound + slack` at every node of every snapshot, where the bound
/// is `u_star` (original frame) or `v_star` (self-similar frame).
pub fn supersolution_check(traj: &MacroTrajectory, params: &ProfileParams, slack: f64) -> Result<SupersolutionReport> {
    if !(params.gamma >= 0.0 && params.gamma < params.d as f64) {
        return Err(Error::Domain(format!("supersolution check needs 0 <= gamma < d, got {}", params.gamma)));
    }
    let mut per_snapshot = Vec::with_capacity(traj.snapshots.len());
    let mut worst = f64::INFINITY;
    for (k, (snap, &time)) in traj.snapshots.iter().zip(&traj.times).enumerate() {
        let mut ok = true;
        for (&r, &u) in snap.grid.nodes().iter().zip(&snap.values) {
            let margin = profile_bound(params, traj.frame, time, r)? - u;
            if k == 0 && margin < -slack {
                return Err(Error::Precondition(format!("initial datum exceeds the profile bound at r = {r} by {}", -margin)));
            }
            worst = worst.min(margin);
            ok &= margin >= -slack;
        }
        per_snapshot.push(ok);
    }
    let pass = per_snapshot.iter().all(|&b| b);
    Ok(SupersolutionReport { per_snapshot, worst_margin: worst, slack, pass })
}

/// `(M_k(0)^{2/k} + 2(d+k−2−γ) M_0^{2/k} t)^{k/2}`.
pub fn moment_bound_closed(k: f64, d: usize, gamma: f64, mk0: f64, m0: f64, t: f64) -> Result<f64> {
    let c = d as f64 + k - 2.0 - gamma;
    if !(k >= 2.0f64.max(0.5 * gamma)) || !(c > 0.0) {
        return Err(Error::Domain(format!("moment bound needs k >= max(2, gamma/2) and d+k-2-gamma > 0 (k = {k})")));
    }
    if !(mk0 >= 0.0 && m0 > 0.0 && t >= 0.0) {
        return Err(Error::Domain("moment bound needs Mk0 >= 0, M0 > 0, t >= 0".into()));
    }
    Ok((mk0.powf(2.0 / k) + 2.0 * c * m0.powf(2.0 / k) * t).powf(0.5 * k))
}

/// `∫ (u − u_star)² / u_star` for each snapshot, against physical time.
///
/// For `mode_k > 0` the snapshots are perturbation amplitudes and the series is
/// `∫ h² / u_star`. The value is the same in both frames.
pub fn chi_square_distance(traj: &MacroTrajectory, params: &ProfileParams) -> Result<DecaySeries> {
    let mut values = Vec::with_capacity(traj.snapshots.len());
    for (snap, &time) in traj.snapshots.iter().zip(&traj.times) {
        let mut sum = 0.0;
        for ((&r, &u), &w) in snap.grid.nodes().iter().zip(&snap.values).zip(snap.grid.weights()) {
            let p = profile_bound(params, traj.frame, time, r)?;
            if !(p > 0.0) {
                if r == 0.0 {
                    continue;
                }
                return Err(Error::Domain(format!("profile vanishes at r = {r}; chi-square undefined")));
            }
            let diff = if traj.mode_k == 0 { u - p } else { u };
            sum += w * diff * diff / p;
        }
        values.push(sum);
    }
    DecaySeries::new("chi_square_vs_profile", traj.physical_times(), values)
}
