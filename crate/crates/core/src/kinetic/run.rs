//! Time stepping, trajectories, kinetic moments and snapshot I/O.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::hypo::{HypoConfig, HypoState, KineticModel};
use super::transport::TransportScheme;
use crate::grids::{PhaseField, PhaseGrid};
use crate::{Error, Result};

/// Runs stop once this much mass sits in the outer 5% of x cells.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Strang splitting: transport over `dt/2`, implicit collision over `dt`,
/// transport over `dt/2`.
#[derive(Debug, Clone)]
pub struct KineticSolver {
    pub model: KineticModel,
    pub scheme: TransportScheme,
}

impl KineticSolver {
    pub fn new(model: KineticModel, scheme: TransportScheme) -> Self {
        Self { model, scheme }
    }

    pub fn step(&mut self, f: &mut PhaseField, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let tr = self.model.transport.clone();
        tr.advance(f, 0.5 * dt, self.scheme)?;
        self.model.collision.implicit_step(f, dt)?;
        tr.advance(f, 0.5 * dt, self.scheme)?;
        if let Some(k) = f.values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("kinetic step produced a non-finite value at cell {k}")));
        }
        Ok(())
    }

    /// Mass in the outer 5% of x cells on each side.
    pub fn boundary_mass(&self, f: &PhaseField) -> f64 {
        let g = &f.grid;
        let band = ((g.nx as f64 * 0.05).ceil() as usize).max(1);
        let cells = (0..band).chain(g.nx - band..g.nx);
        cells.map(|i| f.row(i).iter().map(|x| x.abs()).sum::<f64>()).sum::<f64>() * g.dx * g.dv
    }
}

/// `J_ℓ = Σ ⟨x⟩^ℓ |f|`, `K_ℓ = Σ |v|^ℓ |f|`, `L_ℓ = Σ ⟨x⟩^{ℓ−2} x v f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticMoments {
    pub ell: f64,
    pub j: f64,
    pub k: f64,
    pub l: f64,
}

pub fn kinetic_moments(f: &PhaseField, ell: f64) -> KineticMoments {
    let g = &f.grid;
    let (mut j, mut k, mut l) = (0.0, 0.0, 0.0);
    let vk: Vec<f64> = g.v().iter().map(|v| v.abs().powf(ell)).collect();
    for (i, &x) in g.x().iter().enumerate() {
        let b2 = 1.0 + x * x;
        let xj = b2.powf(0.5 * ell);
        let xl = b2.powf(0.5 * ell - 1.0) * x;
        for (jj, &v) in g.v().iter().enumerate() {
            let a = f.at(i, jj);
            j += xj * a.abs();
            k += vk[jj] * a.abs();
            l += xl * v * a;
        }
    }
    let w = g.dx * g.dv;
    KineticMoments { ell, j: j * w, k: k * w, l: l * w }
}

/// `M_ℓ = Σ w ⟨x⟩^ℓ e^{-V} dx`.
pub fn elliptic_moment(model: &KineticModel, w: &[f64], ell: f64) -> f64 {
    let s = &model.space;
    s.grid.x().iter().zip(w).zip(&s.e).map(|((x, w), e)| w * (1.0 + x * x).powf(0.5 * ell) * e).sum::<f64>() * s.grid.dx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Sample every this many steps.
    pub sample_every: usize,
    /// Moment order `ℓ` reported alongside `J_2`, `K_2`.
    pub ell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub h: f64,
    pub d: f64,
    pub micro: f64,
    pub macro_pair: f64,
    pub mass: f64,
    pub j2: f64,
    pub k2: f64,
    pub l2: f64,
    pub m2: f64,
    pub l2_norm: f64,
    pub moments: KineticMoments,
}

impl Sample {
    fn new(model: &KineticModel, time: f64, st: &HypoState, ell: f64) -> Self {
        let two = kinetic_moments(&st.f, 2.0);
        Self {
            time,
            h: st.h,
            d: st.d,
            micro: st.micro,
            macro_pair: st.macro_pair,
            mass: st.mass,
            j2: two.j,
            k2: two.k,
            l2: two.l,
            m2: elliptic_moment(model, &st.w, 2.0),
            l2_norm: st.l2_sq.sqrt(),
            moments: kinetic_moments(&st.f, ell),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Set when the run stopped early because mass reached the x walls.
    pub halted_at: Option<f64>,
    pub max_mass_drift: f64,
    pub lambda_eps: f64,
    /// State at the last step taken.
    #[serde(skip)]
    pub final_state: Option<PhaseField>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,H,D,micro,macro_pair,mass,J2,K2,l2_norm\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{},{},{},{},{},{}", s.time, s.h, s.d, s.micro, s.macro_pair, s.mass, s.j2, s.k2, s.l2_norm);
        }
        out
    }
}

/// Pass/fail ingredients of the Lyapunov and moment properties of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryProperties {
    pub mass_drift: f64,
    /// samples where `H` rose by more than `1e-8` relative
    pub h_increases: usize,
    /// smallest `−(ΔH/Δt) / D̄` over smooth windows (`D̄` the trapezoid mean)
    pub dissipation_ratio: f64,
    pub smooth_windows: usize,
    /// smallest `D / (λ_ε (micro + macro_pair))`
    pub coercivity_ratio: f64,
    /// `max K_2` over the run divided by `max K_2` over the first decade
    pub k2_growth: f64,
    /// `C = max J_2 / (1+t)` over the first decade
    pub j2_constant: f64,
    pub j2_violations: usize,
}

impl TrajectoryProperties {
    /// Windows where `D` changes by at most this fraction count as smooth.
    pub const SMOOTH: f64 = 0.02;

    pub fn holds(&self, mass_tol: f64) -> bool {
        self.mass_drift <= mass_tol
            && self.h_increases == 0
            && self.smooth_windows > 0
            && self.dissipation_ratio >= 0.95
            && self.coercivity_ratio >= 1.0
            && self.k2_growth <= 1.5
            && self.j2_violations == 0
    }
}

impl Trajectory {
    pub fn properties(&self) -> TrajectoryProperties {
        let s = &self.samples;
        let mut p = TrajectoryProperties {
            mass_drift: self.max_mass_drift,
            h_increases: 0,
            dissipation_ratio: f64::INFINITY,
            smooth_windows: 0,
            coercivity_ratio: f64::INFINITY,
            k2_growth: 0.0,
            j2_constant: 0.0,
            j2_violations: 0,
        };
        for w in s.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.h > a.h + 1e-8 * a.h.abs() {
                p.h_increases += 1;
            }
            let dbar = 0.5 * (a.d + b.d);
            if dbar > 0.0 && (b.d - a.d).abs() <= TrajectoryProperties::SMOOTH * a.d.max(b.d) {
                p.smooth_windows += 1;
                p.dissipation_ratio = p.dissipation_ratio.min(-(b.h - a.h) / (b.time - a.time) / dbar);
            }
        }
        for x in s {
            let floor = self.lambda_eps * (x.micro + x.macro_pair);
            if floor > 0.0 {
                p.coercivity_ratio = p.coercivity_ratio.min(x.d / floor);
            }
        }
        let t_end = s.last().map_or(0.0, |x| x.time);
        let early: Vec<&Sample> = s.iter().filter(|x| x.time <= 0.1 * t_end).collect();
        let k2_early = early.iter().map(|x| x.k2).fold(0.0, f64::max);
        let k2_all = s.iter().map(|x| x.k2).fold(0.0, f64::max);
        p.k2_growth = if k2_early > 0.0 { k2_all / k2_early } else { 0.0 };
        p.j2_constant = early.iter().map(|x| x.j2 / (1.0 + x.time)).fold(0.0, f64::max);
        p.j2_violations = s.iter().filter(|x| x.j2 > p.j2_constant * (1.0 + x.time) * (1.0 + 1e-12)).count();
        p
    }
}

/// Integrates from `f0` to `t_end`, sampling the functionals every
/// `sample_every` steps. Stops early (without error) when mass reaches the walls.
pub fn run_kinetic(solver: &mut KineticSolver, f0: &PhaseField, cfg: &HypoConfig, run: &RunConfig) -> Result<Trajectory> {
    if !(run.dt > 0.0 && run.t_end > 0.0) || run.sample_every == 0 {
        return Err(Error::Domain("run needs dt > 0, t_end > 0 and sample_every ≥ 1".into()));
    }
    if f0.values.iter().any(|&x| x < 0.0) {
        return Err(Error::Precondition("kinetic runs need a nonnegative initial datum".into()));
    }
    let sigma_bar = solver.model.sigma_bar();
    cfg.validate(sigma_bar)?;
    let mut f = f0.clone();
    let m0 = f.mass();
    let steps = (run.t_end / run.dt).round().max(1.0) as usize;
    let mut traj =
        Trajectory { samples: Vec::new(), halted_at: None, max_mass_drift: 0.0, lambda_eps: cfg.lambda_eps(sigma_bar), final_state: None };
    let st = solver.model.functionals(&f, cfg)?;
    traj.samples.push(Sample::new(&solver.model, 0.0, &st, run.ell));
    for n in 1..=steps {
        solver.step(&mut f, run.dt)?;
        let time = n as f64 * run.dt;
        traj.max_mass_drift = traj.max_mass_drift.max((f.mass() - m0).abs());
        if n % run.sample_every == 0 || n == steps {
            let st = solver.model.functionals(&f, cfg)?;
            traj.samples.push(Sample::new(&solver.model, time, &st, run.ell));
            if solver.boundary_mass(&f) > BOUNDARY_MASS_LIMIT {
                traj.halted_at = Some(time);
                break;
            }
        }
    }
    traj.final_state = Some(f);
    Ok(traj)
}

/// Text snapshot: a header line `nx nv x_max v_max`, then one row of `nv` values per x node.
pub fn write_snapshot(f: &PhaseField, mut out: impl Write) -> Result<()> {
    let g = &f.grid;
    let io = |e: std::io::Error| Error::Solver(format!("snapshot write failed: {e}"));
    writeln!(out, "{} {} {} {}", g.nx, g.nv, g.x_max, g.v_max).map_err(io)?;
    for i in 0..g.nx {
        let row: Vec<String> = f.row(i).iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", row.join(" ")).map_err(io)?;
    }
    Ok(())
}

pub fn read_snapshot(input: impl BufRead) -> Result<PhaseField> {
    let mut lines = input.lines();
    let bad = |msg: String| Error::Domain(format!("snapshot: {msg}"));
    let header = lines.next().ok_or_else(|| bad("empty input".into()))?.map_err(|e| bad(e.to_string()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(bad(format!("header needs `nx nv x_max v_max`, got `{header}`")));
    }
    let nx: usize = parts[0].parse().map_err(|_| bad(format!("bad nx `{}`", parts[0])))?;
    let nv: usize = parts[1].parse().map_err(|_| bad(format!("bad nv `{}`", parts[1])))?;
    let x_max: f64 = parts[2].parse().map_err(|_| bad(format!("bad x_max `{}`", parts[2])))?;
    let v_max: f64 = parts[3].parse().map_err(|_| bad(format!("bad v_max `{}`", parts[3])))?;
    let grid = std::sync::Arc::new(PhaseGrid::new(nx, nv, x_max, v_max)?);
    let mut values = Vec::with_capacity(nx * nv);
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| bad(format!("bad value `{tok}` on row {}", row + 1)))?);
        }
    }
    PhaseField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::collision::CollisionSpec;
    use crate::potentials::PotentialSpec;

    fn solver(nx: usize, nv: usize) -> KineticSolver {
        let grid = PhaseGrid::new(nx, nv, 12.0, 7.0).unwrap();
        let model = KineticModel::new(grid, PotentialSpec::v2(0.5), CollisionSpec::fokker_planck()).unwrap();
        KineticSolver::new(model, TransportScheme::Upwind)
    }

    fn initial(s: &KineticSolver) -> PhaseField {
        PhaseField::from_fn(s.model.grid().clone(), |x, v| (-(x - 1.0).powi(2) - (v - 1.0).powi(2)).exp()).unwrap()
    }

    #[test]
    fn collision_only_step_keeps_local_equilibria() {
        let mut s = solver(16, 32);
        let g = PhaseField::from_fn(s.model.grid().clone(), |x, _| (-x * x / 4.0).exp()).unwrap();
        let mut f = s.model.space.project_pi(&g);
        let before = f.clone();
        s.model.collision.implicit_step(&mut f, 0.1).unwrap();
        for (a, b) in f.values.iter().zip(&before.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn step_conserves_mass_and_positivity() {
        let mut s = solver(48, 48);
        let mut f = initial(&s);
        let m0 = f.mass();
        for _ in 0..10 {
            s.step(&mut f, 0.05).unwrap();
            assert!((f.mass() - m0).abs() <= 1e-12 * m0);
        }
        assert!(f.values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn short_run_has_monotone_h() {
        let mut s = solver(48, 40);
        let cfg = HypoConfig::new(0.05, s.model.collision.lambda_m().unwrap(), PotentialSpec::v2(0.5), s.model.sigma_bar()).unwrap();
        let run = RunConfig { dt: 0.05, t_end: 2.0, sample_every: 2, ell: 2.0 };
        let f0 = initial(&s);
        let tr = run_kinetic(&mut s, &f0, &cfg, &run).unwrap();
        assert!(tr.samples.windows(2).all(|w| w[1].h <= w[0].h));
        assert!(tr.samples.iter().all(|x| x.d >= tr.lambda_eps * (x.micro + x.macro_pair)));
        assert!(tr.to_csv().starts_with("time,H,D,micro,macro_pair,mass,J2,K2,l2_norm\n"));
    }

    #[test]
    fn zero_datum_gives_zero_series() {
        let mut s = solver(16, 16);
        let cfg = HypoConfig::new(0.05, 0.9, PotentialSpec::v2(0.5), s.model.sigma_bar()).unwrap();
        let run = RunConfig { dt: 0.1, t_end: 0.5, sample_every: 1, ell: 2.0 };
        let f0 = PhaseField::zeros(s.model.grid().clone());
        let tr = run_kinetic(&mut s, &f0, &cfg, &run).unwrap();
        assert!(tr.samples.iter().all(|x| x.h == 0.0 && x.d == 0.0 && x.j2 == 0.0 && x.k2 == 0.0 && x.mass == 0.0));
    }

    #[test]
    fn snapshot_round_trip() {
        let s = solver(16, 16);
        let f = initial(&s);
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("16 16 12 7\n"));
        let g = read_snapshot(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(g.values, f.values);
        assert!(read_snapshot(std::io::Cursor::new(b"16 16 12\n".to_vec())).is_err());
    }

    #[test]
    fn moments_of_a_point_mass() {
        let s = solver(16, 16);
        let g = s.model.grid().clone();
        let mut f = PhaseField::zeros(g.clone());
        let (i, j) = (12, 3);
        f.values[g.idx(i, j)] = 1.0 / (g.dx * g.dv);
        let m = kinetic_moments(&f, 3.0);
        let (x, v) = (g.x()[i], g.v()[j]);
        assert!((m.j - (1.0 + x * x).powf(1.5)).abs() < 1e-12 * m.j);
        assert!((m.k - v.abs().powi(3)).abs() < 1e-12 * m.k);
        assert!((m.l - (1.0 + x * x).sqrt() * x * v).abs() < 1e-12 * m.l.abs());
    }

    #[test]
    fn moment_recursion_matches_quadrature() {
        use crate::kinetic::closure::elliptic_moment_recursion;
        use std::collections::BTreeMap;
        let grid = PhaseGrid::new(4000, 8, 200.0, 7.0).unwrap();
        let model = KineticModel::new(grid, PotentialSpec::v2(0.5), CollisionSpec::fokker_planck()).unwrap();
        let s = &model.space;
        let u: Vec<f64> = s.grid.x().iter().map(|x| (-(x - 1.0) * (x - 1.0) / 3.0).exp()).collect();
        let w = s.solve_w(&u).unwrap();
        let j = |ell: f64| {
            s.grid.x().iter().zip(&u).zip(&s.e).map(|((x, u), e)| u * e * (1.0 + x * x).powf(0.5 * ell)).sum::<f64>() * s.grid.dx
        };
        let moments: BTreeMap<i32, f64> = [-2, 0, 2].into_iter().map(|k| (k, elliptic_moment(&model, &w, k as f64))).collect();
        for ell in [2, 4] {
            let rec = elliptic_moment_recursion(ell, 1.0, 0.5, &moments, j(ell as f64)).unwrap();
            let quad = elliptic_moment(&model, &w, ell as f64);
            assert!((rec - quad).abs() < 0.01 * quad, "ell {ell}: {rec} vs {quad}");
        }
    }
}
