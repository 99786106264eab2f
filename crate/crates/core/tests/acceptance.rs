//! Acceptance suite: one PASS/FAIL line per criterion, details indented below.
//!
//! Set `WEAKCONF_ACCEPTANCE=1,5` to run a subset. Tolerances come from
//! `acceptance.toml` beside this file (or `WEAKCONF_ACCEPTANCE_CONFIG`). The
//! process exits with status 1 when any selected criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use weakconf_core::fp_macro::{
    chi_square_distance, moment_bound_closed, rescaled_time, run_macro, supersolution_check, Frame, MacroSolverConfig, MacroTrajectory,
    TimeScheme,
};
use weakconf_core::inequalities::{
    ckn_beta_bridge, hardy_nash2_check, hardy_nash_counterexample, hardy_rayleigh, nash_envelope, translation_degeneracy,
    verify_hardy_nash, HardyFamily,
};
use weakconf_core::kinetic::{
    lambda_eps, operator_bound_suite, positivity_window, run_kinetic, CollisionSpec, HypoConfig, KineticModel, KineticSolver, NashEnvelope,
    PhaseSpace, RunConfig, ScatteringKernel, TransportScheme, ZOde,
};
use weakconf_core::potentials::{lambda_star, theorem1_rate_constant};
use weakconf_core::rates::{fit_decay_exponent, FitAxis, FitWindow, TheoremId, TheoremVerdict};
use weakconf_core::spectral::{ball_poincare_constant, poincare_gap, weighted_poincare_gap, SpectralProblem};
use weakconf_core::{PhaseField, PhaseGrid, PotentialSpec, ProfileParams, RadialField, RadialGrid};

type Outcome = Result<Vec<TheoremVerdict>, String>;
type Datum<'a> = (&'static str, Box<dyn Fn(f64) -> f64 + 'a>);
type Criterion = (u32, &'static str, fn() -> Outcome);

const HASH: &str = "acceptance";

fn tolerances() -> &'static toml::Table {
    static TABLE: OnceLock<toml::Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let path = std::env::var("WEAKCONF_ACCEPTANCE_CONFIG")
            .unwrap_or_else(|_| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/acceptance.toml").to_string());
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {path}: {e}"));
        text.parse().unwrap_or_else(|e| panic!("{path}: {e}"))
    })
}

/// Tolerance `section.key` from the acceptance config.
fn tol(key: &str) -> f64 {
    let (section, name) = key.split_once('.').expect("section.key");
    let value = tolerances().get(section).and_then(|t| t.get(name)).unwrap_or_else(|| panic!("acceptance config lacks {key}"));
    value.as_float().or_else(|| value.as_integer().map(|i| i as f64)).unwrap_or_else(|| panic!("{key} is not a number"))
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn check(id: TheoremId, label: impl Into<String>, what: impl Into<String>, measured: f64, pass: bool) -> TheoremVerdict {
    TheoremVerdict::property(id, label, what, measured, pass, HASH)
}

fn runtime(id: TheoremId, label: &str, started: Instant, limit_s: f64) -> TheoremVerdict {
    let s = started.elapsed().as_secs_f64();
    check(id, format!("{label} runtime"), format!("wall time <= {limit_s} s"), s, s <= limit_s)
}

fn gaussian_run(spec: PotentialSpec, r_max: f64, t_end: f64, dt: f64, scheme: TimeScheme) -> Result<MacroTrajectory, String> {
    let g = Arc::new(RadialGrid::log_uniform(3, r_max, 0.05, 1e-5).map_err(err)?);
    let u0 = RadialField::from_fn(g.clone(), |r| (-r * r / 2.0).exp()).map_err(err)?;
    let mut cfg = MacroSolverConfig::new(spec, g, dt, t_end, Frame::Original);
    cfg.scheme = scheme;
    run_macro(&u0, &cfg).map_err(err)
}

fn tail_exponent(traj: &MacroTrajectory, key: &str) -> Result<f64, String> {
    let s = traj.series(key).map_err(err)?;
    Ok(fit_decay_exponent(s, FitWindow::last_decade(s), FitAxis::default()).map_err(err)?.exponent)
}

fn criterion1() -> Outcome {
    let mut out = Vec::new();
    let c_nash = nash_envelope(3).map_err(err)?.constant;
    for gamma in [0.0, 0.4] {
        let started = Instant::now();
        // the explicit bound is nearly sharp for a Gaussian at γ = 0, so early
        // times need a second-order step
        let traj = gaussian_run(PotentialSpec::v2(gamma), 400.0, 2500.0, 0.05, TimeScheme::CrankNicolson)?;
        let label = format!("V2 gamma={gamma}");
        let p = tail_exponent(&traj, "l2")?;
        out.push(TheoremVerdict::quantitative(TheoremId::T1, format!("{label} l2 exponent"), -1.5, p, tol("c1.exponent"), HASH));
        let l2 = traj.series("l2").map_err(err)?;
        let m0 = traj.series("mass").map_err(err)?.values[0];
        let n0 = l2.values[0];
        let c = theorem1_rate_constant(3, gamma, c_nash, m0, n0.sqrt()).map_err(err)?;
        let worst = l2.times.iter().zip(&l2.values).map(|(&t, &v)| v / (n0 * (1.0 + c * t).powf(-1.5))).fold(0.0, f64::max);
        out.push(check(
            TheoremId::T1,
            format!("{label} explicit L2 bound (c = {c:.4e})"),
            "max ||u||^2 / bound <= 1 at every sample",
            worst,
            worst <= 1.0 + tol("c1.bound_slack"),
        ));
        out.push(runtime(TheoremId::T1, &label, started, tol("c1.runtime_s")));
    }
    Ok(out)
}

fn criterion2() -> Outcome {
    let mut out = Vec::new();
    for (name, spec) in [("V2", PotentialSpec::v2(1.0)), ("V1", PotentialSpec::v1(1.0))] {
        let started = Instant::now();
        let traj = gaussian_run(spec, 400.0, 2500.0, 0.5, TimeScheme::BackwardEuler)?;
        let p = tail_exponent(&traj, "l2_weighted_eV")?;
        out.push(TheoremVerdict::quantitative(
            TheoremId::T2,
            format!("{name} gamma=1 weighted exponent"),
            -1.0,
            p,
            tol("c2.exponent"),
            HASH,
        ));
        out.push(runtime(TheoremId::T2, name, started, tol("c2.runtime_s")));
    }
    // the second-moment bound is exact for V1 with k = 2; compared with an O(h²) allowance
    let started = Instant::now();
    let traj = gaussian_run(PotentialSpec::v1(1.0), 150.0, 300.0, 0.5, TimeScheme::BackwardEuler)?;
    let m2 = traj.series("moment_k").map_err(err)?;
    let m0 = traj.series("mass").map_err(err)?.values[0];
    let mut worst = f64::NEG_INFINITY;
    for (&t, &m) in m2.times.iter().zip(&m2.values) {
        let bound = moment_bound_closed(2.0, 3, 1.0, m2.values[0], m0, t).map_err(err)?;
        worst = worst.max(m / bound - 1.0);
    }
    let slack = tol("c2.moment_slack");
    out.push(check(TheoremId::T2, "V1 gamma=1 second moment bound", format!("max relative excess <= {slack:e}"), worst, worst <= slack));
    out.push(runtime(TheoremId::T2, "moment run", started, tol("c2.runtime_s")));
    Ok(out)
}

fn criterion3() -> Outcome {
    let started = Instant::now();
    let gamma = 2.5;
    let g = Arc::new(RadialGrid::log_uniform(3, 12.0, 0.02, 1e-6).map_err(err)?);
    let unit = ProfileParams::new(1.0, gamma, 3, 0.0).map_err(err)?;
    let v0 = RadialField::from_fn(g.clone(), |r| unit.v_star(0.0, r).unwrap() * (1.0 + 0.5 * (-r * r / 4.0).exp())).map_err(err)?;
    let p = ProfileParams::mass_matched(gamma, 3, 0.0, v0.mass(), &g).map_err(err)?;
    let mut cfg = MacroSolverConfig::new(PotentialSpec::v1(gamma), g.clone(), 0.01, rescaled_time(1000.0), Frame::SelfSimilar);
    let chi_exponent = |traj: &MacroTrajectory| -> Result<f64, String> {
        let chi = chi_square_distance(traj, &p).map_err(err)?;
        Ok(fit_decay_exponent(&chi, FitWindow::last_decade(&chi), FitAxis { offset: 0.5 }).map_err(err)?.exponent)
    };
    let mut out = Vec::new();
    let radial = chi_exponent(&run_macro(&v0, &cfg).map_err(err)?)?;
    out.push(TheoremVerdict::quantitative(
        TheoremId::T3CorIA,
        "radial chi-square exponent in (1+2t)",
        -2.0,
        radial,
        tol("c3.radial_exponent"),
        HASH,
    ));
    // a mode-1 amplitude h with chi-square ~ e^{-2 rate τ} = (1+2t)^{-rate}
    cfg.mode_k = 1;
    let h0 = RadialField::from_fn(g.clone(), |r| r * unit.v_star(0.0, r).unwrap()).map_err(err)?;
    let rate = -chi_exponent(&run_macro(&h0, &cfg).map_err(err)?)?;
    out.push(TheoremVerdict::quantitative(TheoremId::T3CorIA, "mode-1 decay rate in tau", 2.0, rate, tol("c3.mode1_rate"), HASH));
    out.push(runtime(TheoremId::T3CorIA, "both runs", started, tol("c3.runtime_s")));
    Ok(out)
}

fn criterion4() -> Outcome {
    let g = Arc::new(RadialGrid::log_uniform(3, 12.0, 0.02, 1e-6).map_err(err)?);
    let mut out = Vec::new();
    for (spec, sigma) in [(PotentialSpec::v1(1.0), 0.0), (PotentialSpec::v2(1.0), 1.0)] {
        let p = ProfileParams::new(1.0, 1.0, 3, sigma).map_err(err)?;
        let data: [Datum; 2] = [
            ("half profile", Box::new(|r| 0.5 * p.v_star(0.0, r).unwrap())),
            ("bump below profile", Box::new(|r| p.v_star(0.0, r).unwrap() * (0.3 + 0.7 * (-r * r).exp()))),
        ];
        for (name, f) in data {
            let v0 = RadialField::from_fn(g.clone(), f).map_err(err)?;
            let cfg = MacroSolverConfig::new(spec, g.clone(), 0.02, rescaled_time(100.0), Frame::SelfSimilar);
            let traj = run_macro(&v0, &cfg).map_err(err)?;
            let slack = tol("c4.slack");
            let rep = supersolution_check(&traj, &p, slack).map_err(err)?;
            out.push(check(
                TheoremId::T4Props,
                format!("sigma={sigma} {name}"),
                format!("u <= profile + {slack:e} at every node and snapshot (worst margin)"),
                rep.worst_margin,
                rep.pass,
            ));
        }
    }
    Ok(out)
}

fn criterion5() -> Outcome {
    let grid = |d: usize, h: f64| RadialGrid::log_uniform(d, 16.0, h, 1e-4).map(Arc::new).map_err(err);
    let mut out = Vec::new();
    for (d, gamma) in [(3usize, 2.5), (4, 3.2), (5, 4.5)] {
        let expected = lambda_star(d, gamma).map_err(err)?;
        if expected < 4.0 {
            let coarse = weighted_poincare_gap(gamma, 0.0, grid(d, 0.02)?).map_err(err)?;
            let fine = weighted_poincare_gap(gamma, 0.0, grid(d, 0.01)?).map_err(err)?;
            let drift = (fine - coarse).abs() / fine;
            out.push(check(
                TheoremId::Spectral,
                format!("(d,gamma)=({d},{gamma}) refinement"),
                format!("relative change <= {}", tol("c5.refinement")),
                drift,
                drift <= tol("c5.refinement"),
            ));
            out.push(TheoremVerdict::quantitative(
                TheoremId::Spectral,
                format!("(d,gamma)=({d},{gamma}) gap vs lambda_star"),
                expected,
                fine,
                tol("c5.gap") * expected,
                HASH,
            ));
        }
        let mode1 = poincare_gap(&SpectralProblem::new(gamma, 0.0, 1, grid(d, 0.01)?, 1)).map_err(err)?.eigenvalues[0];
        let target = d as f64 - 1.0;
        out.push(TheoremVerdict::quantitative(
            TheoremId::Spectral,
            format!("(d,gamma)=({d},{gamma}) mode-1 vs d-1"),
            target,
            mode1,
            tol("c5.mode1") * target,
            HASH,
        ));
    }
    Ok(out)
}

fn kinetic_run(scattering: bool) -> Outcome {
    let started = Instant::now();
    let gamma = 0.5;
    let grid = PhaseGrid::new(512, 256, 60.0, 8.0).map_err(err)?;
    let space = PhaseSpace::new(Arc::new(grid), PotentialSpec::v2(gamma)).map_err(err)?;
    let (name, spec, sample_every) = if scattering {
        ("scattering", CollisionSpec::scattering(ScatteringKernel::nonsymmetric_example(&space), 2.3), 2)
    } else {
        ("Fokker-Planck", CollisionSpec::fokker_planck(), 1)
    };
    let model = KineticModel::from_space(space, spec).map_err(err)?;
    let lm = model.collision.lambda_m().map_err(err)?;
    let m_gamma = 3.0 * gamma.max(1.0);
    let window = positivity_window(lm, m_gamma, model.sigma_bar(), 1000).map_err(err)?;
    let cfg = HypoConfig::new(window.best_eps, lm, PotentialSpec::v2(gamma), model.sigma_bar()).map_err(err)?;
    let f0 = PhaseField::from_fn(model.grid().clone(), |x, v| {
        (-(x - 2.0).powi(2) / 2.0 - (v - 1.0).powi(2) / 0.5).exp() + 0.5 * (-(x + 3.0).powi(2) - v * v).exp()
    })
    .map_err(err)?;
    let mut solver = KineticSolver::new(model, TransportScheme::Muscl);
    let run = RunConfig { dt: 0.05, t_end: 50.0, sample_every, ell: 2.0 };
    let traj = run_kinetic(&mut solver, &f0, &cfg, &run).map_err(err)?;
    let p = traj.properties();
    let id = TheoremId::T4Props;
    let eps_in = window.lower < cfg.epsilon && cfg.epsilon < window.upper;
    let (drift_tol, diss_tol, coer_tol, k2_tol) = (tol("c6.mass_drift"), tol("c6.dissipation"), tol("c6.coercivity"), tol("c6.k2_growth"));
    let checks = [
        p.mass_drift <= drift_tol,
        p.h_increases == 0,
        p.smooth_windows > 0 && p.dissipation_ratio >= diss_tol,
        p.coercivity_ratio >= coer_tol,
        p.k2_growth <= k2_tol,
        p.j2_violations == 0,
    ];
    Ok(vec![
        check(
            id,
            format!("{name} epsilon={:.4} in window ({:.4}, {:.4})", cfg.epsilon, window.lower, window.upper),
            "lambda_eps > 0",
            traj.lambda_eps,
            eps_in && traj.lambda_eps > 0.0,
        ),
        check(
            id,
            format!("{name} completed"),
            "no early halt at the walls",
            traj.samples.last().map_or(0.0, |s| s.time),
            traj.halted_at.is_none(),
        ),
        check(id, format!("{name} mass drift"), format!("<= {drift_tol:e}"), p.mass_drift, checks[0]),
        check(id, format!("{name} H monotone"), "H increases (count)", p.h_increases as f64, checks[1]),
        check(
            id,
            format!("{name} dissipation over {} smooth windows", p.smooth_windows),
            format!("-dH/dt >= {diss_tol} D"),
            p.dissipation_ratio,
            checks[2],
        ),
        check(id, format!("{name} coercivity"), "D >= lambda_eps (micro + macro_pair)", p.coercivity_ratio, checks[3]),
        check(id, format!("{name} K2 bounded"), format!("max K2 / early max K2 <= {k2_tol}"), p.k2_growth, checks[4]),
        check(
            id,
            format!("{name} J2 linear growth (C = {:.4})", p.j2_constant),
            "J2 <= C(1+t) violations",
            p.j2_violations as f64,
            checks[5],
        ),
        check(id, format!("{name} properties"), "all of the above", 0.0, checks.iter().all(|&c| c) && eps_in && traj.halted_at.is_none()),
        runtime(id, name, started, tol("c6.runtime_s")),
    ])
}

fn criterion6() -> Outcome {
    let mut out = kinetic_run(false)?;
    out.extend(kinetic_run(true)?);
    Ok(out)
}

fn criterion7() -> Outcome {
    let mut out = Vec::new();
    for gamma in [0.5, 2.0] {
        for scattering in [false, true] {
            let grid = PhaseGrid::new(64, 32, 10.0, 7.0).map_err(err)?;
            let space = PhaseSpace::new(Arc::new(grid), PotentialSpec::v2(gamma)).map_err(err)?;
            let spec = if scattering {
                CollisionSpec::scattering(ScatteringKernel::nonsymmetric_example(&space), 2.3)
            } else {
                CollisionSpec::fokker_planck()
            };
            let model = KineticModel::from_space(space, spec).map_err(err)?;
            let lm = model.collision.lambda_m().map_err(err)?;
            let w = positivity_window(lm, 3.0 * gamma.max(1.0), model.sigma_bar(), 1000).map_err(err)?;
            let cfg = HypoConfig::new(w.best_eps, lm, PotentialSpec::v2(gamma), model.sigma_bar()).map_err(err)?;
            let rep = operator_bound_suite(&model, &cfg, 250, 7).map_err(err)?;
            let kind = if scattering { "scattering" } else { "Fokker-Planck" };
            for (name, b) in &rep.bounds {
                out.push(check(
                    TheoremId::T4Props,
                    format!("gamma={gamma} {kind} {name} on {} fields", rep.fields),
                    "zero violations (worst lhs/rhs)",
                    b.worst_ratio,
                    b.violations == 0 && rep.fields as f64 >= tol("c7.min_fields"),
                ));
            }
        }
    }
    Ok(out)
}

fn criterion8() -> Outcome {
    let (d, gamma, k) = (3.0, 1.0, 3.0);
    let a = NashEnvelope::exponent(d, gamma, k);
    let ode = ZOde {
        lambda_eps: lambda_eps(1.0, 0.1, 3.0, FRAC_1_SQRT_2),
        epsilon: 0.1,
        c_k: 1.0,
        k,
        envelope: NashEnvelope::new(1.0, a).map_err(err)?,
    };
    let fit = ode.integrate(1.0, 1e10, 40).map_err(err)?.tail_exponent().map_err(err)?;
    let expected = (gamma - d) / 2.0;
    Ok(vec![TheoremVerdict::quantitative(
        TheoremId::T4Props,
        "z tail exponent",
        expected,
        fit.exponent,
        tol("c8.exponent") * expected.abs(),
        HASH,
    )])
}

fn criterion9() -> Outcome {
    let mut out = Vec::new();
    for d in [3usize, 4] {
        let target = (d as f64 - 2.0).powi(2) / 4.0;
        let est = hardy_rayleigh(d, HardyFamily::Tuned { eps_min: 0.1 }).map_err(err)?;
        let rel = est.constant / target - 1.0;
        out.push(check(
            TheoremId::HN,
            format!("d={d} Hardy infimum {:.5}", est.constant),
            format!("within {} relative above (d-2)^2/4", tol("c9.hardy_above")),
            rel,
            (0.0..=tol("c9.hardy_above")).contains(&rel),
        ));
        let c_nash = nash_envelope(d).map_err(err)?.constant;
        let delta = 0.8 * target;
        let hn = verify_hardy_nash(d, delta, c_nash, 500, 101 + d as u64).map_err(err)?;
        out.push(check(
            TheoremId::HN,
            format!("d={d} Hardy-Nash delta={delta} on {} trials", hn.trials),
            "zero violations (worst margin)",
            hn.worst_margin,
            hn.pass() && hn.trials == 500,
        ));
        let eta = 0.5 * (d * d - 4) as f64 / 4.0;
        let hn2 = hardy_nash2_check(d, delta, eta, c_nash, 500, 201 + d as u64).map_err(err)?;
        out.push(check(
            TheoremId::HN,
            format!("d={d} Hardy-Nash2 delta={delta} eta={eta}"),
            "zero violations and inhomogeneous Hardy form >= 0 (worst margin)",
            hn2.inequality.worst_margin,
            hn2.pass(),
        ));
    }
    let ns: Vec<f64> = (2..=10).map(|j| 2f64.powi(j)).collect();
    let fit = translation_degeneracy(3, 1.0, &ns).map_err(err)?;
    out.push(TheoremVerdict::quantitative(
        TheoremId::CKN,
        "translation slope (3,1)",
        fit.expected_slope,
        fit.slope,
        tol("c9.translation") * fit.expected_slope.abs(),
        HASH,
    ));
    let make = |r: f64| RadialGrid::log_uniform(3, r, 0.004, 1e-6).map(Arc::new).map_err(err);
    let b1 = ball_poincare_constant(make(1.0)?, 1.0, 1.0).map_err(err)?;
    let b2 = ball_poincare_constant(make(2.0)?, 1.0, 1.0).map_err(err)?;
    out.push(TheoremVerdict::quantitative(
        TheoremId::CKN,
        "ball Poincare lambda(2R)/lambda(R)",
        0.25,
        b2.lambda / b1.lambda,
        tol("c9.ball_ratio"),
        HASH,
    ));
    let delta = 0.1875;
    let bridge = ckn_beta_bridge(3, delta, 100, 51).map_err(err)?;
    let err_rt = (bridge.delta_roundtrip - delta).abs().max(bridge.max_identity_error);
    out.push(check(
        TheoremId::CKN,
        format!("beta bridge beta={}", bridge.beta),
        format!("round trip and quotient identity within {:e}", tol("c9.bridge")),
        err_rt,
        err_rt <= tol("c9.bridge"),
    ));
    Ok(out)
}

fn criterion10() -> Outcome {
    let mut out = Vec::new();
    for gamma in [0.5, 0.9] {
        let refused = theorem1_rate_constant(3, gamma, 0.06, 1.0, 1.0).is_err();
        out.push(check(TheoremId::T1, format!("d=3 gamma={gamma} refused"), "gamma >= (d-2)/2 rejected", gamma, refused));
    }
    for (d, delta) in [(3usize, 0.26), (4, 1.05)] {
        let w = hardy_nash_counterexample(d, delta).map_err(err)?;
        out.push(check(TheoremId::HN, format!("d={d} delta={delta} witness"), "bracket ratio < 0", w.bracket_ratio, w.fails));
    }
    Ok(out)
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "L2 decay exponent and explicit bound", criterion1),
        (2, "weighted L2 decay and second moment", criterion2),
        (3, "self-similar chi-square decay", criterion3),
        (4, "supersolution comparison", criterion4),
        (5, "spectral gap", criterion5),
        (6, "kinetic property suite", criterion6),
        (7, "operator bounds", criterion7),
        (8, "z-ODE closure", criterion8),
        (9, "functional inequalities", criterion9),
        (10, "negative controls", criterion10),
    ];
    let selected: Option<Vec<u32>> =
        std::env::var("WEAKCONF_ACCEPTANCE").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&n)) {
            continue;
        }
        let started = Instant::now();
        let pass = match run() {
            Ok(verdicts) => {
                for v in &verdicts {
                    println!("    {}", v.summary_line());
                }
                !verdicts.is_empty() && verdicts.iter().all(|v| v.pass)
            }
            Err(e) => {
                println!("    error: {e}");
                false
            }
        };
        let status = if pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {n}: {name} ({:.1} s)", started.elapsed().as_secs_f64());
        if !pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
