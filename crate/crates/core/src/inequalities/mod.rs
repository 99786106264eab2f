//! Rayleigh-quotient estimates and randomized verification of the Nash, Hardy,
//! Hardy-Nash and Caffarelli-Kohn-Nirenberg (CKN) inequalities on radial trials.
//!
//! Maximizing a quotient over a trial family gives a lower envelope of the sharp
//! constant; minimizing gives an upper envelope. Every estimate records which.

mod optimize;
mod shifted;
mod trial;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::grids::RadialField;
use crate::{Error, Result};

pub use optimize::{maximize, Coord, Optimum};
pub use shifted::{bump, shifted_integrals, ShiftedIntegrals};
pub use trial::{bracket_integral, hardy_integral, log_quad, Norms, Trial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityName {
    Nash,
    Hardy,
    HardyNash,
    HardyNash2,
    #[serde(rename = "CKN_hom")]
    CknHom,
    #[serde(rename = "CKN_inhom")]
    CknInhom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// The estimate is at least the sharp constant.
    UpperEnvelope,
    /// The estimate is at most the sharp constant.
    LowerEnvelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerInfo {
    pub family: String,
    pub iterations: usize,
    pub best: Trial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityEstimate {
    pub name: InequalityName,
    pub params: BTreeMap<String, f64>,
    pub constant: f64,
    pub optimizer: OptimizerInfo,
    pub direction: Direction,
}

/// Outcome of checking an inequality on random trials with a fixed constant.
/// `worst_margin` is `min (1 - lhs / rhs)`; negative means a violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: InequalityName,
    pub params: BTreeMap<String, f64>,
    pub constant: f64,
    pub direction: Direction,
    pub trials: usize,
    pub worst_margin: f64,
    pub violations: usize,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Relative round-off allowance when comparing the two sides of an inequality.
const ROUNDOFF: f64 = 1e-12;

fn margin(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        1.0 - lhs / rhs
    } else {
        f64::NEG_INFINITY
    }
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| scope.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// Random member of the documented trial family: `P(r²) exp(-s r^q)` with random
/// `s`, `q` and coefficients, plus (for `d ≥ 3`) regularized Hardy profiles.
pub fn random_trial(rng: &mut impl Rng, d: usize) -> Trial {
    if d >= 3 && rng.gen_bool(0.25) {
        let h = (d as f64 - 2.0) / 2.0;
        return Trial::HardyLike { power: h * rng.gen_range(0.3..1.0), eps: rng.gen_range(0.3..2.0), log_cutoff: rng.gen_range(-1.0..4.0) };
    }
    // nonnegative coefficients keep |u| free of kinks, which the quadrature needs
    let deg = rng.gen_range(0..=2);
    let mut coeffs = vec![1.0];
    for _ in 0..deg {
        coeffs.push(rng.gen_range(0.0..1.0));
    }
    Trial::PolyExp { coeffs, s: rng.gen_range(0.2f64.ln()..5f64.ln()).exp(), q: rng.gen_range(1.0..6.0) }
}

fn random_trials(d: usize, count: usize, seed: u64) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_trial(&mut rng, d)).collect()
}

fn check_finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{what} is not finite; trial rejected")))
    }
}

// ---------------------------------------------------------------- Nash

/// `‖u‖_2^{2+4/d} / (‖u‖_1^{4/d} ‖∇u‖_2²)` for a field on a radial grid.
pub fn nash_quotient(u: &RadialField) -> Result<f64> {
    let d = u.grid.d() as f64;
    let l2 = u.weighted_norm_sq(|_| 1.0)?;
    let grad = u.dirichlet_energy(|_| 1.0);
    if !(grad > 0.0) {
        return domain("zero gradient: trial excluded from the Nash family");
    }
    Ok(l2.powf(1.0 + 2.0 / d) / (u.l1_norm().powf(4.0 / d) * grad))
}

/// Nash quotient of an analytic trial.
pub fn nash_quotient_trial(trial: &Trial, d: usize) -> Result<f64> {
    let n = Norms::of(trial, d);
    if !(n.grad_sq > 0.0) {
        return domain("zero gradient: trial excluded from the Nash family");
    }
    let df = d as f64;
    check_finite(n.l2_sq.powf(1.0 + 2.0 / df) / (n.l1.powf(4.0 / df) * n.grad_sq), "Nash quotient")
}

fn nash_family(x: &[f64]) -> Trial {
    Trial::PolyExp { coeffs: vec![1.0, 2.0 * x[1], x[1] * x[1] + x[2]], s: 1.0, q: x[0] }
}

/// Lower envelope of the sharp Nash constant: the maximum of the quotient over
/// `((1 + b r²)² + c r⁴) exp(-r^q)` with `c ≥ 0`. The family contains the Gaussian.
pub fn nash_envelope(d: usize) -> Result<InequalityEstimate> {
    if d == 0 {
        return domain("dimension must be positive");
    }
    let coords = [Coord::log(1.0, 40.0), Coord::linear(-2.5, 2.5), Coord::linear(0.0, 2.5)];
    let f = |x: &[f64]| nash_quotient_trial(&nash_family(x), d).unwrap_or(f64::NEG_INFINITY);
    let opt = maximize(f, &coords, &[2.0, 0.0, 0.0], 4);
    let best = nash_family(&opt.x);
    Ok(InequalityEstimate {
        name: InequalityName::Nash,
        params: params(&[("d", d as f64)]),
        constant: opt.value,
        optimizer: OptimizerInfo { family: "poly-exp".into(), iterations: opt.evaluations, best },
        direction: Direction::LowerEnvelope,
    })
}

// ---------------------------------------------------------------- Hardy

/// Trial family for [`hardy_rayleigh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HardyFamily {
    /// `r^{-(d-2)/2} sech(ε ln r)` with a far cutoff, tuned over `ε ≥ eps_min`.
    Tuned { eps_min: f64 },
    /// Random members of the generic family.
    Random { trials: usize, seed: u64 },
}

/// `‖∇u‖² / ∫ u²/|x|²` for one trial.
pub fn hardy_quotient(trial: &Trial, d: usize) -> Result<f64> {
    if d < 3 {
        return domain(format!("Hardy's inequality needs d >= 3, got {d}"));
    }
    check_finite(Norms::of(trial, d).grad_sq / hardy_integral(trial, d), "Hardy quotient")
}

fn hardy_trial(d: usize, eps: f64) -> Trial {
    Trial::HardyLike { power: (d as f64 - 2.0) / 2.0, eps, log_cutoff: 10.0 / eps }
}

/// Infimum of the Hardy quotient over a family: an upper envelope of `(d-2)²/4`.
pub fn hardy_rayleigh(d: usize, family: HardyFamily) -> Result<InequalityEstimate> {
    if d < 3 {
        return domain(format!("Hardy's inequality needs d >= 3, got {d}"));
    }
    let (constant, iterations, best, name) = match family {
        HardyFamily::Tuned { eps_min } => {
            if !(0.05..2.0).contains(&eps_min) {
                return domain(format!("eps_min must lie in [0.05, 2), got {eps_min}"));
            }
            let f = |x: &[f64]| -hardy_quotient(&hardy_trial(d, x[0]), d).unwrap_or(f64::INFINITY);
            let opt = maximize(f, &[Coord::log(eps_min, 2.0)], &[1.0], 2);
            (-opt.value, opt.evaluations, hardy_trial(d, opt.x[0]), "sech-log")
        }
        HardyFamily::Random { trials, seed } => {
            let set = random_trials(d, trials.max(1), seed);
            let q = par_map(&set, |t| hardy_quotient(t, d).unwrap_or(f64::INFINITY));
            let (i, v) = q.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
            (v, set.len(), set[i].clone(), "random")
        }
    };
    Ok(InequalityEstimate {
        name: InequalityName::Hardy,
        params: params(&[("d", d as f64)]),
        constant,
        optimizer: OptimizerInfo { family: name.into(), iterations, best },
        direction: Direction::UpperEnvelope,
    })
}

// ---------------------------------------------------------------- Hardy-Nash

fn hardy_threshold(d: usize) -> f64 {
    (d as f64 - 2.0).powi(2) / 4.0
}

/// `C_δ = C_Nash / (1 - 4δ/(d-2)²)`.
pub fn hardy_nash_constant(d: usize, delta: f64, c_nash: f64) -> Result<f64> {
    if d < 3 {
        return domain(format!("Hardy-Nash needs d >= 3, got {d}"));
    }
    if !(delta < hardy_threshold(d)) {
        return domain(format!("delta = {delta} must be below (d-2)^2/4 = {}", hardy_threshold(d)));
    }
    Ok(c_nash / (1.0 - delta / hardy_threshold(d)))
}

/// `C_{δ,η} = C_Nash / min{1 - 4δ/(d-2)², 1 - 4η/(d²-4)}`.
pub fn hardy_nash2_constant(d: usize, delta: f64, eta: f64, c_nash: f64) -> Result<f64> {
    hardy_nash_constant(d, delta, c_nash)?;
    let eta_max = (d as f64 * d as f64 - 4.0) / 4.0;
    if !(eta < eta_max) {
        return domain(format!("eta = {eta} must be below (d^2-4)/4 = {eta_max}"));
    }
    Ok(c_nash / (1.0 - delta / hardy_threshold(d)).min(1.0 - eta / eta_max))
}

/// `(lhs, rhs)` of the Hardy-Nash inequality; `eta = None` selects the
/// homogeneous form with `|x|^{-2}`, `Some(η)` the `⟨x⟩` form.
fn hardy_nash_sides(trial: &Trial, d: usize, delta: f64, eta: Option<f64>, c: f64) -> (f64, f64) {
    let n = Norms::of(trial, d);
    let df = d as f64;
    let bracket = match eta {
        None => n.grad_sq - delta * hardy_integral(trial, d),
        Some(eta) => n.grad_sq - delta * bracket_integral(trial, d, 2.0) - eta * bracket_integral(trial, d, 4.0),
    };
    (n.l2_sq.powf(1.0 + 2.0 / df), c * bracket * n.l1.powf(4.0 / df))
}

fn verify(name: InequalityName, pars: BTreeMap<String, f64>, constant: f64, direction: Direction, margins: Vec<f64>) -> VerificationReport {
    let violations = margins.iter().filter(|&&m| !(m >= -ROUNDOFF)).count();
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    VerificationReport { name, params: pars, constant, direction, trials: margins.len(), worst_margin, violations }
}

/// Checks the Hardy-Nash inequality with `C_δ` built from `c_nash` on random trials.
pub fn verify_hardy_nash(d: usize, delta: f64, c_nash: f64, trials: usize, seed: u64) -> Result<VerificationReport> {
    let c = hardy_nash_constant(d, delta, c_nash)?;
    let set = random_trials(d, trials, seed);
    let margins = par_map(&set, |t| {
        let (l, r) = hardy_nash_sides(t, d, delta, None, c);
        margin(l, r)
    });
    Ok(verify(InequalityName::HardyNash, params(&[("d", d as f64), ("delta", delta)]), c, Direction::LowerEnvelope, margins))
}

/// A trial for which `‖∇u‖² - δ ∫u²/|x|²` is negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyWitness {
    pub trial: Trial,
    /// `(‖∇u‖² - δ ∫u²/|x|²) / ‖∇u‖²`
    pub bracket_ratio: f64,
    pub fails: bool,
}

/// Searches the Hardy near-optimizer family for a witness that the Hardy-Nash
/// inequality fails when `δ ≥ (d-2)²/4`.
pub fn hardy_nash_counterexample(d: usize, delta: f64) -> Result<HardyWitness> {
    if d < 3 {
        return domain(format!("Hardy-Nash needs d >= 3, got {d}"));
    }
    if delta < hardy_threshold(d) {
        return domain(format!("delta = {delta} is below the threshold {}; no witness exists", hardy_threshold(d)));
    }
    let mut eps = 1.0;
    let mut last = None;
    while eps >= 0.05 {
        let t = hardy_trial(d, eps);
        let n = Norms::of(&t, d);
        let ratio = 1.0 - delta * hardy_integral(&t, d) / n.grad_sq;
        let w = HardyWitness { trial: t, bracket_ratio: ratio, fails: ratio < 0.0 };
        if w.fails {
            return Ok(w);
        }
        last = Some(w);
        eps *= 0.8;
    }
    Ok(last.expect("at least one trial"))
}

/// Result of [`hardy_nash2_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyNash2Report {
    pub inequality: VerificationReport,
    /// Smallest value of the inhomogeneous Hardy form at `α = (d-2)/2`, divided by `‖∇u‖²`.
    pub inhom_hardy_min: f64,
}

impl HardyNash2Report {
    pub fn pass(&self) -> bool {
        self.inequality.pass() && self.inhom_hardy_min >= -1e-10
    }
}

/// `‖∇u‖² + α(α-d+2) ∫u²/⟨x⟩² - α(α+2) ∫u²/⟨x⟩⁴`, divided by `‖∇u‖²`.
pub fn inhom_hardy_form(trial: &Trial, d: usize, alpha: f64) -> f64 {
    let g = Norms::of(trial, d).grad_sq;
    let df = d as f64;
    (g + alpha * (alpha - df + 2.0) * bracket_integral(trial, d, 2.0) - alpha * (alpha + 2.0) * bracket_integral(trial, d, 4.0)) / g
}

pub fn hardy_nash2_check(d: usize, delta: f64, eta: f64, c_nash: f64, trials: usize, seed: u64) -> Result<HardyNash2Report> {
    let c = hardy_nash2_constant(d, delta, eta, c_nash)?;
    let set = random_trials(d, trials, seed);
    let alpha = (d as f64 - 2.0) / 2.0;
    let rows = par_map(&set, |t| {
        let (l, r) = hardy_nash_sides(t, d, delta, Some(eta), c);
        (margin(l, r), inhom_hardy_form(t, d, alpha))
    });
    let inhom_hardy_min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let inequality = verify(
        InequalityName::HardyNash2,
        params(&[("d", d as f64), ("delta", delta), ("eta", eta)]),
        c,
        Direction::LowerEnvelope,
        rows.into_iter().map(|r| r.0).collect(),
    );
    Ok(HardyNash2Report { inequality, inhom_hardy_min })
}

// ---------------------------------------------------------------- CKN

/// `a = (d + 2k - γ) / (d + 2 + 2k - γ)`.
pub fn ckn_exponent(d: usize, gamma: f64, k: f64) -> f64 {
    let df = d as f64;
    (df + 2.0 * k - gamma) / (df + 2.0 + 2.0 * k - gamma)
}

fn check_ckn(d: usize, gamma: f64, k: f64) -> Result<()> {
    if d == 0 || !(gamma < d as f64) || !(k >= gamma / 2.0) {
        return domain(format!("CKN needs gamma < d and k >= gamma/2 (d = {d}, gamma = {gamma}, k = {k})"));
    }
    Ok(())
}

fn ckn_ratio(num: f64, grad: f64, l1: f64, a: f64) -> Result<f64> {
    check_finite(num / (grad.powf(a) * l1.powf(2.0 * (1.0 - a))), "CKN quotient")
}

/// `∫|x|^{-γ} v² / [(∫|x|^{-γ}|∇v|²)^a (∫|x|^{k-γ}|v|)^{2(1-a)}]` on a radial grid.
pub fn ckn_quotient_hom(v: &RadialField, d: usize, gamma: f64, k: f64) -> Result<f64> {
    check_ckn(d, gamma, k)?;
    if v.grid.d() != d {
        return domain("field dimension does not match d");
    }
    let num = v.weighted_norm_sq(|r| r.powf(-gamma))?;
    let grad = v.dirichlet_energy(|r| r.powf(-gamma));
    let l1 = v.values.iter().zip(v.grid.weights()).zip(v.grid.nodes()).map(|((u, w), r)| w * r.powf(k - gamma) * u.abs()).sum();
    ckn_ratio(num, grad, l1, ckn_exponent(d, gamma, k))
}

/// Homogeneous CKN quotient of an analytic trial.
pub fn ckn_quotient_hom_trial(trial: &Trial, d: usize, gamma: f64, k: f64) -> Result<f64> {
    check_ckn(d, gamma, k)?;
    let df = d as f64;
    let num = log_quad(trial, d, (df - gamma) / 2.0, |_, u, _| u * u);
    let grad = log_quad(trial, d, (df - gamma) / 2.0, |_, _, du| du * du);
    let l1 = log_quad(trial, d, df + k - gamma, |_, u, _| u.abs());
    ckn_ratio(num, grad, l1, ckn_exponent(d, gamma, k))
}

/// Inhomogeneous CKN quotient: the homogeneous one with `|x|` replaced by `⟨x⟩`.
pub fn ckn_quotient_inhom_trial(trial: &Trial, d: usize, gamma: f64, k: f64) -> Result<f64> {
    check_ckn(d, gamma, k)?;
    let h = d as f64 / 2.0;
    let br = |r: f64, m: f64| (1.0 + r * r).powf(m / 2.0);
    let num = log_quad(trial, d, h, |r, u, _| br(r, -gamma) * u * u);
    let grad = log_quad(trial, d, h, |r, _, du| br(r, -gamma) * du * du);
    let l1 = log_quad(trial, d, d as f64, |r, u, _| br(r, k - gamma) * u.abs());
    ckn_ratio(num, grad, l1, ckn_exponent(d, gamma, k))
}

/// `∫|x|^β v² / [(∫|x|^β|∇v|²)^a (∫|x|^{β/2}|v|)^{2(1-a)}]` with `a = d/(d+2)`.
pub fn ckn1_quotient_trial(trial: &Trial, d: usize, beta: f64) -> Result<f64> {
    let df = d as f64;
    if !(beta > -df) {
        return domain(format!("beta = {beta} must exceed -d"));
    }
    let num = log_quad(trial, d, (df + beta) / 2.0, |_, u, _| u * u);
    let grad = log_quad(trial, d, (df + beta) / 2.0, |_, _, du| du * du);
    let l1 = log_quad(trial, d, df + beta / 2.0, |_, u, _| u.abs());
    ckn_ratio(num, grad, l1, df / (df + 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    /// `|x|^s`
    Homogeneous,
    /// `⟨x⟩^s`
    Inhomogeneous,
}

fn ckn_family(x: &[f64]) -> Trial {
    Trial::PolyExp { coeffs: vec![1.0, x[2]], s: x[0], q: x[1] }
}

/// Lower envelope of the CKN constant by maximizing over `(1 + c r²) exp(-s r^q)`.
pub fn ckn_envelope(kind: WeightKind, d: usize, gamma: f64, k: f64) -> Result<InequalityEstimate> {
    check_ckn(d, gamma, k)?;
    let quotient = |t: &Trial| match kind {
        WeightKind::Homogeneous => ckn_quotient_hom_trial(t, d, gamma, k),
        WeightKind::Inhomogeneous => ckn_quotient_inhom_trial(t, d, gamma, k),
    };
    let coords = [Coord::log(0.01, 100.0), Coord::log(0.5, 20.0), Coord::linear(0.0, 2.0)];
    let opt = maximize(|x| quotient(&ckn_family(x)).unwrap_or(f64::NEG_INFINITY), &coords, &[0.5, 2.0, 0.0], 3);
    let name = match kind {
        WeightKind::Homogeneous => InequalityName::CknHom,
        WeightKind::Inhomogeneous => InequalityName::CknInhom,
    };
    Ok(InequalityEstimate {
        name,
        params: params(&[("d", d as f64), ("gamma", gamma), ("k", k)]),
        constant: opt.value,
        optimizer: OptimizerInfo { family: "poly-exp".into(), iterations: opt.evaluations, best: ckn_family(&opt.x) },
        direction: Direction::LowerEnvelope,
    })
}

/// Reciprocal CKN quotient `Q = [(∫W|∇v|²)^a (∫W₁|v|)^{2(1-a)}] / ∫W v²` of the unit
/// bump translated by each shift; `W = w^{-γ}`, `W₁ = w^{k-γ}` with `w = |x|` or `⟨x⟩`.
/// `k < γ/2` is allowed here: that is where `Q` degenerates.
pub fn shift_scan(kind: WeightKind, d: usize, gamma: f64, k: f64, shifts: &[f64]) -> Result<Vec<f64>> {
    if d == 0 || !(gamma < d as f64) {
        return domain(format!("shift scan needs gamma < d (d = {d}, gamma = {gamma})"));
    }
    let a = ckn_exponent(d, gamma, k);
    shifts
        .iter()
        .map(|&n| {
            if kind == WeightKind::Homogeneous && !(n > 1.0) {
                return domain(format!("homogeneous shift scan needs shifts > 1 (bump radius), got {n}"));
            }
            let base = move |x: f64| match kind {
                WeightKind::Homogeneous => x,
                WeightKind::Inhomogeneous => (1.0 + x * x).sqrt(),
            };
            let s = shifted_integrals(d, n, |x| base(x).powf(-gamma), |x| base(x).powf(k - gamma));
            Ok(s.grad.powf(a) * s.l1.powf(2.0 * (1.0 - a)) / s.l2)
        })
        .collect()
}

/// Log-log fit of the translated quotient `Q[v_n]` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyFit {
    pub a: f64,
    pub expected_slope: f64,
    pub slope: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub shifts: Vec<f64>,
    pub quotients: Vec<f64>,
}

/// `Q[v(· + n e)]` for homogeneous weights and `k = 0`, with its fitted power of `n`.
pub fn translation_degeneracy(d: usize, gamma: f64, n_list: &[f64]) -> Result<DegeneracyFit> {
    if !(gamma > 0.0 && gamma < d as f64) {
        return domain(format!("translation degeneracy needs gamma in (0, d), got {gamma}"));
    }
    if n_list.len() < 2 {
        return Err(Error::Insufficient("need at least two shifts".into()));
    }
    let q = shift_scan(WeightKind::Homogeneous, d, gamma, 0.0, n_list)?;
    let a = ckn_exponent(d, gamma, 0.0);
    let xs: Vec<f64> = n_list.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DegeneracyFit { a, expected_slope: -(1.0 - a) * gamma, slope, residual, shifts: n_list.to_vec(), quotients: q })
}

/// Result of [`ckn_inhom_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CknInhomReport {
    pub envelope: InequalityEstimate,
    pub verification: VerificationReport,
    /// Smallest reciprocal quotient over translated bumps with `|shift| ≤ 10`.
    pub shift_floor: f64,
}

/// Safety factor applied to the largest observed inhomogeneous quotient.
pub const ENVELOPE_FACTOR: f64 = 1.05;

/// Estimates the inhomogeneous CKN constant (optimizer plus a calibration batch,
/// times [`ENVELOPE_FACTOR`]) and checks it on `trials` fresh random trials.
pub fn ckn_inhom_check(d: usize, gamma: f64, k: f64, trials: usize, seed: u64) -> Result<CknInhomReport> {
    let mut envelope = ckn_envelope(WeightKind::Inhomogeneous, d, gamma, k)?;
    let calib = random_trials(d, trials, seed ^ 0x9e37_79b9_7f4a_7c15);
    let qc = par_map(&calib, |t| ckn_quotient_inhom_trial(t, d, gamma, k).unwrap_or(f64::NEG_INFINITY));
    let max_calib = qc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    envelope.constant = envelope.constant.max(max_calib) * ENVELOPE_FACTOR;
    let fresh = random_trials(d, trials, seed);
    let margins = par_map(&fresh, |t| match ckn_quotient_inhom_trial(t, d, gamma, k) {
        Ok(q) => margin(q, envelope.constant),
        Err(_) => f64::NEG_INFINITY,
    });
    let verification = verify(InequalityName::CknInhom, envelope.params.clone(), envelope.constant, envelope.direction, margins);
    let shifts: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    let shift_floor = shift_scan(WeightKind::Inhomogeneous, d, gamma, k, &shifts)?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(CknInhomReport { envelope, verification, shift_floor })
}

// ---------------------------------------------------------------- β bridge

/// Change of variables `v = |x|^{-β/2} u` linking CKN weights `|x|^β` to Hardy-Nash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaBridge {
    pub beta: f64,
    /// `-β²/4 - β(d-2)/2`, which should reproduce δ.
    pub delta_roundtrip: f64,
    /// Largest relative gap between the Hardy-Nash quotient of `u` and the
    /// CKN quotient of `v` raised to `1 + 2/d`.
    pub max_identity_error: f64,
    pub trials: usize,
}

pub fn bridge_beta(d: usize, delta: f64) -> Result<f64> {
    if d < 3 || !(delta < hardy_threshold(d)) {
        return domain(format!("beta bridge needs d >= 3 and delta < (d-2)^2/4 (d = {d}, delta = {delta})"));
    }
    let dm = d as f64 - 2.0;
    Ok(-dm + (dm * dm - 4.0 * delta).sqrt())
}

/// Hardy-Nash quotient `‖u‖₂^{2+4/d} / (‖u‖₁^{4/d}(‖∇u‖² - δ∫u²/|x|²))`.
pub fn hardy_nash_quotient(trial: &Trial, d: usize, delta: f64) -> Result<f64> {
    let (l, r) = hardy_nash_sides(trial, d, delta, None, 1.0);
    check_finite(l / r, "Hardy-Nash quotient")
}

pub fn ckn_beta_bridge(d: usize, delta: f64, trials: usize, seed: u64) -> Result<BetaBridge> {
    let beta = bridge_beta(d, delta)?;
    let dm = d as f64 - 2.0;
    let delta_roundtrip = -beta * beta / 4.0 - beta * dm / 2.0;
    let set = random_trials(d, trials, seed);
    let errs = par_map(&set, |u| -> Result<f64> {
        let v = Trial::Power { power: -beta / 2.0, inner: Box::new(u.clone()) };
        let hn = hardy_nash_quotient(u, d, delta)?;
        let ckn = ckn1_quotient_trial(&v, d, beta)?.powf(1.0 + 2.0 / d as f64);
        Ok((hn / ckn - 1.0).abs())
    });
    let mut max_identity_error: f64 = 0.0;
    for e in errs {
        max_identity_error = max_identity_error.max(e?);
    }
    Ok(BetaBridge { beta, delta_roundtrip, max_identity_error, trials: set.len() })
}
