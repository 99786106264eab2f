//! Experiment configuration: an INI-style TOML document with fixed sections.
//!
//! Unknown sections and keys are rejected. Parse errors carry the line and
//! column of the offending entry.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weakconf_core::fp_macro::TimeScheme;
use weakconf_core::kinetic::{CollisionKind, TransportScheme};
use weakconf_core::rates::TheoremId;
use weakconf_core::{PotentialKind, PotentialSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub grid: Grid,
    #[serde(default)]
    pub time: Time,
    #[serde(default)]
    pub hypo: Hypo,
    #[serde(default)]
    pub fit: Fit,
    #[serde(default)]
    pub inequalities: Inequalities,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Potential {
    V1,
    V2,
    #[serde(rename = "none")]
    Free,
}

/// A scalar, or a list of values that turns the run into a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Collision {
    FokkerPlanck,
    Scattering,
}

impl From<Collision> for CollisionKind {
    fn from(c: Collision) -> Self {
        match c {
            Collision::FokkerPlanck => CollisionKind::FokkerPlanck,
            Collision::Scattering => CollisionKind::Scattering,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    #[serde(default = "default_kind")]
    pub kind: Potential,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_gamma")]
    pub gamma: OneOrMany,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub mode_k: u32,
    /// Claimed result; `T1` triggers the hypothesis check.
    pub theorem: Option<TheoremId>,
    pub collision: Option<Collision>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_kind() -> Potential {
    Potential::V2
}
fn default_d() -> usize {
    3
}
fn default_gamma() -> OneOrMany {
    OneOrMany::One(0.0)
}
fn default_seed() -> u64 {
    0x5eed
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: Option<usize>,
    pub nv: Option<usize>,
    pub r_max: Option<f64>,
    #[serde(rename = "X_max", alias = "x_max")]
    pub x_max: Option<f64>,
    #[serde(rename = "V_max", alias = "v_max")]
    pub v_max: Option<f64>,
    /// Log-spacing of radial cells.
    pub h: Option<f64>,
    pub r_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
    Upwind,
    Muscl,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    /// Samples per decade (macroscopic runs) or steps between samples (kinetic runs).
    pub sample_schedule: Option<usize>,
    pub scheme: Option<Scheme>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypo {
    pub epsilon: Option<f64>,
    pub lambda_m: Option<f64>,
    pub k_moment: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fit {
    /// `[t_lo, t_hi]`; the last decade of the run when absent.
    pub window: Option<[f64; 2]>,
    #[serde(alias = "tolerances")]
    pub tolerance: Option<f64>,
    /// Overrides the theoretical exponent or value.
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inequalities {
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub k: Option<f64>,
}

fn default_trials() -> usize {
    500
}

impl Default for Inequalities {
    fn default() -> Self {
        Self { trials: default_trials(), delta: None, eta: None, k: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("weakconf-out")
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for Output {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

impl Output {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| format!("config: {e}"))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Applies `section.key=value` overrides. Values are read as TOML
    /// literals and fall back to strings.
    pub fn with_overrides(self, sets: &[String]) -> Result<Self, String> {
        if sets.is_empty() {
            return Ok(self);
        }
        let mut table = toml::Table::try_from(&self).map_err(|e| format!("config: {e}"))?;
        for set in sets {
            let (path, raw) = set.split_once('=').ok_or_else(|| format!("--set {set}: expected section.key=value"))?;
            let (section, key) = path.trim().split_once('.').ok_or_else(|| format!("--set {set}: key must be section.key"))?;
            let value = match raw.trim().parse::<toml::Value>() {
                Ok(v) => v,
                Err(_) => toml::Value::String(raw.trim().to_string()),
            };
            let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(sec) = entry else {
                return Err(format!("--set {set}: '{section}' is not a section"));
            };
            sec.insert(key.to_string(), value);
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| format!("--set: {}", e.message()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), String> {
        let p = &self.problem;
        if p.d == 0 {
            return Err("problem.d must be positive".into());
        }
        if p.gamma.values().is_empty() {
            return Err("problem.gamma: empty sweep list".into());
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0) {
                return Err(format!("time.dt must be positive, got {dt}"));
            }
        }
        if let Some(t) = self.time.t_end {
            if !(t > 0.0) {
                return Err(format!("time.t_end must be positive, got {t}"));
            }
        }
        if self.time.sample_schedule == Some(0) {
            return Err("time.sample_schedule must be positive".into());
        }
        if let Some(tol) = self.fit.tolerance {
            if !(tol >= 0.0) {
                return Err(format!("fit.tolerance must be nonnegative, got {tol}"));
            }
        }
        for f in &self.output.formats {
            if !["csv", "json"].contains(&f.as_str()) {
                return Err(format!("output.formats: unknown format '{f}' (csv, json)"));
            }
        }
        Ok(())
    }

    /// One configuration per sweep value of `problem.gamma`.
    pub fn sweep(&self) -> Vec<(f64, ExperimentConfig)> {
        self.problem
            .gamma
            .values()
            .into_iter()
            .map(|g| {
                let mut c = self.clone();
                c.problem.gamma = OneOrMany::One(g);
                (g, c)
            })
            .collect()
    }

    pub fn gamma(&self) -> f64 {
        self.problem.gamma.values()[0]
    }

    pub fn potential(&self) -> Result<PotentialSpec, String> {
        let kind = match self.problem.kind {
            Potential::V1 => PotentialKind::V1,
            Potential::V2 => PotentialKind::V2,
            Potential::Free => PotentialKind::NoPotential,
        };
        PotentialSpec::new(kind, self.gamma()).map_err(|e| e.to_string())
    }

    pub fn macro_scheme(&self) -> Result<TimeScheme, String> {
        match self.time.scheme {
            None | Some(Scheme::BackwardEuler) => Ok(TimeScheme::BackwardEuler),
            Some(Scheme::CrankNicolson) => Ok(TimeScheme::CrankNicolson),
            Some(s) => Err(format!("time.scheme {s:?} is a kinetic transport scheme")),
        }
    }

    pub fn transport_scheme(&self) -> Result<TransportScheme, String> {
        match self.time.scheme {
            None | Some(Scheme::Muscl) => Ok(TransportScheme::Muscl),
            Some(Scheme::Upwind) => Ok(TransportScheme::Upwind),
            Some(s) => Err(format!("time.scheme {s:?} is a macroscopic time scheme")),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[problem]\nkind = \"V2\"\nd = 3\ngamma = 0.4\n\n[grid]\nr_max = 50.0\n";

    #[test]
    fn parses_and_defaults() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.problem.d, 3);
        assert_eq!(c.gamma(), 0.4);
        assert_eq!(c.grid.r_max, Some(50.0));
        assert_eq!(c.output.formats, vec!["csv", "json"]);
        assert_eq!(c.inequalities.trials, 500);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = format!("{BASE}bogus = 1\n");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert!(e.contains("line 8"), "{e}");
        assert!(e.contains("bogus"), "{e}");
    }

    #[test]
    fn type_error_reports_line() {
        let e = ExperimentConfig::parse("[problem]\nd = \"three\"\n[grid]\n").unwrap_err();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn missing_grid_is_an_error() {
        let e = ExperimentConfig::parse("[problem]\nd = 3\n").unwrap_err();
        assert!(e.contains("grid"), "{e}");
    }

    #[test]
    fn capital_and_lower_case_box_keys() {
        let a = ExperimentConfig::parse("[problem]\n[grid]\nX_max = 20.0\nV_max = 6.0\n").unwrap();
        let b = ExperimentConfig::parse("[problem]\n[grid]\nx_max = 20.0\nv_max = 6.0\n").unwrap();
        assert_eq!(a.grid, b.grid);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        let c = c.with_overrides(&["problem.gamma=1.0".into(), "time.scheme=crank-nicolson".into()]).unwrap();
        assert_eq!(c.gamma(), 1.0);
        assert_eq!(c.macro_scheme().unwrap(), TimeScheme::CrankNicolson);
        let c2 = c.clone();
        assert!(c.with_overrides(&["problem.nope=1".into()]).is_err());
        assert!(c2.clone().with_overrides(&["gamma=1".into()]).is_err());
        assert!(c2.with_overrides(&["time.dt=-1".into()]).is_err());
    }

    #[test]
    fn gamma_list_is_a_sweep() {
        let c = ExperimentConfig::parse("[problem]\ngamma = [0.0, 0.4]\n[grid]\n").unwrap();
        let s = c.sweep();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].1.gamma(), 0.4);
    }

    #[test]
    fn round_trip_through_toml() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
