//! Run plumbing: failure classes, artifact directories, manifests and sweeps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use weakconf_core::rates::{config_hash, VerdictBundle};

use crate::config::ExperimentConfig;

/// Exit statuses of the tool.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad configuration, refused claim or unusable output location.
    Config(String),
    /// Solver breakdown, non-finite values or too little data to fit.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<weakconf_core::Error> for Failure {
    fn from(e: weakconf_core::Error) -> Self {
        use weakconf_core::Error as E;
        match e {
            E::Domain(_) | E::Precondition(_) => Failure::Config(e.to_string()),
            E::Solver(_) | E::NonFinite(_) | E::Insufficient(_) => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(m: String) -> Self {
        Failure::Config(m)
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// Output directory of one run and the files written to it.
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: PathBuf) -> Outcome<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Outcome<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> Outcome<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(format!("serialization: {e}")))?;
        self.write(name, &text)
    }
}

/// Signature shared by the experiment subcommands.
pub type Experiment = fn(&ExperimentConfig, &mut Artifacts) -> Outcome<VerdictBundle>;

fn run_one(name: &str, cfg: &ExperimentConfig, dir: PathBuf, exp: Experiment) -> Outcome<VerdictBundle> {
    let started = Instant::now();
    let mut art = Artifacts::create(dir)?;
    let text = cfg.to_toml();
    let hash = config_hash(&text);
    let mut bundle = exp(cfg, &mut art)?;
    for v in &mut bundle.verdicts {
        v.config_hash = hash.clone();
        v.label = format!("{} (gamma={})", v.label, cfg.gamma());
    }
    // verdicts and manifest are always written: `report` reads them back
    art.write("verdicts.json", &bundle.to_json()?)?;
    let manifest = serde_json::json!({
        "tool": "weakconf",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": name,
        "config": text,
        "config_hash": hash,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "artifacts": art.files,
    });
    art.write_json("manifest.json", &manifest)?;
    Ok(bundle)
}

fn sweep_dir(base: &Path, gamma: f64) -> PathBuf {
    base.join(format!("gamma_{gamma}"))
}

/// Runs the experiment once per sweep entry. Multiple entries run on worker
/// threads and write to disjoint subdirectories.
pub fn run_sweep(name: &str, cfg: &ExperimentConfig, exp: Experiment) -> Outcome<VerdictBundle> {
    let entries = cfg.sweep();
    let base = cfg.output.directory.clone();
    if entries.len() == 1 {
        return run_one(name, &entries[0].1, base, exp);
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(entries.len());
    let chunk = entries.len().div_ceil(workers);
    let results: Vec<Outcome<VerdictBundle>> = std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .chunks(chunk)
            .map(|part| {
                let base = &base;
                scope.spawn(move || part.iter().map(|(g, c)| run_one(name, c, sweep_dir(base, *g), exp)).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut bundle = VerdictBundle::default();
    for r in results {
        bundle.extend(r?);
    }
    Ok(bundle)
}

/// Collects every `verdicts.json` below `dir`.
pub fn collect_verdicts(dir: &Path) -> Outcome<VerdictBundle> {
    let mut bundle = VerdictBundle::default();
    let mut stack = vec![dir.to_path_buf()];
    let mut files = Vec::new();
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|e| Failure::Config(format!("cannot read {}: {e}", d.display())))?;
        for entry in entries.flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == "verdicts.json") {
                files.push(p);
            }
        }
    }
    files.sort();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|e| Failure::Config(format!("cannot read {}: {e}", f.display())))?;
        let b = VerdictBundle::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", f.display())))?;
        bundle.extend(b);
    }
    Ok(bundle)
}
