//! Operator-bound suite over random phase fields.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hypo::{HypoConfig, KineticModel};
use crate::grids::PhaseField;
use crate::Result;

/// A sum of random Gaussian bumps in `(x, v)`, optionally with cell noise.
/// Fields may change sign; every fourth one is rough.
pub fn random_phase_field(model: &KineticModel, rng: &mut impl Rng) -> Result<PhaseField> {
    let g = model.grid();
    let bumps = rng.gen_range(1..=4);
    let params: Vec<[f64; 5]> = (0..bumps)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-0.6..0.6) * g.x_max,
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.5..0.25 * g.x_max).powi(2),
                rng.gen_range(0.3..2.0f64).powi(2),
            ]
        })
        .collect();
    let mut f = PhaseField::from_fn(g.clone(), |x, v| {
        params.iter().map(|p| p[0] * (-(x - p[1]).powi(2) / p[3] - (v - p[2]).powi(2) / p[4]).exp()).sum()
    })?;
    if rng.gen_bool(0.25) {
        let amp = rng.gen_range(0.01..0.2);
        for (k, val) in f.values.iter_mut().enumerate() {
            let j = k % g.nv;
            *val += amp * rng.gen_range(-1.0..1.0) * model.space.m[j];
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    /// largest `lhs / rhs` seen
    pub worst_ratio: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuiteReport {
    pub fields: usize,
    pub bounds: BTreeMap<String, BoundSummary>,
}

impl BoundSuiteReport {
    pub fn violations(&self) -> usize {
        self.bounds.values().map(|b| b.violations).sum()
    }
}

pub fn operator_bound_suite(model: &KineticModel, cfg: &HypoConfig, fields: usize, seed: u64) -> Result<BoundSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundSuiteReport { fields, bounds: BTreeMap::new() };
    for _ in 0..fields {
        let f = random_phase_field(model, &mut rng)?;
        for b in model.operator_bounds(&f, cfg)? {
            let entry = report.bounds.entry(b.name.clone()).or_insert(BoundSummary { worst_ratio: 0.0, violations: 0 });
            entry.worst_ratio = entry.worst_ratio.max(b.ratio());
            if !b.holds() {
                entry.violations += 1;
            }
        }
    }
    Ok(report)
}
