//! Experiment configuration. A config is plain JSON; every field has a
//! serialized form that reads back to the same value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use youngflow_core::cadlag::Traversal;
use youngflow_core::drivers::{sample_fbm, sample_levy, FbmSpec, LevyComponent, LevySpec};
use youngflow_core::{FlowTolerances, SampledPath, SolverConfig, WorkingBox};

use crate::error::{CliError, CliResult};
use crate::fields::FieldSpec;
use crate::io::{load_path, PathJson};

/// `x_k(t) = drift_k t + amplitude_k sin(frequency_k t)` on `cells` equal cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothDriver {
    pub cells: usize,
    pub horizon: f64,
    pub amplitude: Vec<f64>,
    pub frequency: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drift: Vec<f64>,
}

impl SmoothDriver {
    pub fn with_cells(&self, cells: usize) -> Self {
        Self { cells, ..self.clone() }
    }

    pub fn sample(&self) -> CliResult<SampledPath> {
        let dim = self.amplitude.len();
        if dim == 0 || self.frequency.len() != dim || !(self.drift.is_empty() || self.drift.len() == dim) {
            return Err(CliError::Config("smooth driver: amplitude, frequency and drift lengths differ".into()));
        }
        if self.cells == 0 || !(self.horizon > 0.0) {
            return Err(CliError::Config("smooth driver needs cells >= 1 and horizon > 0".into()));
        }
        let times = (0..=self.cells).map(|i| self.horizon * i as f64 / self.cells as f64).collect();
        Ok(SampledPath::from_fn(times, dim, |t, x| {
            for k in 0..dim {
                let drift = self.drift.get(k).copied().unwrap_or(0.0);
                x[k] = drift * t + self.amplitude[k] * (self.frequency[k] * t).sin();
            }
        })?)
    }
}

/// A pure-jump Lévy driver on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyDriver {
    pub components: Vec<LevyComponent>,
    pub truncation: f64,
    #[serde(default)]
    pub compensate: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub grid: usize,
    pub horizon: f64,
}

impl LevyDriver {
    pub fn spec(&self) -> LevySpec {
        LevySpec {
            components: self.components.clone(),
            truncation: self.truncation,
            compensate: self.compensate,
            seed: self.seed,
            stream: self.stream,
            grid: self.grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverConfig {
    Smooth(SmoothDriver),
    Fbm(FbmSpec),
    Levy(LevyDriver),
    /// A path file (CSV or JSON), relative to the config file.
    File { path: PathBuf },
    Inline(PathJson),
}

impl DriverConfig {
    /// The driver with its seed replaced (random drivers only).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            Self::Fbm(s) => Self::Fbm(FbmSpec { seed, ..s.clone() }),
            Self::Levy(l) => Self::Levy(LevyDriver { seed, ..l.clone() }),
            other => other.clone(),
        }
    }

    /// The driver on stream `stream` (random drivers only).
    pub fn with_stream(&self, stream: u64) -> Self {
        match self {
            Self::Fbm(s) => Self::Fbm(FbmSpec { stream, ..s.clone() }),
            Self::Levy(l) => Self::Levy(LevyDriver { stream, ..l.clone() }),
            other => other.clone(),
        }
    }

    pub fn sample(&self, base: &Path) -> CliResult<SampledPath> {
        match self {
            Self::Smooth(s) => s.sample(),
            Self::Fbm(s) => Ok(sample_fbm(s)?),
            Self::Levy(l) => Ok(sample_levy(&l.spec(), l.horizon)?.path),
            Self::File { path } => load_path(&base.join(path)),
            Self::Inline(j) => j.to_path().map_err(|m| CliError::Config(format!("inline driver: {m}"))),
        }
    }
}

/// How jumps of a cadlag driver enter the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpRule {
    Geometric {
        #[serde(default = "one")]
        delta: f64,
        #[serde(default)]
        traversal: Traversal,
    },
    Forward,
}

fn one() -> f64 {
    1.0
}

impl Default for JumpRule {
    fn default() -> Self {
        Self::Geometric { delta: 1.0, traversal: Traversal::default() }
    }
}

/// Anchor lattice for flow checks: cell centres of `domain`, `per_axis` per
/// coordinate, and the split point `midpoint` of the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub domain: WorkingBox,
    pub per_axis: usize,
    /// Defaults to the middle of the interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Solve once and write the trajectory.
    Solve,
    /// Compare with `x0 exp(c (X_t - X_s))` (scalar linear field only).
    LinearExact,
    Identity,
    Composition,
    /// Composition discrepancy under grid halving (smooth drivers).
    CompositionOrder,
    Jacobian,
    Inverse,
    Determinant,
    Continuity,
    /// Forward-jump Jacobian degenerates while the geometric one does not.
    JumpContrast,
    /// Jump endpoints against a classical Runge-Kutta integration of the jump ODE.
    JumpLaw,
    /// Geometric solutions agree across traversal speeds.
    DeltaInvariance,
    /// p-variation survives the time change for every delta.
    PvarPreservation,
    /// Exact p-variation against enumeration of all partitions on short samples.
    PvarOracle,
    /// Refinement trend of the driver's p-variation across seeds.
    VariationProbe,
}

impl Check {
    pub fn is_flow(self) -> bool {
        matches!(
            self,
            Check::Identity | Check::Composition | Check::Jacobian | Check::Inverse | Check::Determinant | Check::Continuity
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Plateau,
    Diverge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub expect: Expectation,
    /// Trajectories, one stream each.
    pub runs: u64,
    /// Runs that must show the expected trend.
    pub required: u64,
    /// Dyadic refinements for fBm drivers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinements: Option<u32>,
    /// Truncation levels for Lévy drivers, coarse to fine.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    pub levels: usize,
    #[serde(default = "one")]
    pub required_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub paths: usize,
    pub max_len: usize,
    pub dim: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub driver: DriverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub p: f64,
    /// Defaults to the span of the driver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub jump_rule: JumpRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<AnchorConfig>,
    #[serde(default)]
    pub tolerances: FlowTolerances,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    /// Traversal speeds for `delta_invariance` and `pvar_preservation`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
    /// Samples for `pvar_preservation` (one stream each).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Replaces the seed of a random driver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub allow_hypothesis_violation: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    pub fn load(file: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
        Self::from_json(&text).map_err(|e| CliError::format(file, e))
    }

    /// The driver after applying the seed override.
    pub fn driver(&self) -> DriverConfig {
        match self.seed {
            Some(seed) => self.driver.with_seed(seed),
            None => self.driver.clone(),
        }
    }

    pub fn needs_field(&self) -> bool {
        self.checks.iter().any(|c| {
            !matches!(c, Check::PvarPreservation | Check::PvarOracle | Check::VariationProbe)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults_and_round_trips() {
        let text = r#"{
            "name": "demo",
            "driver": {"kind": "smooth", "cells": 10, "horizon": 1.0, "amplitude": [1.0], "frequency": [2.0]},
            "field": {"name": "sine"},
            "p": 1.0,
            "checks": ["solve"]
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.jump_rule, JumpRule::default());
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_json(), cfg.to_json());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"name": "x", "driver": {"kind": "file", "path": "a.csv"}, "p": 1.0, "checks": [], "bogus": 1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn seed_override_applies_to_random_drivers() {
        let d = DriverConfig::Fbm(FbmSpec::new(0.7, 8, 1.0, 1));
        match d.with_seed(9) {
            DriverConfig::Fbm(s) => assert_eq!(s.seed, 9),
            _ => unreachable!(),
        }
    }
}
