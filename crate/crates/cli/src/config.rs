//! Declarative run configuration: one TOML file, every field overridable
//! from the command line, hashed after resolution so artifacts can state
//! exactly what produced them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use varqfs_core::estimator::{EvalMode, FidelityMode};
use varqfs_core::optimizer::{OptimizerConfig, Schedule};

use crate::CliError;

pub const ARTIFACT_VERSION: u32 = 1;

/// Which columns of the 59-feature encoding a run operates on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMode {
    /// All 59 encoded columns.
    Full,
    /// The bundled 20-feature reference subset.
    Reduced20,
    /// The first k encoded columns.
    First(usize),
    /// The k features ranked most important by backward elimination on the
    /// training split.
    RfecvTop(usize),
}

impl FeatureMode {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if let Some(k) = s.strip_prefix("first:") {
            let k = k.parse().map_err(|_| CliError::usage(format!("bad feature mode {s:?}")))?;
            return Ok(FeatureMode::First(k));
        }
        if let Some(k) = s.strip_prefix("rfecv-top:") {
            let k = k.parse().map_err(|_| CliError::usage(format!("bad feature mode {s:?}")))?;
            return Ok(FeatureMode::RfecvTop(k));
        }
        match s {
            "full" => Ok(FeatureMode::Full),
            "reduced20" => Ok(FeatureMode::Reduced20),
            other => Err(CliError::usage(format!(
                "unknown feature mode {other:?} (expected full, reduced20, first:<k>, rfecv-top:<k>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Statevector,
    Mps,
}

impl BackendKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "statevector" | "sv" => Ok(BackendKind::Statevector),
            "mps" => Ok(BackendKind::Mps),
            other => Err(CliError::usage(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSection {
    pub iterations: usize,
    pub shots: u64,
    pub perturbation: f64,
    pub learning_rate: f64,
    /// 0 selects the depth rule (1 at depth 0, 5 at depth 1, 10 beyond).
    pub resamples: usize,
    pub regularization: f64,
    pub blocking_multiplier: f64,
    pub initial_sigma_repeats: usize,
    pub analysis_shots: u64,
    /// Exact-probability losses instead of sampling (small n only).
    pub exact_loss: bool,
    /// Exact overlaps instead of sampled compute-uncompute fidelities.
    pub exact_fidelity: bool,
    /// Write a resumable state snapshot every K iterations (0 = never).
    pub snapshot_every: usize,
    /// Number of independent seeds trained by `train`.
    pub seeds: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            iterations: 300,
            shots: 1024,
            perturbation: 0.01,
            learning_rate: 0.01,
            resamples: 0,
            regularization: 0.01,
            blocking_multiplier: 2.0,
            initial_sigma_repeats: 25,
            analysis_shots: 10_000,
            exact_loss: false,
            exact_fidelity: false,
            snapshot_every: 0,
            seeds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSection {
    pub bootstraps: usize,
    pub bootstrap_frac: f64,
    pub confidence: f64,
    pub paired_trials: usize,
    pub paired_frac: f64,
    pub top_k: usize,
    /// Variables fitted by `analyze qubofit` (first columns of the view).
    pub qubo_n: usize,
    /// 0 selects n/2.
    pub rfe_target_k: usize,
    pub rfecv_folds: usize,
    pub exhaustive_cap: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            bootstraps: 50,
            bootstrap_frac: 0.7,
            confidence: 0.95,
            paired_trials: 1000,
            paired_frac: 0.7,
            top_k: 10,
            qubo_n: 8,
            rfe_target_k: 0,
            rfecv_folds: 5,
            exhaustive_cap: 22,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Input file in the space-separated credit format.
    pub data: PathBuf,
    /// full | reduced20 | first:<k> | rfecv-top:<k>
    pub feature_mode: String,
    pub backend: BackendKind,
    pub depth: usize,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub split_ratio: f64,
    pub split_max_retries: usize,
    pub optimizer: OptimizerSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data/german.data"),
            feature_mode: "reduced20".into(),
            backend: BackendKind::Statevector,
            depth: 1,
            out_dir: PathBuf::from("runs/out"),
            master_seed: 7,
            split_ratio: 0.5,
            split_max_retries: 200,
            optimizer: OptimizerSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {path:?}: {e}")))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config parse error: {e}")))
    }

    pub fn feature_mode(&self) -> Result<FeatureMode, CliError> {
        FeatureMode::parse(&self.feature_mode)
    }

    /// Hash of the fully-resolved configuration; stamped into artifacts.
    /// The output directory is excluded: it changes where artifacts land,
    /// not what they contain.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Optimizer configuration for sweep entry `index`.
    pub fn optimizer_config(&self, index: usize) -> OptimizerConfig {
        let o = &self.optimizer;
        let resamples = if o.resamples == 0 {
            OptimizerConfig::default_resamples(self.depth)
        } else {
            o.resamples
        };
        OptimizerConfig {
            iterations: o.iterations,
            loss_mode: if o.exact_loss {
                EvalMode::Exact
            } else {
                EvalMode::Sampled { shots: o.shots }
            },
            fidelity_mode: if o.exact_fidelity {
                FidelityMode::Exact
            } else {
                FidelityMode::Sampled { shots: o.shots }
            },
            perturbation: o.perturbation,
            learning_rate: o.learning_rate,
            resamples,
            regularization: o.regularization,
            blocking_multiplier: o.blocking_multiplier,
            initial_sigma_repeats: o.initial_sigma_repeats,
            analysis_shots: o.analysis_shots,
            schedule: Schedule::Constant,
            seed: varqfs_core::seed::derive_seed(
                self.master_seed,
                &[varqfs_core::seed::domain::SWEEP, index as u64],
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.master_seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn feature_mode_parsing() {
        assert_eq!(FeatureMode::parse("full").unwrap(), FeatureMode::Full);
        assert_eq!(FeatureMode::parse("reduced20").unwrap(), FeatureMode::Reduced20);
        assert_eq!(FeatureMode::parse("first:10").unwrap(), FeatureMode::First(10));
        assert_eq!(FeatureMode::parse("rfecv-top:12").unwrap(), FeatureMode::RfecvTop(12));
        assert!(FeatureMode::parse("bogus").is_err());
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let text = r#"
            data = "somewhere/german.data"
            master_seed = 42
            [optimizer]
            iterations = 10
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.optimizer.iterations, 10);
        assert_eq!(cfg.optimizer.shots, 1024, "unset fields take defaults");
    }
}
