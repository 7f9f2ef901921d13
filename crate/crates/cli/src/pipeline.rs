//! Shared plumbing between subcommands: data loading, feature views,
//! backend construction, artifact metadata.

use std::io::Write;
use std::path::Path;

use varqfs_core::backend::{Backend, MpsBackend, SvBackend};
use varqfs_core::baselines;
use varqfs_core::bits::{Bits, SampleSet};
use varqfs_core::data::{self, Dataset, SplitPair};
use varqfs_core::sv::DEFAULT_QUBIT_CAP;

use crate::config::{BackendKind, FeatureMode, RunConfig, ARTIFACT_VERSION};
use crate::CliError;

/// Everything downstream commands need: the split and the feature view on
/// both halves.
pub struct Prepared {
    pub split: SplitPair,
    pub view_bits: Bits,
    pub train_view: Dataset,
    pub test_view: Dataset,
    pub encoded: Dataset,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, CliError> {
    let raw = data::load_german(&config.data)?;
    let encoded = data::one_hot_encode(&raw)?;
    let split = data::split(
        &encoded,
        config.split_ratio,
        config.master_seed,
        config.split_max_retries,
    )?;
    let view_bits = match config.feature_mode()? {
        FeatureMode::Full => Bits::ones(encoded.n_features()),
        FeatureMode::Reduced20 => split
            .train
            .subset_for_names(&data::REDUCED_20_REFERENCE.to_vec())?,
        FeatureMode::First(k) => {
            if k == 0 || k > encoded.n_features() {
                return Err(CliError::usage(format!(
                    "first:{k} is out of range for {} features",
                    encoded.n_features()
                )));
            }
            let mut bits = Bits::zeros(encoded.n_features());
            for l in 0..k {
                bits = bits.with_bit(l, true);
            }
            bits
        }
        FeatureMode::RfecvTop(k) => baselines::rfe_top_k(&split.train, k)?,
    };
    let train_view = split.train.select_columns(view_bits)?;
    let test_view = split.test.select_columns(view_bits)?;
    Ok(Prepared { split, view_bits, train_view, test_view, encoded })
}

pub fn make_backend(config: &RunConfig, n_qubits: usize) -> Result<Box<dyn Backend>, CliError> {
    match config.backend {
        BackendKind::Statevector => {
            if n_qubits > DEFAULT_QUBIT_CAP {
                return Err(CliError::usage(format!(
                    "the statevector backend caps at {DEFAULT_QUBIT_CAP} qubits; \
                     {n_qubits} requested — use backend = \"mps\""
                )));
            }
            Ok(Box::new(SvBackend::new()))
        }
        BackendKind::Mps => Ok(Box::new(MpsBackend::new())),
    }
}

/// `# config_hash=… master_seed=… artifact_version=…` — the provenance
/// line stamped on every CSV artifact.
pub fn meta_line(config: &RunConfig) -> String {
    format!(
        "# config_hash={} master_seed={} artifact_version={}",
        config.hash(),
        config.master_seed,
        ARTIFACT_VERSION
    )
}

pub fn write_artifact(
    path: &Path,
    config: &RunConfig,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", meta_line(config))?;
    body(&mut file)?;
    Ok(())
}

/// JSON artifacts carry the provenance triple as leading fields.
pub fn write_json_artifact<T: serde::Serialize>(
    path: &Path,
    config: &RunConfig,
    payload: &T,
) -> Result<(), CliError> {
    #[derive(serde::Serialize)]
    struct Envelope<'a, T> {
        config_hash: String,
        master_seed: u64,
        artifact_version: u32,
        #[serde(flatten)]
        payload: &'a T,
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let envelope = Envelope {
        config_hash: config.hash(),
        master_seed: config.master_seed,
        artifact_version: ARTIFACT_VERSION,
        payload,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a `bitstring,count` CSV back into a sample set.
pub fn read_samples_csv(path: &Path) -> Result<SampleSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {path:?}: {e}")))?;
    let mut counts: Vec<(u64, u64)> = Vec::new();
    let mut n_qubits = 0;
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("bitstring") || line.trim().is_empty() {
            continue;
        }
        let (bits_str, count_str) = line
            .split_once(',')
            .ok_or_else(|| CliError::Data(format!("malformed samples row {line:?}")))?;
        let bits: Bits = bits_str
            .parse()
            .map_err(|e| CliError::Data(format!("bad bitstring {bits_str:?}: {e}")))?;
        let count: u64 = count_str
            .parse()
            .map_err(|e| CliError::Data(format!("bad count {count_str:?}: {e}")))?;
        n_qubits = bits.len();
        counts.push((bits.index(), count));
    }
    if counts.is_empty() {
        return Err(CliError::Data(format!("{path:?} contains no samples")));
    }
    SampleSet::from_counts(n_qubits, counts)
        .map_err(|e| CliError::Data(format!("inconsistent samples: {e}")))
}

pub fn parse_subset(s: &str, expected_len: usize) -> Result<Bits, CliError> {
    let bits: Bits =
        s.parse().map_err(|e| CliError::usage(format!("bad subset bitstring {s:?}: {e}")))?;
    if bits.len() != expected_len {
        return Err(CliError::usage(format!(
            "subset has {} bits but the feature view has {expected_len}",
            bits.len()
        )));
    }
    Ok(bits)
}
