//! The black-box objective f: {0,1}^n → ℝ.
//!
//! For feature selection, f(x) is the training log-loss of a logistic
//! regression fitted on the columns selected by x. Scores depend only on the
//! bitstring and the data — never on circuit parameters — so they are
//! memoized once per subset. The cache tolerates concurrent lookups;
//! first-writer-wins inserts are safe because training is deterministic.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::bits::Bits;
use crate::data::Dataset;
use crate::logreg::{log_loss, train_logreg, LogRegConfig, LogRegError};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("objective evaluation failed for bitstring {bits}: {source}")]
    Eval {
        bits: String,
        #[source]
        source: LogRegError,
    },
    #[error("objective returned a non-finite score for bitstring {bits}")]
    NonFinite { bits: String },
    #[error("bitstring has {got} bits, objective dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("cache import failed at line {line}: {reason}")]
    CacheImport { line: usize, reason: String },
}

/// A total objective over n-bit strings with declared bounds for
/// concentration estimates.
pub trait BlackBoxObjective: Send + Sync {
    /// Number of binary variables n.
    fn dimension(&self) -> usize;

    /// (f_min, f_max) used by Hoeffding-style reporting.
    fn bounds(&self) -> (f64, f64);

    fn evaluate(&self, bits: Bits) -> Result<f64, ObjectiveError>;
}

/// Wraps a plain function as an objective; handy for tests and synthetic
/// problems.
pub struct FnObjective {
    dimension: usize,
    bounds: (f64, f64),
    f: Box<dyn Fn(Bits) -> f64 + Send + Sync>,
}

impl FnObjective {
    pub fn new(
        dimension: usize,
        bounds: (f64, f64),
        f: impl Fn(Bits) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dimension, bounds, f: Box::new(f) }
    }
}

impl BlackBoxObjective for FnObjective {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    fn evaluate(&self, bits: Bits) -> Result<f64, ObjectiveError> {
        if bits.len() != self.dimension {
            return Err(ObjectiveError::Dimension { expected: self.dimension, got: bits.len() });
        }
        Ok((self.f)(bits))
    }
}

/// f(x) = training log-loss of a logistic regression fitted on the columns
/// selected by x, memoized per bitstring.
pub struct SubsetObjective {
    train: Dataset,
    config: LogRegConfig,
    f_min: f64,
    f_max: f64,
    cache: Mutex<HashMap<u64, f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl SubsetObjective {
    /// Default declared bounds: [0, 2·ln 2].
    pub fn new(train: Dataset) -> Self {
        Self::with_bounds(train, 0.0, 2.0 * std::f64::consts::LN_2)
    }

    pub fn with_bounds(train: Dataset, f_min: f64, f_max: f64) -> Self {
        Self {
            train,
            config: LogRegConfig::default(),
            f_min,
            f_max,
            cache: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn train_data(&self) -> &Dataset {
        &self.train
    }

    pub fn cache_hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn cache_misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    fn train_and_score(&self, bits: Bits) -> Result<f64, ObjectiveError> {
        let view = self.train.select_columns(bits).map_err(|_| ObjectiveError::Dimension {
            expected: self.train.n_features(),
            got: bits.len(),
        })?;
        let model = train_logreg(view.features(), view.labels(), &self.config)
            .map_err(|source| ObjectiveError::Eval { bits: bits.to_string(), source })?;
        let score = log_loss(&model, view.features(), view.labels())
            .map_err(|source| ObjectiveError::Eval { bits: bits.to_string(), source })?;
        if !score.is_finite() {
            return Err(ObjectiveError::NonFinite { bits: bits.to_string() });
        }
        Ok(score)
    }

    /// Writes `bitstring,score` rows in sorted order so long runs can be
    /// resumed.
    pub fn export_cache(&self, mut w: impl Write) -> std::io::Result<()> {
        let cache = self.cache.lock().expect("cache lock");
        let mut entries: Vec<_> = cache.iter().map(|(&k, &v)| (k, v)).collect();
        drop(cache);
        entries.sort_unstable_by_key(|&(k, _)| k);
        writeln!(w, "bitstring,score")?;
        let n = self.train.n_features();
        for (word, score) in entries {
            let bits = Bits::new(n, word).expect("cache keys fit the dimension");
            writeln!(w, "{bits},{score:.17e}")?;
        }
        Ok(())
    }

    pub fn import_cache(&self, r: impl BufRead) -> Result<usize, ObjectiveError> {
        let mut imported = 0;
        for (idx, line) in r.lines().enumerate() {
            let line = line.map_err(|e| ObjectiveError::CacheImport {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            if idx == 0 && line.starts_with("bitstring") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (bits_str, score_str) =
                line.split_once(',').ok_or_else(|| ObjectiveError::CacheImport {
                    line: idx + 1,
                    reason: "expected `bitstring,score`".into(),
                })?;
            let bits: Bits = bits_str.parse().map_err(|e| ObjectiveError::CacheImport {
                line: idx + 1,
                reason: format!("{e}"),
            })?;
            let score: f64 = score_str.parse().map_err(|e| ObjectiveError::CacheImport {
                line: idx + 1,
                reason: format!("{e}"),
            })?;
            if bits.len() != self.train.n_features() {
                return Err(ObjectiveError::CacheImport {
                    line: idx + 1,
                    reason: format!(
                        "bitstring length {} does not match dimension {}",
                        bits.len(),
                        self.train.n_features()
                    ),
                });
            }
            self.cache.lock().expect("cache lock").entry(bits.index()).or_insert(score);
            imported += 1;
        }
        Ok(imported)
    }
}

impl BlackBoxObjective for SubsetObjective {
    fn dimension(&self) -> usize {
        self.train.n_features()
    }

    fn bounds(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }

    fn evaluate(&self, bits: Bits) -> Result<f64, ObjectiveError> {
        if bits.len() != self.dimension() {
            return Err(ObjectiveError::Dimension { expected: self.dimension(), got: bits.len() });
        }
        if let Some(&score) = self.cache.lock().expect("cache lock").get(&bits.index()) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(score);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let score = self.train_and_score(bits)?;
        // first write wins; duplicates are identical by determinism
        self.cache.lock().expect("cache lock").entry(bits.index()).or_insert(score);
        Ok(score)
    }
}

/// Trains on `train`'s selected columns and scores log-loss on `test`'s —
/// the generalization counterpart of the cached training score.
pub fn test_score(subset: Bits, train: &Dataset, test: &Dataset) -> Result<f64, ObjectiveError> {
    let train_view = train.select_columns(subset).map_err(|_| ObjectiveError::Dimension {
        expected: train.n_features(),
        got: subset.len(),
    })?;
    let test_view = test.select_columns(subset).map_err(|_| ObjectiveError::Dimension {
        expected: test.n_features(),
        got: subset.len(),
    })?;
    let model = train_logreg(train_view.features(), train_view.labels(), &LogRegConfig::default())
        .map_err(|source| ObjectiveError::Eval { bits: subset.to_string(), source })?;
    log_loss(&model, test_view.features(), test_view.labels())
        .map_err(|source| ObjectiveError::Eval { bits: subset.to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::LN_2;

    fn toy_dataset() -> Dataset {
        // column 0 is the label, column 1 is noise
        let x = DMatrix::from_row_slice(8, 2, &[
            0.0, 0.3, 0.0, -0.8, 0.0, 0.1, 0.0, 0.9, 1.0, -0.2, 1.0, 0.7, 1.0, -0.5, 1.0, 0.4,
        ]);
        let y = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        Dataset::from_parts(vec!["signal".into(), "noise".into()], x, y).unwrap()
    }

    #[test]
    fn empty_subset_scores_intercept_only_model() {
        let obj = SubsetObjective::new(toy_dataset());
        let score = obj.evaluate(Bits::zeros(2)).unwrap();
        // balanced labels, intercept-only: p = 0.5 → ln 2
        assert_abs_diff_eq!(score, LN_2, epsilon = 1e-8);
    }

    #[test]
    fn cache_skips_retraining() {
        let obj = SubsetObjective::new(toy_dataset());
        let bits: Bits = "10".parse().unwrap();
        let first = obj.evaluate(bits).unwrap();
        assert_eq!(obj.cache_misses(), 1);
        let second = obj.evaluate(bits).unwrap();
        assert_eq!(obj.cache_misses(), 1, "second evaluation must not retrain");
        assert_eq!(obj.cache_hits(), 1);
        assert_eq!(first.to_bits(), second.to_bits());
    }

    #[test]
    fn informative_column_beats_noise() {
        let obj = SubsetObjective::new(toy_dataset());
        let signal = obj.evaluate("10".parse().unwrap()).unwrap();
        let noise = obj.evaluate("01".parse().unwrap()).unwrap();
        assert!(signal < noise, "signal {signal} vs noise {noise}");
    }

    #[test]
    fn scores_are_pure() {
        let obj = SubsetObjective::new(toy_dataset());
        let other = SubsetObjective::new(toy_dataset());
        for word in 0..4u64 {
            let bits = Bits::new(2, word).unwrap();
            assert_eq!(
                obj.evaluate(bits).unwrap().to_bits(),
                other.evaluate(bits).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn cache_round_trips_through_csv() {
        let obj = SubsetObjective::new(toy_dataset());
        for word in 0..4u64 {
            obj.evaluate(Bits::new(2, word).unwrap()).unwrap();
        }
        let mut buffer = Vec::new();
        obj.export_cache(&mut buffer).unwrap();

        let fresh = SubsetObjective::new(toy_dataset());
        let imported = fresh.import_cache(std::io::BufReader::new(buffer.as_slice())).unwrap();
        assert_eq!(imported, 4);
        let score = fresh.evaluate(Bits::zeros(2)).unwrap();
        assert_eq!(fresh.cache_misses(), 0, "imported entries must satisfy lookups");
        assert_abs_diff_eq!(score, obj.evaluate(Bits::zeros(2)).unwrap(), epsilon = 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let obj = SubsetObjective::new(toy_dataset());
        assert!(matches!(
            obj.evaluate(Bits::zeros(3)),
            Err(ObjectiveError::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn test_score_on_train_equals_training_score() {
        let data = toy_dataset();
        let obj = SubsetObjective::new(data.clone());
        let bits: Bits = "11".parse().unwrap();
        let train_score = obj.evaluate(bits).unwrap();
        let ts = test_score(bits, &data, &data).unwrap();
        assert_abs_diff_eq!(ts, train_score, epsilon = 1e-14);
    }
}
