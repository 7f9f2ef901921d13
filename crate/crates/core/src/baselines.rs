//! Classical comparators: exhaustive search over all subsets, recursive
//! feature elimination (RFE), and cross-validated RFE (RFECV).
//!
//! Exhaustive search is the ground-truth ranking no other method may beat
//! on training score. RFE retrains after each removal and drops the
//! lowest-|weight| feature, ties broken by the lowest column index so the
//! elimination path is deterministic. RFECV scores each size along that
//! path with deterministic stratified k-fold validation and keeps the best
//! (ties prefer fewer features).

use thiserror::Error;

use crate::bits::Bits;
use crate::data::Dataset;
use crate::logreg::{accuracy, log_loss, train_logreg, LogRegConfig, LogRegError, LogRegModel};
use crate::objective::{BlackBoxObjective, ObjectiveError};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 22;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("{n} features exceed the exhaustive-search cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    LogReg(#[from] LogRegError),
    #[error("fold {fold} contains a single class; reduce the fold count or rebalance")]
    SingleClassFold { fold: usize },
    #[error("target_k must lie in 1..={n}, got {k}")]
    BadTargetK { k: usize, n: usize },
}

/// All 2^n subsets with their scores, best first.
#[derive(Debug, Clone)]
pub struct RankedSubsets {
    /// (subset, train score), ascending by score then by index.
    pub entries: Vec<(Bits, f64)>,
}

impl RankedSubsets {
    pub fn best(&self) -> (Bits, f64) {
        self.entries[0]
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "bitstring,score")?;
        for (bits, score) in &self.entries {
            writeln!(w, "{bits},{score}")?;
        }
        Ok(())
    }
}

/// Scores every subset of an n-variable objective through the shared cache.
pub fn exhaustive(
    objective: &dyn BlackBoxObjective,
    n: usize,
    cap: usize,
) -> Result<RankedSubsets, BaselineError> {
    if n > cap {
        return Err(BaselineError::CapExceeded { n, cap });
    }
    let mut entries = Vec::with_capacity(1usize << n);
    for word in 0..(1u64 << n) {
        let bits = Bits::new(n, word).expect("cap keeps n <= 64");
        entries.push((bits, objective.evaluate(bits)?));
    }
    entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(RankedSubsets { entries })
}

/// Importance of each column in a fitted model: |weight|.
pub fn feature_importance(model: &LogRegModel) -> Vec<f64> {
    model.weights.iter().map(|w| w.abs()).collect()
}

/// One elimination step: the feature removed and the model score at the
/// size *before* the removal.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStep {
    pub removed_feature: usize,
    pub removed_name: String,
    /// Training log-loss of the model fitted on the pre-removal subset.
    pub score_at_size: f64,
    /// Subset size before the removal.
    pub size: usize,
}

#[derive(Debug, Clone)]
pub struct EliminationTrace {
    pub steps: Vec<EliminationStep>,
    pub final_subset: Bits,
    /// Subsets along the path, largest first: [n features, n-1, …, target].
    pub path: Vec<Bits>,
}

impl EliminationTrace {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "size,removed_feature,removed_name,score_at_size")?;
        for step in &self.steps {
            writeln!(
                w,
                "{},{},{},{}",
                step.size, step.removed_feature, step.removed_name, step.score_at_size
            )?;
        }
        Ok(())
    }
}

/// Backward elimination down to `target_k` features: retrain, drop the
/// lowest-importance column, repeat.
pub fn rfe(train: &Dataset, target_k: usize) -> Result<EliminationTrace, BaselineError> {
    let n = train.n_features();
    if target_k == 0 || target_k > n {
        return Err(BaselineError::BadTargetK { k: target_k, n });
    }
    let config = LogRegConfig::default();
    let mut subset = Bits::ones(n);
    let mut steps = Vec::with_capacity(n - target_k);
    let mut path = vec![subset];
    while subset.count_ones() as usize > target_k {
        let view = train.select_columns(subset).expect("subset tracks n");
        let model = train_logreg(view.features(), view.labels(), &config)?;
        let score = log_loss(&model, view.features(), view.labels())?;
        let importances = feature_importance(&model);
        let local = importances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("subset is nonempty")
            .0;
        // translate the position within the view back to the dataset column
        let column = subset.ones_iter().nth(local).expect("local index in range");
        steps.push(EliminationStep {
            removed_feature: column,
            removed_name: train.names()[column].clone(),
            score_at_size: score,
            size: subset.count_ones() as usize,
        });
        subset = subset.with_bit(column, false);
        path.push(subset);
    }
    Ok(EliminationTrace { steps, final_subset: subset, path })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scoring {
    LogLoss,
    Accuracy,
}

/// Deterministic stratified fold assignment: rows of each class are dealt
/// round-robin over the folds in row order.
fn stratified_folds(labels: &nalgebra::DVector<f64>, folds: usize) -> Vec<Vec<usize>> {
    let mut assignment = vec![Vec::new(); folds];
    let mut per_class_counter = [0usize; 2];
    for (row, &y) in labels.iter().enumerate() {
        let class = usize::from(y >= 0.5);
        assignment[per_class_counter[class] % folds].push(row);
        per_class_counter[class] += 1;
    }
    assignment
}

#[derive(Debug, Clone)]
pub struct RfecvReport {
    /// (size, mean validation score) along the elimination path.
    pub size_scores: Vec<(usize, f64)>,
    pub chosen_size: usize,
    pub subset: Bits,
    pub trace: EliminationTrace,
}

/// RFECV: run the full elimination path, validate every size with
/// stratified k-fold CV, and return the subset of the best-scoring size.
pub fn rfecv(
    train: &Dataset,
    scoring: Scoring,
    folds: usize,
) -> Result<RfecvReport, BaselineError> {
    assert!(folds >= 2, "cross-validation needs at least 2 folds");
    let trace = rfe(train, 1)?;
    let assignment = stratified_folds(train.labels(), folds);
    for (fold, rows) in assignment.iter().enumerate() {
        let classes: std::collections::BTreeSet<bool> =
            rows.iter().map(|&r| train.labels()[r] >= 0.5).collect();
        if classes.len() < 2 {
            return Err(BaselineError::SingleClassFold { fold });
        }
    }
    let all_rows: Vec<Vec<usize>> = (0..folds)
        .map(|f| {
            assignment
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect()
        })
        .collect();

    let config = LogRegConfig::default();
    let mut size_scores = Vec::with_capacity(trace.path.len());
    for subset in &trace.path {
        let mut mean = 0.0;
        for f in 0..folds {
            let fit = train.subset_rows(&all_rows[f]).select_columns(*subset).expect("n fixed");
            let val = train.subset_rows(&assignment[f]).select_columns(*subset).expect("n fixed");
            let model = train_logreg(fit.features(), fit.labels(), &config)?;
            mean += match scoring {
                Scoring::LogLoss => log_loss(&model, val.features(), val.labels())?,
                Scoring::Accuracy => accuracy(&model, val.features(), val.labels())?,
            };
        }
        size_scores.push((subset.count_ones() as usize, mean / folds as f64));
    }

    // best mean score; ties prefer fewer features (path is largest-first,
    // so a strict improvement check scanning forward does exactly that)
    let mut best_index = 0;
    for (i, &(_, score)) in size_scores.iter().enumerate() {
        let better = match scoring {
            Scoring::LogLoss => score <= size_scores[best_index].1,
            Scoring::Accuracy => score >= size_scores[best_index].1,
        };
        if better {
            best_index = i;
        }
    }
    Ok(RfecvReport {
        chosen_size: size_scores[best_index].0,
        subset: trace.path[best_index],
        size_scores,
        trace,
    })
}

/// The `k` features surviving longest along the elimination path — the
/// importance ranking RFE induces. Used to build reduced feature views.
pub fn rfe_top_k(train: &Dataset, k: usize) -> Result<Bits, BaselineError> {
    Ok(rfe(train, k)?.final_subset)
}
