//! Post-training statistics: score CDFs of sampled subsets, bootstrap
//! confidence intervals, paired win-rate comparisons, and the 2-local
//! (QUBO) least-squares fit used as a locality diagnostic of the
//! objective landscape.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{Bits, SampleSet};
use crate::data::Dataset;
use crate::logreg::{log_loss, train_logreg, LogRegConfig, LogRegError};
use crate::objective::{BlackBoxObjective, ObjectiveError};
use crate::seed::{domain, rng_from};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    LogReg(#[from] LogRegError),
    #[error("{n} variables exceed the exhaustive fit cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("bitstring has {got} bits, the model has {expected} variables")]
    Dimension { expected: usize, got: usize },
    #[error("sample set is empty")]
    EmptySamples,
    #[error("subsampling produced a single-class draw {count} times in a row; data too degenerate")]
    DegenerateSubsample { count: usize },
}

/// An empirical CDF over subset scores: sorted (score, cumulative mass).
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub points: Vec<(f64, f64)>,
}

impl CdfCurve {
    /// Cumulative probability at `score` (mass of subsets scoring ≤ it).
    pub fn at(&self, score: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(s, _)| *s <= score)
            .last()
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "score,cumulative_probability")?;
        for (score, p) in &self.points {
            writeln!(w, "{score},{p}")?;
        }
        Ok(())
    }
}

/// Weights each distinct sampled bitstring by its empirical frequency and
/// accumulates over ascending score.
pub fn cdf(samples: &SampleSet, objective: &dyn BlackBoxObjective) -> Result<CdfCurve, AnalysisError> {
    if samples.shots() == 0 {
        return Err(AnalysisError::EmptySamples);
    }
    let mut scored: Vec<(f64, f64)> = Vec::with_capacity(samples.distinct());
    for (bits, count) in samples.iter() {
        scored.push((objective.evaluate(bits)?, count as f64 / samples.shots() as f64));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cumulative = 0.0;
    let points = scored
        .into_iter()
        .map(|(score, mass)| {
            cumulative += mass;
            (score, cumulative)
        })
        .collect();
    Ok(CdfCurve { points })
}

/// The uniform-weight reference CDF over an exhaustive ranking.
pub fn uniform_cdf(ranked: &crate::baselines::RankedSubsets) -> CdfCurve {
    let total = ranked.entries.len() as f64;
    let mut cumulative = 0.0;
    let points = ranked
        .entries
        .iter()
        .map(|&(_, score)| {
            cumulative += 1.0 / total;
            (score, cumulative)
        })
        .collect();
    CdfCurve { points }
}

/// Percentile with linear interpolation over sorted values, q in [0,1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapCis {
    pub train: ConfidenceInterval,
    pub test: ConfidenceInterval,
    /// Single-class subsamples that had to be redrawn.
    pub degenerate_redraws: usize,
}

/// Draws `count` distinct row indices without replacement.
fn draw_rows(rng: &mut rand_chacha::ChaCha8Rng, total: usize, count: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..total).collect();
    indices.shuffle(rng);
    indices.truncate(count);
    indices
}

fn has_both_classes(labels: &DVector<f64>) -> bool {
    let first = labels[0] >= 0.5;
    labels.iter().any(|&y| (y >= 0.5) != first)
}

/// Percentile bootstrap over seeded subsamples of `frac` of the rows,
/// retraining per subsample; train and test scores share the per-trial
/// model.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_ci(
    subset: Bits,
    train: &Dataset,
    test: &Dataset,
    b: usize,
    frac: f64,
    level: f64,
    seed: u64,
) -> Result<BootstrapCis, AnalysisError> {
    assert!(b >= 2, "need at least 2 bootstraps");
    assert!(frac > 0.0 && frac <= 1.0);
    let train_view = train.select_columns(subset).map_err(|_| AnalysisError::Dimension {
        expected: train.n_features(),
        got: subset.len(),
    })?;
    let test_view = test.select_columns(subset).map_err(|_| AnalysisError::Dimension {
        expected: test.n_features(),
        got: subset.len(),
    })?;
    let config = LogRegConfig::default();
    let train_rows = (frac * train.n_rows() as f64).floor() as usize;
    let test_rows = (frac * test.n_rows() as f64).floor() as usize;

    let mut train_scores = Vec::with_capacity(b);
    let mut test_scores = Vec::with_capacity(b);
    let mut degenerate_redraws = 0usize;
    for trial in 0..b {
        let mut rng = rng_from(seed, &[domain::BOOTSTRAP, trial as u64]);
        let (fit_data, val_data) = loop {
            let fit = train_view.subset_rows(&draw_rows(&mut rng, train.n_rows(), train_rows));
            let val = test_view.subset_rows(&draw_rows(&mut rng, test.n_rows(), test_rows));
            if has_both_classes(fit.labels()) {
                break (fit, val);
            }
            degenerate_redraws += 1;
            if degenerate_redraws > 100 * b {
                return Err(AnalysisError::DegenerateSubsample { count: degenerate_redraws });
            }
        };
        let model = train_logreg(fit_data.features(), fit_data.labels(), &config)?;
        train_scores.push(log_loss(&model, fit_data.features(), fit_data.labels())?);
        test_scores.push(log_loss(&model, val_data.features(), val_data.labels())?);
    }
    train_scores.sort_by(f64::total_cmp);
    test_scores.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCis {
        train: ConfidenceInterval {
            lo: percentile(&train_scores, tail),
            hi: percentile(&train_scores, 1.0 - tail),
        },
        test: ConfidenceInterval {
            lo: percentile(&test_scores, tail),
            hi: percentile(&test_scores, 1.0 - tail),
        },
        degenerate_redraws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinFractions {
    /// Fraction of trials where subset A scored *strictly* lower log-loss.
    pub train: f64,
    pub test: f64,
    pub trials: usize,
}

/// Paired comparison: per trial one shared row subsample scores both
/// subsets; a win is a strictly lower log-loss for `subset_a`.
#[allow(clippy::too_many_arguments)]
pub fn paired_compare(
    subset_a: Bits,
    subset_b: Bits,
    train: &Dataset,
    test: &Dataset,
    trials: usize,
    frac: f64,
    seed: u64,
) -> Result<WinFractions, AnalysisError> {
    assert!(trials >= 1);
    let config = LogRegConfig::default();
    let train_rows = (frac * train.n_rows() as f64).floor() as usize;
    let test_rows = (frac * test.n_rows() as f64).floor() as usize;
    let view = |d: &Dataset, s: Bits| {
        d.select_columns(s).map_err(|_| AnalysisError::Dimension {
            expected: d.n_features(),
            got: s.len(),
        })
    };
    let (train_a, train_b) = (view(train, subset_a)?, view(train, subset_b)?);
    let (test_a, test_b) = (view(test, subset_a)?, view(test, subset_b)?);

    let mut wins_train = 0usize;
    let mut wins_test = 0usize;
    for trial in 0..trials {
        let mut rng = rng_from(seed, &[domain::PAIRED, trial as u64]);
        let rows_train = draw_rows(&mut rng, train.n_rows(), train_rows);
        let rows_test = draw_rows(&mut rng, test.n_rows(), test_rows);

        let fit_a = train_a.subset_rows(&rows_train);
        let fit_b = train_b.subset_rows(&rows_train);
        if !has_both_classes(fit_a.labels()) {
            continue; // the same rows feed both sides, so skipping is still paired
        }
        let model_a = train_logreg(fit_a.features(), fit_a.labels(), &config)?;
        let model_b = train_logreg(fit_b.features(), fit_b.labels(), &config)?;

        let train_score_a = log_loss(&model_a, fit_a.features(), fit_a.labels())?;
        let train_score_b = log_loss(&model_b, fit_b.features(), fit_b.labels())?;
        if train_score_a < train_score_b {
            wins_train += 1;
        }
        let val_a = test_a.subset_rows(&rows_test);
        let val_b = test_b.subset_rows(&rows_test);
        let test_score_a = log_loss(&model_a, val_a.features(), val_a.labels())?;
        let test_score_b = log_loss(&model_b, val_b.features(), val_b.labels())?;
        if test_score_a < test_score_b {
            wins_test += 1;
        }
    }
    Ok(WinFractions {
        train: wins_train as f64 / trials as f64,
        test: wins_test as f64 / trials as f64,
        trials,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopKComparison {
    pub averaged: WinFractions,
    /// Distinct subsets actually available (may be below the requested k).
    pub used_subsets: usize,
    pub per_subset: Vec<(String, WinFractions)>,
}

/// Takes the `k` distinct sampled subsets with the lowest full-train
/// scores and averages their paired win fractions against a classical
/// subset.
#[allow(clippy::too_many_arguments)]
pub fn top_k_average_compare(
    samples: &SampleSet,
    objective: &dyn BlackBoxObjective,
    classical_subset: Bits,
    train: &Dataset,
    test: &Dataset,
    k: usize,
    trials: usize,
    frac: f64,
    seed: u64,
) -> Result<TopKComparison, AnalysisError> {
    if samples.shots() == 0 {
        return Err(AnalysisError::EmptySamples);
    }
    let mut scored: Vec<(Bits, f64)> = Vec::with_capacity(samples.distinct());
    for (bits, _) in samples.iter() {
        scored.push((bits, objective.evaluate(bits)?));
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);

    let mut per_subset = Vec::with_capacity(scored.len());
    let mut sum_train = 0.0;
    let mut sum_test = 0.0;
    for (bits, _) in &scored {
        let wins = paired_compare(*bits, classical_subset, train, test, trials, frac, seed)?;
        sum_train += wins.train;
        sum_test += wins.test;
        per_subset.push((bits.to_string(), wins));
    }
    let used = scored.len();
    Ok(TopKComparison {
        averaged: WinFractions {
            train: sum_train / used as f64,
            test: sum_test / used as f64,
            trials,
        },
        used_subsets: used,
        per_subset,
    })
}

/// A fitted 2-local surrogate: offset + Σ c_i x_i + Σ_{i<j} c_ij x_i x_j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuboModel {
    pub n: usize,
    pub offset: f64,
    pub linear: Vec<f64>,
    /// Pairwise coefficients in (i, j) lexicographic order with i < j.
    pub pairwise: Vec<f64>,
    pub mse: f64,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // offset of the block of pairs starting at i, then the distance to j
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Evaluates the surrogate polynomial at a bitstring.
pub fn qubo_eval(model: &QuboModel, bits: Bits) -> Result<f64, AnalysisError> {
    if bits.len() != model.n {
        return Err(AnalysisError::Dimension { expected: model.n, got: bits.len() });
    }
    let mut value = model.offset;
    for i in bits.ones_iter() {
        value += model.linear[i];
    }
    let ones: Vec<usize> = bits.ones_iter().collect();
    for (a, &i) in ones.iter().enumerate() {
        for &j in &ones[a + 1..] {
            value += model.pairwise[pair_index(model.n, i, j)];
        }
    }
    Ok(value)
}

/// Least-squares fit of the QUBO basis {1, x_i, x_i·x_j} to f over all 2^n
/// bitstrings. Small systems go through an orthogonal factorization; larger
/// ones through normal equations.
pub fn qubo_fit(
    objective: &dyn BlackBoxObjective,
    n: usize,
    cap: usize,
) -> Result<QuboModel, AnalysisError> {
    if n > cap {
        return Err(AnalysisError::CapExceeded { n, cap });
    }
    let rows = 1usize << n;
    let cols = 1 + n + n * (n - 1) / 2;

    let design_row = |word: u64, row: &mut [f64]| {
        row[0] = 1.0;
        for i in 0..n {
            row[1 + i] = f64::from((word >> i) & 1 == 1);
        }
        let mut c = 1 + n;
        for i in 0..n {
            for j in (i + 1)..n {
                row[c] = f64::from((word >> i) & 1 == 1 && (word >> j) & 1 == 1);
                c += 1;
            }
        }
    };

    let mut targets = DVector::<f64>::zeros(rows);
    for word in 0..rows as u64 {
        targets[word as usize] =
            objective.evaluate(Bits::new(n, word).expect("cap keeps n small"))?;
    }

    let coeffs = if rows <= 1 << 12 {
        let mut a = DMatrix::<f64>::zeros(rows, cols);
        let mut scratch = vec![0.0; cols];
        for word in 0..rows as u64 {
            design_row(word, &mut scratch);
            for (j, &v) in scratch.iter().enumerate() {
                a[(word as usize, j)] = v;
            }
        }
        let svd = a.clone().svd(true, true);
        let mut x = svd.solve(&targets, 1e-12).expect("svd requested u and v_t");
        // two rounds of iterative refinement push exactly-representable
        // fits down to rounding level
        for _ in 0..2 {
            let residual = &targets - &a * &x;
            x += svd.solve(&residual, 1e-12).expect("svd requested u and v_t");
        }
        x
    } else {
        // accumulate AᵀA and Aᵀy row by row; the basis is linearly
        // independent over the full cube, so Cholesky applies
        let mut ata = DMatrix::<f64>::zeros(cols, cols);
        let mut aty = DVector::<f64>::zeros(cols);
        let mut row = vec![0.0; cols];
        for word in 0..rows as u64 {
            design_row(word, &mut row);
            let y = targets[word as usize];
            for i in 0..cols {
                if row[i] == 0.0 {
                    continue;
                }
                aty[i] += row[i] * y;
                for j in i..cols {
                    ata[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..cols {
            for j in (i + 1)..cols {
                ata[(j, i)] = ata[(i, j)];
            }
        }
        let chol = ata.clone().cholesky().expect("full-cube QUBO basis is positive definite");
        let mut x = chol.solve(&aty);
        for _ in 0..2 {
            let residual = &aty - &ata * &x;
            x += chol.solve(&residual);
        }
        x
    };

    let model = QuboModel {
        n,
        offset: coeffs[0],
        linear: coeffs.as_slice()[1..1 + n].to_vec(),
        pairwise: coeffs.as_slice()[1 + n..].to_vec(),
        mse: 0.0,
    };
    let mut sse = 0.0;
    for word in 0..rows as u64 {
        let bits = Bits::new(n, word).expect("cap keeps n small");
        let r = qubo_eval(&model, bits)? - targets[word as usize];
        sse += r * r;
    }
    Ok(QuboModel { mse: sse / rows as f64, ..model })
}
