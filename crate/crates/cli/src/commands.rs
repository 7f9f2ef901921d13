//! Subcommand implementations. Every artifact is stamped with
//! (config_hash, master_seed, artifact_version) and, except for the
//! wall_ms column of trace.csv, reruns with the same triple are
//! byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use varqfs_core::analysis;
use varqfs_core::baselines::{self, Scoring};
use varqfs_core::bits::{Bits, SampleSet};
use varqfs_core::circuit::Circuit;
use varqfs_core::data::synth;
use varqfs_core::objective::{BlackBoxObjective, SubsetObjective};
use varqfs_core::optimizer::{self, OptimizerConfig, OptimizerState};
use varqfs_core::seed::{self, domain};

use crate::config::{RunConfig, ARTIFACT_VERSION};
use crate::pipeline::{
    make_backend, parse_subset, prepare, read_samples_csv, write_artifact, write_json_artifact,
    Prepared,
};
use crate::CliError;

pub fn synth(rows: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if rows < 16 {
        return Err(CliError::usage("synthetic generation needs at least 16 rows"));
    }
    let raw = synth::synthetic_raw(rows, seed);
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::File::create(out)?;
    synth::write_german_format(&raw, &mut file)?;
    println!("wrote {rows} synthetic rows to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct SplitManifest<'a> {
    seed: u64,
    attempt: usize,
    ratio: f64,
    train_rows: usize,
    test_rows: usize,
    train_indices: &'a [usize],
    test_indices: &'a [usize],
    report: &'a varqfs_core::data::PearsonReport,
}

/// `ingest` writes the encoded dataset + split manifest; `split`
/// (with_encoded = false) only the manifest.
pub fn ingest(config: &RunConfig, with_encoded: bool) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let out = &config.out_dir;
    if with_encoded {
        write_artifact(&out.join("encoded.csv"), config, |w| prepared.encoded.write_csv(w))?;
    }
    let manifest = SplitManifest {
        seed: prepared.split.seed,
        attempt: prepared.split.attempt,
        ratio: config.split_ratio,
        train_rows: prepared.split.train.n_rows(),
        test_rows: prepared.split.test.n_rows(),
        train_indices: &prepared.split.train_indices,
        test_indices: &prepared.split.test_indices,
        report: &prepared.split.report,
    };
    write_json_artifact(&out.join("split.json"), config, &manifest)?;
    println!(
        "ingested {} rows into {} columns; split {}/{} accepted on attempt {}",
        prepared.encoded.n_rows(),
        prepared.encoded.n_features(),
        prepared.split.train.n_rows(),
        prepared.split.test.n_rows(),
        prepared.split.attempt
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    config_hash: String,
    master_seed: u64,
    artifact_version: u32,
    sweep_index: usize,
    optimizer: OptimizerConfig,
    state: OptimizerState,
}

#[derive(Serialize)]
struct ScoredSubset {
    subset: String,
    frequency: f64,
    train_score: f64,
    test_score: f64,
}

#[derive(Serialize)]
struct ResultSummary {
    sweep_index: usize,
    optimizer_seed: u64,
    n_qubits: usize,
    depth: usize,
    /// Which encoded columns the view selected (bit l = column l).
    view: String,
    backend: &'static str,
    sigma0: f64,
    final_loss: f64,
    iterations: usize,
    accepted: usize,
    final_theta: Vec<f64>,
    best_sampled: Vec<ScoredSubset>,
    cache_misses: u64,
    cache_hits: u64,
}

fn zero_wall(state: &OptimizerState) -> OptimizerState {
    let mut clone = state.clone();
    for row in &mut clone.trace {
        row.wall_ms = 0.0;
    }
    clone
}

/// Top `k` distinct sampled subsets by full-train score.
fn best_sampled(
    samples: &SampleSet,
    objective: &SubsetObjective,
    train: &varqfs_core::data::Dataset,
    test: &varqfs_core::data::Dataset,
    k: usize,
) -> Result<Vec<ScoredSubset>, CliError> {
    let mut scored: Vec<(Bits, f64)> = Vec::with_capacity(samples.distinct());
    for (bits, _) in samples.iter() {
        scored.push((bits, objective.evaluate(bits)?));
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
        .into_iter()
        .map(|(bits, train_score)| {
            Ok(ScoredSubset {
                subset: bits.to_string(),
                frequency: samples.frequency(bits),
                train_score,
                test_score: varqfs_core::objective::test_score(bits, train, test)?,
            })
        })
        .collect()
}

fn run_one_seed(
    config: &RunConfig,
    prepared: &Prepared,
    sweep_index: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let n = prepared.train_view.n_features();
    let circuit = Circuit::real_amplitudes(n, config.depth);
    let backend = make_backend(config, n)?;
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let opt = config.optimizer_config(sweep_index);

    let result = if config.optimizer.snapshot_every == 0 {
        optimizer::run(&opt, &circuit, &objective, backend.as_ref())?
    } else {
        // stepping loop so periodic snapshots can be written
        let est = varqfs_core::estimator::Estimator::new(
            backend.as_ref(),
            opt.loss_mode,
            opt.fidelity_mode,
        );
        let mut state = optimizer::init_state(&opt, &circuit, &objective, backend.as_ref())?;
        while state.iteration < opt.iterations {
            optimizer::qnspsa_step(&mut state, &opt, &est, &circuit, &objective)?;
            if state.iteration % config.optimizer.snapshot_every == 0
                && state.iteration < opt.iterations
            {
                let snapshot = SnapshotFile {
                    config_hash: config.hash(),
                    master_seed: config.master_seed,
                    artifact_version: ARTIFACT_VERSION,
                    sweep_index,
                    optimizer: opt.clone(),
                    state: zero_wall(&state),
                };
                let path = out_dir.join(format!("snapshot_{:06}.json", state.iteration));
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                let mut text = serde_json::to_string_pretty(&snapshot)?;
                text.push('\n');
                std::fs::write(path, text)?;
            }
        }
        optimizer::run_from(state, &opt, &circuit, &objective, backend.as_ref())?
    };

    write_training_artifacts(config, prepared, sweep_index, out_dir, &opt, &result, &objective)
}

#[allow(clippy::too_many_arguments)]
fn write_training_artifacts(
    config: &RunConfig,
    prepared: &Prepared,
    sweep_index: usize,
    out_dir: &Path,
    opt: &OptimizerConfig,
    result: &optimizer::TrainingResult,
    objective: &SubsetObjective,
) -> Result<(), CliError> {
    write_artifact(&out_dir.join("trace.csv"), config, |w| {
        optimizer::write_trace_csv(result.trace(), w)
    })?;
    write_json_artifact(
        &out_dir.join("theta.json"),
        config,
        &serde_json::json!({
            "sweep_index": sweep_index,
            "n_qubits": prepared.train_view.n_features(),
            "depth": config.depth,
            "theta": result.final_theta().as_slice(),
        }),
    )?;
    write_artifact(&out_dir.join("samples.csv"), config, |w| {
        result.analysis_samples.write_csv(w)
    })?;
    let accepted = result.trace().iter().filter(|r| r.accepted).count();
    let summary = ResultSummary {
        sweep_index,
        optimizer_seed: opt.seed,
        n_qubits: prepared.train_view.n_features(),
        depth: config.depth,
        view: prepared.view_bits.to_string(),
        backend: if matches!(config.backend, crate::config::BackendKind::Mps) {
            "mps"
        } else {
            "statevector"
        },
        sigma0: result.state.sigma0,
        final_loss: result.state.current_loss,
        iterations: result.trace().len(),
        accepted,
        final_theta: result.final_theta().as_slice().to_vec(),
        best_sampled: best_sampled(
            &result.analysis_samples,
            objective,
            &prepared.train_view,
            &prepared.test_view,
            config.analysis.top_k,
        )?,
        cache_misses: objective.cache_misses(),
        cache_hits: objective.cache_hits(),
    };
    write_json_artifact(&out_dir.join("result.json"), config, &summary)?;
    write_artifact(&out_dir.join("cache.csv"), config, |w| objective.export_cache(w))?;
    println!(
        "seed {sweep_index}: final loss {:.6}, {accepted}/{} accepted steps -> {}",
        result.state.current_loss,
        result.trace().len(),
        out_dir.display()
    );
    Ok(())
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let sweeps = config.optimizer.seeds.max(1);
    for sweep_index in 0..sweeps {
        let out_dir = config.out_dir.join(format!("seed_{sweep_index}"));
        run_one_seed(config, &prepared, sweep_index, &out_dir)?;
    }
    Ok(())
}

pub fn train_resume(config: &RunConfig, snapshot_path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(snapshot_path)
        .map_err(|e| CliError::Data(format!("cannot read snapshot {snapshot_path:?}: {e}")))?;
    let snapshot: SnapshotFile =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("bad snapshot: {e}")))?;
    if snapshot.config_hash != config.hash() {
        return Err(CliError::usage(format!(
            "snapshot was produced under config {} but the current config hashes to {}",
            snapshot.config_hash,
            config.hash()
        )));
    }
    let prepared = prepare(config)?;
    let n = prepared.train_view.n_features();
    let circuit = Circuit::real_amplitudes(n, config.depth);
    let backend = make_backend(config, n)?;
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let result = optimizer::run_from(
        snapshot.state,
        &snapshot.optimizer,
        &circuit,
        &objective,
        backend.as_ref(),
    )?;
    let out_dir = config.out_dir.join(format!("seed_{}_resumed", snapshot.sweep_index));
    write_training_artifacts(
        config,
        &prepared,
        snapshot.sweep_index,
        &out_dir,
        &snapshot.optimizer,
        &result,
        &objective,
    )
}

#[derive(Serialize)]
struct BaselineScores {
    subset: String,
    subset_size: u32,
    train_score: f64,
    test_score: f64,
    train_ci: analysis::ConfidenceInterval,
    test_ci: analysis::ConfidenceInterval,
}

fn score_subset(
    config: &RunConfig,
    prepared: &Prepared,
    objective: &SubsetObjective,
    subset: Bits,
) -> Result<BaselineScores, CliError> {
    let cis = analysis::bootstrap_ci(
        subset,
        &prepared.train_view,
        &prepared.test_view,
        config.analysis.bootstraps,
        config.analysis.bootstrap_frac,
        config.analysis.confidence,
        config.master_seed,
    )?;
    Ok(BaselineScores {
        subset: subset.to_string(),
        subset_size: subset.count_ones(),
        train_score: objective.evaluate(subset)?,
        test_score: varqfs_core::objective::test_score(
            subset,
            &prepared.train_view,
            &prepared.test_view,
        )?,
        train_ci: cis.train,
        test_ci: cis.test,
    })
}

pub fn baseline_exhaustive(config: &RunConfig) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let n = prepared.train_view.n_features();
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let ranked = baselines::exhaustive(&objective, n, config.analysis.exhaustive_cap)?;
    write_artifact(&config.out_dir.join("exhaustive.csv"), config, |w| ranked.write_csv(w))?;
    let (best, best_score) = ranked.best();
    let scores = score_subset(config, &prepared, &objective, best)?;
    write_json_artifact(&config.out_dir.join("exhaustive.json"), config, &scores)?;
    println!("exhaustive minimum {best_score:.6} at {best} over 2^{n} subsets");
    Ok(())
}

pub fn baseline_rfe(config: &RunConfig, target_k: Option<usize>) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let n = prepared.train_view.n_features();
    let target_k = target_k.unwrap_or(if config.analysis.rfe_target_k == 0 {
        (n / 2).max(1)
    } else {
        config.analysis.rfe_target_k
    });
    let trace = baselines::rfe(&prepared.train_view, target_k)?;
    write_artifact(&config.out_dir.join("rfe_trace.csv"), config, |w| trace.write_csv(w))?;
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let scores = score_subset(config, &prepared, &objective, trace.final_subset)?;
    write_json_artifact(&config.out_dir.join("rfe.json"), config, &scores)?;
    println!(
        "rfe kept {target_k}/{n} features: train {:.6}, test {:.6}",
        scores.train_score, scores.test_score
    );
    Ok(())
}

#[derive(Serialize)]
struct RfecvSummary {
    scoring: String,
    folds: usize,
    chosen_size: usize,
    scores: BaselineScores,
    /// Overlap of the recomputed top-20 ranking with the bundled
    /// 20-feature reference list (full view only).
    reference_top20_overlap: Option<u32>,
}

pub fn baseline_rfecv(
    config: &RunConfig,
    scoring: &str,
    folds: Option<usize>,
) -> Result<(), CliError> {
    let scoring_kind = match scoring {
        "log" | "log_loss" => Scoring::LogLoss,
        "acc" | "accuracy" => Scoring::Accuracy,
        other => return Err(CliError::usage(format!("unknown scoring {other:?}"))),
    };
    let prepared = prepare(config)?;
    let folds = folds.unwrap_or(config.analysis.rfecv_folds);
    let report = baselines::rfecv(&prepared.train_view, scoring_kind, folds)?;
    write_artifact(&config.out_dir.join("rfecv_sizes.csv"), config, |w| {
        writeln!(w, "size,mean_validation_score")?;
        for (size, score) in &report.size_scores {
            writeln!(w, "{size},{score}")?;
        }
        Ok(())
    })?;
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let scores = score_subset(config, &prepared, &objective, report.subset)?;

    let reference_top20_overlap = if prepared.train_view.n_features()
        == prepared.encoded.n_features()
    {
        let top20 = baselines::rfe_top_k(&prepared.split.train, 20)?;
        let reference = prepared.split.train.subset_for_names(
            &varqfs_core::data::REDUCED_20_REFERENCE.to_vec(),
        )?;
        let overlap = (top20.index() & reference.index()).count_ones();
        println!("recomputed top-20 ranking overlaps the bundled reference on {overlap}/20");
        Some(overlap)
    } else {
        None
    };
    let summary = RfecvSummary {
        scoring: scoring.to_string(),
        folds,
        chosen_size: report.chosen_size,
        scores,
        reference_top20_overlap,
    };
    write_json_artifact(&config.out_dir.join("rfecv.json"), config, &summary)?;
    println!(
        "rfecv ({scoring}) chose {} features: train {:.6}, test {:.6}",
        summary.chosen_size, summary.scores.train_score, summary.scores.test_score
    );
    Ok(())
}

pub fn analyze_cdf(config: &RunConfig, result_dir: &Path) -> Result<(), CliError> {
    let samples_path = result_dir.join("samples.csv");
    if !samples_path.exists() {
        return Err(CliError::Data(format!(
            "no samples.csv under {result_dir:?}; run `train` first"
        )));
    }
    let samples = read_samples_csv(&samples_path)?;
    let prepared = prepare(config)?;
    if samples.n_qubits() != prepared.train_view.n_features() {
        return Err(CliError::Data(format!(
            "samples have {} qubits but the view has {} features",
            samples.n_qubits(),
            prepared.train_view.n_features()
        )));
    }
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let train_curve = analysis::cdf(&samples, &objective)?;
    write_artifact(&config.out_dir.join("cdf_train.csv"), config, |w| train_curve.write_csv(w))?;

    // test-score CDF over the same sampled subsets
    let test_scores = TestScoreObjective {
        train: prepared.train_view.clone(),
        test: prepared.test_view.clone(),
    };
    let test_curve = analysis::cdf(&samples, &test_scores)?;
    write_artifact(&config.out_dir.join("cdf_test.csv"), config, |w| test_curve.write_csv(w))?;
    println!(
        "cdf over {} distinct subsets written to {}",
        samples.distinct(),
        config.out_dir.display()
    );
    Ok(())
}

/// Adapter: scores subsets on the held-out data so the CDF machinery can
/// weight them by sampling frequency.
struct TestScoreObjective {
    train: varqfs_core::data::Dataset,
    test: varqfs_core::data::Dataset,
}

impl BlackBoxObjective for TestScoreObjective {
    fn dimension(&self) -> usize {
        self.train.n_features()
    }

    fn bounds(&self) -> (f64, f64) {
        (0.0, 2.0 * std::f64::consts::LN_2)
    }

    fn evaluate(&self, bits: Bits) -> Result<f64, varqfs_core::objective::ObjectiveError> {
        varqfs_core::objective::test_score(bits, &self.train, &self.test)
    }
}

pub fn analyze_ci(
    config: &RunConfig,
    subset: Option<&str>,
    result_dir: Option<&Path>,
) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let n = prepared.train_view.n_features();
    let subset = match (subset, result_dir) {
        (Some(s), _) => parse_subset(s, n)?,
        (None, Some(dir)) => {
            let samples = read_samples_csv(&dir.join("samples.csv"))?;
            let objective = SubsetObjective::new(prepared.train_view.clone());
            best_sampled(&samples, &objective, &prepared.train_view, &prepared.test_view, 1)?
                .first()
                .map(|s| parse_subset(&s.subset, n))
                .transpose()?
                .ok_or_else(|| CliError::Data("result has no samples".into()))?
        }
        (None, None) => {
            return Err(CliError::usage("analyze ci needs --subset or --result-dir"))
        }
    };
    let cis = analysis::bootstrap_ci(
        subset,
        &prepared.train_view,
        &prepared.test_view,
        config.analysis.bootstraps,
        config.analysis.bootstrap_frac,
        config.analysis.confidence,
        config.master_seed,
    )?;
    write_artifact(&config.out_dir.join("ci.csv"), config, |w| {
        writeln!(w, "subset,split,lo,hi")?;
        writeln!(w, "{subset},train,{},{}", cis.train.lo, cis.train.hi)?;
        writeln!(w, "{subset},test,{},{}", cis.test.lo, cis.test.hi)?;
        Ok(())
    })?;
    println!(
        "ci for {subset}: train [{:.4}, {:.4}], test [{:.4}, {:.4}]",
        cis.train.lo, cis.train.hi, cis.test.lo, cis.test.hi
    );
    Ok(())
}

pub fn analyze_compare(
    config: &RunConfig,
    result_dir: &Path,
    subset: Option<&str>,
    baseline_json: Option<&Path>,
) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let n = prepared.train_view.n_features();
    let classical = match (subset, baseline_json) {
        (Some(s), _) => parse_subset(s, n)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read {path:?}: {e}")))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let s = value
                .get("subset")
                .and_then(|v| v.as_str())
                .ok_or_else(|| CliError::Data(format!("{path:?} has no \"subset\" field")))?;
            parse_subset(s, n)?
        }
        (None, None) => {
            return Err(CliError::usage("analyze compare needs --subset or --baseline-json"))
        }
    };
    let samples = read_samples_csv(&result_dir.join("samples.csv"))?;
    let objective = SubsetObjective::new(prepared.train_view.clone());
    let comparison = analysis::top_k_average_compare(
        &samples,
        &objective,
        classical,
        &prepared.train_view,
        &prepared.test_view,
        config.analysis.top_k,
        config.analysis.paired_trials,
        config.analysis.paired_frac,
        seed::derive_seed(config.master_seed, &[domain::PAIRED]),
    )?;
    write_artifact(&config.out_dir.join("compare.csv"), config, |w| {
        writeln!(w, "subset,train_win_fraction,test_win_fraction,trials")?;
        for (bits, wins) in &comparison.per_subset {
            writeln!(w, "{bits},{},{},{}", wins.train, wins.test, wins.trials)?;
        }
        writeln!(
            w,
            "averaged_over_{},{},{},{}",
            comparison.used_subsets,
            comparison.averaged.train,
            comparison.averaged.test,
            comparison.averaged.trials
        )?;
        Ok(())
    })?;
    println!(
        "win fractions vs {classical}: train {:.1}%, test {:.1}% (averaged over {} subsets)",
        100.0 * comparison.averaged.train,
        100.0 * comparison.averaged.test,
        comparison.used_subsets
    );
    Ok(())
}

pub fn analyze_qubofit(config: &RunConfig, n_override: Option<usize>) -> Result<(), CliError> {
    let prepared = prepare(config)?;
    let view_n = prepared.train_view.n_features();
    let n = n_override.unwrap_or(config.analysis.qubo_n);
    if n > view_n {
        return Err(CliError::usage(format!(
            "qubofit over {n} variables exceeds the {view_n}-feature view"
        )));
    }
    if n > config.analysis.exhaustive_cap {
        return Err(CliError::usage(format!(
            "qubofit over {n} variables exceeds the cap of {}",
            config.analysis.exhaustive_cap
        )));
    }
    let sub = prepared.train_view.first_k(n)?;
    let objective = SubsetObjective::new(sub);
    let model = analysis::qubo_fit(&objective, n, config.analysis.exhaustive_cap)?;
    write_json_artifact(&config.out_dir.join("qubofit.json"), config, &model)?;

    // plot-ready table: exhaustive scores sorted ascending vs fitted scores
    let ranked = baselines::exhaustive(&objective, n, config.analysis.exhaustive_cap)?;
    write_artifact(&config.out_dir.join("qubofit_scores.csv"), config, |w| {
        writeln!(w, "rank,bitstring,score,fitted_score")?;
        for (rank, (bits, score)) in ranked.entries.iter().enumerate() {
            let fitted = analysis::qubo_eval(&model, *bits).expect("model dimension matches");
            writeln!(w, "{rank},{bits},{score},{fitted}")?;
        }
        Ok(())
    })?;
    println!("qubofit over {n} variables: mse {:.3e}", model.mse);
    Ok(())
}
