//! End-to-end pipeline checks on a bundled dataset: ingestion → encoding →
//! split → reduced views → baselines → optimizer, wired the way the CLI
//! wires them. Runs on the real credit file when present (env
//! `VARQFS_GERMAN_DATA` or `data/german.data`), otherwise on the synthetic
//! fixture.

use std::path::PathBuf;

use varqfs_core::backend::SvBackend;
use varqfs_core::baselines::{self, Scoring};
use varqfs_core::bits::Bits;
use varqfs_core::data::{self, one_hot_encode, synth, Dataset, RawDataset};
use varqfs_core::estimator::{EvalMode, FidelityMode};
use varqfs_core::objective::{BlackBoxObjective, SubsetObjective};
use varqfs_core::optimizer::{self, OptimizerConfig};

fn real_data_path() -> Option<PathBuf> {
    if let Ok(path) = std::env::var("VARQFS_GERMAN_DATA") {
        let path = PathBuf::from(path);
        if path.exists() {
            return Some(path);
        }
    }
    let conventional = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/german.data");
    conventional.exists().then_some(conventional)
}

fn load_raw() -> (RawDataset, &'static str) {
    match real_data_path() {
        Some(path) => (data::load_german(path).expect("real file parses"), "credit file"),
        None => (synth::synthetic_raw(1000, 424242), "synthetic fixture"),
    }
}

#[test]
fn full_pipeline_reaches_a_reduced_view() {
    let (raw, source) = load_raw();
    assert_eq!(raw.n_rows(), 1000);
    let encoded = one_hot_encode(&raw).expect("59-column encoding");
    let split = data::split(&encoded, 0.5, 7, 200).expect("acceptable split");
    assert_eq!(split.train.n_rows(), 500);
    assert_eq!(split.test.n_rows(), 500);

    // reduced view derived end-to-end from the elimination ranking
    let top20 = baselines::rfe_top_k(&split.train, 20).expect("rfe path");
    let reduced = split.train.select_columns(top20).expect("20 columns");
    assert_eq!(reduced.n_features(), 20);

    // the recomputed ranking is compared against the bundled reference
    // list; mismatches are reported, not hidden
    let reference = split
        .train
        .subset_for_names(&data::REDUCED_20_REFERENCE.to_vec())
        .expect("reference names exist");
    let overlap = (top20.index() & reference.index()).count_ones();
    println!(
        "[pipeline] source = {source}; recomputed top-20 overlaps the bundled reference on \
         {overlap}/20 features"
    );
}

#[test]
fn exhaustive_bounds_classical_methods_on_a_subproblem() {
    let (raw, _) = load_raw();
    let encoded = one_hot_encode(&raw).unwrap();
    let split = data::split(&encoded, 0.5, 3, 200).unwrap();
    let sub = split.train.first_k(6).unwrap();

    let objective = SubsetObjective::new(sub.clone());
    let ranked = baselines::exhaustive(&objective, 6, 22).unwrap();
    let (best_bits, best_score) = ranked.best();
    assert_eq!(ranked.entries.len(), 64);

    let rfe_subset = baselines::rfe(&sub, 3).unwrap().final_subset;
    assert!(objective.evaluate(rfe_subset).unwrap() >= best_score - 1e-12);
    let cv = baselines::rfecv(&sub, Scoring::LogLoss, 5).unwrap();
    assert!(objective.evaluate(cv.subset).unwrap() >= best_score - 1e-12);
    println!(
        "[pipeline] 6-feature exhaustive optimum {best_score:.4} at {best_bits}; \
         cache ended with {} entries",
        objective.cache_len()
    );
}

#[test]
fn short_training_run_improves_on_the_uniform_start() {
    let (raw, _) = load_raw();
    let encoded = one_hot_encode(&raw).unwrap();
    let split = data::split(&encoded, 0.5, 5, 200).unwrap();
    let sub = split.train.first_k(6).unwrap();
    let objective = SubsetObjective::new(sub);
    let circuit = varqfs_core::circuit::Circuit::real_amplitudes(6, 1);
    let backend = SvBackend::new();
    let config = OptimizerConfig {
        iterations: 60,
        loss_mode: EvalMode::Sampled { shots: 512 },
        fidelity_mode: FidelityMode::Sampled { shots: 512 },
        resamples: OptimizerConfig::default_resamples(1),
        analysis_shots: 2000,
        seed: 11,
        ..OptimizerConfig::default()
    };
    let result = optimizer::run(&config, &circuit, &objective, &backend).unwrap();

    let initial = result.state.trace.first().expect("nonempty trace");
    let final_loss = result.state.current_loss;
    assert!(
        final_loss < result.state.sigma0.mul_add(2.0, initial.current_loss),
        "training went backwards: {final_loss} vs initial {}",
        initial.current_loss
    );
    assert_eq!(result.analysis_samples.shots(), 2000);
    // objective cache never re-trains a subset
    assert_eq!(objective.cache_misses() as usize, objective.cache_len());
}
