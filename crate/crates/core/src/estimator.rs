//! Shot-based estimation of losses and state fidelities.
//!
//! The statistical bridge between the simulators and the optimizer: losses
//! are frequency-weighted means over sampled bitstrings (each distinct
//! bitstring is scored once and memoized by the objective), fidelities are
//! all-zeros frequencies of compute-uncompute circuits. Exact modes bypass
//! shot noise for oracles and small-n tests.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::backend::{Backend, BackendError};
use crate::bits::{Bits, SampleSet};
use crate::circuit::{Circuit, CircuitError, ParamVector};
use crate::objective::{BlackBoxObjective, ObjectiveError};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("hoeffding_epsilon domain violation: {0}")]
    Domain(String),
}

/// How losses are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum EvalMode {
    /// Empirical mean over `shots` samples.
    Sampled { shots: u64 },
    /// Σ_j p_j·f(x_j) over the full basis (dense-simulable n only).
    Exact,
}

/// How fidelities |⟨ψ(θ₁)|ψ(θ₂)⟩|² are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum FidelityMode {
    /// All-zeros frequency of the uncompute circuit over `shots` samples.
    Sampled { shots: u64 },
    /// Backend-exact overlap.
    Exact,
}

/// An empirical loss value together with the samples that produced it.
#[derive(Debug, Clone)]
pub struct LossEstimate {
    pub value: f64,
    pub shots: u64,
    /// Sample set behind the estimate; `None` in exact mode.
    pub samples: Option<SampleSet>,
}

/// Bundles a backend with the evaluation modes so callers don't thread
/// shots/modes through every call.
pub struct Estimator<'a> {
    backend: &'a dyn Backend,
    pub loss_mode: EvalMode,
    pub fidelity_mode: FidelityMode,
}

impl<'a> Estimator<'a> {
    pub fn new(backend: &'a dyn Backend, loss_mode: EvalMode, fidelity_mode: FidelityMode) -> Self {
        Self { backend, loss_mode, fidelity_mode }
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend
    }

    pub fn loss(
        &self,
        circuit: &Circuit,
        theta: &ParamVector,
        objective: &dyn BlackBoxObjective,
        rng: &mut ChaCha8Rng,
    ) -> Result<LossEstimate, EstimatorError> {
        match self.loss_mode {
            EvalMode::Sampled { shots } => {
                estimate_loss(self.backend, circuit, theta, objective, shots, rng)
            }
            EvalMode::Exact => {
                let value = exact_loss(self.backend, circuit, theta, objective)?;
                Ok(LossEstimate { value, shots: 0, samples: None })
            }
        }
    }

    pub fn fidelity(
        &self,
        circuit: &Circuit,
        theta1: &ParamVector,
        theta2: &ParamVector,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, EstimatorError> {
        estimate_fidelity(self.backend, circuit, theta1, theta2, self.fidelity_mode, rng)
    }
}

/// Samples the bound circuit and returns the frequency-weighted mean score.
/// Each distinct bitstring is pushed through the objective exactly once.
pub fn estimate_loss(
    backend: &dyn Backend,
    circuit: &Circuit,
    theta: &ParamVector,
    objective: &dyn BlackBoxObjective,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<LossEstimate, EstimatorError> {
    assert!(shots >= 1, "need at least one shot");
    let bound = circuit.bind(theta)?;
    let samples = backend.sample(&bound, shots, rng)?;
    let mut mean = 0.0;
    let mut weight = 0.0;
    for (bits, count) in samples.iter() {
        // incremental weighted mean: exact for constant scores and stable
        // in general
        weight += count as f64;
        mean += (objective.evaluate(bits)? - mean) * (count as f64 / weight);
    }
    Ok(LossEstimate { value: mean, shots, samples: Some(samples) })
}

/// Exact loss Σ_j p_j(θ)·f(x_j) through the backend's probability table.
pub fn exact_loss(
    backend: &dyn Backend,
    circuit: &Circuit,
    theta: &ParamVector,
    objective: &dyn BlackBoxObjective,
) -> Result<f64, EstimatorError> {
    let bound = circuit.bind(theta)?;
    let probs = backend.probabilities(&bound)?;
    let n = circuit.n_qubits();
    // incremental weighted mean: normalizes out simulator rounding, so a
    // constant objective yields its constant exactly
    let mut mean = 0.0;
    let mut weight = 0.0;
    for (j, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            weight += p;
            mean += (objective.evaluate(Bits::new(n, j as u64).expect("n <= 64"))? - mean)
                * (p / weight);
        }
    }
    Ok(mean)
}

/// |⟨ψ(θ₁)|ψ(θ₂)⟩|², either sampled through the compute-uncompute circuit
/// or exactly through the backend overlap.
pub fn estimate_fidelity(
    backend: &dyn Backend,
    circuit: &Circuit,
    theta1: &ParamVector,
    theta2: &ParamVector,
    mode: FidelityMode,
    rng: &mut ChaCha8Rng,
) -> Result<f64, EstimatorError> {
    let b1 = circuit.bind(theta1)?;
    let b2 = circuit.bind(theta2)?;
    match mode {
        FidelityMode::Sampled { shots } => {
            assert!(shots >= 1, "need at least one shot");
            let uncompute = b1.compose_uncompute(&b2)?;
            let samples = backend.sample(&uncompute, shots, rng)?;
            Ok(samples.frequency(Bits::zeros(circuit.n_qubits())))
        }
        FidelityMode::Exact => Ok(backend.overlap(&b1, &b2)?),
    }
}

/// Inverts the Hoeffding tail bound: with `shots` samples of a quantity in
/// [f_min, f_max], the empirical mean deviates from the true mean by at
/// least the returned ε with probability at most `gamma`.
///
/// ε = (f_max − f_min)·sqrt(ln(2/γ) / (2·shots))
pub fn hoeffding_epsilon(
    f_min: f64,
    f_max: f64,
    shots: u64,
    gamma: f64,
) -> Result<f64, EstimatorError> {
    if !f_min.is_finite() || !f_max.is_finite() || f_max <= f_min {
        return Err(EstimatorError::Domain(format!(
            "f_max ({f_max}) must exceed f_min ({f_min})"
        )));
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(EstimatorError::Domain(format!("gamma ({gamma}) must lie in (0, 1)")));
    }
    if shots == 0 {
        return Err(EstimatorError::Domain("shots must be >= 1".into()));
    }
    Ok((f_max - f_min) * ((2.0 / gamma).ln() / (2.0 * shots as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::SvBackend;
    use crate::objective::FnObjective;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn table_objective() -> FnObjective {
        // f = {00:0, 01:1, 10:2, 11:3} keyed by basis index
        FnObjective::new(2, (0.0, 3.0), |b| b.index() as f64)
    }

    #[test]
    fn deterministic_state_loss_is_exact() {
        let backend = SvBackend::new();
        let c = Circuit::real_amplitudes(1, 0);
        let theta = ParamVector::new(vec![PI]).unwrap();
        let obj = FnObjective::new(1, (0.0, 1.0), |b| if b.get(0) { 0.25 } else { 0.9 });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = estimate_loss(&backend, &c, &theta, &obj, 500, &mut rng).unwrap();
        assert_abs_diff_eq!(est.value, 0.25, epsilon = 1e-15);
        assert_eq!(est.shots, 500);
    }

    #[test]
    fn uniform_state_loss_converges_to_mean() {
        let backend = SvBackend::new();
        let c = Circuit::real_amplitudes(2, 1);
        let theta = c.uniform_init_params();
        let obj = table_objective();
        assert_abs_diff_eq!(
            exact_loss(&backend, &c, &theta, &obj).unwrap(),
            1.5,
            epsilon = 1e-12
        );

        let shots = 100_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = estimate_loss(&backend, &c, &theta, &obj, shots, &mut rng).unwrap();
        // single-shot variance: E[f²]−E[f]² = 3.5−2.25 = 1.25
        let sigma = (1.25 / shots as f64).sqrt();
        assert!(
            (est.value - 1.5).abs() < 3.0 * sigma,
            "estimate {} deviates from 1.5 by more than 3σ",
            est.value
        );
    }

    #[test]
    fn same_seed_gives_identical_estimate() {
        let backend = SvBackend::new();
        let c = Circuit::real_amplitudes(3, 1);
        let theta = ParamVector::new(vec![0.5, -0.2, 1.0, 0.1, 0.7, -0.9]).unwrap();
        let obj = FnObjective::new(3, (0.0, 7.0), |b| b.index() as f64);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            estimate_loss(&backend, &c, &theta, &obj, 2048, &mut rng).unwrap().value
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn fidelity_of_identical_params_is_one_at_any_shots() {
        let backend = SvBackend::new();
        let c = Circuit::real_amplitudes(4, 1);
        let theta = ParamVector::new((0..8).map(|i| 0.2 * i as f64).collect()).unwrap();
        for shots in [1u64, 16, 400] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let f = estimate_fidelity(
                &backend,
                &c,
                &theta,
                &theta,
                FidelityMode::Sampled { shots },
                &mut rng,
            )
            .unwrap();
            assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_fidelity_tracks_exact_within_binomial_ci() {
        let backend = SvBackend::new();
        let c = Circuit::real_amplitudes(6, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let shots = 4096u64;
        let mut failures = 0;
        let trials = 40;
        for _ in 0..trials {
            let t1 = ParamVector::new(
                (0..12).map(|_| rng.random_range(-PI..PI)).collect(),
            )
            .unwrap();
            let t2 = ParamVector::new(
                (0..12).map(|_| rng.random_range(-PI..PI)).collect(),
            )
            .unwrap();
            let exact =
                estimate_fidelity(&backend, &c, &t1, &t2, FidelityMode::Exact, &mut rng).unwrap();
            let sampled = estimate_fidelity(
                &backend,
                &c,
                &t1,
                &t2,
                FidelityMode::Sampled { shots },
                &mut rng,
            )
            .unwrap();
            let band = 4.0 * (exact * (1.0 - exact) / shots as f64).sqrt();
            if (sampled - exact).abs() > band.max(1e-9) {
                failures += 1;
            }
        }
        // 4σ band: expect ≥95% inside with margin
        assert!(failures <= 2, "{failures}/{trials} fidelity estimates outside 4σ");
    }

    #[test]
    fn hoeffding_worked_example() {
        let eps = hoeffding_epsilon(0.0, 1.0, 10_000, 0.05).unwrap();
        assert_abs_diff_eq!(eps, 0.013581, epsilon = 1e-6);
    }

    #[test]
    fn hoeffding_quadrupling_shots_halves_epsilon() {
        let e1 = hoeffding_epsilon(-1.0, 2.0, 500, 0.1).unwrap();
        let e2 = hoeffding_epsilon(-1.0, 2.0, 2000, 0.1).unwrap();
        assert_abs_diff_eq!(e1 / e2, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn hoeffding_rejects_bad_domains() {
        assert!(hoeffding_epsilon(1.0, 1.0, 10, 0.05).is_err());
        assert!(hoeffding_epsilon(0.0, 1.0, 10, 0.0).is_err());
        assert!(hoeffding_epsilon(0.0, 1.0, 10, 1.0).is_err());
        assert!(hoeffding_epsilon(0.0, 1.0, 0, 0.05).is_err());
    }

    #[test]
    fn unbiasedness_across_seeds() {
        let backend = SvBackend::new();
        let c = Circuit::real_amplitudes(3, 1);
        let theta = ParamVector::new(vec![0.9, 0.4, -0.6, 0.3, -1.2, 0.8]).unwrap();
        let obj = FnObjective::new(3, (0.0, 7.0), |b| (b.index() as f64).sqrt());
        let exact = exact_loss(&backend, &c, &theta, &obj).unwrap();
        let shots = 2000u64;
        let reps = 200;
        let mut mean = 0.0;
        for seed in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            mean +=
                estimate_loss(&backend, &c, &theta, &obj, shots, &mut rng).unwrap().value;
        }
        mean /= reps as f64;
        // SE of the grand mean ≈ σ_shot/√(shots·reps) ≲ 0.002 here
        assert!(
            (mean - exact).abs() < 0.01,
            "grand mean {mean} vs exact {exact}"
        );
    }
}
