//! Common simulation interface over the statevector and MPS backends.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::{Bits, SampleSet};
use crate::circuit::BoundCircuit;
use crate::mps::{self, MpsError, MpsOptions};
use crate::sv::{self, SvError};

#[derive(Debug, Error, PartialEq)]
pub enum BackendError {
    #[error(transparent)]
    Sv(#[from] SvError),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

/// What the estimator needs from a simulator: shot sampling plus exact
/// quantities for the exact-probability and exact-fidelity modes.
pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Runs `bound` and draws `shots` i.i.d. basis-state samples.
    fn sample(
        &self,
        bound: &BoundCircuit,
        shots: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampleSet, BackendError>;

    /// Exact probability table over all 2^n basis states (capped: dense).
    fn probabilities(&self, bound: &BoundCircuit) -> Result<Vec<f64>, BackendError>;

    /// Exact probability of the all-zeros outcome.
    fn zero_probability(&self, bound: &BoundCircuit) -> Result<f64, BackendError>;

    /// Exact |⟨ψ_a|ψ_b⟩|².
    fn overlap(&self, a: &BoundCircuit, b: &BoundCircuit) -> Result<f64, BackendError>;
}

/// Dense statevector backend; ground truth for n up to the cap.
#[derive(Debug, Clone)]
pub struct SvBackend {
    cap: usize,
}

impl SvBackend {
    pub fn new() -> Self {
        Self { cap: sv::DEFAULT_QUBIT_CAP }
    }

    pub fn with_cap(cap: usize) -> Self {
        Self { cap }
    }
}

impl Default for SvBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl Backend for SvBackend {
    fn name(&self) -> &'static str {
        "statevector"
    }

    fn sample(
        &self,
        bound: &BoundCircuit,
        shots: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampleSet, BackendError> {
        Ok(sv::run_sv_with_cap(bound, self.cap)?.sample(shots, rng))
    }

    fn probabilities(&self, bound: &BoundCircuit) -> Result<Vec<f64>, BackendError> {
        Ok(sv::run_sv_with_cap(bound, self.cap)?.probabilities())
    }

    fn zero_probability(&self, bound: &BoundCircuit) -> Result<f64, BackendError> {
        Ok(sv::run_sv_with_cap(bound, self.cap)?.probabilities()[0])
    }

    fn overlap(&self, a: &BoundCircuit, b: &BoundCircuit) -> Result<f64, BackendError> {
        let sa = sv::run_sv_with_cap(a, self.cap)?;
        let sb = sv::run_sv_with_cap(b, self.cap)?;
        Ok(sa.overlap(&sb)?)
    }
}

/// Exact MPS backend; scales past the dense cap for shallow linear
/// circuits. `probabilities` still contracts densely and is capped.
#[derive(Debug, Clone)]
pub struct MpsBackend {
    options: MpsOptions,
    dense_cap: usize,
}

impl MpsBackend {
    pub fn new() -> Self {
        Self { options: MpsOptions::default(), dense_cap: sv::DEFAULT_QUBIT_CAP }
    }

    pub fn with_options(options: MpsOptions) -> Self {
        Self { options, dense_cap: sv::DEFAULT_QUBIT_CAP }
    }
}

impl Default for MpsBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl Backend for MpsBackend {
    fn name(&self) -> &'static str {
        "mps"
    }

    fn sample(
        &self,
        bound: &BoundCircuit,
        shots: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampleSet, BackendError> {
        Ok(mps::run_mps_with(bound, &self.options)?.sample(shots, rng))
    }

    fn probabilities(&self, bound: &BoundCircuit) -> Result<Vec<f64>, BackendError> {
        let state = mps::run_mps_with(bound, &self.options)?;
        Ok(state.to_statevector(self.dense_cap)?.probabilities())
    }

    fn zero_probability(&self, bound: &BoundCircuit) -> Result<f64, BackendError> {
        let state = mps::run_mps_with(bound, &self.options)?;
        let amp = state.amplitude(Bits::zeros(bound.n_qubits()))?;
        Ok(amp.norm_sqr().clamp(0.0, 1.0))
    }

    fn overlap(&self, a: &BoundCircuit, b: &BoundCircuit) -> Result<f64, BackendError> {
        let ma = mps::run_mps_with(a, &self.options)?;
        let mb = mps::run_mps_with(b, &self.options)?;
        Ok(ma.overlap(&mb)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, ParamVector};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn backends_agree_on_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sv = SvBackend::new();
        let mps = MpsBackend::new();
        for depth in 0..=2 {
            let c = Circuit::real_amplitudes(6, depth);
            let theta = ParamVector::new(
                (0..c.param_count()).map(|_| rng.random_range(-1.5..1.5)).collect(),
            )
            .unwrap();
            let bound = c.bind(&theta).unwrap();
            let ps = sv.probabilities(&bound).unwrap();
            let pm = mps.probabilities(&bound).unwrap();
            for (a, b) in ps.iter().zip(&pm) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(
                sv.zero_probability(&bound).unwrap(),
                mps.zero_probability(&bound).unwrap(),
                epsilon = 1e-12
            );
        }
    }
}
