//! Dense statevector simulation.
//!
//! Exact up to 2^n amplitudes; this backend is the ground truth the MPS
//! backend, the SPSA estimators and the optimizer are all validated against.
//! Basis ordering: bit `l` of amplitude index `j` is qubit `l` (the [`Bits`]
//! convention) — subset decoding everywhere depends on this.

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::bits::{Bits, SampleSet};
use crate::circuit::{BoundCircuit, BoundGate, Circuit, ParamVector};
use crate::objective::BlackBoxObjective;

/// Default qubit cap: 2^24 amplitudes ≈ 256 MiB.
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Finite-difference step for the gradient and QFI reference routes.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum SvError {
    #[error("{n} qubits exceed the dense-simulation cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("state dimensions differ: {n1} vs {n2} qubits")]
    DimensionMismatch { n1: usize, n2: usize },
}

/// A normalized n-qubit state as 2^n complex amplitudes.
#[derive(Debug, Clone)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[0] = Complex64::ONE;
        Self { n_qubits: n, amps }
    }

    /// Wraps a raw amplitude table; `amps.len()` must be 2^n.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), 1usize << n);
        Self { n_qubits: n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, bits: Bits) -> Complex64 {
        self.amps[bits.index() as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |a_j|² for every basis index j.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: BoundGate) {
        match gate {
            BoundGate::Ry { qubit, angle } => self.apply_ry(qubit, angle),
            BoundGate::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    fn apply_ry(&mut self, qubit: usize, angle: f64) {
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let bit = 1usize << qubit;
        for base in 0..self.amps.len() {
            if base & bit == 0 {
                let a0 = self.amps[base];
                let a1 = self.amps[base | bit];
                self.amps[base] = c * a0 - s * a1;
                self.amps[base | bit] = s * a0 + c * a1;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for base in 0..self.amps.len() {
            if base & cbit != 0 && base & tbit == 0 {
                self.amps.swap(base, base | tbit);
            }
        }
    }

    /// Draws `shots` i.i.d. basis states from |a_j|².
    pub fn sample(&self, shots: u64, rng: &mut impl Rng) -> SampleSet {
        let probs = self.probabilities();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let mut set = SampleSet::new(self.n_qubits);
        for _ in 0..shots {
            let u: f64 = rng.random();
            let j = cumulative.partition_point(|&c| c <= u);
            set.record(j as u64);
        }
        set
    }

    /// Debug dump: `index,bitstring,re,im` rows.
    pub fn write_amplitudes_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "index,bitstring,re,im")?;
        for (j, a) in self.amps.iter().enumerate() {
            let bits = Bits::new(self.n_qubits, j as u64).expect("n <= 64");
            writeln!(w, "{j},{bits},{},{}", a.re, a.im)?;
        }
        Ok(())
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &StateVector) -> Result<f64, SvError> {
        if self.n_qubits != other.n_qubits {
            return Err(SvError::DimensionMismatch { n1: self.n_qubits, n2: other.n_qubits });
        }
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm_sqr().clamp(0.0, 1.0))
    }
}

/// Runs `bound` on |0…0⟩ with the default qubit cap.
pub fn run_sv(bound: &BoundCircuit) -> Result<StateVector, SvError> {
    run_sv_with_cap(bound, DEFAULT_QUBIT_CAP)
}

pub fn run_sv_with_cap(bound: &BoundCircuit, cap: usize) -> Result<StateVector, SvError> {
    let n = bound.n_qubits();
    if n > cap {
        return Err(SvError::CapExceeded { n, cap });
    }
    let mut state = StateVector::zero_state(n);
    for &gate in bound.ops() {
        state.apply(gate);
    }
    Ok(state)
}

/// Exact loss Σ_j p_j(θ)·f(x_j) over the full basis.
pub fn exact_loss(
    circuit: &Circuit,
    theta: &ParamVector,
    objective: &dyn BlackBoxObjective,
) -> Result<f64, crate::objective::ObjectiveError> {
    let state = run_sv(&circuit.bind(theta).expect("theta sized by caller"))
        .expect("exact_loss needs dense-simulable n");
    let n = circuit.n_qubits();
    let mut mean = 0.0;
    let mut weight = 0.0;
    for (j, p) in state.probabilities().into_iter().enumerate() {
        if p > 0.0 {
            weight += p;
            mean += (objective.evaluate(Bits::new(n, j as u64).expect("n <= 64"))? - mean)
                * (p / weight);
        }
    }
    Ok(mean)
}

/// Central finite differences of the exact loss, step [`FD_STEP`], per
/// coordinate. Reference route for validating SPSA gradients.
pub fn exact_gradient(
    circuit: &Circuit,
    theta: &ParamVector,
    objective: &dyn BlackBoxObjective,
) -> Result<Vec<f64>, crate::objective::ObjectiveError> {
    let mut grad = Vec::with_capacity(theta.len());
    let mut unit = vec![0.0; theta.len()];
    for p in 0..theta.len() {
        unit[p] = 1.0;
        let plus = exact_loss(circuit, &theta.perturbed(&unit, FD_STEP), objective)?;
        let minus = exact_loss(circuit, &theta.perturbed(&unit, -FD_STEP), objective)?;
        unit[p] = 0.0;
        grad.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(grad)
}

/// Quantum Fisher information via finite-difference state derivatives:
/// F_pq = 4·Re(⟨∂_p ψ|∂_q ψ⟩ − ⟨∂_p ψ|ψ⟩⟨ψ|∂_q ψ⟩), symmetrized.
pub fn exact_qfi(circuit: &Circuit, theta: &ParamVector) -> nalgebra::DMatrix<f64> {
    let k = theta.len();
    let state = run_sv(&circuit.bind(theta).expect("theta sized by caller"))
        .expect("exact_qfi needs dense-simulable n");
    let dim = state.amplitudes().len();

    let mut unit = vec![0.0; k];
    let mut derivs: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for p in 0..k {
        unit[p] = 1.0;
        let plus = run_sv(&circuit.bind(&theta.perturbed(&unit, FD_STEP)).unwrap()).unwrap();
        let minus = run_sv(&circuit.bind(&theta.perturbed(&unit, -FD_STEP)).unwrap()).unwrap();
        unit[p] = 0.0;
        derivs.push(
            (0..dim)
                .map(|j| (plus.amplitudes()[j] - minus.amplitudes()[j]) / (2.0 * FD_STEP))
                .collect(),
        );
    }

    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };

    let mut qfi = nalgebra::DMatrix::<f64>::zeros(k, k);
    for p in 0..k {
        for q in p..k {
            let dd = inner(&derivs[p], &derivs[q]);
            let dp_psi = inner(&derivs[p], state.amplitudes());
            let psi_dq = inner(state.amplitudes(), &derivs[q]);
            let value = 4.0 * (dd - dp_psi * psi_dq).re;
            qfi[(p, q)] = value;
            qfi[(q, p)] = value;
        }
    }
    qfi
}

/// Hessian of the fidelity F(θ') = |⟨ψ(θ')|ψ(θ)⟩|² at θ' = θ, by central
/// second differences. Independent cross-check: the QFI equals −2× this
/// matrix.
pub fn fidelity_hessian(circuit: &Circuit, theta: &ParamVector) -> nalgebra::DMatrix<f64> {
    // Larger step than FD_STEP: second differences divide by h², so h = 1e-5
    // would amplify rounding noise past the comparison tolerance.
    let h = 1e-4;
    let k = theta.len();
    let base = run_sv(&circuit.bind(theta).expect("theta sized by caller")).unwrap();
    let fid = |t: &ParamVector| -> f64 {
        run_sv(&circuit.bind(t).unwrap()).unwrap().overlap(&base).unwrap()
    };

    let mut dir = vec![0.0; k];
    let mut hessian = nalgebra::DMatrix::<f64>::zeros(k, k);
    for p in 0..k {
        dir[p] = 1.0;
        let fp = fid(&theta.perturbed(&dir, h));
        let fm = fid(&theta.perturbed(&dir, -h));
        dir[p] = 0.0;
        hessian[(p, p)] = (fp - 2.0 + fm) / (h * h); // F(θ) = 1 exactly
    }
    for p in 0..k {
        for q in (p + 1)..k {
            let mut d = vec![0.0; k];
            d[p] = 1.0;
            d[q] = 1.0;
            let fpp = fid(&theta.perturbed(&d, h));
            let fmm = fid(&theta.perturbed(&d, -h));
            d[q] = -1.0;
            let fpm = fid(&theta.perturbed(&d, h));
            let fmp = fid(&theta.perturbed(&d, -h));
            let value = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hessian[(p, q)] = value;
            hessian[(q, p)] = value;
        }
    }
    hessian
}
