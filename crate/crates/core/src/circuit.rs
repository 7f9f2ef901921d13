//! Parameterized circuits: the RY + linear-CNOT ansatz, parameter binding,
//! inversion and compute-uncompute composition.
//!
//! Gate set is deliberately minimal (RY rotations and CNOTs); every state
//! reachable here has real amplitudes, which is what lets the MPS backend
//! work over `f64`. Circuits and bound circuits are immutable once built and
//! safe to share across workers.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("parameter {index} is not finite")]
    NonFiniteParam { index: usize },
    #[error("circuit templates differ: ({n1} qubits, depth {d1}) vs ({n2} qubits, depth {d2})")]
    TemplateMismatch { n1: usize, d1: usize, n2: usize, d2: usize },
    #[error("operand is not a plain template binding (composed or inverted circuits cannot be composed)")]
    NotATemplateBinding,
}

/// Supported entanglement layouts. Only `Linear` is implemented; the enum
/// exists so new layouts slot in without an API break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Entanglement {
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    /// Y-rotation on `qubit`, angle taken from parameter slot `param`.
    Ry { qubit: usize, param: usize },
    /// Controlled-X with `control` and `target`.
    Cnot { control: usize, target: usize },
}

/// An ansatz template: one RY layer, then `depth` blocks of
/// (linear CNOT ladder, RY layer).
///
/// Parameter slots are qubit-major within a layer and layers follow circuit
/// order, i.e. slot `k·n + q` is the RY on qubit `q` in layer `k`. The
/// ordering is part of the on-disk format for θ files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    depth: usize,
    entanglement: Entanglement,
    gates: Vec<Gate>,
    param_count: usize,
}

impl Circuit {
    /// Builds the real-amplitudes ansatz on `n` qubits with `depth` blocks.
    ///
    /// `param_count` is n·(depth+1); depth 0 is a single RY layer with no
    /// CNOTs.
    pub fn real_amplitudes(n: usize, depth: usize) -> Self {
        assert!(n >= 1, "need at least one qubit");
        let mut gates = Vec::with_capacity(n * (depth + 1) + depth * n.saturating_sub(1));
        for q in 0..n {
            gates.push(Gate::Ry { qubit: q, param: q });
        }
        for block in 1..=depth {
            for q in 0..n.saturating_sub(1) {
                gates.push(Gate::Cnot { control: q, target: q + 1 });
            }
            for q in 0..n {
                gates.push(Gate::Ry { qubit: q, param: block * n + q });
            }
        }
        Self {
            n_qubits: n,
            depth,
            entanglement: Entanglement::Linear,
            gates,
            param_count: n * (depth + 1),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Parameters that prepare the uniform superposition: π/2 on the first
    /// RY layer, 0 everywhere else. The CNOT ladder leaves |+⟩^⊗n invariant,
    /// so every basis state gets probability 2^−n at any depth.
    pub fn uniform_init_params(&self) -> ParamVector {
        let mut values = vec![0.0; self.param_count];
        for slot in values.iter_mut().take(self.n_qubits) {
            *slot = FRAC_PI_2;
        }
        ParamVector::new(values).expect("constants are finite")
    }

    /// Resolves every RY slot against `theta`.
    pub fn bind(&self, theta: &ParamVector) -> Result<BoundCircuit, CircuitError> {
        if theta.len() != self.param_count {
            return Err(CircuitError::ParamLength {
                expected: self.param_count,
                got: theta.len(),
            });
        }
        let ops = self
            .gates
            .iter()
            .map(|gate| match *gate {
                Gate::Ry { qubit, param } => BoundGate::Ry { qubit, angle: theta[param] },
                Gate::Cnot { control, target } => BoundGate::Cnot { control, target },
            })
            .collect();
        Ok(BoundCircuit {
            n_qubits: self.n_qubits,
            ops,
            direction: Direction::Forward,
            template: Some(Template {
                depth: self.depth,
                param_count: self.param_count,
                theta: theta.clone(),
            }),
        })
    }
}

/// Real rotation angles, one per parameter slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self, CircuitError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CircuitError::NonFiniteParam { index });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// θ + scale·delta, elementwise. Panics on length mismatch.
    pub fn perturbed(&self, delta: &[f64], scale: f64) -> ParamVector {
        assert_eq!(delta.len(), self.0.len());
        ParamVector(
            self.0
                .iter()
                .zip(delta)
                .map(|(t, d)| t + scale * d)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverted,
}

/// A gate with its angle resolved, ready for a simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundGate {
    Ry { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Template {
    depth: usize,
    param_count: usize,
    theta: ParamVector,
}

/// A circuit with every angle resolved. Produced by [`Circuit::bind`],
/// [`BoundCircuit::inverse`] or [`BoundCircuit::compose_uncompute`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCircuit {
    n_qubits: usize,
    ops: Vec<BoundGate>,
    direction: Direction,
    template: Option<Template>,
}

impl BoundCircuit {
    /// Wraps a raw gate list so custom RY/CNOT circuits can be simulated
    /// directly. The result is not a template binding: it cannot be
    /// composed or unbound.
    pub fn from_ops(n_qubits: usize, ops: Vec<BoundGate>) -> Self {
        Self { n_qubits, ops, direction: Direction::Forward, template: None }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[BoundGate] {
        &self.ops
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// The binding θ, when this is a plain forward template binding.
    pub fn theta(&self) -> Option<&ParamVector> {
        match (self.direction, &self.template) {
            (Direction::Forward, Some(t)) => Some(&t.theta),
            _ => None,
        }
    }

    /// Reverses gate order and negates every RY angle, implementing U†.
    pub fn inverse(&self) -> BoundCircuit {
        let ops = self
            .ops
            .iter()
            .rev()
            .map(|gate| match *gate {
                BoundGate::Ry { qubit, angle } => BoundGate::Ry { qubit, angle: -angle },
                cnot => cnot,
            })
            .collect();
        BoundCircuit {
            n_qubits: self.n_qubits,
            ops,
            direction: match self.direction {
                Direction::Forward => Direction::Inverted,
                Direction::Inverted => Direction::Forward,
            },
            template: self.template.clone(),
        }
    }

    /// U†(θ₂)·U(θ₁) as a single circuit, where `self` is bound at θ₁ and
    /// `other` at θ₂. Its all-zeros outcome probability equals
    /// |⟨ψ(θ₂)|ψ(θ₁)⟩|². Both operands must be plain bindings of the same
    /// template.
    pub fn compose_uncompute(&self, other: &BoundCircuit) -> Result<BoundCircuit, CircuitError> {
        let (t1, t2) = match (&self.template, &other.template) {
            (Some(t1), Some(t2))
                if self.direction == Direction::Forward
                    && other.direction == Direction::Forward =>
            {
                (t1, t2)
            }
            _ => return Err(CircuitError::NotATemplateBinding),
        };
        if self.n_qubits != other.n_qubits || t1.depth != t2.depth {
            return Err(CircuitError::TemplateMismatch {
                n1: self.n_qubits,
                d1: t1.depth,
                n2: other.n_qubits,
                d2: t2.depth,
            });
        }
        let mut ops = self.ops.clone();
        ops.extend(other.inverse().ops);
        Ok(BoundCircuit {
            n_qubits: self.n_qubits,
            ops,
            direction: Direction::Forward,
            template: None,
        })
    }
}
