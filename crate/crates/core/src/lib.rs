//! Variational quantum feature selection.
//!
//! A parameterized quantum circuit is trained with QN-SPSA so that sampling
//! its computational basis states yields feature subsets with good classifier
//! scores. The crate provides the circuit ansatz, exact statevector and exact
//! matrix-product-state backends, the shot-based loss/fidelity estimator, the
//! QN-SPSA optimizer, the credit-data ingestion pipeline, the wrapper
//! objective (logistic regression + log-loss), classical baselines
//! (exhaustive search, RFE, RFECV) and post-training statistics (CDFs,
//! bootstrap CIs, paired comparisons, QUBO locality fits).
//!
//! Conventions shared by every module:
//! * qubit `l` ↔ feature `l` ↔ bit `l` of a basis-state index (see [`Bits`]),
//! * all randomness flows through seeded ChaCha streams derived from a master
//!   seed (see [`seed`]), so every result is reproducible bit-for-bit.

pub mod analysis;
pub mod backend;
pub mod baselines;
pub mod bits;
pub mod circuit;
pub mod data;
pub mod estimator;
pub mod logreg;
pub mod mps;
pub mod objective;
pub mod optimizer;
pub mod seed;
pub mod sv;

pub use backend::{Backend, BackendError, MpsBackend, SvBackend};
pub use bits::{Bits, SampleSet};
pub use circuit::{BoundCircuit, Circuit, CircuitError, Gate, ParamVector};
pub use estimator::{EvalMode, Estimator, FidelityMode, LossEstimate};
pub use objective::{BlackBoxObjective, FnObjective, ObjectiveError, SubsetObjective};
pub use optimizer::{OptimizerConfig, OptimizerState, TrainingResult};
