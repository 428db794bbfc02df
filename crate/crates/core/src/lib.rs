//! Variational preparation of Gibbs (thermal) states of the transverse-field
//! Ising model.
//!
//! The crate bundles a dense statevector simulator for the small gate set the
//! two-register circuit needs, an exact-diagonalization oracle for Gibbs
//! states and free energies, the free-energy objective in exact and
//! shot-sampled form, BFGS/SPSA optimizers with a seeded multistart driver,
//! state metrics with the shot-scaling and product-ansatz analyses, and a
//! resumable sweep harness.
//!
//! Qubit `k` is bit `k` (value `2^k`) of a basis-state index. A joint
//! `2n`-qubit register keeps the ancillas at `0..n` and the system at
//! `n..2n`.

pub mod analysis;
pub mod ansatz;
pub mod density;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod metrics;
pub mod objective;
pub mod optimizer;
pub mod rng;
pub mod statevector;

pub use ansatz::{AnsatzConfig, ParameterVector, ResourceCount};
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use hamiltonian::{Boundary, GibbsOracle, Hamiltonian, Pauli, PauliTerm, Spectrum};
pub use objective::{EvaluationMode, FreeEnergyBreakdown, FreeEnergyProblem};
pub use optimizer::{MultistartResult, OptimizerSettings, RunRecord};
pub use statevector::StateVector;

pub use num_complex::Complex64;
