//! Shared fixtures for the benchmarks.

use gibbsprep::{AnsatzConfig, Boundary, FreeEnergyProblem, Hamiltonian};

/// Periodic Ising problem at `h = 0.5` with the standard circuit for `n`.
pub fn problem(n: usize, beta: f64) -> FreeEnergyProblem {
    let ham = Hamiltonian::ising(n, 0.5, Boundary::Periodic).expect("valid size");
    FreeEnergyProblem::new(AnsatzConfig::standard(n), ham, beta).expect("valid problem")
}

/// Deterministic, irregular parameters in `(-pi, pi)`.
pub fn params(len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| 3.0 * ((k as f64 + 1.0) * 1.618).sin())
        .collect()
}
