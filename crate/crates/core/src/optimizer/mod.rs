//! Local optimizers and the seeded multistart driver.
//!
//! BFGS drives the exact (statevector) objective with analytic gradients;
//! SPSA drives the shot-sampled objective. Both report a [`RunRecord`].

mod bfgs;
mod multistart;
mod spsa;

pub use bfgs::bfgs_minimize;
pub use multistart::{
    initial_point, multistart, multistart_exact, multistart_shots, run_seed, single_run,
    ExactObjective, ShotBudget, ShotObjective,
};
pub use spsa::{calibrate_spsa, spsa_minimize, CalibratedGains, SpsaGains};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bfgs,
    Spsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub algorithm: Algorithm,
    /// `None` picks the algorithm default: 1000 for BFGS, `100 n` for SPSA.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default = "default_gradient_tolerance")]
    pub gradient_tolerance: f64,
    #[serde(default)]
    pub spsa: SpsaGains,
}

fn default_gradient_tolerance() -> f64 {
    1e-8
}

impl OptimizerSettings {
    pub fn bfgs() -> Self {
        Self {
            algorithm: Algorithm::Bfgs,
            max_iterations: None,
            gradient_tolerance: default_gradient_tolerance(),
            spsa: SpsaGains::default(),
        }
    }

    pub fn spsa() -> Self {
        Self {
            algorithm: Algorithm::Spsa,
            ..Self::bfgs()
        }
    }

    /// Iteration budget for a problem with `n` qubits per register.
    pub fn iterations_for(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(match self.algorithm {
            Algorithm::Bfgs => 1000,
            Algorithm::Spsa => 100 * n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
    NonFinite(String),
    Failed(String),
}

/// One local optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub initial_params: Vec<f64>,
    pub final_params: Vec<f64>,
    /// Objective value the optimizer saw last. For SPSA this is the mean of
    /// the final perturbation pair, so it carries shot noise.
    pub final_free_energy: f64,
    /// Objective evaluations, including SPSA calibration.
    pub evaluation_count: usize,
    pub gradient_count: usize,
    pub calibration_evaluations: usize,
    pub iteration_count: usize,
    pub converged: bool,
    pub termination: Termination,
    pub wall_time: f64,
}

/// An objective with an analytic gradient.
pub trait DifferentiableObjective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// A noisy objective; `stream` selects an independent random stream so
/// repeated calls are reproducible.
pub trait StochasticObjective: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, x: &[f64], stream: u64) -> Result<f64>;
}

/// Adapts plain closures to [`DifferentiableObjective`].
pub struct FnObjective<V, G> {
    pub dim: usize,
    pub value: V,
    pub gradient: G,
}

impl<V, G> DifferentiableObjective for FnObjective<V, G>
where
    V: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.gradient)(x))
    }
}

/// Adapts a closure `(x, stream) -> f` to [`StochasticObjective`].
pub struct FnStochastic<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> StochasticObjective for FnStochastic<F>
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, x: &[f64], stream: u64) -> Result<f64> {
        Ok((self.f)(x, stream))
    }
}

/// Best run by objective plus the per-run fidelities a caller may attach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartResult {
    pub runs: Vec<RunRecord>,
    pub best_by_objective: usize,
    #[serde(default)]
    pub fidelities: Vec<f64>,
}

impl MultistartResult {
    pub fn from_runs(runs: Vec<RunRecord>) -> Self {
        let best_by_objective = runs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.final_free_energy.is_finite())
            .min_by(|a, b| a.1.final_free_energy.total_cmp(&b.1.final_free_energy))
            .map_or(0, |(i, _)| i);
        Self {
            runs,
            best_by_objective,
            fidelities: Vec::new(),
        }
    }

    pub fn best_run(&self) -> &RunRecord {
        &self.runs[self.best_by_objective]
    }

    /// Index of the run with the largest attached fidelity.
    pub fn best_by_fidelity(&self) -> Option<usize> {
        self.fidelities
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
