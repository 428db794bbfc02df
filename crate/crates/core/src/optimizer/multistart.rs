use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;

use super::{
    bfgs_minimize, spsa_minimize, DifferentiableObjective, MultistartResult, OptimizerSettings,
    RunRecord, StochasticObjective,
};
use crate::error::Result;
use crate::objective::{EntropyEstimator, FreeEnergyProblem};
use crate::rng::{derive_seed, stream};

/// Runs `runs` independent local optimizations from uniform random starts in
/// `[-pi, pi]^dim`.
///
/// Run `r` uses seed `derive_seed(base_seed, [r])`, so results do not depend
/// on the thread count and a smaller `runs` gives a prefix of a larger one.
pub fn multistart<F>(dim: usize, runs: usize, base_seed: u64, run: F) -> MultistartResult
where
    F: Fn(&[f64], u64) -> RunRecord + Sync,
{
    let records: Vec<RunRecord> = (0..runs)
        .into_par_iter()
        .map(|r| single_run(dim, base_seed, r, &run))
        .collect();
    MultistartResult::from_runs(records)
}

/// Run `r` of a multistart on its own, e.g. when resuming a partial sweep.
pub fn single_run<F>(dim: usize, base_seed: u64, r: usize, run: F) -> RunRecord
where
    F: Fn(&[f64], u64) -> RunRecord,
{
    let seed = run_seed(base_seed, r);
    let x0 = initial_point(dim, seed);
    let mut record = run(&x0, seed);
    record.run_index = r;
    record.seed = seed;
    record
}

/// Seed of run `r` in a multistart with base seed `base_seed`.
pub fn run_seed(base_seed: u64, r: usize) -> u64 {
    derive_seed(base_seed, &[r as u64])
}

/// The start point for a run seed.
pub fn initial_point(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, &[0]);
    (0..dim).map(|_| rng.gen_range(-PI..PI)).collect()
}

/// The exact free energy with its parameter-shift gradient.
pub struct ExactObjective<'a>(pub &'a FreeEnergyProblem);

impl DifferentiableObjective for ExactObjective<'_> {
    fn dim(&self) -> usize {
        self.0.num_params()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.0.evaluate_exact_flat(x)?.free_energy)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.gradient_exact(x)
    }
}

/// BFGS multistart on the exact objective.
pub fn multistart_exact(
    problem: &FreeEnergyProblem,
    runs: usize,
    base_seed: u64,
    settings: &OptimizerSettings,
) -> MultistartResult {
    let obj = ExactObjective(problem);
    multistart(problem.num_params(), runs, base_seed, |x0, _| {
        bfgs_minimize(&obj, x0, settings)
    })
}

/// Quantum-resource counters shared across runs.
#[derive(Debug, Default)]
pub struct ShotBudget {
    evaluations: AtomicUsize,
    circuits: AtomicUsize,
    shots: AtomicU64,
}

impl ShotBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, circuits: usize, shots_per_circuit: u64) {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.circuits.fetch_add(circuits, Ordering::Relaxed);
        self.shots
            .fetch_add(circuits as u64 * shots_per_circuit, Ordering::Relaxed);
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn circuits(&self) -> usize {
        self.circuits.load(Ordering::Relaxed)
    }

    pub fn shots(&self) -> u64 {
        self.shots.load(Ordering::Relaxed)
    }
}

/// The shot-sampled free energy, optionally tallying its quantum cost.
pub struct ShotObjective<'a> {
    pub problem: &'a FreeEnergyProblem,
    pub shots: u64,
    pub estimator: EntropyEstimator,
    pub budget: Option<&'a ShotBudget>,
}

impl StochasticObjective for ShotObjective<'_> {
    fn dim(&self) -> usize {
        self.problem.num_params()
    }

    fn sample(&self, x: &[f64], stream: u64) -> Result<f64> {
        let eval = self
            .problem
            .evaluate_shots(x, self.shots, self.estimator, stream)?;
        if let Some(b) = self.budget {
            b.record(eval.circuits, eval.shots_per_circuit);
        }
        Ok(eval.breakdown.free_energy)
    }
}

/// SPSA multistart on the shot-sampled objective.
pub fn multistart_shots(
    problem: &FreeEnergyProblem,
    runs: usize,
    base_seed: u64,
    settings: &OptimizerSettings,
    shots_per_circuit: u64,
    estimator: EntropyEstimator,
    budget: Option<&ShotBudget>,
) -> MultistartResult {
    let obj = ShotObjective {
        problem,
        shots: shots_per_circuit,
        estimator,
        budget,
    };
    let iterations = settings.iterations_for(problem.config().n);
    multistart(problem.num_params(), runs, base_seed, |x0, seed| {
        spsa_minimize(&obj, x0, settings, iterations, seed)
    })
}
