use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, with_workers, write_csv, write_json, ExperimentConfig};
use crate::ansatz::{prepare_variational_state, AnsatzConfig, ParameterVector};
use crate::density::DensityMatrix;
use crate::error::Result;
use crate::hamiltonian::Hamiltonian;
use crate::metrics::{fidelity, relative_entropy, trace_distance};
use crate::objective::{EvaluationMode, FreeEnergyProblem};
use crate::optimizer::{
    bfgs_minimize, single_run, spsa_minimize, Algorithm, ExactObjective, FnStochastic,
    MultistartResult, OptimizerSettings, RunRecord, ShotObjective,
};
use crate::rng::derive_seed;

/// One optimized run with its scores against the exact Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub config_hash: String,
    pub beta: f64,
    pub record: RunRecord,
    /// Noise-free objective at the final parameters.
    pub exact_free_energy_at_params: f64,
    pub fidelity: f64,
    pub trace_distance: f64,
    pub relative_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct BetaPoint {
    pub beta: f64,
    pub exact_free_energy: f64,
    pub gibbs_state: DensityMatrix,
    pub outcomes: Vec<RunOutcome>,
    /// Runs with their fidelities attached.
    pub multistart: MultistartResult,
    pub best_fidelity: f64,
    pub best_trace_distance: f64,
    pub best_relative_entropy: f64,
    /// Lowest noise-free objective over runs.
    pub best_free_energy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub points: Vec<BetaPoint>,
}

impl SweepResult {
    pub fn summary_rows(&self, config: &ExperimentConfig) -> Vec<SummaryRow> {
        self.points
            .iter()
            .map(|p| SummaryRow {
                n: config.n,
                h: config.h,
                boundary: config.boundary.to_string(),
                beta: p.beta,
                mode: config.mode.name().to_string(),
                runs: p.outcomes.len(),
                best_fidelity: p.best_fidelity,
                best_trace_distance: p.best_trace_distance,
                best_relative_entropy: p.best_relative_entropy,
                best_free_energy: p.best_free_energy,
                exact_free_energy: p.exact_free_energy,
                seed: config.base_seed,
                config_hash: self.config_hash.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub h: f64,
    pub boundary: String,
    pub beta: f64,
    pub mode: String,
    pub runs: usize,
    pub best_fidelity: f64,
    pub best_trace_distance: f64,
    pub best_relative_entropy: f64,
    pub best_free_energy: f64,
    pub exact_free_energy: f64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Serialize)]
struct RunRow<'a> {
    beta: f64,
    run: usize,
    seed: u64,
    final_free_energy: f64,
    exact_free_energy_at_params: f64,
    fidelity: f64,
    trace_distance: f64,
    relative_entropy: f64,
    evaluations: usize,
    gradients: usize,
    calibration_evaluations: usize,
    iterations: usize,
    converged: bool,
    termination: &'a str,
    config_hash: &'a str,
}

/// Directory name for a temperature: the shortest decimal that round-trips.
pub fn format_beta(beta: f64) -> String {
    format!("{beta}")
}

fn run_path(dir: &Path, beta: f64, run: usize) -> PathBuf {
    dir.join("params")
        .join(format_beta(beta))
        .join(format!("{run}.json"))
}

fn load_outcome(path: &Path, hash: &str) -> Option<RunOutcome> {
    let text = fs::read_to_string(path).ok()?;
    let outcome: RunOutcome = serde_json::from_str(&text).ok()?;
    (outcome.config_hash == hash).then_some(outcome)
}

fn system_state(config: &AnsatzConfig, flat: &[f64]) -> Result<DensityMatrix> {
    let params = ParameterVector::from_flat(config, flat)?;
    let state = prepare_variational_state(config, &params)?;
    let keep: Vec<usize> = (config.n..2 * config.n).collect();
    state.partial_trace(&keep)
}

fn optimize(
    problem: &FreeEnergyProblem,
    mode: EvaluationMode,
    settings: &OptimizerSettings,
    base_seed: u64,
    run: usize,
) -> RunRecord {
    let dim = problem.num_params();
    let iterations = settings.iterations_for(problem.config().n);
    match (mode, settings.algorithm) {
        (EvaluationMode::Exact, Algorithm::Bfgs) => {
            let obj = ExactObjective(problem);
            single_run(dim, base_seed, run, |x0, _| {
                bfgs_minimize(&obj, x0, settings)
            })
        }
        (EvaluationMode::Exact, Algorithm::Spsa) => {
            let obj = FnStochastic {
                dim,
                f: |x: &[f64], _| {
                    problem
                        .evaluate_exact_flat(x)
                        .map_or(f64::NAN, |b| b.free_energy)
                },
            };
            single_run(dim, base_seed, run, |x0, seed| {
                spsa_minimize(&obj, x0, settings, iterations, seed)
            })
        }
        (
            EvaluationMode::Shots {
                shots_per_circuit,
                entropy_estimator,
            },
            _,
        ) => {
            let obj = ShotObjective {
                problem,
                shots: shots_per_circuit,
                estimator: entropy_estimator,
                budget: None,
            };
            single_run(dim, base_seed, run, |x0, seed| {
                spsa_minimize(&obj, x0, settings, iterations, seed)
            })
        }
    }
}

/// Multistart optimization at every temperature of the grid, scored against
/// the exact Gibbs state.
///
/// Files under `output_dir`: `config.json`, `params/<beta>/<run>.json` (one
/// per finished run, written as soon as it finishes), `runs.csv` and
/// `summary.csv`. With `resume`, runs whose JSON exists and carries the same
/// config hash are loaded instead of recomputed; the CSVs are always rebuilt
/// from the per-run files, so an interrupted and resumed sweep ends with the
/// same CSVs as an uninterrupted one. Temperature `beta` uses the multistart
/// base seed `derive_seed(base_seed, [beta bits])`.
pub fn run_sweep(config: &ExperimentConfig, resume: bool) -> Result<SweepResult> {
    config.validate()?;
    let dir = config.output_dir.clone();
    let hash = config.config_hash();
    ensure_dir(&dir)?;
    write_json(&dir.join("config.json"), config)?;
    for &beta in &config.beta_grid {
        ensure_dir(&dir.join("params").join(format_beta(beta)))?;
    }

    let ansatz = config.ansatz();
    let hamiltonian = Hamiltonian::ising(config.n, config.h, config.boundary)?;
    let spectrum = hamiltonian.diagonalize()?;
    let settings = config.optimizer_settings();
    let runs = config.runs();

    let problems: Vec<FreeEnergyProblem> = config
        .beta_grid
        .iter()
        .map(|&beta| FreeEnergyProblem::new(ansatz, hamiltonian.clone(), beta))
        .collect::<Result<_>>()?;
    let gibbs: Vec<DensityMatrix> = config
        .beta_grid
        .iter()
        .map(|&beta| spectrum.gibbs_state(beta))
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..config.beta_grid.len())
        .flat_map(|b| (0..runs).map(move |r| (b, r)))
        .collect();

    let outcomes: Vec<Result<RunOutcome>> = with_workers(config.workers, || {
        tasks
            .par_iter()
            .map(|&(b, r)| {
                let beta = config.beta_grid[b];
                let path = run_path(&dir, beta, r);
                if resume {
                    if let Some(done) = load_outcome(&path, &hash) {
                        return Ok(done);
                    }
                }
                let base = derive_seed(config.base_seed, &[beta.to_bits()]);
                let record = optimize(&problems[b], config.mode, &settings, base, r);
                let rho = system_state(&ansatz, &record.final_params)?;
                let outcome = RunOutcome {
                    config_hash: hash.clone(),
                    beta,
                    exact_free_energy_at_params: problems[b]
                        .evaluate_exact_flat(&record.final_params)?
                        .free_energy,
                    fidelity: fidelity(&rho, &gibbs[b])?,
                    trace_distance: trace_distance(&rho, &gibbs[b])?,
                    relative_entropy: relative_entropy(&rho, &gibbs[b])?,
                    record,
                };
                write_json(&path, &outcome)?;
                Ok(outcome)
            })
            .collect()
    })?;
    let outcomes: Vec<RunOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(config.beta_grid.len());
    for (b, chunk) in outcomes.chunks(runs).enumerate() {
        let beta = config.beta_grid[b];
        let outcomes = chunk.to_vec();
        let mut multistart =
            MultistartResult::from_runs(outcomes.iter().map(|o| o.record.clone()).collect());
        multistart.fidelities = outcomes.iter().map(|o| o.fidelity).collect();
        let max =
            |f: fn(&RunOutcome) -> f64| outcomes.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let min = |f: fn(&RunOutcome) -> f64| outcomes.iter().map(f).fold(f64::INFINITY, f64::min);
        points.push(BetaPoint {
            beta,
            exact_free_energy: spectrum.exact_free_energy(beta)?,
            gibbs_state: gibbs[b].clone(),
            best_fidelity: max(|o| o.fidelity),
            best_trace_distance: min(|o| o.trace_distance),
            best_relative_entropy: min(|o| o.relative_entropy),
            best_free_energy: min(|o| o.exact_free_energy_at_params),
            multistart,
            outcomes,
        });
    }

    let result = SweepResult {
        config_hash: hash.clone(),
        output_dir: dir.clone(),
        points,
    };
    let run_rows: Vec<RunRow> = outcomes
        .iter()
        .map(|o| RunRow {
            beta: o.beta,
            run: o.record.run_index,
            seed: o.record.seed,
            final_free_energy: o.record.final_free_energy,
            exact_free_energy_at_params: o.exact_free_energy_at_params,
            fidelity: o.fidelity,
            trace_distance: o.trace_distance,
            relative_entropy: o.relative_entropy,
            evaluations: o.record.evaluation_count,
            gradients: o.record.gradient_count,
            calibration_evaluations: o.record.calibration_evaluations,
            iterations: o.record.iteration_count,
            converged: o.record.converged,
            termination: termination_label(&o.record),
            config_hash: &hash,
        })
        .collect();
    write_csv(&dir.join("runs.csv"), &run_rows)?;
    write_csv(&dir.join("summary.csv"), &result.summary_rows(config))?;
    log::info!("sweep written to {}", dir.display());
    Ok(result)
}

fn termination_label(record: &RunRecord) -> &'static str {
    use crate::optimizer::Termination::*;
    match record.termination {
        Converged => "converged",
        MaxIterations => "max-iterations",
        LineSearchFailed => "line-search-failed",
        NonFinite(_) => "non-finite",
        Failed(_) => "failed",
    }
}
