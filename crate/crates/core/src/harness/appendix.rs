use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, write_csv, write_json};
use crate::analysis::{
    best_ansatz_distribution_fidelity, best_product_distribution_fidelity, fit_cv_exponent,
    log_scaled_cv, product_ansatz_constraint_gap, FitResult,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{boltzmann_probs, Boundary, Hamiltonian};

/// Grid for the coefficient-of-variation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppendixAConfig {
    pub h_values: Vec<f64>,
    pub boundaries: Vec<Boundary>,
    /// May include 0.
    pub beta_grid: Vec<f64>,
    pub n_values: Vec<usize>,
    /// Levels `i = 0..num_states` are reported.
    pub num_states: usize,
    pub shots: u64,
    pub output_dir: PathBuf,
}

impl Default for AppendixAConfig {
    fn default() -> Self {
        Self {
            h_values: vec![0.5, 1.0],
            boundaries: vec![Boundary::Periodic, Boundary::Open],
            beta_grid: vec![0.0, 0.1, 1.0, 10.0, 100.0],
            n_values: vec![6, 8, 10, 12],
            num_states: 16,
            shots: 1024,
            output_dir: PathBuf::from("appendix-a"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub n: usize,
    pub h: f64,
    pub beta: f64,
    pub i: usize,
    pub c_v: f64,
    pub shots: u64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixAOutput {
    pub rows: Vec<CvRow>,
    pub fits: Vec<FitResult>,
}

/// Writes `cv.csv` (one row per `(boundary, h, n, beta, i)`) and `fits.json`
/// (one power-law fit per `(boundary, h, beta, i)` across `n_values`).
pub fn run_appendix_a(config: &AppendixAConfig) -> Result<AppendixAOutput> {
    if config.shots == 0 {
        return Err(Error::arg("shots must be positive"));
    }
    if let Some(&n) = config.n_values.iter().min() {
        if config.num_states > 1usize << n {
            return Err(Error::arg(format!(
                "{} states requested but n = {n} has only {}",
                config.num_states,
                1usize << n
            )));
        }
    }
    if config.beta_grid.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::arg("beta values must be >= 0"));
    }
    ensure_dir(&config.output_dir)?;

    let mut cases = Vec::new();
    for &boundary in &config.boundaries {
        for &h in &config.h_values {
            for &n in &config.n_values {
                cases.push((boundary, h, n));
            }
        }
    }
    let spectra: Vec<Vec<f64>> = cases
        .par_iter()
        .map(|&(boundary, h, n)| Hamiltonian::ising(n, h, boundary)?.eigenvalues())
        .collect::<Result<_>>()?;

    let scale = (config.shots as f64).sqrt();
    let mut rows = Vec::new();
    for (&(boundary, h, n), energies) in cases.iter().zip(&spectra) {
        for &beta in &config.beta_grid {
            for i in 0..config.num_states {
                rows.push(CvRow {
                    n,
                    h,
                    beta,
                    i,
                    c_v: log_scaled_cv(energies, beta, i)?.exp() / scale,
                    shots: config.shots,
                    boundary,
                });
            }
        }
    }

    let mut fits = Vec::new();
    if config.n_values.len() >= 3 {
        for &boundary in &config.boundaries {
            for &h in &config.h_values {
                for &beta in &config.beta_grid {
                    for i in 0..config.num_states {
                        fits.push(fit_from_rows(
                            &rows,
                            boundary,
                            h,
                            beta,
                            i,
                            &config.n_values,
                        )?);
                    }
                }
            }
        }
    }
    write_csv(&config.output_dir.join("cv.csv"), &rows)?;
    write_json(&config.output_dir.join("fits.json"), &fits)?;
    Ok(AppendixAOutput { rows, fits })
}

fn fit_from_rows(
    rows: &[CvRow],
    boundary: Boundary,
    h: f64,
    beta: f64,
    i: usize,
    n_values: &[usize],
) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in n_values {
        let row = rows
            .iter()
            .find(|r| r.boundary == boundary && r.h == h && r.beta == beta && r.i == i && r.n == n)
            .expect("every grid point has a row");
        xs.push((n as f64).ln());
        ys.push((row.c_v * (row.shots as f64).sqrt()).ln());
    }
    if ys.iter().any(|y| !y.is_finite()) {
        // Fall back to the log-domain evaluation when c_v underflows.
        return fit_cv_exponent(h, boundary, beta, i, n_values);
    }
    let (slope, intercept, r2) = crate::analysis::linear_fit(&xs, &ys)?;
    Ok(FitResult {
        state_index: i,
        beta,
        h,
        boundary,
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        n_range: n_values.to_vec(),
    })
}

/// Grid for the product-ansatz study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppendixBConfig {
    pub n_values: Vec<usize>,
    pub h_values: Vec<f64>,
    pub boundary: Boundary,
    pub beta_grid: Vec<f64>,
    pub restarts: usize,
    /// Entangling layers of the comparison ancilla ansatz.
    pub layers_ancilla: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for AppendixBConfig {
    fn default() -> Self {
        Self {
            n_values: vec![2, 3, 4],
            h_values: vec![0.0, 0.5, 1.0],
            boundary: Boundary::Periodic,
            beta_grid: vec![0.1, 1.0, 10.0],
            restarts: 200,
            layers_ancilla: 1,
            seed: 0,
            output_dir: PathBuf::from("appendix-b"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixBRow {
    pub n: usize,
    pub h: f64,
    pub boundary: Boundary,
    pub beta: f64,
    pub constraint_gap: f64,
    pub best_product_fidelity: f64,
    pub best_entangled_fidelity: f64,
    pub layers_ancilla: usize,
    pub restarts: usize,
}

/// Writes `appendix_b.csv` and `appendix_b.json`: the four-level constraint
/// gap and the best product and entangled distribution fidelities.
pub fn run_appendix_b(config: &AppendixBConfig) -> Result<Vec<AppendixBRow>> {
    if config.n_values.iter().any(|&n| !(2..=6).contains(&n)) {
        return Err(Error::arg("the product-ansatz study supports 2 <= n <= 6"));
    }
    if config.restarts == 0 {
        return Err(Error::arg("restarts must be >= 1"));
    }
    ensure_dir(&config.output_dir)?;
    let mut rows = Vec::new();
    for &n in &config.n_values {
        for &h in &config.h_values {
            let energies = Hamiltonian::ising(n, h, config.boundary)?.eigenvalues()?;
            let gap = product_ansatz_constraint_gap(&energies)?;
            for &beta in &config.beta_grid {
                let p = boltzmann_probs(&energies, beta)?;
                rows.push(AppendixBRow {
                    n,
                    h,
                    boundary: config.boundary,
                    beta,
                    constraint_gap: gap,
                    best_product_fidelity: best_product_distribution_fidelity(
                        &p,
                        config.restarts,
                        config.seed,
                    )?,
                    best_entangled_fidelity: best_ansatz_distribution_fidelity(
                        &p,
                        config.layers_ancilla,
                        config.restarts,
                        config.seed,
                    )?,
                    layers_ancilla: config.layers_ancilla,
                    restarts: config.restarts,
                });
            }
        }
    }
    write_csv(&config.output_dir.join("appendix_b.csv"), &rows)?;
    write_json(&config.output_dir.join("appendix_b.json"), &rows)?;
    Ok(rows)
}

/// Both studies.
pub fn run_appendix_studies(
    a: &AppendixAConfig,
    b: &AppendixBConfig,
) -> Result<(AppendixAOutput, Vec<AppendixBRow>)> {
    Ok((run_appendix_a(a)?, run_appendix_b(b)?))
}
