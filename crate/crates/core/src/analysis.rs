//! Shot-noise scaling of Boltzmann-weight estimates and the product-ansatz
//! limitation.
//!
//! Distributions are indexed by energy level: entry `k` is the weight of the
//! `k`-th lowest eigenvalue, and its bits are the ancilla labels.

use serde::{Deserialize, Serialize};

use crate::ansatz::{ancilla_state, AnsatzConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, Hamiltonian};
use crate::metrics::bhattacharyya_fidelity;
use crate::optimizer::{bfgs_minimize, multistart, FnObjective, OptimizerSettings};

/// `ln(c_v sqrt(N_s))` for level `i`: half the log of
/// `sum_{j != i} exp(-beta (E_j - E_i))`, accumulated with log-sum-exp.
pub fn log_scaled_cv(energies: &[f64], beta: f64, i: usize) -> Result<f64> {
    if i >= energies.len() {
        return Err(Error::arg(format!(
            "level {i} out of range for {} levels",
            energies.len()
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::arg(format!("beta must be non-negative, got {beta}")));
    }
    let exps: Vec<f64> = energies
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &e)| -beta * (e - energies[i]))
        .collect();
    if exps.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|x| (x - max).exp()).sum();
    Ok(0.5 * (max + sum.ln()))
}

/// Relative standard deviation of the count of level `i` under `shots`
/// multinomial draws from the Boltzmann distribution:
/// `sqrt((Z / e^{-beta E_i} - 1) / N_s)`.
pub fn cv_boltzmann(energies: &[f64], beta: f64, shots: u64, i: usize) -> Result<f64> {
    if shots == 0 {
        return Err(Error::arg("shots must be positive"));
    }
    Ok(log_scaled_cv(energies, beta, i)?.exp() / (shots as f64).sqrt())
}

/// Least-squares power law `c_v sqrt(N_s) = C n^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub state_index: usize,
    pub beta: f64,
    pub h: f64,
    pub boundary: Boundary,
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_range: Vec<usize>,
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::arg("need at least two matching points"));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("x values are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok((slope, intercept, r2))
}

/// Fits `ln(c_v sqrt(N_s))` against `ln n` over the given chain lengths.
pub fn fit_cv_exponent(
    h: f64,
    boundary: Boundary,
    beta: f64,
    i: usize,
    n_values: &[usize],
) -> Result<FitResult> {
    if n_values.len() < 3 {
        return Err(Error::arg("the fit needs at least three system sizes"));
    }
    let mut xs = Vec::with_capacity(n_values.len());
    let mut ys = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let energies = Hamiltonian::ising(n, h, boundary)?.eigenvalues()?;
        xs.push((n as f64).ln());
        ys.push(log_scaled_cv(&energies, beta, i)?);
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Numeric(
            "coefficient of variation underflowed".into(),
        ));
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
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

/// `|E_0 + E_3 - E_1 - E_2|` over the four lowest levels.
///
/// A product ancilla state assigns `ln p` additively over bits, which forces
/// this combination to vanish.
pub fn product_ansatz_constraint_gap(energies: &[f64]) -> Result<f64> {
    if energies.len() < 4 {
        return Err(Error::arg("need at least four levels (two qubits)"));
    }
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    Ok((e[0] + e[3] - e[1] - e[2]).abs())
}

/// `q_k = prod_j (cos^2 or sin^2)(theta_j / 2)` according to bit `j` of `k`.
pub fn product_distribution(theta: &[f64]) -> Vec<f64> {
    let dim = 1usize << theta.len();
    (0..dim)
        .map(|k| {
            theta
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    if (k >> j) & 1 == 1 {
                        (t / 2.0).sin().powi(2)
                    } else {
                        (t / 2.0).cos().powi(2)
                    }
                })
                .product()
        })
        .collect()
}

fn check_distribution(p: &[f64]) -> Result<usize> {
    if p.is_empty() || !p.len().is_power_of_two() {
        return Err(Error::arg("distribution length must be a power of two"));
    }
    Ok(p.len().trailing_zeros() as usize)
}

/// Largest classical fidelity between `p` and any product of single-bit
/// Bernoulli distributions, found by BFGS multistart.
///
/// The signed amplitude overlap `sum_k sqrt(p_k) prod_j (cos or sin)(theta_j/2)`
/// is maximized; on `[0, pi]^n` it equals the Bhattacharyya coefficient and
/// elsewhere it is no larger, so both share the same maximum.
pub fn best_product_distribution_fidelity(p: &[f64], restarts: usize, seed: u64) -> Result<f64> {
    let n = check_distribution(p)?;
    if n == 0 {
        return Ok(1.0);
    }
    let roots: Vec<f64> = p.iter().map(|v| v.max(0.0).sqrt()).collect();
    let amp = |theta: &[f64], k: usize, skip: Option<usize>| -> f64 {
        theta
            .iter()
            .enumerate()
            .filter(|&(j, _)| Some(j) != skip)
            .map(|(j, t)| {
                if (k >> j) & 1 == 1 {
                    (t / 2.0).sin()
                } else {
                    (t / 2.0).cos()
                }
            })
            .product()
    };
    let obj = FnObjective {
        dim: n,
        value: |theta: &[f64]| {
            -(0..p.len())
                .map(|k| roots[k] * amp(theta, k, None))
                .sum::<f64>()
        },
        gradient: |theta: &[f64]| {
            (0..n)
                .map(|j| {
                    let (s, c) = (theta[j] / 2.0).sin_cos();
                    -(0..p.len())
                        .map(|k| {
                            let d = if (k >> j) & 1 == 1 { 0.5 * c } else { -0.5 * s };
                            roots[k] * amp(theta, k, Some(j)) * d
                        })
                        .sum::<f64>()
                })
                .collect()
        },
    };
    let settings = OptimizerSettings::bfgs();
    let result = multistart(n, restarts, seed, |x0, _| {
        bfgs_minimize(&obj, x0, &settings)
    });
    best_fidelity(
        p,
        result
            .runs
            .iter()
            .map(|r| product_distribution(&r.final_params)),
    )
}

/// Largest classical fidelity between `p` and the computational-basis
/// distribution of the ancilla ansatz with `layers` entangling layers.
///
/// Maximizes `sum_k sqrt(p_k) |psi_k|` directly; the ansatz amplitudes are
/// real, and `d psi / d theta_m` is half the amplitude vector at
/// `theta_m + pi`.
pub fn best_ansatz_distribution_fidelity(
    p: &[f64],
    layers: usize,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let n = check_distribution(p)?;
    let config = AnsatzConfig {
        n,
        layers_ancilla: layers,
        layers_system: 1,
        ..AnsatzConfig::standard(n)
    };
    config.validate()?;
    let dim = config.num_theta();
    let roots: Vec<f64> = p.iter().map(|v| v.max(0.0).sqrt()).collect();
    let amplitudes = |theta: &[f64]| -> Vec<f64> {
        ancilla_state(&config, theta)
            .expect("theta length matches")
            .amplitudes()
            .iter()
            .map(|a| a.re)
            .collect()
    };
    let obj = FnObjective {
        dim,
        value: |theta: &[f64]| {
            -amplitudes(theta)
                .iter()
                .zip(&roots)
                .map(|(a, r)| a.abs() * r)
                .sum::<f64>()
        },
        gradient: |theta: &[f64]| {
            let base = amplitudes(theta);
            (0..dim)
                .map(|m| {
                    let mut shifted = theta.to_vec();
                    shifted[m] += std::f64::consts::PI;
                    let d = amplitudes(&shifted);
                    -0.5 * base
                        .iter()
                        .zip(&d)
                        .zip(&roots)
                        .map(|((a, da), r)| a.signum() * da * r)
                        .sum::<f64>()
                })
                .collect()
        },
    };
    let settings = OptimizerSettings::bfgs();
    let result = multistart(dim, restarts, seed, |x0, _| {
        bfgs_minimize(&obj, x0, &settings)
    });
    best_fidelity(
        p,
        result.runs.iter().map(|r| {
            ancilla_state(&config, &r.final_params)
                .expect("theta length matches")
                .probabilities()
        }),
    )
}

fn best_fidelity(p: &[f64], candidates: impl Iterator<Item = Vec<f64>>) -> Result<f64> {
    let mut best = 0.0f64;
    for q in candidates {
        best = best.max(bhattacharyya_fidelity(p, &q)?);
    }
    Ok(best)
}
