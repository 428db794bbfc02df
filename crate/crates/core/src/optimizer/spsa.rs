use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{OptimizerSettings, RunRecord, StochasticObjective, Termination};
use crate::rng::{derive_seed, stream};

const CALIBRATION_STREAM: u64 = 1;
const ITERATION_STREAM: u64 = 2;
const PERTURBATION_STREAM: u64 = 3;

/// SPSA gain settings. `None` fields are filled in by calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpsaGains {
    pub a: Option<f64>,
    /// Perturbation size. When unset it is the sampled noise standard
    /// deviation at `x0`, floored at `min_c`.
    pub c: Option<f64>,
    /// Stability constant `A`; unset means a tenth of the iteration budget.
    pub stability: Option<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub calibration_evals: usize,
    /// Repeated evaluations at `x0` used for the noise estimate; the rest of
    /// the calibration budget goes to perturbation pairs.
    pub noise_samples: usize,
    /// Intended magnitude of the first update, per coordinate, in radians.
    pub target_step: f64,
    pub min_c: f64,
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self {
            a: None,
            c: None,
            stability: None,
            alpha: 0.602,
            gamma: 0.101,
            calibration_evals: 50,
            noise_samples: 10,
            target_step: 0.1,
            min_c: 0.1,
        }
    }
}

/// Fully resolved gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedGains {
    pub a: f64,
    pub c: f64,
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub evaluations: usize,
}

impl CalibratedGains {
    pub fn a_k(&self, k: usize) -> f64 {
        self.a / (k as f64 + 1.0 + self.stability).powf(self.alpha)
    }

    pub fn c_k(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }
}

fn bernoulli(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn shifted(x: &[f64], delta: &[f64], scale: f64) -> Vec<f64> {
    x.iter().zip(delta).map(|(xi, d)| xi + scale * d).collect()
}

/// Resolves unset gains from objective samples around `x0`.
///
/// Uses exactly `calibration_evals` objective evaluations whenever any gain
/// needs estimating, and none otherwise. Non-finite samples are ignored.
pub fn calibrate_spsa<F: StochasticObjective + ?Sized>(
    f: &F,
    x0: &[f64],
    gains: &SpsaGains,
    iterations: usize,
    seed: u64,
) -> CalibratedGains {
    let stability = gains.stability.unwrap_or(0.1 * iterations as f64);
    let mut out = CalibratedGains {
        a: gains.a.unwrap_or(0.0),
        c: gains.c.unwrap_or(gains.min_c),
        stability,
        alpha: gains.alpha,
        gamma: gains.gamma,
        evaluations: 0,
    };
    if gains.a.is_some() && gains.c.is_some() {
        return out;
    }
    let budget = gains.calibration_evals;
    let noise_samples = gains.noise_samples.min(budget);
    let eval = |x: &[f64], idx: usize| {
        f.sample(x, derive_seed(seed, &[CALIBRATION_STREAM, idx as u64]))
            .ok()
            .filter(|v| v.is_finite())
    };

    let mut used = 0;
    let samples: Vec<f64> = (0..noise_samples)
        .filter_map(|i| {
            used += 1;
            eval(x0, i)
        })
        .collect();
    if gains.c.is_none() {
        let sigma = if samples.len() > 1 {
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (samples.len() - 1) as f64;
            var.sqrt()
        } else {
            0.0
        };
        out.c = sigma.max(gains.min_c);
    }

    let mut rng = stream(seed, &[CALIBRATION_STREAM, u64::MAX]);
    let mut magnitude = 0.0;
    let mut pairs = 0usize;
    while used + 2 <= budget {
        let delta = bernoulli(x0.len(), &mut rng);
        let plus = eval(&shifted(x0, &delta, out.c), used);
        let minus = eval(&shifted(x0, &delta, -out.c), used + 1);
        used += 2;
        if let (Some(p), Some(m)) = (plus, minus) {
            magnitude += ((p - m) / (2.0 * out.c)).abs();
            pairs += 1;
        }
    }
    // An odd leftover evaluation is still spent so the accounting is fixed.
    while used < budget {
        let _ = eval(x0, used);
        used += 1;
    }
    if gains.a.is_none() {
        let avg = if pairs > 0 {
            magnitude / pairs as f64
        } else {
            0.0
        };
        let scale = (1.0 + stability).powf(gains.alpha);
        out.a = if avg > 1e-12 {
            gains.target_step * scale / avg
        } else {
            gains.target_step * scale
        };
    }
    out.evaluations = used;
    out
}

/// First-order SPSA on a noisy objective; returns the final iterate.
///
/// Spends exactly `2 * iterations` evaluations plus the calibration budget.
/// `final_free_energy` is the mean of the last perturbation pair.
pub fn spsa_minimize<F: StochasticObjective + ?Sized>(
    f: &F,
    x0: &[f64],
    settings: &OptimizerSettings,
    iterations: usize,
    seed: u64,
) -> RunRecord {
    let start = Instant::now();
    let gains = calibrate_spsa(f, x0, &settings.spsa, iterations, seed);
    let mut rng = stream(seed, &[PERTURBATION_STREAM]);
    let mut x = x0.to_vec();
    let mut evaluations = gains.evaluations;
    let mut last = f64::NAN;
    let mut skipped = 0usize;

    for k in 0..iterations {
        let ck = gains.c_k(k);
        let ak = gains.a_k(k);
        let delta = bernoulli(x.len(), &mut rng);
        let yp = f.sample(
            &shifted(&x, &delta, ck),
            derive_seed(seed, &[ITERATION_STREAM, k as u64, 0]),
        );
        let ym = f.sample(
            &shifted(&x, &delta, -ck),
            derive_seed(seed, &[ITERATION_STREAM, k as u64, 1]),
        );
        evaluations += 2;
        match (yp, ym) {
            (Ok(p), Ok(m)) if p.is_finite() && m.is_finite() => {
                let g = (p - m) / (2.0 * ck);
                for (xi, d) in x.iter_mut().zip(&delta) {
                    // Bernoulli components are their own inverse.
                    *xi -= ak * g * d;
                }
                last = 0.5 * (p + m);
            }
            (p, m) => {
                skipped += 1;
                log::warn!("SPSA iteration {k}: skipped non-finite evaluation ({p:?}, {m:?})");
            }
        }
    }

    let termination = if skipped == iterations && iterations > 0 {
        Termination::NonFinite("every SPSA evaluation was non-finite".into())
    } else {
        Termination::MaxIterations
    };
    RunRecord {
        run_index: 0,
        seed,
        initial_params: x0.to_vec(),
        final_params: x,
        final_free_energy: last,
        evaluation_count: evaluations,
        gradient_count: 0,
        calibration_evaluations: gains.evaluations,
        iteration_count: iterations,
        converged: false,
        termination,
        wall_time: start.elapsed().as_secs_f64(),
    }
}
