//! The Helmholtz free-energy objective `Tr(H rho_S) - S(rho_A) / beta`.
//!
//! The energy is measured on the system register; the entropy comes from the
//! computational-basis distribution of the ancillas, which shares its
//! spectrum with the system state.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::ansatz::{AnsatzConfig, Op, ParameterVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Pauli, PauliTerm};
use crate::rng::derive_seed;
use crate::statevector::{sample_counts, StateVector};

pub const DEFAULT_SHOTS: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyEstimator {
    /// `-sum f ln f` over observed frequencies.
    #[default]
    PlugIn,
    /// Plug-in plus `(K - 1) / (2 N)` for `K` observed outcomes.
    MillerMadow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[derive(Default)]
pub enum EvaluationMode {
    #[default]
    Exact,
    Shots {
        shots_per_circuit: u64,
        #[serde(default)]
        entropy_estimator: EntropyEstimator,
    },
}

impl EvaluationMode {
    pub fn shots(shots_per_circuit: u64) -> Self {
        EvaluationMode::Shots {
            shots_per_circuit,
            entropy_estimator: EntropyEstimator::PlugIn,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EvaluationMode::Exact => "exact",
            EvaluationMode::Shots { .. } => "shots",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyBreakdown {
    pub energy: f64,
    /// Nats.
    pub entropy: f64,
    pub beta: f64,
    pub free_energy: f64,
}

impl FreeEnergyBreakdown {
    fn new(energy: f64, entropy: f64, beta: f64) -> Self {
        Self {
            energy,
            entropy,
            beta,
            free_energy: energy - entropy / beta,
        }
    }
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn von_neumann_from_probs(p: &[f64]) -> Result<f64> {
    if let Some(&bad) = p.iter().find(|&&x| x < -1e-12 || !x.is_finite()) {
        return Err(Error::arg(format!(
            "probability {bad} is negative or non-finite"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::arg(format!("probabilities sum to {total}, not 1")));
    }
    Ok(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum())
}

/// Qubit-wise commuting group of Hamiltonian terms measured in one circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    /// Measurement axis per system qubit; `None` means computational basis.
    pub basis: Vec<Option<Pauli>>,
    /// Indices into the Hamiltonian's term list.
    pub terms: Vec<usize>,
}

/// Greedy qubit-wise-commuting grouping. For the Ising model this yields the
/// all-X bond group and the all-Z field group.
pub fn group_terms(num_qubits: usize, terms: &[PauliTerm]) -> Vec<MeasurementGroup> {
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (idx, term) in terms.iter().enumerate() {
        let fits = |g: &MeasurementGroup| {
            term.factors()
                .iter()
                .all(|&(q, p)| g.basis[q].is_none_or(|b| b == p))
        };
        let slot = match groups.iter().position(fits) {
            Some(i) => i,
            None => {
                groups.push(MeasurementGroup {
                    basis: vec![None; num_qubits],
                    terms: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[slot];
        for &(q, p) in term.factors() {
            g.basis[q] = Some(p);
        }
        g.terms.push(idx);
    }
    if groups.is_empty() {
        groups.push(MeasurementGroup {
            basis: vec![None; num_qubits],
            terms: Vec::new(),
        });
    }
    groups
}

/// A shot-sampled objective value with its energy standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotEvaluation {
    pub breakdown: FreeEnergyBreakdown,
    pub energy_standard_error: f64,
    pub circuits: usize,
    pub shots_per_circuit: u64,
}

/// The free-energy minimization problem for one Hamiltonian, circuit shape,
/// and temperature.
#[derive(Debug, Clone)]
pub struct FreeEnergyProblem {
    config: AnsatzConfig,
    hamiltonian: Hamiltonian,
    beta: f64,
    system_terms: Vec<PauliTerm>,
    circuit: Vec<Op>,
    groups: Vec<MeasurementGroup>,
}

impl FreeEnergyProblem {
    pub fn new(config: AnsatzConfig, hamiltonian: Hamiltonian, beta: f64) -> Result<Self> {
        config.validate()?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::arg(format!(
                "the objective needs a finite beta > 0, got {beta}"
            )));
        }
        if hamiltonian.num_qubits() != config.n {
            return Err(Error::arg(format!(
                "Hamiltonian acts on {} qubits but the system register has {}",
                hamiltonian.num_qubits(),
                config.n
            )));
        }
        let system_terms = hamiltonian
            .terms()
            .iter()
            .map(|t| t.shifted(config.n))
            .collect();
        let groups = group_terms(config.n, hamiltonian.terms());
        Ok(Self {
            circuit: config.circuit(),
            config,
            hamiltonian,
            beta,
            system_terms,
            groups,
        })
    }

    pub fn config(&self) -> &AnsatzConfig {
        &self.config
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_params(&self) -> usize {
        self.config.num_params()
    }

    pub fn measurement_groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    fn check_len(&self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        Ok(())
    }

    pub fn prepare(&self, flat: &[f64]) -> Result<StateVector> {
        self.check_len(flat)?;
        let mut state = StateVector::zero(self.config.total_qubits());
        for op in &self.circuit {
            op.apply(&mut state, flat)?;
        }
        Ok(state)
    }

    fn energy_of(&self, state: &StateVector) -> Result<f64> {
        self.system_terms
            .iter()
            .map(|t| state.expectation_pauli(t))
            .sum()
    }

    fn ancilla_probs(&self, state: &StateVector) -> Result<Vec<f64>> {
        state.register_probabilities(0, self.config.n)
    }

    pub fn evaluate_exact(&self, params: &ParameterVector) -> Result<FreeEnergyBreakdown> {
        params.check(&self.config)?;
        self.evaluate_exact_flat(&params.to_flat())
    }

    pub fn evaluate_exact_flat(&self, flat: &[f64]) -> Result<FreeEnergyBreakdown> {
        let state = self.prepare(flat)?;
        let energy = self.energy_of(&state)?;
        let entropy = von_neumann_from_probs(&self.ancilla_probs(&state)?)?;
        Ok(FreeEnergyBreakdown::new(energy, entropy, self.beta))
    }

    /// Gradient of the exact free energy.
    ///
    /// Every parameter enters through a single rotation generated by a
    /// Pauli string, so the energy derivative is
    /// `[E(x + pi/2) - E(x - pi/2)] / 2`. The ancilla probabilities are
    /// projector expectations and obey the same rule; the entropy derivative
    /// follows by the chain rule `dS = -sum (ln p_i + 1) dp_i`.
    pub fn gradient_exact(&self, flat: &[f64]) -> Result<Vec<f64>> {
        let (energy, entropy) = self.gradient_parts(flat)?;
        Ok(energy
            .iter()
            .zip(&entropy)
            .map(|(e, s)| e - s / self.beta)
            .collect())
    }

    /// `dS/dx` for the ancilla entropy. The entropy does not depend on
    /// `phi`, so those components are exactly zero.
    pub fn entropy_gradient(&self, flat: &[f64]) -> Result<Vec<f64>> {
        Ok(self.gradient_parts(flat)?.1)
    }

    fn gradient_parts(&self, flat: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(flat)?;
        let num_theta = self.config.num_theta();
        let mut energy_grad = vec![0.0; flat.len()];
        let mut entropy_grad = vec![0.0; flat.len()];
        let mut prefix = StateVector::zero(self.config.total_qubits());
        let mut shifted = flat.to_vec();
        let base_probs = self.ancilla_probs(&self.prepare(flat)?)?;
        for (pos, op) in self.circuit.iter().enumerate() {
            let pair;
            let indices: &[usize] = match op {
                Op::Ry { param, .. } => std::slice::from_ref(param),
                Op::Rp {
                    param_i, param_j, ..
                } => {
                    pair = [*param_i, *param_j];
                    &pair
                }
                Op::Cnot { .. } => &[],
            };
            for &k in indices {
                let mut energies = [0.0; 2];
                let mut probs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
                for (slot, delta) in [FRAC_PI_2, -FRAC_PI_2].into_iter().enumerate() {
                    shifted[k] = flat[k] + delta;
                    let mut s = prefix.clone();
                    for later in &self.circuit[pos..] {
                        later.apply(&mut s, &shifted)?;
                    }
                    energies[slot] = self.energy_of(&s)?;
                    if k < num_theta {
                        probs[slot] = self.ancilla_probs(&s)?;
                    }
                }
                shifted[k] = flat[k];
                energy_grad[k] = 0.5 * (energies[0] - energies[1]);
                if k < num_theta {
                    entropy_grad[k] = base_probs
                        .iter()
                        .zip(probs[0].iter().zip(&probs[1]))
                        .filter(|(&pi, _)| pi > 0.0)
                        .map(|(&pi, (&up, &down))| -(pi.ln() + 1.0) * 0.5 * (up - down))
                        .sum();
                }
            }
            op.apply(&mut prefix, flat)?;
        }
        Ok((energy_grad, entropy_grad))
    }

    /// Shot-sampled free energy.
    ///
    /// Each measurement group is one circuit: the system qubits are rotated
    /// into the group's basis and the whole register is sampled
    /// `shots_per_circuit` times. The ancilla bits of the first circuit give
    /// the entropy estimate. Circuit `c` draws from the stream
    /// `derive_seed(stream, [c])`.
    pub fn evaluate_shots(
        &self,
        flat: &[f64],
        shots_per_circuit: u64,
        estimator: EntropyEstimator,
        stream: u64,
    ) -> Result<ShotEvaluation> {
        if shots_per_circuit == 0 {
            return Err(Error::arg("shots must be positive"));
        }
        let n = self.config.n;
        let base = self.prepare(flat)?;
        let terms = self.hamiltonian.terms();
        let mut energy = 0.0;
        let mut variance = 0.0;
        let mut entropy = 0.0;
        let nshots = shots_per_circuit as f64;
        for (c, group) in self.groups.iter().enumerate() {
            let mut state = base.clone();
            for (q, axis) in group.basis.iter().enumerate() {
                match axis {
                    Some(Pauli::X) => state.apply_h(n + q)?,
                    Some(Pauli::Y) => {
                        state.apply_sdg(n + q)?;
                        state.apply_h(n + q)?;
                    }
                    Some(Pauli::Z) | None => {}
                }
            }
            let counts = sample_counts(
                &state.probabilities(),
                shots_per_circuit,
                derive_seed(stream, &[c as u64]),
            )?;
            // Per-outcome value of the group observable sum_t c_t P_t.
            let mut mean = 0.0;
            let mut second = 0.0;
            for (k, &count) in counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let sys = k >> n;
                let value: f64 = group
                    .terms
                    .iter()
                    .map(|&t| {
                        let term = &terms[t];
                        let mask = term
                            .factors()
                            .iter()
                            .fold(0usize, |m, &(q, _)| m | (1 << q));
                        let sign = if (sys & mask).count_ones().is_multiple_of(2) {
                            1.0
                        } else {
                            -1.0
                        };
                        term.coefficient * sign
                    })
                    .sum();
                let w = count as f64 / nshots;
                mean += w * value;
                second += w * value * value;
            }
            energy += mean;
            variance += (second - mean * mean).max(0.0) / nshots;
            if c == 0 {
                let mut anc = vec![0u64; 1usize << n];
                for (k, &count) in counts.iter().enumerate() {
                    anc[k & ((1usize << n) - 1)] += count;
                }
                entropy = estimate_entropy(&anc, estimator);
            }
        }
        Ok(ShotEvaluation {
            breakdown: FreeEnergyBreakdown::new(energy, entropy, self.beta),
            energy_standard_error: variance.sqrt(),
            circuits: self.groups.len(),
            shots_per_circuit,
        })
    }
}

/// Entropy of an empirical distribution; unobserved outcomes contribute 0.
pub fn estimate_entropy(counts: &[u64], estimator: EntropyEstimator) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let plug_in: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / n;
            -f * f.ln()
        })
        .sum();
    match estimator {
        EntropyEstimator::PlugIn => plug_in,
        EntropyEstimator::MillerMadow => {
            let observed = counts.iter().filter(|&&c| c > 0).count() as f64;
            plug_in + (observed - 1.0) / (2.0 * n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Boundary;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize, h: f64, beta: f64) -> FreeEnergyProblem {
        FreeEnergyProblem::new(
            AnsatzConfig::standard(n),
            Hamiltonian::ising(n, h, Boundary::Periodic).unwrap(),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn entropy_of_simple_distributions() {
        assert_eq!(von_neumann_from_probs(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            von_neumann_from_probs(&[0.25; 4]).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            von_neumann_from_probs(&[0.5, 0.5, 0.0, 0.0]).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert!(von_neumann_from_probs(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn vacuum_energy_is_field_energy() {
        for n in 3..=4 {
            let p = problem(n, 0.7, 1.0);
            let b = p.evaluate_exact_flat(&vec![0.0; p.num_params()]).unwrap();
            assert_eq!(b.entropy, 0.0);
            assert_abs_diff_eq!(b.energy, -(n as f64) * 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_must_be_positive() {
        let cfg = AnsatzConfig::standard(2);
        let h = Hamiltonian::ising(2, 0.5, Boundary::Periodic).unwrap();
        assert!(FreeEnergyProblem::new(cfg, h.clone(), 0.0).is_err());
        assert!(FreeEnergyProblem::new(cfg, h, -1.0).is_err());
    }

    #[test]
    fn ising_groups_into_two_circuits() {
        for n in 2..=6 {
            assert_eq!(problem(n, 0.5, 1.0).measurement_groups().len(), 2);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=3 {
            let p = problem(n, 0.5, 1.0);
            let x = ParameterVector::random(p.config(), &mut rng).to_flat();
            let g = p.gradient_exact(&x).unwrap();
            let step = 1e-5;
            for k in 0..x.len() {
                let mut up = x.clone();
                let mut down = x.clone();
                up[k] += step;
                down[k] -= step;
                let fd = (p.evaluate_exact_flat(&up).unwrap().free_energy
                    - p.evaluate_exact_flat(&down).unwrap().free_energy)
                    / (2.0 * step);
                assert!((fd - g[k]).abs() < 1e-6, "param {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn vacuum_field_group_is_deterministic() {
        let p = problem(3, 0.4, 1.0);
        let zero = vec![0.0; p.num_params()];
        let eval = p
            .evaluate_shots(&zero, 256, EntropyEstimator::PlugIn, 3)
            .unwrap();
        // bonds in the X basis are random on |000>, fields are exact
        let field_group = &p.measurement_groups()[1];
        assert!(field_group
            .terms
            .iter()
            .all(|&t| p.hamiltonian().terms()[t].factors().len() == 1));
        assert_eq!(eval.breakdown.entropy, 0.0);
        assert_eq!(eval.circuits, 2);

        let fields = Hamiltonian::new(
            3,
            (0..3)
                .map(|q| PauliTerm::new(-0.4, vec![(q, Pauli::Z)]).unwrap())
                .collect(),
        )
        .unwrap();
        let only_fields = FreeEnergyProblem::new(AnsatzConfig::standard(3), fields, 1.0).unwrap();
        let e = only_fields
            .evaluate_shots(&zero, 64, EntropyEstimator::PlugIn, 9)
            .unwrap();
        assert_eq!(e.breakdown.energy, -3.0 * 0.4);
        assert_eq!(e.energy_standard_error, 0.0);
    }

    #[test]
    fn miller_madow_adds_bias_term() {
        let counts = [10u64, 30, 0, 60];
        let plug = estimate_entropy(&counts, EntropyEstimator::PlugIn);
        let mm = estimate_entropy(&counts, EntropyEstimator::MillerMadow);
        assert_abs_diff_eq!(mm - plug, 2.0 / 200.0, epsilon = 1e-15);
    }
}
