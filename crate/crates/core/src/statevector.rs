//! Dense statevector simulation of R_Y, CNOT, R_P and the basis-change
//! gates used for measurement, plus reductions and shot sampling.
//!
//! Gates update amplitudes in place with strided index arithmetic; no gate
//! matrix is ever materialized over the full register.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hamiltonian::PauliTerm;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Inserts a zero bit at position `bit` of `k`.
#[inline(always)]
fn insert_zero(k: usize, bit: usize) -> usize {
    let low = k & ((1usize << bit) - 1);
    ((k >> bit) << (bit + 1)) | low
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1usize << num_qubits];
        amplitudes[index] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    /// Builds a state from explicit amplitudes, which must be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::arg(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::arg(format!(
                "state is not normalized (|psi|^2 = {norm})"
            )));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitIndex {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize, gate: &str) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::InvalidGate(format!(
                "{gate} needs two distinct qubits, got {a} twice"
            )));
        }
        Ok(())
    }

    /// Applies a real 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    fn apply_real_1q(&mut self, q: usize, m00: f64, m01: f64, m10: f64, m11: f64) {
        let stride = 1usize << q;
        for k in 0..self.amplitudes.len() / 2 {
            let i0 = insert_zero(k, q);
            let i1 = i0 | stride;
            let a0 = self.amplitudes[i0];
            let a1 = self.amplitudes[i1];
            self.amplitudes[i0] = a0 * m00 + a1 * m01;
            self.amplitudes[i1] = a0 * m10 + a1 * m11;
        }
    }

    /// `R_Y(theta) = cos(theta/2) I - i sin(theta/2) Y`.
    pub fn apply_ry(&mut self, q: usize, theta: f64) -> Result<()> {
        self.check_qubit(q)?;
        let (s, c) = (0.5 * theta).sin_cos();
        self.apply_real_1q(q, c, -s, s, c);
        Ok(())
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        self.apply_real_1q(q, r, r, r, -r);
        Ok(())
    }

    /// `S^dag = diag(1, -i)`.
    pub fn apply_sdg(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        for (k, a) in self.amplitudes.iter_mut().enumerate() {
            if k & mask != 0 {
                *a = Complex64::new(a.im, -a.re);
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target, "CNOT")?;
        let (lo, hi) = (control.min(target), control.max(target));
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for k in 0..self.amplitudes.len() / 4 {
            let base = insert_zero(insert_zero(k, lo), hi) | cbit;
            self.amplitudes.swap(base, base | tbit);
        }
        Ok(())
    }

    /// Parity-preserving two-qubit rotation `R_YX(phi_j) R_XY(phi_i)`.
    ///
    /// In the local basis `|b(q1) b(q2)>` the gate acts as
    ///
    /// ```text
    /// [  C  0  0  S ]      C, S = cos, sin((phi_i + phi_j) / 2)
    /// [  0  c -s  0 ]      c, s = cos, sin((phi_i - phi_j) / 2)
    /// [  0  s  c  0 ]
    /// [ -S  0  0  C ]
    /// ```
    pub fn apply_rp(&mut self, q1: usize, q2: usize, phi_i: f64, phi_j: f64) -> Result<()> {
        self.check_pair(q1, q2, "R_P")?;
        let (ss, cs) = (0.5 * (phi_i + phi_j)).sin_cos();
        let (sd, cd) = (0.5 * (phi_i - phi_j)).sin_cos();
        let (lo, hi) = (q1.min(q2), q1.max(q2));
        let b1 = 1usize << q1;
        let b2 = 1usize << q2;
        let amps = &mut self.amplitudes;
        for k in 0..amps.len() / 4 {
            let i00 = insert_zero(insert_zero(k, lo), hi);
            let i01 = i00 | b2;
            let i10 = i00 | b1;
            let i11 = i00 | b1 | b2;
            let (a00, a01, a10, a11) = (amps[i00], amps[i01], amps[i10], amps[i11]);
            amps[i00] = a00 * cs + a11 * ss;
            amps[i11] = a11 * cs - a00 * ss;
            amps[i01] = a01 * cd - a10 * sd;
            amps[i10] = a01 * sd + a10 * cd;
        }
        Ok(())
    }

    fn check_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != subset.len() {
            return Err(Error::arg("qubit subset contains duplicates"));
        }
        for &q in &sorted {
            self.check_qubit(q)?;
        }
        Ok(sorted)
    }

    /// Gathers the bits of `k` at the (ascending) positions in `qubits` into
    /// a compact index whose bit `j` is qubit `qubits[j]`.
    #[inline]
    fn gather(k: usize, qubits: &[usize]) -> usize {
        qubits
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &q)| acc | (((k >> q) & 1) << j))
    }

    /// Reduced density matrix of the kept qubits; kept qubit `keep[j]`
    /// (ascending) becomes bit `j` of the reduced index.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.check_subset(keep)?;
        if keep.is_empty() || keep.len() == self.num_qubits {
            return Err(Error::arg(
                "partial trace needs a nonempty, strict subset of the qubits",
            ));
        }
        let traced: Vec<usize> = (0..self.num_qubits).filter(|q| !keep.contains(q)).collect();
        let dk = 1usize << keep.len();
        let dt = 1usize << traced.len();
        // Column t holds the kept-register amplitudes for traced configuration t.
        let mut blocks = DMatrix::<Complex64>::zeros(dk, dt);
        for (k, &a) in self.amplitudes.iter().enumerate() {
            blocks[(Self::gather(k, &keep), Self::gather(k, &traced))] = a;
        }
        DensityMatrix::from_matrix(&blocks * blocks.adjoint())
    }

    /// Computational-basis probabilities of the whole register.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Outcome distribution of measuring only `subset`; bit `j` of the
    /// outcome index is qubit `subset[j]` after sorting.
    pub fn marginal_probabilities(&self, subset: &[usize]) -> Result<Vec<f64>> {
        let subset = self.check_subset(subset)?;
        if subset.is_empty() {
            return Err(Error::arg("marginal needs a nonempty qubit subset"));
        }
        let mut probs = vec![0.0; 1usize << subset.len()];
        for (k, a) in self.amplitudes.iter().enumerate() {
            probs[Self::gather(k, &subset)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Marginal over the contiguous block `start..start + len`, which needs
    /// only shifts and masks.
    pub fn register_probabilities(&self, start: usize, len: usize) -> Result<Vec<f64>> {
        if len == 0 || start + len > self.num_qubits {
            return Err(Error::arg(format!(
                "register {start}..{} out of range for {} qubits",
                start + len,
                self.num_qubits
            )));
        }
        let mask = (1usize << len) - 1;
        let mut probs = vec![0.0; 1usize << len];
        for (k, a) in self.amplitudes.iter().enumerate() {
            probs[(k >> start) & mask] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// `<psi| P |psi>` for a weighted Pauli string (coefficient included).
    pub fn expectation_pauli(&self, term: &PauliTerm) -> Result<f64> {
        if term.support_len() > self.num_qubits {
            return Err(Error::QubitIndex {
                index: term.support_len() - 1,
                num_qubits: self.num_qubits,
            });
        }
        let masks = term.masks();
        let mut acc = ZERO;
        if masks.num_y == 0 {
            // Real phases: avoid the complex multiply in the common case.
            let mut re = 0.0;
            for (k, a) in self.amplitudes.iter().enumerate() {
                let b = self.amplitudes[k ^ masks.flip_mask];
                let prod = (b.conj() * a).re;
                if (k & masks.sign_mask).count_ones().is_multiple_of(2) {
                    re += prod;
                } else {
                    re -= prod;
                }
            }
            acc.re = re;
        } else {
            for (k, a) in self.amplitudes.iter().enumerate() {
                acc += self.amplitudes[k ^ masks.flip_mask].conj() * masks.phase(k) * a;
            }
        }
        Ok(term.coefficient * acc.re)
    }
}

/// Draws one multinomial sample of `shots` outcomes from `probabilities`.
///
/// Uses the conditional-binomial decomposition so the cost is linear in the
/// number of outcomes rather than in the number of shots.
pub fn sample_counts(probabilities: &[f64], shots: u64, rng_seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::arg("shots must be positive"));
    }
    if probabilities.iter().any(|&p| p < -1e-12 || !p.is_finite()) {
        return Err(Error::arg("probabilities must be finite and nonnegative"));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::arg(format!("probabilities sum to {total}, not 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts = vec![0u64; probabilities.len()];
    let mut remaining_shots = shots;
    let mut remaining_mass = total;
    let last = probabilities.len() - 1;
    for (i, &p) in probabilities.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining_shots;
            break;
        }
        let p = p.max(0.0);
        let cond = if remaining_mass > 0.0 {
            (p / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(remaining_shots, cond)
            .map_err(|e| Error::Numeric(format!("binomial sampler: {e}")))?
            .sample(&mut rng);
        counts[i] = k;
        remaining_shots -= k;
        remaining_mass -= p;
    }
    Ok(counts)
}
