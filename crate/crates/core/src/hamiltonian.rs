//! Pauli-sum Hamiltonians, the transverse-field Ising model, and the exact
//! Gibbs-state oracle built from a dense eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};

/// Largest register the dense routines accept unless told otherwise.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Open => f.write_str("open"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            "open" | "obc" => Ok(Boundary::Open),
            other => Err(Error::arg(format!("unknown boundary {other:?}"))),
        }
    }
}

/// A weighted tensor product of single-qubit Pauli operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    factors: Vec<(usize, Pauli)>,
}

/// Bit masks describing how a Pauli string acts on a basis state:
/// `P|k> = i^num_y * (-1)^popcount(k & sign_mask) |k ^ flip_mask>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub flip_mask: usize,
    pub sign_mask: usize,
    pub num_y: u32,
}

impl PauliMasks {
    /// The factor `i^num_y`, which is `±1` or `±i`.
    pub fn y_phase(&self) -> Complex64 {
        match self.num_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Phase picked up by basis state `k`, excluding the coefficient.
    #[inline]
    pub fn phase(&self, k: usize) -> Complex64 {
        let sign = if (k & self.sign_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        self.y_phase() * sign
    }
}

impl PauliTerm {
    pub fn new(coefficient: f64, mut factors: Vec<(usize, Pauli)>) -> Result<Self> {
        factors.sort_by_key(|&(q, _)| q);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::arg("a qubit appears twice in a Pauli term"));
        }
        Ok(Self {
            coefficient,
            factors,
        })
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    /// One past the highest qubit the term touches (0 for the identity).
    pub fn support_len(&self) -> usize {
        self.factors.last().map_or(0, |&(q, _)| q + 1)
    }

    pub fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks {
            flip_mask: 0,
            sign_mask: 0,
            num_y: 0,
        };
        for &(q, p) in &self.factors {
            let bit = 1usize << q;
            match p {
                Pauli::X => m.flip_mask |= bit,
                Pauli::Y => {
                    m.flip_mask |= bit;
                    m.sign_mask |= bit;
                    m.num_y += 1;
                }
                Pauli::Z => m.sign_mask |= bit,
            }
        }
        m
    }

    /// The same term acting on qubits moved up by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            coefficient: self.coefficient,
            factors: self.factors.iter().map(|&(q, p)| (q + offset, p)).collect(),
        }
    }

    /// Whether the term commutes with the parity operator `prod_i Z_i`.
    pub fn preserves_parity(&self) -> bool {
        self.factors
            .iter()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .count()
            % 2
            == 0
    }
}

/// Parameters of an Ising instance, kept for provenance in result files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub h: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
    ising: Option<IsingParams>,
}

impl Hamiltonian {
    pub fn new(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::arg("Hamiltonian needs at least one qubit"));
        }
        if let Some(t) = terms.iter().find(|t| t.support_len() > num_qubits) {
            return Err(Error::QubitIndex {
                index: t.support_len() - 1,
                num_qubits,
            });
        }
        Ok(Self {
            num_qubits,
            terms,
            ising: None,
        })
    }

    /// `H = -sum_bonds X_i X_{i+1} - h sum_i Z_i`.
    ///
    /// A periodic chain closes the ring with the bond `(n-1, 0)`, except for
    /// `n = 2` where that bond coincides with `(0, 1)` and is counted once.
    pub fn ising(n: usize, h: f64, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::arg(format!("Ising chain needs n >= 2, got {n}")));
        }
        let num_bonds = match boundary {
            Boundary::Periodic if n > 2 => n,
            _ => n - 1,
        };
        let mut terms = Vec::with_capacity(num_bonds + n);
        for i in 0..num_bonds {
            terms.push(PauliTerm::new(
                -1.0,
                vec![(i, Pauli::X), ((i + 1) % n, Pauli::X)],
            )?);
        }
        if h != 0.0 {
            for i in 0..n {
                terms.push(PauliTerm::new(-h, vec![(i, Pauli::Z)])?);
            }
        }
        Ok(Self {
            num_qubits: n,
            terms,
            ising: Some(IsingParams { h, boundary }),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn ising_params(&self) -> Option<IsingParams> {
        self.ising
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_limited(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_limited(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        if self.num_qubits > limit {
            return Err(Error::Resource(format!(
                "{} qubits exceeds the dense limit of {limit}",
                self.num_qubits
            )));
        }
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            let masks = term.masks();
            for k in 0..dim {
                m[(k ^ masks.flip_mask, k)] += masks.phase(k) * term.coefficient;
            }
        }
        Ok(m)
    }

    fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.masks().num_y % 2 == 0)
    }

    fn check_terms_finite(&self) -> Result<()> {
        if self.terms.iter().any(|t| !t.coefficient.is_finite()) {
            return Err(Error::Numeric("non-finite Hamiltonian coefficient".into()));
        }
        Ok(())
    }

    /// Full eigendecomposition, energies ascending.
    pub fn diagonalize(&self) -> Result<Spectrum> {
        self.check_terms_finite()?;
        let dense = self.to_dense()?;
        let dim = dense.nrows();
        let skew = (&dense - dense.adjoint()).norm();
        if !skew.is_finite() || skew > 1e-10 {
            return Err(Error::Numeric(format!(
                "Hamiltonian is not Hermitian (|H - H^dag| = {skew:e})"
            )));
        }
        let (values, vectors) = if self.is_real() {
            let real = dense.map(|z| z.re);
            let eig = SymmetricEigen::new(real);
            (
                eig.eigenvalues,
                eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            )
        } else {
            let eig = SymmetricEigen::new(dense);
            (eig.eigenvalues, eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let energies = order.iter().map(|&i| values[i]).collect();
        let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| vectors[(r, order[c])]);
        Ok(Spectrum {
            energies,
            eigenvectors,
        })
    }

    /// Ascending eigenvalues only.
    ///
    /// Parity-preserving real Hamiltonians are split into their even and odd
    /// sectors first, which is what makes 12-qubit chains affordable.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_terms_finite()?;
        if self.num_qubits > DEFAULT_DENSE_LIMIT {
            return Err(Error::Resource(format!(
                "{} qubits exceeds the dense limit of {DEFAULT_DENSE_LIMIT}",
                self.num_qubits
            )));
        }
        if !(self.is_real() && self.terms.iter().all(PauliTerm::preserves_parity)) {
            return Ok(self.diagonalize()?.energies);
        }
        let dim = 1usize << self.num_qubits;
        let mut energies = Vec::with_capacity(dim);
        for parity in [0u32, 1] {
            let sector: Vec<usize> = (0..dim).filter(|k| k.count_ones() % 2 == parity).collect();
            let mut position = vec![usize::MAX; dim];
            for (i, &k) in sector.iter().enumerate() {
                position[k] = i;
            }
            let mut block = DMatrix::<f64>::zeros(sector.len(), sector.len());
            for term in &self.terms {
                let masks = term.masks();
                for (col, &k) in sector.iter().enumerate() {
                    let row = position[k ^ masks.flip_mask];
                    block[(row, col)] += masks.phase(k).re * term.coefficient;
                }
            }
            energies.extend(block.symmetric_eigenvalues().iter().copied());
        }
        energies.sort_by(f64::total_cmp);
        Ok(energies)
    }

    /// Frobenius norm of `[H, P]` with `P = prod_i Z_i`.
    pub fn parity_commutator_norm(&self) -> Result<f64> {
        let dense = self.to_dense()?;
        let parity = |k: usize| {
            if k.count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        };
        let mut sum = 0.0;
        for ((r, c), v) in dense
            .iter()
            .enumerate()
            .map(|(i, v)| ((i % dense.nrows(), i / dense.nrows()), v))
        {
            sum += (v * (parity(c) - parity(r))).norm_sqr();
        }
        Ok(sum.sqrt())
    }
}

/// Eigenpairs of a Hamiltonian; column `i` of `eigenvectors` is `|E_i>`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn boltzmann_probs(&self, beta: f64) -> Result<Vec<f64>> {
        boltzmann_probs(&self.energies, beta)
    }

    pub fn log_partition_function(&self, beta: f64) -> Result<f64> {
        log_partition_function(&self.energies, beta)
    }

    /// `-ln(Z)/beta`; undefined at `beta = 0`.
    pub fn exact_free_energy(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::arg(format!(
                "free energy needs a finite beta > 0, got {beta}"
            )));
        }
        Ok(-self.log_partition_function(beta)? / beta)
    }

    /// `rho_beta = sum_i p_i |E_i><E_i|`.
    pub fn gibbs_state(&self, beta: f64) -> Result<DensityMatrix> {
        let probs = self.boltzmann_probs(beta)?;
        if beta == 0.0 {
            return Ok(DensityMatrix::maximally_mixed(self.num_qubits()));
        }
        let v = &self.eigenvectors;
        let dim = self.dim();
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        for (i, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let col = v.column(i);
            rho += (col * col.adjoint()) * Complex64::new(p, 0.0);
        }
        DensityMatrix::from_matrix(rho)
    }

    pub fn oracle(&self, beta: f64) -> Result<GibbsOracle> {
        GibbsOracle::new(self.clone(), beta)
    }

    pub fn to_fixture(&self, hamiltonian: &Hamiltonian) -> SpectrumFixture {
        let params = hamiltonian.ising_params();
        SpectrumFixture {
            n: hamiltonian.num_qubits(),
            h: params.map(|p| p.h),
            boundary: params.map(|p| p.boundary),
            energies: self.energies.clone(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::arg(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    Ok(())
}

/// Boltzmann weights evaluated relative to the lowest energy so that large
/// `beta` cannot overflow.
pub fn boltzmann_probs(energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

pub fn log_partition_function(energies: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: f64 = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).sum();
    Ok(shifted.ln() - beta * e_min)
}

/// Exact thermal quantities of one Hamiltonian at one temperature.
#[derive(Debug, Clone)]
pub struct GibbsOracle {
    pub spectrum: Spectrum,
    pub beta: f64,
    pub log_partition_function: f64,
    pub probabilities: Vec<f64>,
}

impl GibbsOracle {
    pub fn new(spectrum: Spectrum, beta: f64) -> Result<Self> {
        let probabilities = spectrum.boltzmann_probs(beta)?;
        let log_partition_function = spectrum.log_partition_function(beta)?;
        Ok(Self {
            spectrum,
            beta,
            log_partition_function,
            probabilities,
        })
    }

    /// `Z_beta`; may overflow to infinity for very low temperatures, in
    /// which case use `log_partition_function`.
    pub fn partition_function(&self) -> f64 {
        self.log_partition_function.exp()
    }

    pub fn free_energy(&self) -> Result<f64> {
        self.spectrum.exact_free_energy(self.beta)
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        self.spectrum.gibbs_state(self.beta)
    }
}

/// Ascending energies with the model metadata, for regression fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFixture {
    pub n: usize,
    pub h: Option<f64>,
    pub boundary: Option<Boundary>,
    pub energies: Vec<f64>,
}
