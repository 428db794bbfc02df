use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::statevector::StateVector;

/// Eigenvalues below this are treated as numerical dust when forming
/// matrix functions such as `sqrt(rho)` and `ln(rho)`.
pub const EIGEN_CLAMP: f64 = 1e-14;

/// A `2^n x 2^n` Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking its shape; see [`Self::validate`] for
    /// the physical checks.
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        let dim = elements.nrows();
        if dim != elements.ncols() || !dim.is_power_of_two() {
            return Err(Error::arg(format!(
                "density matrix must be square with power-of-two size, got {}x{}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            elements,
        })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let v = DVector::from_column_slice(state.amplitudes());
        Self {
            num_qubits: state.num_qubits(),
            elements: &v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            num_qubits,
            elements: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn diagonal_from_probs(probs: &[f64]) -> Result<Self> {
        let m = DMatrix::from_diagonal(&DVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        Self::from_matrix(m)
    }

    /// A convex mixture of `2^n` Haar-ish random pure states with weights
    /// drawn uniformly from the simplex.
    pub fn random_mixture<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << num_qubits;
        let raw: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for w in raw {
            let v = random_pure_vector(dim, rng);
            m += (&v * v.adjoint()) * Complex64::new(w / total, 0.0);
        }
        Self {
            num_qubits,
            elements: m,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn trace(&self) -> Complex64 {
        self.elements.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.elements.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.elements - self.elements.adjoint()).norm()
    }

    /// Checks Hermiticity, unit trace, and positivity at tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::Numeric(format!("not Hermitian: {herm:e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::Numeric(format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::Numeric(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Hermitian eigendecomposition with eigenvalues ascending.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        hermitian_eigh(&self.elements)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = SymmetricEigen::new(self.hermitian_part())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > EIGEN_CLAMP)
            .map(|l| -l * l.ln())
            .sum()
    }

    /// `f(rho)` through the eigendecomposition; eigenvalues are clamped at
    /// zero first.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let (vals, vecs) = self.eigh();
        let fd = DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&l| Complex64::new(f(l.max(0.0)), 0.0)),
        );
        let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * fd[c]);
        scaled * vecs.adjoint()
    }

    pub fn sqrt(&self) -> DMatrix<Complex64> {
        self.map_spectrum(|l| if l > EIGEN_CLAMP { l.sqrt() } else { 0.0 })
    }

    /// `U rho U^dag`.
    pub fn conjugate_by(&self, unitary: &DMatrix<Complex64>) -> Self {
        Self {
            num_qubits: self.num_qubits,
            elements: unitary * &self.elements * unitary.adjoint(),
        }
    }
}

pub(crate) fn hermitian_eigh(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let dim = m.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub(crate) fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let mut v = DVector::from_fn(dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

/// A unitary drawn from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    g.qr().q()
}
