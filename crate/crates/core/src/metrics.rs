//! Distances between density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{hermitian_eigh, DensityMatrix, EIGEN_CLAMP};
use crate::error::{Error, Result};

/// Weight of `rho1` outside the support of `rho2` above which the relative
/// entropy is reported as infinite.
pub const SUPPORT_TOLERANCE: f64 = 1e-10;

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho2) rho1 sqrt(rho2)))^2`, clamped to `[0, 1]`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_dims(rho1, rho2)?;
    let s = rho2.sqrt();
    let inner = &s * rho1.elements() * &s;
    let (vals, _) = hermitian_eigh(&inner);
    let root: f64 = vals.iter().filter(|&&l| l > 0.0).map(|l| l.sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Half the trace norm of `rho1 - rho2`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_dims(rho1, rho2)?;
    let diff: DMatrix<Complex64> = rho1.elements() - rho2.elements();
    let (vals, _) = hermitian_eigh(&diff);
    Ok((0.5 * vals.iter().map(|l| l.abs()).sum::<f64>()).clamp(0.0, 1.0))
}

/// Quantum relative entropy `Tr rho1 (ln rho1 - ln rho2)` in nats.
///
/// Returns `+inf` when more than [`SUPPORT_TOLERANCE`] of `rho1`'s weight lies
/// on eigenvectors of `rho2` with eigenvalue at or below the clamp.
pub fn relative_entropy(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_dims(rho1, rho2)?;
    let (vals, vecs) = rho2.eigh();
    let m = rho1.elements();
    let mut cross = 0.0;
    let mut outside = 0.0;
    for (j, &l) in vals.iter().enumerate() {
        let v = vecs.column(j);
        let weight = (v.adjoint() * m * v)[(0, 0)].re;
        if l > EIGEN_CLAMP {
            cross += weight * l.ln();
        } else {
            outside += weight;
        }
    }
    if outside > SUPPORT_TOLERANCE {
        return Ok(f64::INFINITY);
    }
    let neg_entropy = -rho1.entropy();
    Ok((neg_entropy - cross).max(0.0))
}

/// Classical fidelity `(sum_i sqrt(p_i q_i))^2`.
pub fn bhattacharyya_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::arg("distributions differ in length"));
    }
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    Ok(s * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::random_unitary;
    use crate::hamiltonian::{Boundary, Hamiltonian};
    use crate::statevector::StateVector;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pure(n: usize, k: usize) -> DensityMatrix {
        DensityMatrix::from_pure(&StateVector::basis(n, k))
    }

    #[test]
    fn trivial_values() {
        let mixed = DensityMatrix::maximally_mixed(1);
        let (z, o) = (pure(1, 0), pure(1, 1));
        assert_abs_diff_eq!(fidelity(&z, &z).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fidelity(&z, &o).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mixed, &z).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&z, &z).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&z, &o).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_entropy(&z, &z).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            relative_entropy(&z, &mixed).unwrap(),
            2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(relative_entropy(&z, &o).unwrap(), f64::INFINITY);
        assert_eq!(relative_entropy(&mixed, &z).unwrap(), f64::INFINITY);
    }

    #[test]
    fn dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(1);
        let b = DensityMatrix::maximally_mixed(2);
        assert!(fidelity(&a, &b).is_err());
        assert!(trace_distance(&a, &b).is_err());
        assert!(relative_entropy(&a, &b).is_err());
    }

    #[test]
    fn fidelity_symmetric_and_sandwiched() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for i in 0..100 {
            let n = 1 + i % 3;
            let a = DensityMatrix::random_mixture(n, &mut rng);
            let b = DensityMatrix::random_mixture(n, &mut rng);
            let f = fidelity(&a, &b).unwrap();
            assert_abs_diff_eq!(f, fidelity(&b, &a).unwrap(), epsilon = 1e-9);
            let t = trace_distance(&a, &b).unwrap();
            assert!(1.0 - f.sqrt() <= t + 1e-10, "{f} {t}");
            assert!(t <= (1.0 - f).sqrt() + 1e-10, "{f} {t}");
        }
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let a = DensityMatrix::random_mixture(2, &mut rng);
            let b = DensityMatrix::random_mixture(2, &mut rng);
            let u = random_unitary(4, &mut rng);
            let f0 = fidelity(&a, &b).unwrap();
            let f1 = fidelity(&a.conjugate_by(&u), &b.conjugate_by(&u)).unwrap();
            assert_abs_diff_eq!(f0, f1, epsilon = 1e-9);
        }
    }

    #[test]
    fn diagonal_states_reduce_to_bhattacharyya() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let q = [0.25, 0.05, 0.5, 0.2];
        let a = DensityMatrix::diagonal_from_probs(&p).unwrap();
        let b = DensityMatrix::diagonal_from_probs(&q).unwrap();
        let classical: f64 = p
            .iter()
            .zip(&q)
            .map(|(x, y)| (x * y).sqrt())
            .sum::<f64>()
            .powi(2);
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), classical, epsilon = 1e-10);
        assert_abs_diff_eq!(
            bhattacharyya_fidelity(&p, &q).unwrap(),
            classical,
            epsilon = 1e-15
        );
    }

    #[test]
    fn relative_entropy_to_gibbs_is_free_energy_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ham = Hamiltonian::ising(2, 0.7, Boundary::Periodic).unwrap();
        let dense = ham.to_dense().unwrap();
        let spectrum = ham.diagonalize().unwrap();
        for &beta in &[0.3, 1.0, 2.5] {
            let gibbs = spectrum.gibbs_state(beta).unwrap();
            let f_gibbs = spectrum.exact_free_energy(beta).unwrap();
            for _ in 0..5 {
                let rho = DensityMatrix::random_mixture(2, &mut rng);
                let energy = (rho.elements() * &dense).trace().re;
                let f_rho = energy - rho.entropy() / beta;
                let s = relative_entropy(&rho, &gibbs).unwrap();
                assert_abs_diff_eq!(s, beta * (f_rho - f_gibbs), epsilon = 1e-8);
            }
        }
    }
}
