//! Uhlmann fidelity `F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::Result;
use crate::state::{check_same_shape, DensityMatrix, StateVector};

/// States with `Tr rho^2` this close to one are handled as pure.
const PURITY_TOL: f64 = 1e-12;

/// Fidelity of two density matrices of equal shape, clamped to `[0, 1]`.
///
/// When either argument is pure, `F = <psi|sigma|psi>` is evaluated directly,
/// which avoids square roots of numerically-zero eigenvalues.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_shape(rho.shape(), sigma.shape())?;
    let f = if let Some(psi) = pure_component(rho.entries()) {
        expectation(sigma.entries(), &psi)
    } else if let Some(phi) = pure_component(sigma.entries()) {
        expectation(rho.entries(), &phi)
    } else {
        let root = psd_sqrt(sigma.entries());
        let m = &root * rho.entries() * &root;
        let tr: f64 = hermitian_eigenvalues(&m).iter().map(|&l| l.max(0.0).sqrt()).sum();
        tr * tr
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `|<psi|phi>|^2`.
pub fn pure_fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr())
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

fn pure_component(m: &DMatrix<Complex64>) -> Option<nalgebra::DVector<Complex64>> {
    let purity: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    if (purity - 1.0).abs() > PURITY_TOL {
        return None;
    }
    // m = |psi><psi|, so column k is psi * conj(psi_k)
    let k = m.diagonal().map(|z| z.re).imax();
    let scale = m[(k, k)].re.sqrt();
    Some(m.column(k).unscale(scale))
}

fn expectation(m: &DMatrix<Complex64>, v: &nalgebra::DVector<Complex64>) -> f64 {
    v.dotc(&(m * v)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density_matrix, random_state};
    use crate::register::RegisterShape;
    use crate::tol::{ROUND_TRIP, STRUCTURAL};
    use crate::QbcError;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_fidelity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shape = RegisterShape::uniform(3, 1).unwrap();
        for rank in 1..=3 {
            let rho = random_density_matrix(shape.clone(), rank, &mut rng);
            assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < STRUCTURAL);
        }
    }

    #[test]
    fn orthogonal_and_mixed_examples() {
        let q = RegisterShape::uniform(2, 1).unwrap();
        let zero = StateVector::basis(q.clone(), &[0]).unwrap().projector();
        let one = StateVector::basis(q.clone(), &[1]).unwrap().projector();
        assert!(fidelity(&zero, &one).unwrap().abs() < ROUND_TRIP);
        for d in 2..6 {
            let s = RegisterShape::uniform(d, 1).unwrap();
            let z = StateVector::basis(s.clone(), &[0]).unwrap().projector();
            let mixed = DensityMatrix::maximally_mixed(s);
            assert!((fidelity(&z, &mixed).unwrap() - 1.0 / d as f64).abs() < STRUCTURAL);
        }
    }

    #[test]
    fn pure_states_match_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = RegisterShape::new(vec![2, 3]).unwrap();
        for _ in 0..20 {
            let a = random_state(shape.clone(), &mut rng);
            let b = random_state(shape.clone(), &mut rng);
            let f = fidelity(&a.projector(), &b.projector()).unwrap();
            assert!((f - pure_fidelity(&a, &b).unwrap()).abs() < ROUND_TRIP);
        }
    }

    #[test]
    fn symmetric_on_mixed_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = RegisterShape::uniform(2, 2).unwrap();
        for _ in 0..20 {
            let a = random_density_matrix(shape.clone(), 3, &mut rng);
            let b = random_density_matrix(shape.clone(), 4, &mut rng);
            let fab = fidelity(&a, &b).unwrap();
            let fba = fidelity(&b, &a).unwrap();
            assert!((fab - fba).abs() < 1e-8);
            assert!((0.0..=1.0).contains(&fab));
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = DensityMatrix::maximally_mixed(RegisterShape::uniform(2, 1).unwrap());
        let b = DensityMatrix::maximally_mixed(RegisterShape::uniform(3, 1).unwrap());
        assert!(matches!(fidelity(&a, &b), Err(QbcError::ShapeMismatch(_))));
    }
}
