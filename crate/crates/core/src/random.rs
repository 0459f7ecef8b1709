//! Seeded samplers: Haar unitaries and isometries, random states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::register::RegisterShape;
use crate::state::{DensityMatrix, Operator, StateVector};

/// Standard complex Gaussian (unit variance per complex entry).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Orthonormalizes the columns of `m` with the phase convention of Mezzadri
/// (diagonal of R made real positive), so Ginibre input yields Haar output.
pub fn orthonormalize_columns(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let qr = m.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..q.ncols() {
        let rk = r[(k, k)];
        let n = rk.norm();
        if n > 0.0 {
            let phase = rk / n;
            for i in 0..q.nrows() {
                q[(i, k)] *= phase;
            }
        }
    }
    q
}

/// Haar-distributed `n x n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Operator {
    orthonormalize_columns(ginibre(n, n, rng))
}

/// Haar-distributed isometry with `cols` orthonormal columns in `rows` dims.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    assert!(cols <= rows, "isometry needs cols <= rows");
    orthonormalize_columns(ginibre(rows, cols, rng))
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(shape: RegisterShape, rng: &mut R) -> StateVector {
    let amps = DVector::from_fn(shape.total_dim(), |_, _| complex_gaussian(rng));
    StateVector::normalized(shape, amps).expect("gaussian vector is nonzero")
}

/// Induced-measure random mixed state `G G† / Tr` with `G` of size `dim x rank`.
pub fn random_density_matrix<R: Rng + ?Sized>(shape: RegisterShape, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(shape.total_dim(), rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_entries_unchecked(shape, m.unscale(tr)).expect("square by construction")
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
