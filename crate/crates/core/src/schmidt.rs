//! Schmidt decomposition across a bipartition via the SVD of the reshaped
//! amplitude matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QbcError, Result};
use crate::register::{Bipartition, RegisterShape};
use crate::state::{check_same_shape, gram_deviation, StateVector};
use crate::tol::STRUCTURAL;

/// Singular values at or below this are treated as zero.
const RANK_CUTOFF: f64 = 1e-9;

/// `|psi> = sum_i sqrt(lambda_i) |left_i>|right_i>` with the left vectors on
/// side one of the cut and the right vectors on side two.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtData {
    coefficients: Vec<f64>,
    left_vectors: Vec<StateVector>,
    right_vectors: Vec<StateVector>,
}

impl SchmidtData {
    /// Assembles Schmidt data from known families, checking the invariants
    /// (coefficients sum to one, both families orthonormal). Coefficients
    /// need not be sorted; they are reported in the given order.
    pub fn from_parts(
        coefficients: Vec<f64>,
        left_vectors: Vec<StateVector>,
        right_vectors: Vec<StateVector>,
    ) -> Result<Self> {
        if coefficients.is_empty()
            || coefficients.len() != left_vectors.len()
            || coefficients.len() != right_vectors.len()
        {
            return Err(QbcError::ShapeMismatch(format!(
                "{} coefficients, {} left vectors, {} right vectors",
                coefficients.len(),
                left_vectors.len(),
                right_vectors.len()
            )));
        }
        if coefficients.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(QbcError::InvalidArgument("Schmidt coefficients must be nonnegative".into()));
        }
        let total: f64 = coefficients.iter().sum();
        if (total - 1.0).abs() > STRUCTURAL {
            return Err(QbcError::InvalidArgument(format!("Schmidt coefficients sum to {total}")));
        }
        for fam in [&left_vectors, &right_vectors] {
            for v in fam.iter().skip(1) {
                check_same_shape(fam[0].shape(), v.shape())?;
            }
            let dev = gram_deviation(fam);
            if dev > STRUCTURAL {
                return Err(QbcError::NotOrthonormal(dev));
            }
        }
        Ok(Self { coefficients, left_vectors, right_vectors })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn left_vectors(&self) -> &[StateVector] {
        &self.left_vectors
    }

    pub fn right_vectors(&self) -> &[StateVector] {
        &self.right_vectors
    }

    pub fn lambda_max(&self) -> f64 {
        self.coefficients.iter().copied().fold(0.0, f64::max)
    }

    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn left_shape(&self) -> &RegisterShape {
        self.left_vectors[0].shape()
    }

    pub fn right_shape(&self) -> &RegisterShape {
        self.right_vectors[0].shape()
    }

    /// Amplitudes of `sum_i sqrt(lambda_i) |left_i> ⊗ |right_i>` in the
    /// (side one, side two) factor order.
    pub fn reconstruct(&self) -> DVector<Complex64> {
        let n = self.left_shape().total_dim() * self.right_shape().total_dim();
        let mut out = DVector::zeros(n);
        for ((l, a), b) in self.coefficients.iter().zip(&self.left_vectors).zip(&self.right_vectors) {
            out += a.amplitudes().kronecker(b.amplitudes()).scale(l.sqrt());
        }
        out
    }

    /// Left-side projectors onto each group of (numerically) equal
    /// coefficients. These are basis independent under degeneracy.
    pub fn left_eigenspace_projectors(&self, tol: f64) -> Vec<(f64, DMatrix<Complex64>)> {
        let mut groups: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
        for (l, v) in self.coefficients.iter().zip(&self.left_vectors) {
            let p = v.amplitudes() * v.amplitudes().adjoint();
            match groups.iter_mut().find(|(g, _)| (g - l).abs() <= tol) {
                Some((_, acc)) => *acc += p,
                None => groups.push((*l, p)),
            }
        }
        groups
    }
}

/// Schmidt decomposition of `psi` across `cut` (which must split all of
/// `psi`'s factors). Coefficients are nonincreasing; the first nonzero entry
/// of each left vector is made real and nonnegative.
pub fn schmidt_decompose(psi: &StateVector, cut: &Bipartition) -> Result<SchmidtData> {
    let shape = psi.shape();
    let order = cut.ordering();
    if order.len() != shape.num_factors() {
        return Err(QbcError::InvalidBipartition(format!(
            "cut covers {} of {} factors",
            order.len(),
            shape.num_factors()
        )));
    }
    let left_shape = shape.select(cut.side_one())?;
    let right_shape = shape.select(cut.side_two())?;
    let (n1, n2) = cut.dims();
    let permuted = psi.permute_factors(&order)?;
    let amp = DMatrix::from_row_slice(n1, n2, permuted.amplitudes().as_slice());

    let svd = amp.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut coefficients = Vec::new();
    let mut left_vectors = Vec::new();
    let mut right_vectors = Vec::new();
    for &k in &idx {
        let s = svd.singular_values[k];
        if s <= RANK_CUTOFF {
            continue;
        }
        let mut left = u.column(k).into_owned();
        // amp = sum_k s_k u_k v_k^†, so the right factor is the k-th row of V^†
        let mut right = v_t.row(k).transpose();
        if let Some(first) = left.iter().find(|a| a.norm() > 1e-12).copied() {
            let phase = first / first.norm();
            left *= phase.conj();
            right *= phase;
        }
        coefficients.push(s * s);
        left_vectors.push(StateVector::normalized(left_shape.clone(), left)?);
        right_vectors.push(StateVector::normalized(right_shape.clone(), right)?);
    }
    // renormalize away the discarded tail
    let total: f64 = coefficients.iter().sum();
    for c in &mut coefficients {
        *c /= total;
    }
    Ok(SchmidtData { coefficients, left_vectors, right_vectors })
}

/// Largest Schmidt coefficient of `psi` across the cut `part | rest`.
pub fn max_schmidt_coefficient(psi: &StateVector, part: &[usize]) -> Result<f64> {
    let cut = Bipartition::new(psi.shape(), part)?;
    Ok(schmidt_decompose(psi, &cut)?.lambda_max())
}
