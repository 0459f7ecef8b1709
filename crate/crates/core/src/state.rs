//! Pure states, density matrices and the tensor / partial-trace machinery.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QbcError, Result};
use crate::register::RegisterShape;
use crate::tol::STRUCTURAL;

/// Dense complex operator on a register (row-major factor convention).
pub type Operator = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Normalized pure state on a register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    shape: RegisterShape,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes, checking the length and unit norm.
    pub fn new(shape: RegisterShape, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return Err(QbcError::ShapeMismatch(format!(
                "{} amplitudes for a register of dimension {}",
                amplitudes.len(),
                shape.total_dim()
            )));
        }
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > STRUCTURAL {
            return Err(QbcError::InvalidState(format!("squared norm {norm_sqr} differs from 1")));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(shape: RegisterShape, amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(QbcError::InvalidState("zero vector cannot be normalized".into()));
        }
        Self::new(shape, amplitudes.unscale(norm))
    }

    /// Computational basis state with the given per-factor digits.
    pub fn basis(shape: RegisterShape, digits: &[usize]) -> Result<Self> {
        if digits.len() != shape.num_factors() {
            return Err(QbcError::ShapeMismatch("digit count differs from factor count".into()));
        }
        for (&i, &d) in digits.iter().zip(shape.factor_dims()) {
            if i >= d {
                return Err(QbcError::IndexOutOfRange { index: i, dim: d });
            }
        }
        let mut amps = DVector::zeros(shape.total_dim());
        amps[shape.index_of(digits)] = ONE;
        Ok(Self { shape, amplitudes: amps })
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_same_shape(&self.shape, &other.shape)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix { shape: self.shape.clone(), entries: &self.amplitudes * self.amplitudes.adjoint() }
    }

    /// Applies `op` and returns the resulting (unnormalized) amplitudes.
    pub fn apply(&self, op: &Operator) -> Result<DVector<Complex64>> {
        check_square(op, self.shape.total_dim())?;
        Ok(op * &self.amplitudes)
    }

    /// Reorders factors: position `k` of the result holds old factor `order[k]`.
    pub fn permute_factors(&self, order: &[usize]) -> Result<StateVector> {
        let (shape, map) = permutation_index_map(&self.shape, order)?;
        let mut out = DVector::zeros(shape.total_dim());
        for (i, &j) in map.iter().enumerate() {
            out[j] = self.amplitudes[i];
        }
        Ok(StateVector { shape, amplitudes: out })
    }
}

/// Mixed state on a register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    shape: RegisterShape,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Checks hermiticity, unit trace and positivity (eigenvalues >= -1e-9).
    pub fn new(shape: RegisterShape, entries: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_entries_unchecked(shape, entries)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps entries checking only dimensions. Used for operator outputs that
    /// are valid states by construction (CPTP images, partial traces).
    pub fn from_entries_unchecked(shape: RegisterShape, entries: DMatrix<Complex64>) -> Result<Self> {
        check_square(&entries, shape.total_dim())?;
        Ok(Self { shape, entries })
    }

    pub fn maximally_mixed(shape: RegisterShape) -> Self {
        let n = shape.total_dim();
        let entries = DMatrix::identity(n, n).unscale(n as f64);
        Self { shape, entries }
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        check_same_shape(&self.shape, &other.shape)?;
        Ok(max_abs_diff(&self.entries, &other.entries))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if herm > STRUCTURAL {
            return Err(QbcError::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STRUCTURAL {
            return Err(QbcError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -STRUCTURAL {
            return Err(QbcError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `<psi| rho |psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        check_same_shape(&self.shape, psi.shape())?;
        let a = psi.amplitudes();
        Ok(a.dotc(&(&self.entries * a)).re)
    }

    pub fn permute_factors(&self, order: &[usize]) -> Result<DensityMatrix> {
        let (shape, entries) = permute_matrix_factors(&self.shape, &self.entries, order)?;
        Ok(DensityMatrix { shape, entries })
    }
}

/// Kronecker composition; factor lists concatenate.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        StateVector { shape: self.shape.concat(&other.shape), amplitudes: self.amplitudes.kronecker(&other.amplitudes) }
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        DensityMatrix { shape: self.shape.concat(&other.shape), entries: self.entries.kronecker(&other.entries) }
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Self {
        self.kronecker(other)
    }
}

/// Reduced state on the `keep` factors (kept in ascending factor order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(QbcError::EmptyKeepSet);
    }
    let shape = rho.shape();
    shape.check_factors(keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..shape.num_factors()).filter(|f| !kept.contains(f)).collect();
    let kept_shape = shape.select(&kept)?;
    let dk = kept_shape.total_dim();
    let dt = shape.dim_of(&traced);

    let order: Vec<usize> = kept.iter().chain(&traced).copied().collect();
    let permuted = rho.permute_factors(&order)?;
    let m = permuted.entries();
    let out = DMatrix::from_fn(dk, dk, |a, b| (0..dt).map(|t| m[(a * dt + t, b * dt + t)]).sum());
    DensityMatrix::from_entries_unchecked(kept_shape, out)
}

/// Reduced state of a pure state on `keep`, computed without forming the
/// full projector.
pub fn reduced_state(psi: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(QbcError::EmptyKeepSet);
    }
    let shape = psi.shape();
    shape.check_factors(keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..shape.num_factors()).filter(|f| !kept.contains(f)).collect();
    let kept_shape = shape.select(&kept)?;
    let dk = kept_shape.total_dim();
    let dt = shape.dim_of(&traced);
    let order: Vec<usize> = kept.iter().chain(&traced).copied().collect();
    let permuted = psi.permute_factors(&order)?;
    // amplitude matrix: rows = kept index, columns = traced index
    let amp = DMatrix::from_row_slice(dk, dt, permuted.amplitudes().as_slice());
    DensityMatrix::from_entries_unchecked(kept_shape, &amp * amp.adjoint())
}

/// Maps each old flat index to its index after reordering factors by `order`.
pub(crate) fn permutation_index_map(shape: &RegisterShape, order: &[usize]) -> Result<(RegisterShape, Vec<usize>)> {
    if order.len() != shape.num_factors() {
        return Err(QbcError::InvalidPermutation(format!(
            "order has {} entries for {} factors",
            order.len(),
            shape.num_factors()
        )));
    }
    shape.check_factors(order).map_err(|e| QbcError::InvalidPermutation(e.to_string()))?;
    let new_shape = shape.select(order)?;
    let map = (0..shape.total_dim())
        .map(|i| {
            let old = shape.digits(i);
            let new: Vec<usize> = order.iter().map(|&f| old[f]).collect();
            new_shape.index_of(&new)
        })
        .collect();
    Ok((new_shape, map))
}

pub(crate) fn permute_matrix_factors(
    shape: &RegisterShape,
    m: &DMatrix<Complex64>,
    order: &[usize],
) -> Result<(RegisterShape, DMatrix<Complex64>)> {
    check_square(m, shape.total_dim())?;
    let (new_shape, map) = permutation_index_map(shape, order)?;
    let n = shape.total_dim();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok((new_shape, out))
}

pub(crate) fn check_same_shape(a: &RegisterShape, b: &RegisterShape) -> Result<()> {
    if a != b {
        return Err(QbcError::ShapeMismatch(format!("{:?} vs {:?}", a.factor_dims(), b.factor_dims())));
    }
    Ok(())
}

pub(crate) fn check_square(m: &DMatrix<Complex64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(QbcError::ShapeMismatch(format!("expected {n}x{n} matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest entry of `|G - I|` for the Gram matrix of `vectors`.
pub fn gram_deviation(vectors: &[StateVector]) -> f64 {
    let n = vectors.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let g = vectors[i].amplitudes().dotc(vectors[j].amplitudes());
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}
