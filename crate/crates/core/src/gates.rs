//! Qudit Fourier gate, Z/X bases under a relabelling permutation, and
//! register factor permutations.

use std::f64::consts::PI;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{QbcError, Result};
use crate::register::RegisterShape;
use crate::state::{permutation_index_map, Operator, StateVector, ONE, ZERO};

/// `omega^power` with `omega = exp(2 pi i / d)`; the exponent is reduced mod `d`
/// before evaluating the exponential.
pub fn root_of_unity(d: usize, power: i64) -> Complex64 {
    let r = power.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * r / d as f64)
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(QbcError::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// `F = (1/sqrt d) sum_{k,l} omega^{kl} |k><l|`.
pub fn fourier_gate(d: usize) -> Result<Operator> {
    check_dim(d)?;
    let s = 1.0 / (d as f64).sqrt();
    Ok(DMatrix::from_fn(d, d, |k, l| root_of_unity(d, (k * l) as i64) * s))
}

/// A bijection on `{0..n-1}` stored as a lookup table: `pi(k) = map[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(QbcError::InvalidPermutation(format!("{map:?} is not a bijection")));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Self(map)
    }

    /// All `n!` permutations in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        (0..n).permutations(n).map(Permutation)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (k, &v) in self.0.iter().enumerate() {
            inv[v] = k;
        }
        Self(inv)
    }
}

/// Which single-qudit basis a measurement uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Computational basis `|k>`.
    Z,
    /// Fourier basis `|k~> = F† |k> = (1/sqrt d) sum_l omega^{-kl} |l>`.
    X,
}

/// `|pi(k)>` or `|pi(k)~>` on a single qudit; `pi` defaults to the identity.
pub fn basis_vector(kind: BasisKind, k: usize, d: usize, pi: Option<&Permutation>) -> Result<StateVector> {
    check_dim(d)?;
    if k >= d {
        return Err(QbcError::IndexOutOfRange { index: k, dim: d });
    }
    let label = match pi {
        Some(p) if p.len() != d => {
            return Err(QbcError::InvalidPermutation(format!("permutation on {} symbols used with d = {d}", p.len())))
        }
        Some(p) => p.apply(k),
        None => k,
    };
    let shape = RegisterShape::new(vec![d])?;
    match kind {
        BasisKind::Z => StateVector::basis(shape, &[label]),
        BasisKind::X => {
            let s = 1.0 / (d as f64).sqrt();
            let amps = DVector::from_fn(d, |l, _| root_of_unity(d, -((label * l) as i64)) * s);
            StateVector::new(shape, amps)
        }
    }
}

/// Unitary that reorders register factors: position `k` of the output holds
/// old factor `order[k]`, i.e. `|i_0 ... i_{n-1}> -> |i_{order[0]} ... i_{order[n-1]}>`.
///
/// The output register has shape `shape.select(order)`.
pub fn factor_permutation_operator(shape: &RegisterShape, order: &[usize]) -> Result<Operator> {
    let (_, map) = permutation_index_map(shape, order)?;
    let n = shape.total_dim();
    let mut p = DMatrix::from_element(n, n, ZERO);
    for (i, &j) in map.iter().enumerate() {
        p[(j, i)] = ONE;
    }
    Ok(p)
}

/// Inverse of a factor order.
pub fn inverse_order(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (k, &f) in order.iter().enumerate() {
        inv[f] = k;
    }
    inv
}
