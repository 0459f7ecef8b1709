//! Register shapes and bipartitions of multi-factor qudit registers.
//!
//! Basis indices are row-major with the leftmost factor most significant:
//! the index of `|i_1 ... i_n>` is `sum_k i_k * (product of dims right of k)`.

use crate::error::{QbcError, Result};

/// Ordered local dimensions of a register.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegisterShape {
    factor_dims: Vec<usize>,
    total_dim: usize,
}

impl RegisterShape {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(QbcError::ShapeMismatch("register needs at least one factor".into()));
        }
        if let Some(&bad) = factor_dims.iter().find(|&&d| d < 2) {
            return Err(QbcError::InvalidDimension(bad));
        }
        let total_dim = factor_dims.iter().product();
        Ok(Self { factor_dims, total_dim })
    }

    /// `n` factors of local dimension `d`.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn dim_of(&self, factors: &[usize]) -> usize {
        factors.iter().map(|&f| self.factor_dims[f]).product()
    }

    /// Shape of the concatenated register `self ⊗ other`.
    pub fn concat(&self, other: &RegisterShape) -> RegisterShape {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        RegisterShape { total_dim: self.total_dim * other.total_dim, factor_dims: dims }
    }

    /// Shape restricted to the given factors, in the given order.
    pub fn select(&self, factors: &[usize]) -> Result<RegisterShape> {
        self.check_factors(factors)?;
        RegisterShape::new(factors.iter().map(|&f| self.factor_dims[f]).collect())
    }

    /// Per-factor strides of the row-major index convention.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factor_dims.len()];
        for k in (0..self.factor_dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factor_dims[k + 1];
        }
        strides
    }

    /// Splits a flat basis index into per-factor digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factor_dims.len()];
        for k in (0..self.factor_dims.len()).rev() {
            out[k] = index % self.factor_dims[k];
            index /= self.factor_dims[k];
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.factor_dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub(crate) fn check_factors(&self, factors: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.num_factors()];
        for &f in factors {
            if f >= self.num_factors() {
                return Err(QbcError::IndexOutOfRange { index: f, dim: self.num_factors() });
            }
            if std::mem::replace(&mut seen[f], true) {
                return Err(QbcError::InvalidArgument(format!("factor {f} listed twice")));
            }
        }
        Ok(())
    }
}

/// A split of (a subset of) a register's factors into two nonempty sides.
///
/// Sides are stored so that `side_two` is never the larger one (`n2 <= n1`).
/// The factors of a bipartition need not cover the whole register: Alice's
/// cuts live on the first three factors of the `A ⊗ B` register.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    side_one: Vec<usize>,
    side_two: Vec<usize>,
    n1: usize,
    n2: usize,
}

impl Bipartition {
    /// Builds the cut `part | rest` of `shape`, where `rest` is every other
    /// factor. The sides are swapped when needed to keep `n2 <= n1`.
    pub fn new(shape: &RegisterShape, part: &[usize]) -> Result<Self> {
        shape.check_factors(part)?;
        let mut a: Vec<usize> = part.to_vec();
        a.sort_unstable();
        let b: Vec<usize> = (0..shape.num_factors()).filter(|f| !a.contains(f)).collect();
        if a.is_empty() || b.is_empty() {
            return Err(QbcError::InvalidBipartition("both sides must be nonempty".into()));
        }
        let (da, db) = (shape.dim_of(&a), shape.dim_of(&b));
        Ok(if db <= da {
            Self { side_one: a, side_two: b, n1: da, n2: db }
        } else {
            Self { side_one: b, side_two: a, n1: db, n2: da }
        })
    }

    /// Every bipartition of `shape` up to swapping sides, ordered by the
    /// smaller side's factor set.
    pub fn all(shape: &RegisterShape) -> Vec<Bipartition> {
        let n = shape.num_factors();
        let mut out: Vec<Bipartition> = Vec::new();
        for mask in 1..(1usize << n) - 1 {
            let part: Vec<usize> = (0..n).filter(|f| mask >> f & 1 == 1).collect();
            let cut = Bipartition::new(shape, &part).expect("mask yields valid sides");
            if !out.contains(&cut) {
                out.push(cut);
            }
        }
        out.sort_by(|x, y| x.side_two.cmp(&y.side_two));
        out
    }

    pub fn side_one(&self) -> &[usize] {
        &self.side_one
    }

    pub fn side_two(&self) -> &[usize] {
        &self.side_two
    }

    /// `(N_1, N_2)` with `N_2 <= N_1`.
    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Factor order that places side one first, then side two.
    pub fn ordering(&self) -> Vec<usize> {
        self.side_one.iter().chain(&self.side_two).copied().collect()
    }

    pub fn label(&self) -> String {
        let fmt = |s: &[usize]| s.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",");
        format!("{{{}}}|{{{}}}", fmt(&self.side_two), fmt(&self.side_one))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_round_trip() {
        let s = RegisterShape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.total_dim(), 24);
        assert_eq!(s.strides(), vec![12, 4, 1]);
        for i in 0..24 {
            assert_eq!(s.index_of(&s.digits(i)), i);
        }
        assert_eq!(s.index_of(&[1, 2, 3]), 12 + 8 + 3);
    }

    #[test]
    fn rejects_small_factors() {
        assert_eq!(RegisterShape::new(vec![2, 1]), Err(QbcError::InvalidDimension(1)));
        assert!(RegisterShape::new(vec![]).is_err());
    }

    #[test]
    fn bipartition_orders_sides() {
        let s = RegisterShape::uniform(3, 3).unwrap();
        let cut = Bipartition::new(&s, &[0, 2]).unwrap();
        assert_eq!(cut.side_two(), &[1]);
        assert_eq!(cut.side_one(), &[0, 2]);
        assert_eq!(cut.dims(), (9, 3));
        assert_eq!(cut.ordering(), vec![0, 2, 1]);
        assert_eq!(Bipartition::all(&s).len(), 3);
    }

    #[test]
    fn bipartition_rejects_empty_side() {
        let s = RegisterShape::uniform(2, 3).unwrap();
        assert!(Bipartition::new(&s, &[]).is_err());
        assert!(Bipartition::new(&s, &[0, 1, 2]).is_err());
        assert!(Bipartition::new(&s, &[3]).is_err());
    }
}
