//! The AME(3,d) commitment protocol.
//!
//! Registers: Alice holds three qudits `A = A1 A2 A3`, Bob one qudit `B`, and
//! the commitment ancilla `anc` is a single qudit. States on `A ⊗ B` use the
//! factor order `[A1, A2, A3, B]`; the full initial state uses
//! `[anc, A1, A2, A3, B]`. All index arithmetic on labels is mod `d`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{QbcError, Result};
use crate::gates::{basis_vector, root_of_unity, BasisKind, Permutation};
use crate::register::RegisterShape;
use crate::schmidt::SchmidtData;
use crate::state::{DensityMatrix, StateVector};

/// Number of Alice qudits.
pub const ALICE_QUDITS: usize = 3;
/// Factor indices of Alice's qudits within the `A ⊗ B` register.
pub const ALICE_FACTORS: [usize; 3] = [0, 1, 2];
/// Factor index of Bob's qudit within the `A ⊗ B` register.
pub const BOB_FACTOR: usize = 3;

/// Committed bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const BOTH: [Bit; 2] = [Bit::Zero, Bit::One];

    pub fn flip(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    /// Basis Alice measures `anc` in to commit this bit.
    pub fn basis_kind(self) -> BasisKind {
        match self {
            Bit::Zero => BasisKind::X,
            Bit::One => BasisKind::Z,
        }
    }
}

impl TryFrom<u8> for Bit {
    type Error = QbcError;

    fn try_from(v: u8) -> Result<Bit> {
        match v {
            0 => Ok(Bit::Zero),
            1 => Ok(Bit::One),
            other => Err(QbcError::InvalidArgument(format!("bit must be 0 or 1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProtocolParams {
    d: usize,
}

impl ProtocolParams {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(QbcError::InvalidDimension(d));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `[A1, A2, A3, B]`.
    pub fn shared_shape(&self) -> RegisterShape {
        RegisterShape::uniform(self.d, ALICE_QUDITS + 1).expect("d >= 2")
    }

    /// `[A1, A2, A3]`.
    pub fn alice_shape(&self) -> RegisterShape {
        RegisterShape::uniform(self.d, ALICE_QUDITS).expect("d >= 2")
    }

    pub fn bob_shape(&self) -> RegisterShape {
        RegisterShape::uniform(self.d, 1).expect("d >= 2")
    }

    /// `[anc, A1, A2, A3, B]`.
    pub fn full_shape(&self) -> RegisterShape {
        RegisterShape::uniform(self.d, ALICE_QUDITS + 2).expect("d >= 2")
    }

    fn check_perm(&self, pi: &Permutation) -> Result<()> {
        if pi.len() != self.d {
            return Err(QbcError::InvalidPermutation(format!(
                "permutation on {} symbols used with d = {}",
                pi.len(),
                self.d
            )));
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.d {
            return Err(QbcError::IndexOutOfRange { index: k, dim: self.d });
        }
        Ok(())
    }
}

/// Outcome of an honest commit.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentRecord {
    pub params: ProtocolParams,
    pub b: Bit,
    pub pi: Permutation,
    pub m: usize,
    /// Post-measurement state on `A ⊗ B` (the ancilla, now `|m>`, is dropped).
    pub shared_state: StateVector,
}

fn ghz_index(d: usize, j: usize, bob: usize) -> usize {
    ((j * d + j) * d + j) * d + bob
}

/// `|Phi_l> = (1/sqrt d) sum_j omega^{jl} |jjj>_A |j+l>_B`.
pub fn phi_state(l: usize, d: usize) -> Result<StateVector> {
    let params = ProtocolParams::new(d)?;
    params.check_index(l)?;
    let s = 1.0 / (d as f64).sqrt();
    let mut amps = DVector::zeros(d.pow(4));
    for j in 0..d {
        amps[ghz_index(d, j, (j + l) % d)] = root_of_unity(d, (j * l) as i64) * s;
    }
    StateVector::new(params.shared_shape(), amps)
}

/// `|Xi> = (1/sqrt d) sum_l |l>_anc |Phi_l>_AB`.
pub fn xi_state(d: usize) -> Result<StateVector> {
    let params = ProtocolParams::new(d)?;
    let block = d.pow(4);
    let mut amps = DVector::zeros(d * block);
    let s = 1.0 / (d as f64).sqrt();
    for l in 0..d {
        let phi = phi_state(l, d)?;
        amps.rows_mut(l * block, block).copy_from(&phi.amplitudes().scale(s));
    }
    StateVector::new(params.full_shape(), amps)
}

/// `(<beta| ⊗ 1) |psi>` for a state whose first factor is the ancilla.
fn contract_ancilla(psi: &StateVector, beta: &StateVector) -> DVector<Complex64> {
    let d = beta.amplitudes().len();
    let rest = psi.amplitudes().len() / d;
    let rows = DMatrix::from_row_slice(d, rest, psi.amplitudes().as_slice());
    (beta.amplitudes().adjoint() * rows).transpose()
}

/// Alice's honest commit: measures `anc` of `|Xi>` in `B_{b,pi}`, samples the
/// outcome with Born probabilities and keeps the normalized `A ⊗ B` branch.
pub fn commit<R: Rng + ?Sized>(
    params: ProtocolParams,
    b: Bit,
    pi: &Permutation,
    rng: &mut R,
) -> Result<CommitmentRecord> {
    params.check_perm(pi)?;
    let d = params.d();
    let xi = xi_state(d)?;
    let branches: Vec<DVector<Complex64>> = (0..d)
        .map(|k| basis_vector(b.basis_kind(), k, d, Some(pi)).map(|beta| contract_ancilla(&xi, &beta)))
        .collect::<Result<_>>()?;
    let probs: Vec<f64> = branches.iter().map(|v| v.norm_squared()).collect();
    let m = WeightedIndex::new(&probs)
        .map_err(|e| QbcError::InvalidState(format!("outcome distribution: {e}")))?
        .sample(rng);
    let shared_state = StateVector::normalized(params.shared_shape(), branches[m].clone())?;
    Ok(CommitmentRecord { params, b, pi: pi.clone(), m, shared_state })
}

/// Projects `anc` of `|Xi>` onto outcome `m` of `B_{b,pi}`: returns the
/// outcome probability and the normalized record for that branch.
pub fn project_outcome(params: ProtocolParams, b: Bit, pi: &Permutation, m: usize) -> Result<(f64, CommitmentRecord)> {
    params.check_perm(pi)?;
    params.check_index(m)?;
    let d = params.d();
    let beta = basis_vector(b.basis_kind(), m, d, Some(pi))?;
    let branch = contract_ancilla(&xi_state(d)?, &beta);
    let prob = branch.norm_squared();
    let shared_state = StateVector::normalized(params.shared_shape(), branch)?;
    Ok((prob, CommitmentRecord { params, b, pi: pi.clone(), m, shared_state }))
}

/// Born probabilities of the `d` commit outcomes.
pub fn outcome_probabilities(params: ProtocolParams, b: Bit, pi: &Permutation) -> Result<Vec<f64>> {
    params.check_perm(pi)?;
    let d = params.d();
    let xi = xi_state(d)?;
    (0..d)
        .map(|k| basis_vector(b.basis_kind(), k, d, Some(pi)).map(|beta| contract_ancilla(&xi, &beta).norm_squared()))
        .collect()
}

/// `Xi^1_{pi,m} = |Phi_{pi(m)}>` and
/// `Xi^0_{pi,m} = (1/sqrt d) sum_l omega^{pi(m) l} |Phi_l>`.
pub fn post_state_closed_form(params: ProtocolParams, b: Bit, pi: &Permutation, m: usize) -> Result<StateVector> {
    params.check_perm(pi)?;
    params.check_index(m)?;
    let d = params.d();
    let label = pi.apply(m);
    match b {
        Bit::One => phi_state(label, d),
        Bit::Zero => {
            let s = 1.0 / (d as f64).sqrt();
            let mut amps = DVector::zeros(d.pow(4));
            for l in 0..d {
                let w = root_of_unity(d, (label * l) as i64) * s;
                amps += phi_state(l, d)?.amplitudes() * w;
            }
            StateVector::new(params.shared_shape(), amps)
        }
    }
}

/// Bob's rank-one acceptance test: `<Xi^{b'}_{pi',m}| state |Xi^{b'}_{pi',m}>`
/// for the claimed `(b', pi')` and the announced outcome `m`.
pub fn open_verify(
    record: &CommitmentRecord,
    claimed_b: Bit,
    claimed_pi: &Permutation,
    state: &DensityMatrix,
) -> Result<f64> {
    let expected = post_state_closed_form(record.params, claimed_b, claimed_pi, record.m)?;
    Ok(state.expectation(&expected)?.clamp(0.0, 1.0))
}

/// Samples Bob's accept/reject decision.
pub fn open_sample<R: Rng + ?Sized>(
    record: &CommitmentRecord,
    claimed_b: Bit,
    claimed_pi: &Permutation,
    state: &DensityMatrix,
    rng: &mut R,
) -> Result<bool> {
    let p = open_verify(record, claimed_b, claimed_pi, state)?;
    Ok(rng.random::<f64>() < p)
}

/// Schmidt decomposition of `Xi^b_{pi,m}` across `A | B` in Bob's
/// computational basis: `Xi = (1/sqrt d) sum_j |left_j>|j>`, with the left
/// vectors obtained by contracting Bob's qudit with `<j|`.
pub fn schmidt_family(params: ProtocolParams, b: Bit, pi: &Permutation, m: usize) -> Result<SchmidtData> {
    let d = params.d();
    let xi = post_state_closed_form(params, b, pi, m)?;
    let rows = DMatrix::from_row_slice(d.pow(3), d, xi.amplitudes().as_slice());
    let scale = (d as f64).sqrt();
    let mut left = Vec::with_capacity(d);
    let mut right = Vec::with_capacity(d);
    for j in 0..d {
        left.push(StateVector::new(params.alice_shape(), rows.column(j).scale(scale))?);
        right.push(StateVector::basis(params.bob_shape(), &[j])?);
    }
    SchmidtData::from_parts(vec![1.0 / d as f64; d], left, right)
}

/// `y^{m,pi}_j = omega^{(j - pi(m)) pi(m)} |(j - pi(m))^{⊗3}>`.
pub fn y_vector(params: ProtocolParams, pi: &Permutation, m: usize, j: usize) -> Result<StateVector> {
    params.check_perm(pi)?;
    params.check_index(m)?;
    params.check_index(j)?;
    let d = params.d();
    let p = pi.apply(m) as i64;
    let shift = (j as i64 - p).rem_euclid(d as i64) as usize;
    let mut amps = DVector::zeros(d.pow(3));
    amps[(shift * d + shift) * d + shift] = root_of_unity(d, (j as i64 - p) * p);
    StateVector::new(params.alice_shape(), amps)
}

/// `x^{m,pi}_j = (1/sqrt d) sum_l omega^{pi(m) l + (j - l) l} |(j - l)^{⊗3}>`.
pub fn x_vector(params: ProtocolParams, pi: &Permutation, m: usize, j: usize) -> Result<StateVector> {
    params.check_perm(pi)?;
    params.check_index(m)?;
    params.check_index(j)?;
    let d = params.d();
    let p = pi.apply(m) as i64;
    let s = 1.0 / (d as f64).sqrt();
    let mut amps = DVector::zeros(d.pow(3));
    for l in 0..d as i64 {
        let shift = (j as i64 - l).rem_euclid(d as i64) as usize;
        amps[(shift * d + shift) * d + shift] += root_of_unity(d, p * l + (j as i64 - l) * l) * s;
    }
    StateVector::new(params.alice_shape(), amps)
}

/// Every permutation for `d <= 4`, otherwise `samples` seeded draws.
pub fn permutation_set<R: Rng + ?Sized>(d: usize, samples: usize, rng: &mut R) -> Vec<Permutation> {
    if d <= 4 {
        Permutation::all(d).collect()
    } else {
        (0..samples).map(|_| Permutation::random(d, rng)).collect()
    }
}
