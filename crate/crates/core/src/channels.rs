//! Kraus channels, separable channels on a cut of Alice's register, and the
//! commit measurement channels on the ancilla.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QbcError, Result};
use crate::gates::{basis_vector, factor_permutation_operator, Permutation};
use crate::protocol::{Bit, ProtocolParams};
use crate::random::haar_isometry;
use crate::register::{Bipartition, RegisterShape};
use crate::state::{check_same_shape, max_abs_diff, permute_matrix_factors, DensityMatrix, Operator, ZERO};
use crate::tol::STRUCTURAL;

/// CPTP map `X -> sum_j K_j X K_j†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    in_shape: RegisterShape,
    out_shape: RegisterShape,
    kraus_ops: Vec<Operator>,
}

impl KrausChannel {
    /// Validates operator dimensions and trace preservation.
    pub fn new(in_shape: RegisterShape, out_shape: RegisterShape, kraus_ops: Vec<Operator>) -> Result<Self> {
        if kraus_ops.is_empty() {
            return Err(QbcError::InvalidArgument("channel needs at least one Kraus operator".into()));
        }
        for k in &kraus_ops {
            if k.nrows() != out_shape.total_dim() || k.ncols() != in_shape.total_dim() {
                return Err(QbcError::ShapeMismatch(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    out_shape.total_dim(),
                    in_shape.total_dim()
                )));
            }
        }
        let channel = Self { in_shape, out_shape, kraus_ops };
        let dev = channel.trace_preservation_deviation();
        if dev > STRUCTURAL {
            return Err(QbcError::NotTracePreserving(dev));
        }
        Ok(channel)
    }

    /// Same-shape channel.
    pub fn on(shape: RegisterShape, kraus_ops: Vec<Operator>) -> Result<Self> {
        Self::new(shape.clone(), shape, kraus_ops)
    }

    pub fn identity(shape: RegisterShape) -> Self {
        let n = shape.total_dim();
        Self { in_shape: shape.clone(), out_shape: shape, kraus_ops: vec![Operator::identity(n, n)] }
    }

    pub fn unitary(shape: RegisterShape, u: Operator) -> Result<Self> {
        Self::on(shape, vec![u])
    }

    /// `{|i><j| / sqrt d}`: every input goes to the maximally mixed state.
    pub fn completely_depolarizing(shape: RegisterShape) -> Self {
        let n = shape.total_dim();
        let s = 1.0 / (n as f64).sqrt();
        let ops = (0..n * n)
            .map(|ij| {
                let mut k = Operator::zeros(n, n);
                k[(ij / n, ij % n)] = Complex64::new(s, 0.0);
                k
            })
            .collect();
        Self { in_shape: shape.clone(), out_shape: shape, kraus_ops: ops }
    }

    pub fn in_shape(&self) -> &RegisterShape {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &RegisterShape {
        &self.out_shape
    }

    pub fn kraus_ops(&self) -> &[Operator] {
        &self.kraus_ops
    }

    /// `max |sum_j K_j† K_j - 1|`.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let n = self.in_shape.total_dim();
        let sum = self.kraus_ops.iter().fold(Operator::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        max_abs_diff(&sum, &Operator::identity(n, n))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_same_shape(&self.in_shape, rho.shape())?;
        let n = self.out_shape.total_dim();
        let out = self.kraus_ops.iter().fold(Operator::zeros(n, n), |acc, k| acc + k * rho.entries() * k.adjoint());
        DensityMatrix::from_entries_unchecked(self.out_shape.clone(), out)
    }

    /// `sum_j K_j ⊗ conj(K_j)`, the action on row-major vectorized inputs.
    pub fn transfer_matrix(&self) -> DMatrix<Complex64> {
        let (r, c) = (self.out_shape.total_dim(), self.in_shape.total_dim());
        self.kraus_ops.iter().fold(DMatrix::zeros(r * r, c * c), |acc, k| acc + k.kronecker(&k.conjugate()))
    }

    /// `K ⊗ 1` on `self ⊗ extra` (extra factors appended on the right).
    pub fn extend_right(&self, extra: &RegisterShape) -> KrausChannel {
        let e = extra.total_dim();
        let id = Operator::identity(e, e);
        KrausChannel {
            in_shape: self.in_shape.concat(extra),
            out_shape: self.out_shape.concat(extra),
            kraus_ops: self.kraus_ops.iter().map(|k| k.kronecker(&id)).collect(),
        }
    }
}

/// A same-shape channel on some factors of a larger register, acting as the
/// identity on the others. Applied through the local transfer matrix, so the
/// lifted Kraus operators are never materialized.
#[derive(Debug, Clone)]
pub struct LocalChannel {
    register: RegisterShape,
    targets: Vec<usize>,
    local: KrausChannel,
    transfer: DMatrix<Complex64>,
}

impl LocalChannel {
    pub fn new(register: RegisterShape, targets: Vec<usize>, local: KrausChannel) -> Result<Self> {
        register.check_factors(&targets)?;
        if targets.is_empty() {
            return Err(QbcError::InvalidArgument("local channel needs target factors".into()));
        }
        check_same_shape(&register.select(&targets)?, local.in_shape())?;
        check_same_shape(local.in_shape(), local.out_shape())?;
        let transfer = local.transfer_matrix();
        Ok(Self { register, targets, local, transfer })
    }

    pub fn register(&self) -> &RegisterShape {
        &self.register
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn local(&self) -> &KrausChannel {
        &self.local
    }

    pub fn transfer_matrix(&self) -> &DMatrix<Complex64> {
        &self.transfer
    }

    pub fn trace_preservation_deviation(&self) -> f64 {
        self.local.trace_preservation_deviation()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_same_shape(&self.register, rho.shape())?;
        let n = self.local.in_shape().total_dim();
        let rest_factors: Vec<usize> = (0..self.register.num_factors()).filter(|f| !self.targets.contains(f)).collect();
        let r = self.register.dim_of(&rest_factors);
        let order: Vec<usize> = self.targets.iter().chain(&rest_factors).copied().collect();
        let (_, m) = permute_matrix_factors(&self.register, rho.entries(), &order)?;

        let mut out = DMatrix::from_element(n * r, n * r, ZERO);
        for a in 0..n {
            for a2 in 0..n {
                let block = m.view((a * r, a2 * r), (r, r));
                for b in 0..n {
                    for b2 in 0..n {
                        let s = self.transfer[(b * n + b2, a * n + a2)];
                        if s.norm() == 0.0 {
                            continue;
                        }
                        let mut target = out.view_mut((b * r, b2 * r), (r, r));
                        target.zip_apply(&block, |t, x| *t += s * x);
                    }
                }
            }
        }
        let permuted_shape = self.register.select(&order)?;
        let inverse = crate::gates::inverse_order(&order);
        let (_, back) = permute_matrix_factors(&permuted_shape, &out, &inverse)?;
        DensityMatrix::from_entries_unchecked(self.register.clone(), back)
    }

    /// Dense Kraus list on the whole register. Only sensible for small registers.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let rest_factors: Vec<usize> = (0..self.register.num_factors()).filter(|f| !self.targets.contains(f)).collect();
        let order: Vec<usize> = self.targets.iter().chain(&rest_factors).copied().collect();
        let permuted_shape = self.register.select(&order)?;
        let r = self.register.dim_of(&rest_factors);
        let p = factor_permutation_operator(&self.register, &order)?;
        let id = Operator::identity(r, r);
        let ops = self.local.kraus_ops().iter().map(|k| p.adjoint() * k.kronecker(&id) * &p).collect();
        debug_assert_eq!(permuted_shape.total_dim(), self.register.total_dim());
        KrausChannel::on(self.register.clone(), ops)
    }
}

/// Channel whose Kraus operators are all products `K_1 ⊗ K_2` across a cut
/// of Alice's register (`K_1` on side one, `K_2` on side two).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableChannel {
    alice_shape: RegisterShape,
    cut: Bipartition,
    factor_pairs: Vec<(Operator, Operator)>,
}

impl SeparableChannel {
    pub fn new(alice_shape: RegisterShape, cut: Bipartition, factor_pairs: Vec<(Operator, Operator)>) -> Result<Self> {
        let mut covered = cut.ordering();
        covered.sort_unstable();
        if covered != (0..alice_shape.num_factors()).collect::<Vec<_>>() {
            return Err(QbcError::InvalidBipartition(format!(
                "cut {} does not partition exactly the {} Alice factors",
                cut.label(),
                alice_shape.num_factors()
            )));
        }
        if factor_pairs.is_empty() {
            return Err(QbcError::InvalidArgument("separable channel needs Kraus operators".into()));
        }
        let (n1, n2) = cut.dims();
        if alice_shape.dim_of(cut.side_one()) != n1 {
            return Err(QbcError::ShapeMismatch("cut does not belong to this register".into()));
        }
        for (a, b) in &factor_pairs {
            if a.shape() != (n1, n1) || b.shape() != (n2, n2) {
                return Err(QbcError::ShapeMismatch(format!(
                    "factor pair {:?}/{:?} on a {n1}x{n2} cut",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        let sum = factor_pairs.iter().fold(Operator::zeros(n1 * n2, n1 * n2), |acc, (a, b)| {
            acc + (a.adjoint() * a).kronecker(&(b.adjoint() * b))
        });
        let dev = max_abs_diff(&sum, &Operator::identity(n1 * n2, n1 * n2));
        if dev > STRUCTURAL {
            return Err(QbcError::NotTracePreserving(dev));
        }
        Ok(Self { alice_shape, cut, factor_pairs })
    }

    /// Kraus pairs `(<e1| V_1) ⊗ (<e2| V_2)` from local isometries
    /// `V_k: A_k -> E_k ⊗ A_k`, with the environment index most significant.
    pub fn from_isometries(alice_shape: RegisterShape, cut: Bipartition, v1: &Operator, v2: &Operator) -> Result<Self> {
        let pairs = product_kraus_pairs(cut.dims(), v1, v2)?;
        Self::new(alice_shape, cut, pairs)
    }

    pub fn cut(&self) -> &Bipartition {
        &self.cut
    }

    pub fn alice_shape(&self) -> &RegisterShape {
        &self.alice_shape
    }

    pub fn factor_pairs(&self) -> &[(Operator, Operator)] {
        &self.factor_pairs
    }

    /// Kraus operators `P† (K_1 ⊗ K_2) P` on Alice's register in its natural
    /// factor order, `P` being the reordering that realizes the cut.
    pub fn lift(&self) -> Result<KrausChannel> {
        let p = factor_permutation_operator(&self.alice_shape, &self.cut.ordering())?;
        let ops = self.factor_pairs.iter().map(|(a, b)| p.adjoint() * a.kronecker(b) * &p).collect();
        KrausChannel::on(self.alice_shape.clone(), ops)
    }
}

/// Lifts a separable channel on Alice's register to `A ⊗ B`, acting as the
/// identity on Bob's factors (appended after Alice's).
pub fn lift_to_alice(channel: &SeparableChannel, bob_shape: &RegisterShape) -> Result<KrausChannel> {
    Ok(channel.lift()?.extend_right(bob_shape))
}

/// Splits local isometries into per-environment Kraus slices and pairs them.
pub fn product_kraus_pairs(
    (n1, n2): (usize, usize),
    v1: &Operator,
    v2: &Operator,
) -> Result<Vec<(Operator, Operator)>> {
    let slices = |v: &Operator, n: usize| -> Result<Vec<Operator>> {
        if v.ncols() != n || !v.nrows().is_multiple_of(n) {
            return Err(QbcError::ShapeMismatch(format!("isometry {:?} for local dim {n}", v.shape())));
        }
        Ok((0..v.nrows() / n).map(|e| v.rows(e * n, n).into_owned()).collect())
    };
    let k1 = slices(v1, n1)?;
    let k2 = slices(v2, n2)?;
    Ok(k1.iter().flat_map(|a| k2.iter().map(move |b| (a.clone(), b.clone()))).collect())
}

/// Product-isometry sampler: independent Haar isometries
/// `V_1: A_1 -> E_1 ⊗ A_1`, `V_2: A_2 -> E_2 ⊗ A_2` with environment
/// dimensions `ranks = (|E_1|, |E_2|)`; Kraus operators are their slices.
pub fn random_separable_channel<R: Rng + ?Sized>(
    alice_shape: &RegisterShape,
    cut: &Bipartition,
    ranks: (usize, usize),
    rng: &mut R,
) -> Result<SeparableChannel> {
    if ranks.0 == 0 || ranks.1 == 0 {
        return Err(QbcError::InvalidArgument("Kraus rank must be at least 1".into()));
    }
    let (n1, n2) = cut.dims();
    let v1 = haar_isometry(n1 * ranks.0, n1, rng);
    let v2 = haar_isometry(n2 * ranks.1, n2, rng);
    SeparableChannel::from_isometries(alice_shape.clone(), cut.clone(), &v1, &v2)
}

/// Distance of an operator on `A_1 ⊗ A_2` (cut order) from a product
/// `K_1 ⊗ K_2`: the second singular value of its realignment.
pub fn product_defect(op: &Operator, (n1, n2): (usize, usize)) -> f64 {
    let mut realigned = DMatrix::from_element(n1 * n1, n2 * n2, ZERO);
    for i1 in 0..n1 {
        for j1 in 0..n1 {
            for i2 in 0..n2 {
                for j2 in 0..n2 {
                    realigned[(i1 * n1 + j1, i2 * n2 + j2)] = op[(i1 * n2 + i2, j1 * n2 + j2)];
                }
            }
        }
    }
    let mut sv: Vec<f64> = realigned.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.get(1).copied().unwrap_or(0.0)
}

fn measurement_kraus(b: Bit, pi: &Permutation, d: usize, weight: f64) -> Result<Vec<Operator>> {
    let s = weight.sqrt();
    (0..d)
        .map(|m| {
            // |m><beta_{pi(m)}|
            let beta = basis_vector(b.basis_kind(), m, d, Some(pi))?;
            let mut k = Operator::zeros(d, d);
            k.row_mut(m).copy_from(&beta.amplitudes().adjoint().scale(s));
            Ok(k)
        })
        .collect()
}

/// `M^pi_b`: measure `anc` in `B_{b,pi}` and record outcome `m` as `|m>`,
/// with Kraus operators `|m><beta_{pi(m)}| ⊗ 1_AB`.
pub fn measurement_channel(b: Bit, pi: &Permutation, d: usize) -> Result<LocalChannel> {
    let params = ProtocolParams::new(d)?;
    let anc = RegisterShape::uniform(d, 1)?;
    let local = KrausChannel::on(anc, measurement_kraus(b, pi, d, 1.0)?)?;
    LocalChannel::new(params.full_shape(), vec![0], local)
}

/// How `M_b = (1/d!) sum_pi M^pi_b` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingMode {
    /// All `d!` permutations (`d <= 5`).
    Exact,
    /// `(1/d) sum_{m,k} (|m><k| ⊗ 1) rho (|k><m| ⊗ 1)`.
    ClosedForm,
    /// Average over `samples` permutations drawn from `seed`.
    Sampled { samples: usize, seed: u64 },
}

/// Largest `d` accepted by [`AveragingMode::Exact`].
pub const MAX_EXACT_AVERAGING_DIM: usize = 5;

/// Permutation-averaged commit measurement on `anc ⊗ A ⊗ B`.
pub fn averaged_measurement_channel(b: Bit, d: usize, mode: AveragingMode) -> Result<LocalChannel> {
    let params = ProtocolParams::new(d)?;
    let anc = RegisterShape::uniform(d, 1)?;
    let ops = match mode {
        AveragingMode::Exact => {
            if d > MAX_EXACT_AVERAGING_DIM {
                return Err(QbcError::ExactAveragingTooLarge(d));
            }
            let count: usize = (1..=d).product();
            let w = 1.0 / count as f64;
            let mut ops = Vec::with_capacity(count * d);
            for pi in Permutation::all(d) {
                ops.extend(measurement_kraus(b, &pi, d, w)?);
            }
            ops
        }
        AveragingMode::ClosedForm => {
            let s = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
            (0..d * d)
                .map(|mk| {
                    let mut k = Operator::zeros(d, d);
                    k[(mk / d, mk % d)] = s;
                    k
                })
                .collect()
        }
        AveragingMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(QbcError::InvalidArgument("sampled averaging needs samples >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 1.0 / samples as f64;
            let mut ops = Vec::with_capacity(samples * d);
            for _ in 0..samples {
                ops.extend(measurement_kraus(b, &Permutation::random(d, &mut rng), d, w)?);
            }
            ops
        }
    };
    LocalChannel::new(params.full_shape(), vec![0], KrausChannel::on(anc, ops)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{post_state_closed_form, xi_state};
    use crate::random::{haar_unitary, random_density_matrix, random_state};
    use crate::state::partial_trace;
    use crate::tol::ROUND_TRIP;
    use crate::StateVector;
    use crate::Tensor;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn identity_and_unitary_channels() {
        let mut r = rng(1);
        let shape = RegisterShape::new(vec![2, 3]).unwrap();
        let rho = random_density_matrix(shape.clone(), 6, &mut r);
        let out = KrausChannel::identity(shape.clone()).apply(&rho).unwrap();
        assert!(out.max_abs_diff(&rho).unwrap() <= ROUND_TRIP);

        let u = haar_unitary(6, &mut r);
        let psi = random_state(shape.clone(), &mut r);
        let out = KrausChannel::unitary(shape.clone(), u.clone()).unwrap().apply(&psi.projector()).unwrap();
        let v = &u * psi.amplitudes();
        assert!(max_abs_diff(out.entries(), &(&v * v.adjoint())) < STRUCTURAL);
    }

    #[test]
    fn depolarizing_gives_maximally_mixed() {
        let mut r = rng(2);
        let shape = RegisterShape::uniform(3, 1).unwrap();
        let ch = KrausChannel::completely_depolarizing(shape.clone());
        assert!(ch.trace_preservation_deviation() < STRUCTURAL);
        let rho = random_density_matrix(shape.clone(), 2, &mut r);
        let out = ch.apply(&rho).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(shape)).unwrap() < STRUCTURAL);
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let shape = RegisterShape::uniform(2, 1).unwrap();
        let half = Operator::identity(2, 2).scale(0.5);
        assert!(matches!(KrausChannel::on(shape.clone(), vec![half]), Err(QbcError::NotTracePreserving(_))));
        let ch = KrausChannel::identity(shape);
        let wrong = DensityMatrix::maximally_mixed(RegisterShape::uniform(3, 1).unwrap());
        assert!(matches!(ch.apply(&wrong), Err(QbcError::ShapeMismatch(_))));
    }

    #[test]
    fn local_channel_matches_dense_lift() {
        let mut r = rng(3);
        let reg = RegisterShape::new(vec![2, 3, 2]).unwrap();
        let local_shape = reg.select(&[1]).unwrap();
        let v = haar_isometry(6, 3, &mut r);
        let ops: Vec<Operator> = (0..2).map(|e| v.rows(e * 3, 3).into_owned()).collect();
        let local = KrausChannel::on(local_shape, ops).unwrap();
        let lc = LocalChannel::new(reg.clone(), vec![1], local).unwrap();
        let dense = lc.to_kraus().unwrap();
        for _ in 0..5 {
            let rho = random_density_matrix(reg.clone(), 4, &mut r);
            let a = lc.apply(&rho).unwrap();
            let b = dense.apply(&rho).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn separable_lift_identity_and_round_trip() {
        let mut r = rng(4);
        let alice = RegisterShape::uniform(2, 3).unwrap();
        let bob = RegisterShape::uniform(2, 1).unwrap();
        let cut = Bipartition::new(&alice, &[0]).unwrap();
        let (n1, n2) = cut.dims();
        let id = SeparableChannel::new(
            alice.clone(),
            cut.clone(),
            vec![(Operator::identity(n1, n1), Operator::identity(n2, n2))],
        )
        .unwrap();
        let lifted = lift_to_alice(&id, &bob).unwrap();
        assert_eq!(lifted.kraus_ops()[0], Operator::identity(16, 16));

        let cut = Bipartition::new(&alice, &[1]).unwrap();
        let (n1, n2) = cut.dims();
        let (u1, u2) = (haar_unitary(n1, &mut r), haar_unitary(n2, &mut r));
        let fwd = lift_to_alice(
            &SeparableChannel::new(alice.clone(), cut.clone(), vec![(u1.clone(), u2.clone())]).unwrap(),
            &bob,
        )
        .unwrap();
        let inv = lift_to_alice(
            &SeparableChannel::new(alice.clone(), cut, vec![(u1.adjoint(), u2.adjoint())]).unwrap(),
            &bob,
        )
        .unwrap();
        let round = &inv.kraus_ops()[0] * &fwd.kraus_ops()[0];
        assert!(max_abs_diff(&round, &Operator::identity(16, 16)) <= ROUND_TRIP);
    }

    #[test]
    fn separable_rejects_cut_on_bob() {
        let shared = RegisterShape::uniform(2, 4).unwrap();
        let alice = RegisterShape::uniform(2, 3).unwrap();
        let cut = Bipartition::new(&shared, &[3]).unwrap();
        let (n1, n2) = cut.dims();
        let pairs = vec![(Operator::identity(n1, n1), Operator::identity(n2, n2))];
        assert!(matches!(SeparableChannel::new(alice, cut, pairs), Err(QbcError::InvalidBipartition(_))));
    }

    #[test]
    fn random_separable_channels_are_valid_products() {
        let mut r = rng(5);
        let alice = RegisterShape::uniform(2, 3).unwrap();
        for cut in Bipartition::all(&alice) {
            for ranks in [(1, 1), (2, 3), (4, 4)] {
                let ch = random_separable_channel(&alice, &cut, ranks, &mut r).unwrap();
                assert_eq!(ch.factor_pairs().len(), ranks.0 * ranks.1);
                let lifted = ch.lift().unwrap();
                assert!(lifted.trace_preservation_deviation() < STRUCTURAL);
                let p = factor_permutation_operator(&alice, &cut.ordering()).unwrap();
                for k in lifted.kraus_ops() {
                    let in_cut_order = &p * k * p.adjoint();
                    assert!(product_defect(&in_cut_order, cut.dims()) < 1e-10);
                }
            }
        }
        // rank (1,1) draws are product unitaries
        let cut = Bipartition::new(&alice, &[2]).unwrap();
        let ch = random_separable_channel(&alice, &cut, (1, 1), &mut r).unwrap();
        let lifted = ch.lift().unwrap();
        let k = &lifted.kraus_ops()[0];
        assert!(max_abs_diff(&(k * k.adjoint()), &Operator::identity(8, 8)) < STRUCTURAL);
        assert!(random_separable_channel(&alice, &cut, (0, 1), &mut r).is_err());
    }

    #[test]
    fn lift_commutes_with_bob_trace() {
        let mut r = rng(6);
        let alice = RegisterShape::uniform(2, 3).unwrap();
        let bob = RegisterShape::uniform(2, 1).unwrap();
        let cut = Bipartition::new(&alice, &[1]).unwrap();
        let ch = random_separable_channel(&alice, &cut, (2, 2), &mut r).unwrap();
        let full = lift_to_alice(&ch, &bob).unwrap();
        let rho = random_density_matrix(alice.concat(&bob), 3, &mut r);
        let lhs = partial_trace(&full.apply(&rho).unwrap(), &[0, 1, 2]).unwrap();
        let rhs = ch.lift().unwrap().apply(&partial_trace(&rho, &[0, 1, 2]).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < STRUCTURAL);
    }

    #[test]
    fn measurement_channel_on_xi_b1() {
        let d = 2;
        let pi = Permutation::identity(d);
        let ch = measurement_channel(Bit::One, &pi, d).unwrap();
        let out = ch.apply(&xi_state(d).unwrap().projector()).unwrap();
        let anc = RegisterShape::uniform(d, 1).unwrap();
        let mut expected = DMatrix::zeros(d.pow(5), d.pow(5));
        for m in 0..d {
            let branch =
                StateVector::basis(anc.clone(), &[m]).unwrap().tensor(&crate::protocol::phi_state(m, d).unwrap());
            expected += branch.projector().into_entries().scale(1.0 / d as f64);
        }
        assert!(max_abs_diff(out.entries(), &expected) < STRUCTURAL);
    }

    #[test]
    fn measurement_channel_on_xi_b0() {
        let d = 2;
        let pi = Permutation::identity(d);
        let params = ProtocolParams::new(d).unwrap();
        let ch = measurement_channel(Bit::Zero, &pi, d).unwrap();
        let out = ch.apply(&xi_state(d).unwrap().projector()).unwrap();
        let anc = RegisterShape::uniform(d, 1).unwrap();
        let mut expected = DMatrix::zeros(d.pow(5), d.pow(5));
        for m in 0..d {
            let branch = StateVector::basis(anc.clone(), &[m])
                .unwrap()
                .tensor(&post_state_closed_form(params, Bit::Zero, &pi, m).unwrap());
            expected += branch.projector().into_entries().scale(1.0 / d as f64);
        }
        assert!(max_abs_diff(out.entries(), &expected) < STRUCTURAL);
    }

    #[test]
    fn measurement_channels_trace_preserving() {
        for pi in Permutation::all(3) {
            for b in Bit::BOTH {
                let ch = measurement_channel(b, &pi, 3).unwrap();
                assert!(ch.trace_preservation_deviation() < STRUCTURAL);
            }
        }
    }

    #[test]
    fn averaged_channels_agree() {
        let mut r = rng(7);
        for d in [2, 3] {
            let m0 = averaged_measurement_channel(Bit::Zero, d, AveragingMode::Exact).unwrap();
            let m1 = averaged_measurement_channel(Bit::One, d, AveragingMode::Exact).unwrap();
            let cf = averaged_measurement_channel(Bit::Zero, d, AveragingMode::ClosedForm).unwrap();
            assert!(max_abs_diff(m0.transfer_matrix(), m1.transfer_matrix()) < STRUCTURAL);
            assert!(max_abs_diff(m0.transfer_matrix(), cf.transfer_matrix()) < STRUCTURAL);
            let full = ProtocolParams::new(d).unwrap().full_shape();
            for _ in 0..3 {
                let rho = random_density_matrix(full.clone(), 3, &mut r);
                let a = m0.apply(&rho).unwrap();
                assert!(a.max_abs_diff(&m1.apply(&rho).unwrap()).unwrap() < STRUCTURAL);
                assert!(a.max_abs_diff(&cf.apply(&rho).unwrap()).unwrap() < STRUCTURAL);
            }
        }
    }

    #[test]
    fn closed_form_is_unital() {
        let d = 3;
        let cf = averaged_measurement_channel(Bit::Zero, d, AveragingMode::ClosedForm).unwrap();
        let mixed = DensityMatrix::maximally_mixed(ProtocolParams::new(d).unwrap().full_shape());
        assert!(cf.apply(&mixed).unwrap().max_abs_diff(&mixed).unwrap() < STRUCTURAL);
    }

    #[test]
    fn exact_mode_limits() {
        assert_eq!(
            averaged_measurement_channel(Bit::Zero, 6, AveragingMode::Exact).unwrap_err(),
            QbcError::ExactAveragingTooLarge(6)
        );
        let s = averaged_measurement_channel(Bit::One, 6, AveragingMode::Sampled { samples: 16, seed: 3 }).unwrap();
        assert!(s.trace_preservation_deviation() < STRUCTURAL);
        assert!(averaged_measurement_channel(Bit::One, 3, AveragingMode::Sampled { samples: 0, seed: 3 }).is_err());
    }
}
