//! Cheating analysis for a committer who honestly committed to `b` and tries
//! to open `1 - b`.
//!
//! With Schmidt forms `Psi_0 = sum_i sqrt(l_i) |x_i>|b_i>` and
//! `Psi_1 = sum_i sqrt(l_i) |y_i>|b_i>`, a channel `{K_j}` on Alice's register
//! switches `0 -> 1` with probability `sum_j |sum_i l_i <y_i|K_j|x_i>|^2` and
//! `1 -> 0` with `x` and `y` exchanged.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{product_kraus_pairs, KrausChannel, SeparableChannel};
use crate::error::{QbcError, Result};
use crate::fidelity::fidelity;
use crate::gates::{root_of_unity, Permutation};
use crate::protocol::{schmidt_family, Bit, ProtocolParams};
use crate::random::{complex_gaussian, haar_isometry, haar_unitary, orthonormalize_columns, uniform_simplex};
use crate::register::{Bipartition, RegisterShape};
use crate::state::{check_same_shape, gram_deviation, DensityMatrix, Operator, StateVector, ZERO};
use crate::tol::STRUCTURAL;

/// Which commitment is being switched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Committed 0 (AME family `x`), opening 1 (product family `y`): `p_s(0)`.
    ZeroToOne,
    /// Committed 1 (product family `y`), opening 0 (AME family `x`): `p_s(1)`.
    OneToZero,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::ZeroToOne, Direction::OneToZero];

    pub fn committed(self) -> Bit {
        match self {
            Direction::ZeroToOne => Bit::Zero,
            Direction::OneToZero => Bit::One,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::ZeroToOne => "0to1",
            Direction::OneToZero => "1to0",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = QbcError;

    fn from_str(s: &str) -> Result<Direction> {
        match s {
            "0to1" => Ok(Direction::ZeroToOne),
            "1to0" => Ok(Direction::OneToZero),
            other => Err(QbcError::InvalidArgument(format!("unknown direction {other:?}"))),
        }
    }
}

/// Two purifications sharing Schmidt coefficients and Bob's basis (Bob's
/// vectors are implicitly the first `M` computational basis states).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackInstance {
    alice_shape: RegisterShape,
    lambdas: Vec<f64>,
    x_family: Vec<StateVector>,
    y_family: Vec<StateVector>,
    cut: Bipartition,
    direction: Direction,
}

impl AttackInstance {
    pub fn new(
        alice_shape: RegisterShape,
        lambdas: Vec<f64>,
        x_family: Vec<StateVector>,
        y_family: Vec<StateVector>,
        cut: Bipartition,
        direction: Direction,
    ) -> Result<Self> {
        let m = lambdas.len();
        if m == 0 || x_family.len() != m || y_family.len() != m {
            return Err(QbcError::ShapeMismatch(format!(
                "{m} coefficients, {} x vectors, {} y vectors",
                x_family.len(),
                y_family.len()
            )));
        }
        if lambdas.iter().any(|&l| l < 0.0) || (lambdas.iter().sum::<f64>() - 1.0).abs() > STRUCTURAL {
            return Err(QbcError::InvalidArgument("coefficients must form a probability vector".into()));
        }
        for v in x_family.iter().chain(&y_family) {
            check_same_shape(&alice_shape, v.shape())?;
        }
        for fam in [&x_family, &y_family] {
            let dev = gram_deviation(fam);
            if dev > STRUCTURAL {
                return Err(QbcError::NotOrthonormal(dev));
            }
        }
        Ok(Self { alice_shape, lambdas, x_family, y_family, cut, direction })
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        Self { direction, ..self.clone() }
    }

    pub fn with_cut(&self, cut: Bipartition) -> Self {
        Self { cut, ..self.clone() }
    }

    pub fn alice_shape(&self) -> &RegisterShape {
        &self.alice_shape
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }

    pub fn x_family(&self) -> &[StateVector] {
        &self.x_family
    }

    pub fn y_family(&self) -> &[StateVector] {
        &self.y_family
    }

    pub fn cut(&self) -> &Bipartition {
        &self.cut
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// `(source, target)` families for the instance's direction.
    pub fn source_target(&self) -> (&[StateVector], &[StateVector]) {
        match self.direction {
            Direction::ZeroToOne => (&self.x_family, &self.y_family),
            Direction::OneToZero => (&self.y_family, &self.x_family),
        }
    }

    /// Bob's register for the purified states (at least one qudit of dim 2).
    fn bob_shape(&self) -> RegisterShape {
        RegisterShape::new(vec![self.lambdas.len().max(2)]).expect("dim >= 2")
    }

    /// `sum_i sqrt(l_i) |family_i> |i>` on Alice ⊗ Bob.
    pub fn purification(&self, bit: Bit) -> StateVector {
        let fam = match bit {
            Bit::Zero => &self.x_family,
            Bit::One => &self.y_family,
        };
        let bob = self.bob_shape();
        let mut amps = DVector::zeros(self.alice_shape.total_dim() * bob.total_dim());
        for (i, (l, v)) in self.lambdas.iter().zip(fam).enumerate() {
            let mut e = DVector::zeros(bob.total_dim());
            e[i] = Complex64::new(1.0, 0.0);
            amps += v.amplitudes().kronecker(&e).scale(l.sqrt());
        }
        StateVector::new(self.alice_shape.concat(&bob), amps).expect("orthonormal families give unit norm")
    }
}

/// Kraus-sum switch probability `sum_j |sum_i l_i <target_i|K_j|source_i>|^2`.
pub fn switch_probability(instance: &AttackInstance, channel: &KrausChannel) -> Result<f64> {
    check_same_shape(instance.alice_shape(), channel.in_shape())?;
    check_same_shape(instance.alice_shape(), channel.out_shape())?;
    let (source, target) = instance.source_target();
    let p = channel
        .kraus_ops()
        .iter()
        .map(|k| {
            instance
                .lambdas
                .iter()
                .zip(source.iter().zip(target))
                .map(|(l, (s, t))| t.amplitudes().dotc(&(k * s.amplitudes())) * *l)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum();
    Ok(p)
}

/// Same quantity evaluated as the fidelity between the target purification
/// and the evolved source purification `(N ⊗ 1_B)(|Psi_b><Psi_b|)`.
pub fn switch_probability_via_fidelity(instance: &AttackInstance, channel: &KrausChannel) -> Result<f64> {
    check_same_shape(instance.alice_shape(), channel.in_shape())?;
    let committed = instance.direction.committed();
    let source = instance.purification(committed);
    let target = instance.purification(committed.flip());
    // (K_j ⊗ 1)|Psi> is K_j times Psi reshaped to A x B
    let (na, nb) = (instance.alice_shape.total_dim(), instance.bob_shape().total_dim());
    let amps = source.amplitudes();
    let psi = DMatrix::from_fn(na, nb, |a, b| amps[a * nb + b]);
    let n = na * nb;
    let mut evolved = DMatrix::<Complex64>::zeros(n, n);
    for k in channel.kraus_ops() {
        let out = k * &psi;
        let v = DVector::from_fn(n, |i, _| out[(i / nb, i % nb)]);
        evolved.gerc(Complex64::new(1.0, 0.0), &v, &v, Complex64::new(1.0, 0.0));
    }
    let evolved = DensityMatrix::from_entries_unchecked(source.shape().clone(), evolved)?;
    fidelity(&target.projector(), &evolved)
}

/// Raw analytic bounds: `p_s(0) <= lambda_max^2 N_2` and `p_s(1) <= 1/N_2`.
/// The first may exceed one; [`AnalyticBounds::clamped`] caps both at one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticBounds {
    pub p0: f64,
    pub p1: f64,
}

impl AnalyticBounds {
    pub fn for_direction(&self, direction: Direction) -> f64 {
        match direction {
            Direction::ZeroToOne => self.p0,
            Direction::OneToZero => self.p1,
        }
    }

    pub fn clamped(&self) -> AnalyticBounds {
        AnalyticBounds { p0: self.p0.min(1.0), p1: self.p1.min(1.0) }
    }
}

pub fn switch_bounds(lambda_max: f64, n2: usize) -> AnalyticBounds {
    let n2 = n2 as f64;
    AnalyticBounds { p0: lambda_max * lambda_max * n2, p1: 1.0 / n2 }
}

pub fn analytic_bounds(instance: &AttackInstance) -> AnalyticBounds {
    switch_bounds(instance.lambda_max(), instance.cut.dims().1)
}

/// Worst-case honest-binding parameter for `n` Alice qudits of dimension `d`:
/// Alice picks the smaller side `N_2 = d^k` (`1 <= k <= floor(n/2)`), Bob
/// picks `lambda_max = d^{-floor(n/2)}`, and the value is
/// `max_k max{1/N_2, lambda_max^2 N_2}`.
pub fn lemma_cheat_bound(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(QbcError::InvalidArgument(format!("need at least two Alice qudits, got {n}")));
    }
    if d < 2 {
        return Err(QbcError::InvalidDimension(d));
    }
    let half = n / 2;
    let lambda_max = 1.0 / (d as f64).powi(half as i32);
    Ok((1..=half)
        .map(|k| {
            let b = switch_bounds(lambda_max, d.pow(k as u32));
            b.p0.max(b.p1)
        })
        .fold(0.0, f64::max))
}

/// Completes an orthonormal family to an orthonormal basis of `C^n` by
/// Gram-Schmidt against the computational basis.
fn complete_basis(family: &[StateVector], n: usize) -> DMatrix<Complex64> {
    let mut cols: Vec<DVector<Complex64>> = family.iter().map(|v| v.amplitudes().clone()).collect();
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = DVector::from_element(n, ZERO);
        e[k] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&e);
                e -= c * proj;
            }
        }
        let norm = e.norm();
        if norm > 1e-8 {
            cols.push(e.unscale(norm));
        }
    }
    DMatrix::from_columns(&cols)
}

/// The unitary `U |source_i> = |target_i>` (extended to the orthogonal
/// complements), with the switch probability it achieves.
pub fn unrestricted_attack(instance: &AttackInstance) -> Result<(Operator, f64)> {
    let (source, target) = instance.source_target();
    for fam in [source, target] {
        let dev = gram_deviation(fam);
        if dev > STRUCTURAL {
            return Err(QbcError::NotOrthonormal(dev));
        }
    }
    let n = instance.alice_shape.total_dim();
    let s = complete_basis(source, n);
    let t = complete_basis(target, n);
    let u = &t * s.adjoint();
    let channel = KrausChannel::unitary(instance.alice_shape.clone(), u.clone())?;
    let p = switch_probability(instance, &channel)?;
    Ok((u, p))
}

/// Instance built from the protocol's post-commit states: `x` from
/// `Xi^0_{pi,m}`, `y` from `Xi^1_{pi,m}`, uniform coefficients `1/d`.
pub fn protocol_instance(
    params: ProtocolParams,
    pi: &Permutation,
    m: usize,
    cut: Bipartition,
    direction: Direction,
) -> Result<AttackInstance> {
    let xs = schmidt_family(params, Bit::Zero, pi, m)?;
    let ys = schmidt_family(params, Bit::One, pi, m)?;
    AttackInstance::new(
        params.alice_shape(),
        xs.coefficients().to_vec(),
        xs.left_vectors().to_vec(),
        ys.left_vectors().to_vec(),
        cut,
        direction,
    )
}

/// Random instance on `alice_shape` with `m` Schmidt terms: `x_i` are
/// maximally entangled across `cut` (locally rotated generalized Bell
/// states), `y_i = |a_i>|b_i>` with Haar-random local bases, and the
/// coefficients are flat-Dirichlet.
pub fn random_instance<R: Rng + ?Sized>(
    alice_shape: &RegisterShape,
    cut: &Bipartition,
    m: usize,
    direction: Direction,
    rng: &mut R,
) -> Result<AttackInstance> {
    let (n1, n2) = cut.dims();
    if m == 0 || m > n2 {
        return Err(QbcError::TooManyTerms { requested: m, max: n2 });
    }
    let order = cut.ordering();
    let cut_shape = alice_shape.select(&order)?;
    let back = crate::gates::inverse_order(&order);
    let to_natural = |amps: DVector<Complex64>| -> Result<StateVector> {
        StateVector::normalized(cut_shape.clone(), amps)?.permute_factors(&back)
    };

    let u = haar_unitary(n1, rng);
    let v = haar_unitary(n2, rng);
    let mut labels: Vec<usize> = (0..n2 * n2).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), rng);
    let s = 1.0 / (n2 as f64).sqrt();
    let mut x_family = Vec::with_capacity(m);
    for &label in labels.iter().take(m) {
        let (phase, shift) = (label / n2, label % n2);
        // (1/sqrt N2) sum_k omega^{phase k} U|k> ⊗ V|k + shift>
        let mut amps = DVector::zeros(n1 * n2);
        for k in 0..n2 {
            let w = root_of_unity(n2, (phase * k) as i64) * s;
            amps += u.column(k).kronecker(&v.column((k + shift) % n2)) * w;
        }
        x_family.push(to_natural(amps)?);
    }
    let a = haar_unitary(n1, rng);
    let b = haar_unitary(n2, rng);
    let y_family = (0..m).map(|i| to_natural(a.column(i).kronecker(&b.column(i)))).collect::<Result<Vec<_>>>()?;
    let lambdas = uniform_simplex(m, rng);
    AttackInstance::new(alice_shape.clone(), lambdas, x_family, y_family, cut.clone(), direction)
}

/// Knobs of the separable-attack search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub iterations: usize,
    /// Largest environment dimension per side; restart `r` uses
    /// `1 + r % kraus_rank` on both sides.
    pub kraus_rank: usize,
    pub initial_step: f64,
    pub step_decay: f64,
    pub decay_every: usize,
    /// Restart 0 starts from the identity channel.
    pub identity_start: bool,
    /// Trace rows are recorded every this many iterations (and at the end).
    pub trace_stride: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            iterations: 2000,
            kraus_rank: 4,
            initial_step: 0.5,
            step_decay: 0.95,
            decay_every: 50,
            identity_start: true,
            trace_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub restart: usize,
    pub iteration: usize,
    pub best_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub direction: Direction,
    pub cut: Bipartition,
    pub achieved_p: f64,
    /// Raw analytic bound for the direction on `cut`.
    pub bound: f64,
    pub best_restart: usize,
    /// Environment dimensions of the best channel.
    pub ranks: (usize, usize),
    /// Local isometries `V_1`, `V_2` of the best channel.
    pub isometries: (Operator, Operator),
    pub trace: Vec<TracePoint>,
}

impl AttackResult {
    pub fn channel(&self, alice_shape: &RegisterShape) -> Result<SeparableChannel> {
        SeparableChannel::from_isometries(alice_shape.clone(), self.cut.clone(), &self.isometries.0, &self.isometries.1)
    }

    /// `achieved_p <= min(1, bound) + slack`.
    pub fn respects_bound(&self, slack: f64) -> bool {
        self.achieved_p <= self.bound.min(1.0) + slack
    }
}

/// Fast evaluator for product Kraus sets on a fixed cut: with source and
/// target vectors reshaped to `N_1 x N_2` matrices `S_i`, `T_i`,
/// `<T_i|A ⊗ B|S_i> = sum_{ab} (T_i^† A S_i)_{ab} B_{ab}`.
struct CutObjective {
    n1: usize,
    n2: usize,
    weighted: Vec<(f64, DMatrix<Complex64>, DMatrix<Complex64>)>,
}

impl CutObjective {
    fn new(instance: &AttackInstance, cut: &Bipartition) -> Result<Self> {
        let (n1, n2) = cut.dims();
        let order = cut.ordering();
        let (source, target) = instance.source_target();
        let reshape = |v: &StateVector| -> Result<DMatrix<Complex64>> {
            let p = v.permute_factors(&order)?;
            Ok(DMatrix::from_row_slice(n1, n2, p.amplitudes().as_slice()))
        };
        let weighted = instance
            .lambdas
            .iter()
            .zip(source.iter().zip(target))
            .map(|(l, (s, t))| Ok((*l, reshape(s)?, reshape(t)?.adjoint())))
            .collect::<Result<_>>()?;
        Ok(Self { n1, n2, weighted })
    }

    fn value(&self, v1: &Operator, v2: &Operator) -> f64 {
        let (n1, n2) = (self.n1, self.n2);
        let k2: Vec<_> = (0..v2.nrows() / n2).map(|e| v2.rows(e * n2, n2)).collect();
        let mut total = 0.0;
        for e1 in 0..v1.nrows() / n1 {
            let a = v1.rows(e1 * n1, n1);
            let mut g = DMatrix::from_element(n2, n2, ZERO);
            for (l, s, t_adj) in &self.weighted {
                g += (t_adj * (a * s)).scale(*l);
            }
            for b in &k2 {
                let amp: Complex64 = g.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                total += amp.norm_sqr();
            }
        }
        total
    }
}

/// Isometry `n -> r*n` whose first slice is the identity.
fn identity_isometry(n: usize, r: usize) -> Operator {
    let mut v = Operator::zeros(n * r, n);
    v.view_mut((0, 0), (n, n)).fill_with_identity();
    v
}

fn perturb<R: Rng + ?Sized>(v: &Operator, step: f64, rng: &mut R) -> Operator {
    let noise = DMatrix::from_fn(v.nrows(), v.ncols(), |_, _| complex_gaussian(rng));
    orthonormalize_columns(v + noise.scale(step))
}

struct RestartOutcome {
    best: f64,
    ranks: (usize, usize),
    v1: Operator,
    v2: Operator,
    trace: Vec<TracePoint>,
}

fn run_restart(objective: &CutObjective, config: &OptimizerConfig, restart: usize, seed: u64) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = 1 + restart % config.kraus_rank.max(1);
    let (n1, n2) = (objective.n1, objective.n2);
    let (mut v1, mut v2) = if restart == 0 && config.identity_start {
        (identity_isometry(n1, rank), identity_isometry(n2, rank))
    } else {
        (haar_isometry(n1 * rank, n1, &mut rng), haar_isometry(n2 * rank, n2, &mut rng))
    };
    let mut best = objective.value(&v1, &v2);
    let mut trace = vec![TracePoint { restart, iteration: 0, best_p: best }];
    let mut step = config.initial_step;
    for it in 1..=config.iterations {
        let c1 = perturb(&v1, step, &mut rng);
        let c2 = perturb(&v2, step, &mut rng);
        let val = objective.value(&c1, &c2);
        if val > best {
            best = val;
            v1 = c1;
            v2 = c2;
        }
        if config.decay_every > 0 && it % config.decay_every == 0 {
            step *= config.step_decay;
        }
        if it % config.trace_stride.max(1) == 0 || it == config.iterations {
            trace.push(TracePoint { restart, iteration: it, best_p: best });
        }
    }
    RestartOutcome { best, ranks: (rank, rank), v1, v2, trace }
}

/// Multi-restart local search over product-isometry channels on `cut`.
///
/// Each restart perturbs both local isometries with Gaussian noise, retracts
/// onto the isometry manifold by QR, and keeps the candidate only if it
/// improves the switch probability. The step size decays geometrically.
/// Restarts run in parallel with seeds derived from `seed`; results are
/// merged in restart order, so the outcome is deterministic.
pub fn optimize_separable_attack(
    instance: &AttackInstance,
    cut: &Bipartition,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<AttackResult> {
    if config.restarts == 0 {
        return Err(QbcError::InvalidArgument("optimizer needs at least one restart".into()));
    }
    if config.kraus_rank == 0 {
        return Err(QbcError::InvalidArgument("Kraus rank must be at least 1".into()));
    }
    let objective = CutObjective::new(instance, cut)?;
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..config.restarts).map(|_| seeder.next_u64()).collect();
    let outcomes: Vec<RestartOutcome> =
        seeds.par_iter().enumerate().map(|(r, &s)| run_restart(&objective, config, r, s)).collect();

    let (best_restart, best) =
        outcomes
            .iter()
            .enumerate()
            .fold((0, &outcomes[0]), |acc, (r, o)| if o.best > acc.1.best { (r, o) } else { acc });
    let bound = switch_bounds(instance.lambda_max(), cut.dims().1).for_direction(instance.direction);
    Ok(AttackResult {
        direction: instance.direction,
        cut: cut.clone(),
        achieved_p: best.best,
        bound,
        best_restart,
        ranks: best.ranks,
        isometries: (best.v1.clone(), best.v2.clone()),
        trace: outcomes.into_iter().flat_map(|o| o.trace).collect(),
    })
}

/// Runs the search on every cut and keeps the best result. Trace restart
/// indices are offset by `cut_index * restarts`; the reported bound is the
/// largest per-cut bound.
pub fn optimize_over_cuts(
    instance: &AttackInstance,
    cuts: &[Bipartition],
    config: &OptimizerConfig,
    seed: u64,
) -> Result<AttackResult> {
    if cuts.is_empty() {
        return Err(QbcError::InvalidArgument("no cuts to optimize over".into()));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let mut merged: Option<AttackResult> = None;
    let mut trace = Vec::new();
    let mut bound: f64 = 0.0;
    for (c, cut) in cuts.iter().enumerate() {
        let mut res = optimize_separable_attack(instance, cut, config, seeder.next_u64())?;
        bound = bound.max(res.bound);
        trace.extend(res.trace.drain(..).map(|t| TracePoint { restart: t.restart + c * config.restarts, ..t }));
        res.best_restart += c * config.restarts;
        if merged.as_ref().is_none_or(|m| res.achieved_p > m.achieved_p) {
            merged = Some(res);
        }
    }
    let mut out = merged.expect("at least one cut");
    out.bound = bound;
    out.trace = trace;
    Ok(out)
}

/// Lifts the best channel of a result and re-evaluates it with the plain
/// Kraus-sum formula.
pub fn reevaluate(instance: &AttackInstance, result: &AttackResult) -> Result<f64> {
    let channel = result.channel(instance.alice_shape())?.lift()?;
    switch_probability(instance, &channel)
}

/// Product-isometry Kraus pairs for given local isometries on a cut.
pub fn separable_from_isometries(
    instance: &AttackInstance,
    cut: &Bipartition,
    v1: &Operator,
    v2: &Operator,
) -> Result<KrausChannel> {
    let pairs = product_kraus_pairs(cut.dims(), v1, v2)?;
    SeparableChannel::new(instance.alice_shape().clone(), cut.clone(), pairs)?.lift()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::random_separable_channel;
    use crate::state::reduced_state;
    use crate::DensityMatrix;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn protocol(d: usize, direction: Direction) -> AttackInstance {
        let params = ProtocolParams::new(d).unwrap();
        let cut = Bipartition::new(&params.alice_shape(), &[0]).unwrap();
        protocol_instance(params, &Permutation::identity(d), 0, cut, direction).unwrap()
    }

    #[test]
    fn identical_families_need_no_switch() {
        let inst = protocol(2, Direction::OneToZero);
        let same = AttackInstance::new(
            inst.alice_shape().clone(),
            inst.lambdas().to_vec(),
            inst.y_family().to_vec(),
            inst.y_family().to_vec(),
            inst.cut().clone(),
            Direction::OneToZero,
        )
        .unwrap();
        let id = KrausChannel::identity(same.alice_shape().clone());
        assert!((switch_probability(&same, &id).unwrap() - 1.0).abs() < STRUCTURAL);
        let (u, p) = unrestricted_attack(&same).unwrap();
        assert!((p - 1.0).abs() < STRUCTURAL);
        for y in same.y_family() {
            assert!((&u * y.amplitudes() - y.amplitudes()).norm() < STRUCTURAL);
        }
    }

    #[test]
    fn identity_channel_on_protocol_instance() {
        // oracle: direct overlap sum_i l_i <x_i|y_i>, squared
        let inst = protocol(2, Direction::OneToZero);
        let direct: Complex64 = inst
            .lambdas()
            .iter()
            .zip(inst.x_family().iter().zip(inst.y_family()))
            .map(|(l, (x, y))| x.inner(y).unwrap() * *l)
            .sum();
        let id = KrausChannel::identity(inst.alice_shape().clone());
        let p = switch_probability(&inst, &id).unwrap();
        assert!((p - direct.norm_sqr()).abs() < STRUCTURAL);
        assert!((p - 0.5).abs() < STRUCTURAL);
        assert!((switch_probability_via_fidelity(&inst, &id).unwrap() - p).abs() < STRUCTURAL);
    }

    #[test]
    fn kraus_sum_matches_fidelity_on_random_instances() {
        let mut r = rng(1);
        let alice = RegisterShape::uniform(2, 3).unwrap();
        for cut in Bipartition::all(&alice) {
            for direction in Direction::BOTH {
                for m in 1..=2 {
                    let inst = random_instance(&alice, &cut, m, direction, &mut r).unwrap();
                    let ch = random_separable_channel(&alice, &cut, (2, 2), &mut r).unwrap().lift().unwrap();
                    let a = switch_probability(&inst, &ch).unwrap();
                    let b = switch_probability_via_fidelity(&inst, &ch).unwrap();
                    assert!((a - b).abs() < STRUCTURAL, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn random_instance_structure() {
        let mut r = rng(2);
        let alice = RegisterShape::uniform(3, 3).unwrap();
        for cut in Bipartition::all(&alice) {
            let inst = random_instance(&alice, &cut, 3, Direction::ZeroToOne, &mut r).unwrap();
            let n2 = cut.dims().1;
            for x in inst.x_family() {
                let red = reduced_state(x, cut.side_two()).unwrap();
                let mixed = DensityMatrix::maximally_mixed(red.shape().clone());
                assert!(red.max_abs_diff(&mixed).unwrap() < STRUCTURAL);
                assert_eq!(red.shape().total_dim(), n2);
            }
            for y in inst.y_family() {
                let lmax = crate::schmidt::max_schmidt_coefficient(y, cut.side_two()).unwrap();
                assert!(lmax > 1.0 - STRUCTURAL);
            }
        }
        let cut = Bipartition::new(&alice, &[0]).unwrap();
        assert!(matches!(
            random_instance(&alice, &cut, 4, Direction::ZeroToOne, &mut r),
            Err(QbcError::TooManyTerms { requested: 4, max: 3 })
        ));
    }

    #[test]
    fn bounds_examples() {
        for d in 2..=5 {
            let inst = protocol(d, Direction::ZeroToOne);
            let b = analytic_bounds(&inst);
            assert!((b.p0 - 1.0 / d as f64).abs() < 1e-15);
            assert!((b.p1 - 1.0 / d as f64).abs() < 1e-15);
        }
        let b = switch_bounds(1.0, 2);
        assert_eq!((b.p0, b.p1), (2.0, 0.5));
        assert_eq!(b.clamped().p0, 1.0);
        assert_eq!(switch_bounds(0.3, 1).p1, 1.0);
    }

    #[test]
    fn lemma_values() {
        assert_eq!(lemma_cheat_bound(3, 2).unwrap(), 0.5);
        assert_eq!(lemma_cheat_bound(3, 3).unwrap(), 1.0 / 3.0);
        assert_eq!(lemma_cheat_bound(5, 2).unwrap(), 0.5);
        assert!(lemma_cheat_bound(1, 2).is_err());
        assert!(lemma_cheat_bound(3, 1).is_err());
    }

    #[test]
    fn unrestricted_attack_on_protocol() {
        for d in 2..=3 {
            for direction in Direction::BOTH {
                let inst = protocol(d, direction);
                let (u, p) = unrestricted_attack(&inst).unwrap();
                assert!((p - 1.0).abs() < STRUCTURAL);
                let n = u.nrows();
                assert!(crate::state::max_abs_diff(&(u.adjoint() * &u), &Operator::identity(n, n)) < STRUCTURAL);
            }
        }
    }

    #[test]
    fn fast_objective_matches_kraus_sum() {
        let mut r = rng(3);
        let alice = RegisterShape::uniform(2, 3).unwrap();
        for cut in Bipartition::all(&alice) {
            let inst = random_instance(&alice, &cut, 2, Direction::OneToZero, &mut r).unwrap();
            let obj = CutObjective::new(&inst, &cut).unwrap();
            let (n1, n2) = cut.dims();
            let v1 = haar_isometry(n1 * 3, n1, &mut r);
            let v2 = haar_isometry(n2 * 2, n2, &mut r);
            let fast = obj.value(&v1, &v2);
            let slow = switch_probability(&inst, &separable_from_isometries(&inst, &cut, &v1, &v2).unwrap()).unwrap();
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_iterations_identity_start_is_identity_value() {
        let inst = protocol(2, Direction::OneToZero);
        let cfg = OptimizerConfig { restarts: 1, iterations: 0, ..OptimizerConfig::default() };
        let res = optimize_separable_attack(&inst, inst.cut(), &cfg, 1).unwrap();
        let id = switch_probability(&inst, &KrausChannel::identity(inst.alice_shape().clone())).unwrap();
        assert!((res.achieved_p - id).abs() < 1e-12);
        assert_eq!(res.trace.len(), 1);
    }

    #[test]
    fn optimizer_is_deterministic_and_monotone() {
        let inst = protocol(2, Direction::ZeroToOne);
        let cfg = OptimizerConfig { restarts: 4, iterations: 60, identity_start: false, ..OptimizerConfig::default() };
        let a = optimize_separable_attack(&inst, inst.cut(), &cfg, 99).unwrap();
        let b = optimize_separable_attack(&inst, inst.cut(), &cfg, 99).unwrap();
        assert_eq!(a, b);
        for w in a.trace.windows(2) {
            if w[0].restart == w[1].restart {
                assert!(w[1].best_p >= w[0].best_p);
            }
        }
        assert!(a.respects_bound(1e-6));
        assert!((reevaluate(&inst, &a).unwrap() - a.achieved_p).abs() < 1e-10);
    }
}
