use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use qbc_core::adversary::{
    analytic_bounds, lemma_cheat_bound, optimize_over_cuts, protocol_instance, random_instance, reevaluate,
    switch_probability, switch_probability_via_fidelity, unrestricted_attack, AttackResult, Direction,
};
use qbc_core::channels::{averaged_measurement_channel, random_separable_channel, AveragingMode};
use qbc_core::gates::Permutation;
use qbc_core::protocol::{
    open_verify, permutation_set, post_state_closed_form, project_outcome, x_vector, y_vector, Bit, ProtocolParams,
    BOB_FACTOR,
};
use qbc_core::random::random_density_matrix;
use qbc_core::schmidt::{max_schmidt_coefficient, schmidt_decompose};
use qbc_core::state::{gram_deviation, max_abs_diff, reduced_state};
use qbc_core::tol::{OPTIMIZER_SLACK, ROUND_TRIP, STRUCTURAL};
use qbc_core::{Bipartition, DensityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Suite};
use crate::error::Result;
use crate::report::{AttackEntry, Report, SuiteEntry, Timing};

/// Highest Kraus rank per side drawn in the bounds suite.
const BOUND_KRAUS_RANK: usize = 4;
/// Instances in the bounds suite that are also checked against the direct
/// fidelity formula.
const FIDELITY_CROSS_CHECKS: usize = 100;
/// Smallest best switch probability the d = 2 attack must reach; random
/// search over fully local unitaries already gets above it.
pub const D2_SATURATION_FLOOR: f64 = 0.45;

/// Runs the configured suites in order. Each suite draws from its own
/// stream of the seed, so adding or dropping a suite leaves the others
/// unchanged.
pub fn run_suite(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let mut report = Report::empty(config);
    for &suite in &config.suites {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(suite.stream());
        let start = Instant::now();
        match suite {
            Suite::Hiding => report.suites.extend(hiding(config, &mut rng)?),
            Suite::Structure => report.suites.extend(structure(config, &mut rng)?),
            Suite::Bounds => report.suites.extend(bounds(config, &mut rng)?),
            Suite::Nogo => report.suites.extend(nogo(config, &mut rng)?),
            Suite::Attack => {
                let (entries, attacks) = attack(config, &mut rng)?;
                report.suites.extend(entries);
                report.attacks.extend(attacks);
            }
            Suite::Lemma => report.suites.extend(lemma(config)?),
        }
        if config.timings {
            report.timings.push(Timing { suite, seconds: start.elapsed().as_secs_f64() });
        }
    }
    Ok(report)
}

fn max_amp_diff(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn hiding(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SuiteEntry>> {
    let d = config.d;
    let params = ProtocolParams::new(d)?;
    let perms = permutation_set(d, config.permutation_samples, rng);
    let bob_mixed = DensityMatrix::maximally_mixed(params.bob_shape());

    let (mut worst, mut count) = (0.0_f64, 0);
    for b in Bit::BOTH {
        for pi in &perms {
            for m in 0..d {
                let (_, rec) = project_outcome(params, b, pi, m)?;
                let bob = reduced_state(&rec.shared_state, &[BOB_FACTOR])?;
                worst = worst.max(bob.max_abs_diff(&bob_mixed)?);
                count += 1;
            }
        }
    }
    let mut out = vec![SuiteEntry::new(
        "hiding.reduced_state",
        worst,
        STRUCTURAL,
        "Bob's post-commit state is maximally mixed for every b, pi, m",
        count,
    )];

    let m0 = averaged_measurement_channel(Bit::Zero, d, AveragingMode::Exact)?;
    let m1 = averaged_measurement_channel(Bit::One, d, AveragingMode::Exact)?;
    let closed = averaged_measurement_channel(Bit::Zero, d, AveragingMode::ClosedForm)?;
    out.push(SuiteEntry::new(
        "hiding.averaged_channels_equal",
        max_abs_diff(m0.transfer_matrix(), m1.transfer_matrix()),
        STRUCTURAL,
        "permutation-averaged commit channels M_0 and M_1 coincide",
        1,
    ));
    out.push(SuiteEntry::new(
        "hiding.closed_form",
        max_abs_diff(m0.transfer_matrix(), closed.transfer_matrix())
            .max(max_abs_diff(m1.transfer_matrix(), closed.transfer_matrix())),
        STRUCTURAL,
        "averaged channel replaces the ancilla by the maximally mixed state",
        2,
    ));

    // full rank where the register is small; at d = 5 a handful of states
    // already costs seconds each
    let shape = params.full_shape();
    let rank = if d <= 3 { shape.total_dim() } else { 8 };
    let states = if d <= 4 { config.random_states } else { config.random_states.min(4) };
    let mut worst = 0.0_f64;
    for _ in 0..states {
        let rho = random_density_matrix(shape.clone(), rank, rng);
        let a = m0.apply(&rho)?;
        worst = worst.max(a.max_abs_diff(&m1.apply(&rho)?)?).max(a.max_abs_diff(&closed.apply(&rho)?)?);
    }
    out.push(SuiteEntry::new(
        "hiding.random_states",
        worst,
        STRUCTURAL,
        "M_0(rho) = M_1(rho) = closed form on random density matrices",
        states,
    ));
    Ok(out)
}

fn structure(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SuiteEntry>> {
    let d = config.d;
    let params = ProtocolParams::new(d)?;
    let perms = permutation_set(d, config.permutation_samples, rng);
    let shared = params.shared_shape();
    let alice_bob = Bipartition::new(&shared, &[BOB_FACTOR])?;
    let uniform = 1.0 / d as f64;

    let (mut branch, mut honest, mut gram, mut schmidt) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut count = 0;
    for b in Bit::BOTH {
        for pi in &perms {
            let mut family = Vec::with_capacity(d);
            for m in 0..d {
                let (p, rec) = project_outcome(params, b, pi, m)?;
                let closed = post_state_closed_form(params, b, pi, m)?;
                branch = branch
                    .max((p - uniform).abs())
                    .max(max_amp_diff(rec.shared_state.amplitudes(), closed.amplitudes()));
                let opened = open_verify(&rec, b, pi, &rec.shared_state.projector())?;
                honest = honest.max((opened - 1.0).abs());
                let data = schmidt_decompose(&rec.shared_state, &alice_bob)?;
                schmidt = schmidt.max(if data.rank() == d {
                    data.coefficients().iter().map(|l| (l - uniform).abs()).fold(0.0, f64::max)
                } else {
                    1.0
                });
                family.push(rec.shared_state);
                count += 1;
            }
            gram = gram.max(gram_deviation(&family));
        }
    }
    let mut out = vec![
        SuiteEntry::new(
            "structure.commit_branches",
            branch,
            STRUCTURAL,
            "each outcome has probability 1/d and leaves the closed-form state",
            count,
        ),
        SuiteEntry::new(
            "structure.honest_opening",
            honest,
            STRUCTURAL,
            "honest opening is accepted with certainty",
            count,
        ),
        SuiteEntry::new(
            "structure.post_state_gram",
            gram,
            STRUCTURAL,
            "post-commit states for fixed b, pi are orthonormal in m",
            2 * perms.len(),
        ),
        SuiteEntry::new(
            "structure.schmidt_coefficients",
            schmidt,
            STRUCTURAL,
            "A|B Schmidt coefficients of every post-commit state are 1/d",
            count,
        ),
    ];

    let alice = params.alice_shape();
    let single = DensityMatrix::maximally_mixed(qbc_core::RegisterShape::uniform(d, 1)?);
    let cuts = Bipartition::all(&alice);
    let (mut ame, mut product, mut vectors) = (0.0_f64, 0.0_f64, 0);
    for pi in &perms {
        for m in 0..d {
            for j in 0..d {
                let x = x_vector(params, pi, m, j)?;
                for k in 0..3 {
                    ame = ame.max(reduced_state(&x, &[k])?.max_abs_diff(&single)?);
                }
                let y = y_vector(params, pi, m, j)?;
                for cut in &cuts {
                    product = product.max(1.0 - max_schmidt_coefficient(&y, cut.side_two())?);
                }
                vectors += 1;
            }
        }
    }
    out.push(SuiteEntry::new(
        "structure.ame_x",
        ame,
        STRUCTURAL,
        "every x vector is AME(3,d): all single-qudit marginals maximally mixed",
        vectors,
    ));
    out.push(SuiteEntry::new(
        "structure.product_y",
        product,
        STRUCTURAL,
        "every y vector is a product state across all three cuts",
        vectors,
    ));
    Ok(out)
}

fn bounds(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SuiteEntry>> {
    let alice = ProtocolParams::new(config.d)?.alice_shape();
    let cuts = Bipartition::all(&alice);
    let (mut v0, mut v1, mut consistency) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0_f64);
    let mut checked = 0;
    for i in 0..config.bound_samples {
        let cut = &cuts[rng.random_range(0..cuts.len())];
        let terms = rng.random_range(1..=cut.dims().1);
        let inst = random_instance(&alice, cut, terms, Direction::ZeroToOne, rng)?;
        let ranks = (rng.random_range(1..=BOUND_KRAUS_RANK), rng.random_range(1..=BOUND_KRAUS_RANK));
        let channel = random_separable_channel(&alice, cut, ranks, rng)?.lift()?;
        let bounds = analytic_bounds(&inst);
        let flipped = inst.with_direction(Direction::OneToZero);
        let p0 = switch_probability(&inst, &channel)?;
        let p1 = switch_probability(&flipped, &channel)?;
        v0 = v0.max(p0 - bounds.p0);
        v1 = v1.max(p1 - bounds.p1);
        if i < FIDELITY_CROSS_CHECKS {
            consistency = consistency
                .max((p0 - switch_probability_via_fidelity(&inst, &channel)?).abs())
                .max((p1 - switch_probability_via_fidelity(&flipped, &channel)?).abs());
            checked += 1;
        }
    }
    let n = config.bound_samples;
    Ok(vec![
        SuiteEntry::new(
            "bounds.p0",
            if n == 0 { 0.0 } else { v0 },
            STRUCTURAL,
            "p_s(0) <= lambda_max^2 N_2 for separable channels",
            n,
        ),
        SuiteEntry::new(
            "bounds.p1",
            if n == 0 { 0.0 } else { v1 },
            STRUCTURAL,
            "p_s(1) <= 1/N_2 for separable channels",
            n,
        ),
        SuiteEntry::new(
            "bounds.kraus_sum_vs_fidelity",
            consistency,
            STRUCTURAL,
            "Kraus-sum switch probability equals fidelity of the evolved purification",
            checked,
        ),
    ])
}

fn nogo(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SuiteEntry>> {
    let d = config.d;
    let params = ProtocolParams::new(d)?;
    let perms = permutation_set(d, config.permutation_samples, rng);
    let cuts = Bipartition::all(&params.alice_shape());
    let mut out = Vec::new();
    for direction in Direction::BOTH {
        let (mut worst, mut count) = (0.0_f64, 0);
        for pi in &perms {
            for m in 0..d {
                for cut in &cuts {
                    let inst = protocol_instance(params, pi, m, cut.clone(), direction)?;
                    let (_, p) = unrestricted_attack(&inst)?;
                    worst = worst.max((1.0 - p).abs());
                    count += 1;
                }
            }
        }
        out.push(SuiteEntry::new(
            format!("nogo.{}", direction.label()),
            worst,
            STRUCTURAL,
            "an unrestricted unitary on Alice's side switches the commitment with certainty",
            count,
        ));
    }
    Ok(out)
}

/// Best separable attack for one direction on a protocol instance with a
/// seeded `(pi, m)`.
pub fn attack_direction(
    config: &RunConfig,
    direction: Direction,
    pi: &Permutation,
    m: usize,
    seed: u64,
) -> Result<(AttackResult, f64)> {
    let params = ProtocolParams::new(config.d)?;
    let cuts = Bipartition::all(&params.alice_shape());
    let inst = protocol_instance(params, pi, m, cuts[0].clone(), direction)?;
    let result = optimize_over_cuts(&inst, &cuts, &config.optimizer, seed)?;
    let again = reevaluate(&inst.with_cut(result.cut.clone()), &result)?;
    Ok((result, again))
}

fn attack(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(Vec<SuiteEntry>, Vec<AttackEntry>)> {
    let d = config.d;
    let pi = Permutation::random(d, rng);
    let m = rng.random_range(0..d);
    let honest = 1.0 / d as f64;
    let mut entries = Vec::new();
    let mut attacks = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for &direction in &config.directions {
        let seed = rng.random::<u64>();
        let (result, again) = attack_direction(config, direction, &pi, m, seed)?;
        let label = direction.label();
        let mut monotone = 0.0_f64;
        for w in result.trace.windows(2) {
            if w[0].restart == w[1].restart {
                monotone = monotone.max(w[0].best_p - w[1].best_p);
            }
        }
        entries.push(SuiteEntry::new(
            format!("attack.{label}.bound"),
            result.achieved_p - result.bound.min(1.0),
            OPTIMIZER_SLACK,
            "optimized separable attack stays below min(1, analytic bound)",
            result.trace.len(),
        ));
        entries.push(SuiteEntry::new(
            format!("attack.{label}.reevaluation"),
            (result.achieved_p - again).abs(),
            STRUCTURAL,
            "best channel re-evaluated through the lifted Kraus sum",
            1,
        ));
        entries.push(SuiteEntry::new(
            format!("attack.{label}.trace_monotone"),
            monotone,
            ROUND_TRIP,
            "per-restart best value never decreases",
            result.trace.len(),
        ));
        best = best.max(result.achieved_p);
        attacks.push(AttackEntry::from_result(&result, pi.as_slice().to_vec(), m, again));
    }
    entries.push(SuiteEntry::new(
        "attack.binding",
        best - honest,
        OPTIMIZER_SLACK,
        "max over directions of the best switch probability is at most 1/d",
        attacks.len(),
    ));
    if d == 2 {
        entries.push(SuiteEntry::new(
            "attack.saturation",
            honest - best,
            honest - D2_SATURATION_FLOOR,
            "d = 2 separable attacks reach at least 0.45",
            attacks.len(),
        ));
    }
    Ok((entries, attacks))
}

fn lemma(config: &RunConfig) -> Result<Vec<SuiteEntry>> {
    let target = 1.0 / config.d as f64;
    let mut worst = 0.0_f64;
    for n in 2..=6 {
        worst = worst.max((lemma_cheat_bound(n, config.d)? - target).abs());
    }
    Ok(vec![SuiteEntry::new(
        "lemma.cheat_bound",
        worst,
        ROUND_TRIP,
        "cheating bound for n qudits in d dimensions equals 1/d, n = 2..6",
        5,
    )])
}
