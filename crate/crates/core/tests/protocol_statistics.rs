use qbc_core::gates::Permutation;
use qbc_core::protocol::{commit, open_verify, Bit, ProtocolParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn commit_outcomes_are_uniform_within_three_sigma() {
    let d = 3;
    let samples = 10_000;
    let params = ProtocolParams::new(d).unwrap();
    let p = 1.0 / d as f64;
    let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for b in Bit::BOTH {
        let pi = Permutation::random(d, &mut rng);
        let mut counts = vec![0usize; d];
        for _ in 0..samples {
            counts[commit(params, b, &pi, &mut rng).unwrap().m] += 1;
        }
        for c in counts {
            let dev = (c as f64 - samples as f64 * p).abs();
            assert!(dev <= 3.0 * sigma, "count {c} deviates by {dev} > 3 sigma ({sigma})");
        }
    }
}

#[test]
fn honest_openings_accept_and_switched_claims_do_not_always() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for d in 2..=4 {
        let params = ProtocolParams::new(d).unwrap();
        for b in Bit::BOTH {
            for pi in Permutation::all(d) {
                let rec = commit(params, b, &pi, &mut rng).unwrap();
                let state = rec.shared_state.projector();
                let honest = open_verify(&rec, b, &pi, &state).unwrap();
                assert!((honest - 1.0).abs() < 1e-9);
                // claiming the other bit without touching the state
                let lie = open_verify(&rec, b.flip(), &pi, &state).unwrap();
                assert!((lie - 1.0 / d as f64).abs() < 1e-9);
            }
        }
    }
}
