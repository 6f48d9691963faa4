use std::collections::BTreeSet;

use mpqc_core::amplify::{run, NoObserver};
use mpqc_core::factorint::{
    decode_set, encode_set, factorize, is_prime, order_find, order_find_exact, pow_mod,
    prime_divisors,
};
use mpqc_core::mpqc::{lcm_protocol, Label, ProtocolConfig, ProtocolOutput};
use mpqc_core::periodfind::{
    brute_force_period, build_uj, fourier_call_bound, fourier_marginal, fourier_sample, Backend,
    Eqpa, PeriodicFunction, Spectrum,
};
use num_integer::Integer;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn period_and_modulus(max_r: u64, max_m: u64) -> impl Strategy<Value = (u64, u64)> {
    (1..=max_r).prop_flat_map(move |r| (Just(r), 1..=max_m / r).prop_map(|(r, c)| (r, r * c)))
}

fn ceil_log2(x: u64) -> u32 {
    64 - (x - 1).leading_zeros()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eqpa_is_exact_and_monotone((r, m) in period_and_modulus(64, 512), seed in any::<u64>()) {
        let f = PeriodicFunction::modular(r, m).unwrap();
        let out = Eqpa::new(&f, Backend::Statevector)
            .unwrap()
            .run(&mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap();
        prop_assert_eq!(out.period, brute_force_period(f.function(), m).unwrap());
        let trace = &out.trace;
        prop_assert!(trace.counters.fourier_calls <= fourier_call_bound(m, r));
        prop_assert!(trace.sweeps <= ceil_log2(r) + 1);
        let mut updates = 0;
        for rec in &trace.records {
            prop_assert_eq!(r % (m / m.gcd(&rec.k)), 0, "k = {} not in the support", rec.k);
            prop_assert_eq!(rec.d_after % rec.d_before, 0);
            if rec.d_after != rec.d_before {
                prop_assert!(rec.d_after >= 2 * rec.d_before);
                updates += 1;
            }
        }
        prop_assert!(updates <= ceil_log2(r));
        prop_assert_eq!(m % out.period, 0);
    }

    #[test]
    fn eqpa_output_is_seed_independent((r, m) in period_and_modulus(256, 4096), a in any::<u64>(), b in any::<u64>()) {
        let f = PeriodicFunction::modular(r, m).unwrap();
        let mut engine = Eqpa::new(&f, Backend::Subspace).unwrap();
        let x = engine.run(&mut ChaCha8Rng::seed_from_u64(a)).unwrap().period;
        let y = engine.run(&mut ChaCha8Rng::seed_from_u64(b)).unwrap().period;
        prop_assert_eq!(x, r);
        prop_assert_eq!(y, r);
    }

    #[test]
    fn index_marginal_law((r, m) in period_and_modulus(64, 4096)) {
        let f = PeriodicFunction::modular(r, m).unwrap();
        let marginal = fourier_marginal(&fourier_sample(f.function()).unwrap()).unwrap();
        prop_assert_eq!(marginal.outcomes().len() as u64, r);
        for (o, p) in marginal.outcomes() {
            prop_assert_eq!(o[0] % (m / r), 0);
            prop_assert!((p - 1.0 / r as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_good_mass_matches_simulation(
        (r, m) in period_and_modulus(24, 192),
        pick in any::<prop::sample::Index>(),
        j in -1i32..10,
    ) {
        let divisors: Vec<u64> = (1..=r).filter(|d| r % d == 0).collect();
        let d = divisors[pick.index(divisors.len())];
        let f = PeriodicFunction::modular(r, m).unwrap();
        let (program, chi) = build_uj(&fourier_sample(f.function()).unwrap(), d, j).unwrap();
        let simulated = chi.mass(&run(&program, &mut NoObserver).unwrap()).unwrap();
        let closed = Spectrum::periodic(m, r).unwrap().good_mass(d, j);
        prop_assert!((simulated - closed).abs() < 1e-9, "{simulated} vs {closed}");
    }

    #[test]
    fn order_is_minimal(n in 3u64..=64, a in 2u64..64, seed in any::<u64>()) {
        let a = a % n;
        prop_assume!(a > 1 && a.gcd(&n) == 1);
        let r = order_find(a, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(pow_mod(a, r, n), 1);
        for p in prime_divisors(r) {
            prop_assert_ne!(pow_mod(a, r / p, n), 1);
        }
        prop_assert_eq!(order_find_exact(a, n, 2 * r).unwrap(), r);
    }

    #[test]
    fn factorization_is_complete(n in 1u64..2_000_000, seed in any::<u64>()) {
        let res = factorize(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(res.factors.iter().product::<u64>(), n);
        prop_assert!(res.factors.iter().all(|&p| is_prime(p)));
        prop_assert_eq!(res.factors.len(), res.methods.len());
    }

    #[test]
    fn lcm_protocol_single_shot(
        secrets in prop::collection::vec(1u64..64, 2..5),
        seed in any::<u64>(),
    ) {
        let result = lcm_protocol(&secrets, 6, &ProtocolConfig::seeded(seed)).unwrap();
        let want = secrets.iter().fold(1u64, |acc, x| acc.lcm(x));
        prop_assert_eq!(result.output, Some(ProtocolOutput::Integer(want)));
        prop_assert_eq!(result.repetitions, 0);
        let k = result
            .transcript
            .messages()
            .iter()
            .find(|m| m.payload.label == Label::Modulus)
            .and_then(|m| m.payload.value)
            .unwrap();
        prop_assert!(secrets.iter().all(|x| k % x == 0));
        let c = result.counters;
        let n = secrets.len() as u64;
        prop_assert_eq!(c.rounds, n * c.oracle_passes + c.classical_rounds);
        prop_assert!(c.oracle_passes <= 2 * fourier_call_bound(k, want) + 1);
        prop_assert!(result.transcript.check_structure().is_ok());
    }
}

#[test]
fn set_encoding_round_trips_on_a_six_element_universe() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for mask in 0u64..64 {
        let set: BTreeSet<u64> = (0..6).filter(|u| mask >> u & 1 == 1).collect();
        let x = encode_set(&set).unwrap();
        assert_eq!(decode_set(x, 6, &mut rng).unwrap(), set);
    }
}
