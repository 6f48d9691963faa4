use std::f64::consts::TAU;
use std::sync::Arc;

use mpqc_core::amplify::{
    grover_iterate, q_operator, run, GoodPredicate, NoObserver, ReversibleProgram, Step,
};
use mpqc_core::{ClassicalOracle, RegisterLayout, SparseState};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn layout(a: u64, b: u64) -> Arc<RegisterLayout> {
    Arc::new(RegisterLayout::new([("a", a), ("b", b)]).unwrap())
}

/// Normalized state from raw `(a, b, re, im)` draws.
fn random_state(a: u64, b: u64, raw: &[(u64, u64, f64, f64)]) -> SparseState {
    let s = SparseState::from_amplitudes(
        layout(a, b),
        raw.iter()
            .map(|&(x, y, re, im)| (vec![x % a, y % b], Complex64::new(re, im))),
    )
    .unwrap();
    let n = s.norm_sqr();
    s.scale(Complex64::new(1.0 / n.sqrt(), 0.0))
}

fn state_strategy() -> impl Strategy<Value = SparseState> {
    (1u64..=64, 1u64..=4).prop_flat_map(states)
}

fn square_strategy() -> impl Strategy<Value = SparseState> {
    (1u64..=8).prop_flat_map(|d| states((d, d)))
}

fn states((a, b): (u64, u64)) -> impl Strategy<Value = SparseState> {
    prop::collection::vec((0..a, 0..b, 0.1f64..1.0, -1.0f64..1.0), 1..12)
        .prop_map(move |raw| random_state(a, b, &raw))
}

fn dense_dft(s: &SparseState, inverse: bool) -> Vec<Vec<Complex64>> {
    let a = s.layout().dim(0);
    let b = s.layout().dim(1);
    let sign = if inverse { -1.0 } else { 1.0 };
    let mut out = vec![vec![Complex64::new(0.0, 0.0); b as usize]; a as usize];
    for (v, amp) in s.iter() {
        for k in 0..a {
            let angle = sign * TAU * ((k * v[0]) % a) as f64 / a as f64;
            out[k as usize][v[1] as usize] +=
                amp * Complex64::from_polar(1.0, angle) / (a as f64).sqrt();
        }
    }
    out
}

fn magnitudes(s: &SparseState) -> Vec<f64> {
    let mut m: Vec<f64> = s.iter().map(|(_, a)| a.norm()).collect();
    m.sort_by(f64::total_cmp);
    m
}

fn same_magnitudes(x: &SparseState, y: &SparseState) -> bool {
    let (a, b) = (magnitudes(x), magnitudes(y));
    a.len() == b.len() && a.iter().zip(&b).all(|(p, q)| (p - q).abs() < TOL)
}

proptest! {
    #[test]
    fn dft_matches_dense_matrix_and_inverts(s in state_strategy()) {
        for inverse in [false, true] {
            let t = s.clone().dft("a", inverse).unwrap();
            let dense = dense_dft(&s, inverse);
            for (k, row) in dense.iter().enumerate() {
                for (y, want) in row.iter().enumerate() {
                    let got = t.amplitude(&[k as u64, y as u64]).unwrap();
                    prop_assert!((got - want).norm() < TOL, "{got} vs {want}");
                }
            }
            prop_assert!((t.norm_sqr() - 1.0).abs() < TOL);
            let back = t.dft("a", !inverse).unwrap();
            prop_assert!(back.max_abs_diff(&s) < TOL);
        }
    }

    #[test]
    fn oracle_permutes_amplitudes(s in state_strategy(), table in prop::collection::vec(0u64..8, 64)) {
        let oracle = ClassicalOracle::new(["a"], "b", move |v| table[v[0] as usize]);
        let o = s.clone().apply_oracle(&oracle).unwrap();
        prop_assert!(same_magnitudes(&o, &s));
        prop_assert!(o.unapply_oracle(&oracle).unwrap().max_abs_diff(&s) < TOL);
    }

    #[test]
    fn shift_permutes_amplitudes(s in square_strategy()) {
        let sub = s.clone().controlled_subtract("a", "b").unwrap();
        prop_assert!(same_magnitudes(&sub, &s));
        prop_assert!((sub.norm_sqr() - 1.0).abs() < TOL);
        let add = sub.controlled_add("a", "b").unwrap();
        prop_assert!(add.max_abs_diff(&s) < TOL);
    }

    #[test]
    fn phase_flip_preserves_norm(s in state_strategy(), theta in 0.0f64..TAU, pick in 0u64..64) {
        let f = s.clone().phase_flip(|v| v[0] == pick, Complex64::from_polar(1.0, theta)).unwrap();
        prop_assert!((f.norm_sqr() - 1.0).abs() < TOL);
        prop_assert!(same_magnitudes(&f, &s));
    }

    #[test]
    fn marginals_match_good_mass(s in state_strategy()) {
        let marginal = s.marginal(&["a"]).unwrap();
        let total: f64 = marginal.outcomes().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < TOL);
        for (o, p) in marginal.outcomes() {
            let v = o[0];
            prop_assert!((s.good_mass(|t| t[0] == v) - p).abs() < TOL);
        }
    }

    #[test]
    fn measurement_collapses_consistently(s in state_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, collapsed) = s.measure("a", &mut rng).unwrap();
        prop_assert!(s.good_mass(|t| t[0] == v) > 0.0);
        prop_assert!((collapsed.norm_sqr() - 1.0).abs() < TOL);
        prop_assert!((collapsed.good_mass(|t| t[0] == v) - 1.0).abs() < TOL);
    }
}

/// `A = [prep x, oracle x -> y, dft y, phase]` with `good` of the `dx` values of `x` marked.
fn instance(
    dx: u64,
    dy: u64,
    table: Vec<u64>,
    good: Vec<u64>,
    theta: f64,
) -> (ReversibleProgram, GoodPredicate) {
    let program = ReversibleProgram::new(layout(dx, dy).clone())
        .with(Step::UniformPrep("a".into()))
        .with(Step::Oracle(ClassicalOracle::new(["a"], "b", move |v| {
            table[v[0] as usize % table.len()]
        })))
        .with(Step::Dft {
            reg: "b".into(),
            inverse: false,
        })
        .with(Step::PhaseFlip {
            predicate: Arc::new(|v: &[u64]| v[1] == 1),
            phase: Complex64::from_polar(1.0, theta),
        });
    let chi = GoodPredicate::new(["a"], move |v| good.contains(&v[0]));
    (program, chi)
}

fn instance_strategy() -> impl Strategy<Value = (ReversibleProgram, GoodPredicate, f64)> {
    (2u64..=16, 1u64..=4).prop_flat_map(|(dx, dy)| {
        (
            prop::collection::vec(0..dy, dx as usize),
            prop::sample::subsequence((0..dx).collect::<Vec<_>>(), 1..dx as usize),
            0.0f64..TAU,
        )
            .prop_map(move |(table, good, theta)| {
                let a = good.len() as f64 / dx as f64;
                let (p, chi) = instance(dx, dy, table, good, theta);
                (p, chi, a)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_then_backward_is_identity((program, _, _) in instance_strategy()) {
        let s = run(&program, &mut NoObserver).unwrap();
        let back = program.apply_inverse(s, &mut NoObserver).unwrap();
        let zero = SparseState::zero(program.layout().clone());
        prop_assert!(back.max_abs_diff(&zero) < TOL);
    }

    #[test]
    fn grover_law((program, chi, a) in instance_strategy(), j in 0usize..=8) {
        let s = grover_iterate(&program, &chi, j, &mut NoObserver).unwrap();
        let theta = a.sqrt().asin();
        let want = ((2 * j + 1) as f64 * theta).sin().powi(2);
        prop_assert!((chi.mass(&s).unwrap() - want).abs() < TOL);
        prop_assert!((s.norm_sqr() - 1.0).abs() < TOL);
    }

    #[test]
    fn q_operator_stays_on_initial_support(
        (program, chi, _) in instance_strategy(),
        phi in 0.0f64..TAU,
        varphi in 0.0f64..TAU,
        steps in 1usize..4,
    ) {
        let initial = run(&program, &mut NoObserver).unwrap();
        let support: Vec<Vec<u64>> = initial.iter().map(|(v, _)| v).collect();
        let mut s = initial;
        for _ in 0..steps {
            s = q_operator(
                &program,
                &chi,
                Complex64::from_polar(1.0, phi),
                Complex64::from_polar(1.0, varphi),
                s,
                &mut NoObserver,
            )
            .unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < TOL);
        }
        for (v, amp) in s.iter() {
            prop_assert!(support.contains(&v) || amp.norm() < 1e-12, "{v:?} {amp}");
        }
    }
}
