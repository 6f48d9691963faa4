//! Fourier sampling, the probabilistic period-finding baseline, and exact
//! period finding given a known multiple of the period.

mod eqpa;
mod spectrum;

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use rand::Rng;

use crate::amplify::{self, GoodPredicate, NoObserver, ReversibleProgram, Step};
use crate::error::{Error, Result};
use crate::qstate::{ClassicalOracle, Marginal, RegisterLayout};

pub use eqpa::{
    eqpa, eqpa_with, fourier_call_bound, Backend, BoostSample, BoostSampler, Eqpa, EqpaOutcome,
    EqpaRecord, EqpaTrace, StatevectorSampler, SubspaceSampler,
};
pub use spectrum::Spectrum;

/// Register names used by the sampling programs built here.
pub const INDEX_REGISTER: &str = "k";
pub const FUNCTION_REGISTER: &str = "f";
pub const COIN_REGISTER: &str = "b";
pub const CHI_REGISTER: &str = "chi";

/// A function `Z_m -> Z_codomain` given by an evaluator.
#[derive(Clone)]
pub struct DiscreteFunction {
    modulus: u64,
    codomain: u64,
    eval: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
}

impl fmt::Debug for DiscreteFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteFunction")
            .field("modulus", &self.modulus)
            .field("codomain", &self.codomain)
            .finish_non_exhaustive()
    }
}

impl DiscreteFunction {
    pub fn new(
        modulus: u64,
        codomain: u64,
        eval: impl Fn(u64) -> u64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if modulus == 0 || codomain == 0 {
            return Err(Error::InvalidInput(
                "modulus and codomain must be positive".into(),
            ));
        }
        Ok(Self {
            modulus,
            codomain,
            eval: Arc::new(eval),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn codomain(&self) -> u64 {
        self.codomain
    }

    /// `f(x mod m) mod codomain`.
    pub fn eval(&self, x: u64) -> u64 {
        (self.eval)(x % self.modulus) % self.codomain
    }
}

/// A function on `Z_m` with the promise `f(x) = f(y) <=> x = y (mod r)` for a
/// hidden period `r` dividing the known multiple `m`.
#[derive(Clone, Debug)]
pub struct PeriodicFunction {
    func: DiscreteFunction,
    period: Option<u64>,
}

impl PeriodicFunction {
    /// `f(x) = x mod r` on `Z_m`.
    pub fn modular(period: u64, modulus: u64) -> Result<Self> {
        Self::new(
            DiscreteFunction::new(modulus, modulus, move |x| x % period.max(1))?,
            Some(period),
        )
    }

    /// Wraps `func`; when `period` is given it must divide the modulus.
    /// The period is kept only for test oracles and never read by the algorithms.
    pub fn new(func: DiscreteFunction, period: Option<u64>) -> Result<Self> {
        if let Some(r) = period {
            if r == 0 || func.modulus % r != 0 {
                return Err(Error::PeriodDoesNotDivide {
                    period: r,
                    modulus: func.modulus,
                });
            }
        }
        Ok(Self { func, period })
    }

    pub fn modulus(&self) -> u64 {
        self.func.modulus
    }

    pub fn function(&self) -> &DiscreteFunction {
        &self.func
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.func.eval(x)
    }

    /// The declared period, if any. Test oracles only.
    pub fn declared_period(&self) -> Option<u64> {
        self.period
    }

    /// Exhaustively checks `f(x) = f(y) <=> x = y (mod r)` for the declared period.
    pub fn check_promise(&self) -> Result<()> {
        let r = self
            .period
            .ok_or_else(|| Error::PromiseViolation("no declared period".into()))?;
        let m = self.modulus();
        let reps: Vec<u64> = (0..r).map(|x| self.eval(x)).collect();
        let mut seen = std::collections::HashSet::new();
        if !reps.iter().all(|v| seen.insert(*v)) {
            return Err(Error::PromiseViolation(format!(
                "f is not injective on a period of length {r}"
            )));
        }
        if let Some(x) = (0..m).find(|&x| self.eval(x) != reps[(x % r) as usize]) {
            return Err(Error::PromiseViolation(format!("f({x}) != f({})", x % r)));
        }
        Ok(())
    }
}

/// A state-preparation program whose `index` register carries the Fourier
/// sample after the program runs.
#[derive(Clone, Debug)]
pub struct SamplingProgram {
    pub program: ReversibleProgram,
    pub index: String,
}

impl SamplingProgram {
    pub fn modulus(&self) -> u64 {
        self.program
            .layout()
            .dim_of(&self.index)
            .expect("index register belongs to the layout")
    }
}

/// `[uniform_prep k; oracle f: k -> f; dft k]` over `k: Z_m`, `f: Z_codomain`.
pub fn fourier_sample(f: &DiscreteFunction) -> Result<SamplingProgram> {
    let layout = Arc::new(RegisterLayout::new([
        (INDEX_REGISTER, f.modulus()),
        (FUNCTION_REGISTER, f.codomain()),
    ])?);
    let func = f.clone();
    let oracle = ClassicalOracle::new([INDEX_REGISTER], FUNCTION_REGISTER, move |x| {
        func.eval(x[0])
    });
    let program = ReversibleProgram::new(layout)
        .with(Step::UniformPrep(INDEX_REGISTER.into()))
        .with(Step::Oracle(oracle))
        .with(Step::Dft {
            reg: INDEX_REGISTER.into(),
            inverse: false,
        });
    Ok(SamplingProgram {
        program,
        index: INDEX_REGISTER.into(),
    })
}

/// `d k mod m` as a representative in `[0, m)`; 0 when `d k = 0 (mod m)`.
pub fn rep(d: u64, k: u64, m: u64) -> u64 {
    ((d as u128 * k as u128) % m as u128) as u64
}

/// The goodness predicate `chi_j(k, b)` for divisor `d` and modulus `m`:
/// `rep(dk) >= m/2`, or `b = 1` and `0 < rep(dk) <= 2^j`. For `j = -1` the
/// second interval is empty.
pub fn chi_j(d: u64, m: u64, j: i32, k: u64, b: u64) -> bool {
    let r = rep(d, k, m);
    if 2 * r as u128 >= m as u128 && r != 0 {
        return true;
    }
    b == 1 && j >= 0 && r > 0 && (r as u128) <= (1u128 << j.min(127))
}

/// `U_j`: the sampling program followed by `uniform_prep b` and the oracle
/// writing `chi_j(k, b)` into a qubit. Returns the program and the predicate
/// "chi register = 1".
pub fn build_uj(
    sampling: &SamplingProgram,
    d: u64,
    j: i32,
) -> Result<(ReversibleProgram, GoodPredicate)> {
    let m = sampling.modulus();
    if d == 0 || m % d != 0 {
        return Err(Error::PeriodDoesNotDivide {
            period: d,
            modulus: m,
        });
    }
    let layout = Arc::new(RegisterLayout::new(
        sampling
            .program
            .layout()
            .registers()
            .map(|(n, dim)| (n.to_string(), dim))
            .chain([
                (COIN_REGISTER.to_string(), 2),
                (CHI_REGISTER.to_string(), 2),
            ]),
    )?);
    let oracle = ClassicalOracle::new(
        [sampling.index.as_str(), COIN_REGISTER],
        CHI_REGISTER,
        move |v| chi_j(d, m, j, v[0], v[1]) as u64,
    );
    let program = sampling
        .program
        .relayout(layout)
        .with(Step::UniformPrep(COIN_REGISTER.into()))
        .with(Step::Oracle(oracle));
    Ok((program, GoodPredicate::register_equals(CHI_REGISTER, 1)))
}

/// Exact index-register marginal of the Fourier sampling program.
pub fn fourier_marginal(sampling: &SamplingProgram) -> Result<Marginal> {
    amplify::run(&sampling.program, &mut NoObserver)?.marginal(&[sampling.index.as_str()])
}

/// Standard probabilistic period finding: `m / gcd(m, k_1, ..., k_s)` over
/// `samples` Fourier samples. Always a divisor of the period; equal to it only
/// with some probability.
pub fn standard_qpa<R: Rng + ?Sized>(
    f: &PeriodicFunction,
    rng: &mut R,
    samples: usize,
) -> Result<u64> {
    let marginal = fourier_marginal(&fourier_sample(f.function())?)?;
    Ok(qpa_from_marginal(&marginal, f.modulus(), rng, samples))
}

/// [`standard_qpa`] against a precomputed index marginal.
pub fn qpa_from_marginal<R: Rng + ?Sized>(
    marginal: &Marginal,
    modulus: u64,
    rng: &mut R,
    samples: usize,
) -> u64 {
    let g = (0..samples).fold(modulus, |g, _| {
        let k = marginal.sample(rng).map_or(0, |o| o[0]);
        g.gcd(&k)
    });
    modulus / g
}

/// Smallest `r' <= bound` with `f(x) = f(x + r')` for all `x` in `[0, m - r')`.
pub fn brute_force_period(f: &DiscreteFunction, bound: u64) -> Result<u64> {
    let m = f.modulus();
    let values: Vec<u64> = (0..m).map(|x| f.eval(x)).collect();
    (1..=bound.min(m))
        .find(|&r| (0..(m - r) as usize).all(|x| values[x] == values[x + r as usize]))
        .ok_or(Error::NoPeriodFound(bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rep_examples() {
        assert_eq!(rep(2, 5, 12), 10);
        assert_eq!(rep(3, 4, 12), 0);
        assert_eq!(rep(1, 0, 12), 0);
    }

    #[test]
    fn chi_examples() {
        assert!(chi_j(1, 12, -1, 7, 0));
        assert!(chi_j(1, 12, 1, 2, 1));
        assert!(!chi_j(1, 12, 1, 2, 0));
        assert!(!chi_j(1, 12, -1, 2, 1));
        for (d, m, j) in [(1, 12, -1), (3, 12, 2), (4, 8, 3), (2, 9, 0)] {
            for k in 0..m {
                if rep(d, k, m) == 0 {
                    assert!(!chi_j(d, m, j, k, 0) && !chi_j(d, m, j, k, 1));
                }
            }
        }
    }

    #[test]
    fn periodic_function_validation() {
        assert!(matches!(
            PeriodicFunction::modular(5, 12),
            Err(Error::PeriodDoesNotDivide {
                period: 5,
                modulus: 12
            })
        ));
        PeriodicFunction::modular(4, 12)
            .unwrap()
            .check_promise()
            .unwrap();

        let collapsing = DiscreteFunction::new(12, 12, |x| (x % 4) / 2).unwrap();
        let f = PeriodicFunction::new(collapsing, Some(4)).unwrap();
        assert!(matches!(f.check_promise(), Err(Error::PromiseViolation(_))));
    }

    #[test]
    fn fourier_sample_examples() {
        let f = PeriodicFunction::modular(3, 12).unwrap();
        let marginal = fourier_marginal(&fourier_sample(f.function()).unwrap()).unwrap();
        let support: Vec<u64> = marginal.outcomes().iter().map(|(o, _)| o[0]).collect();
        assert_eq!(support, vec![0, 4, 8]);
        for (_, p) in marginal.outcomes() {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }

        let constant = PeriodicFunction::modular(1, 8).unwrap();
        let marginal = fourier_marginal(&fourier_sample(constant.function()).unwrap()).unwrap();
        assert_eq!(marginal.outcomes().len(), 1);
        assert!((marginal.probability(&[0]) - 1.0).abs() < 1e-9);

        let injective = PeriodicFunction::modular(8, 8).unwrap();
        let marginal = fourier_marginal(&fourier_sample(injective.function()).unwrap()).unwrap();
        for k in 0..8 {
            assert!((marginal.probability(&[k]) - 1.0 / 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn build_uj_good_mass_examples() {
        let mass = |r, m, d, j| {
            let f = PeriodicFunction::modular(r, m).unwrap();
            let (a, chi) = build_uj(&fourier_sample(f.function()).unwrap(), d, j).unwrap();
            chi.mass(&amplify::run(&a, &mut NoObserver).unwrap())
                .unwrap()
        };
        // Support {0, 4, 8}; only k = 8 has rep >= 6, over both coin values.
        assert!((mass(3, 12, 1, -1) - 1.0 / 3.0).abs() < 1e-9);
        assert!((mass(4, 8, 1, -1) - 0.5).abs() < 1e-9);
        assert!((mass(3, 12, 1, 2) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn build_uj_rejects_non_divisor() {
        let f = PeriodicFunction::modular(3, 12).unwrap();
        assert!(build_uj(&fourier_sample(f.function()).unwrap(), 5, 0).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let f = DiscreteFunction::new(10, 10, |x| x % 5).unwrap();
        assert_eq!(brute_force_period(&f, 10).unwrap(), 5);
        let c = DiscreteFunction::new(10, 10, |_| 7).unwrap();
        assert_eq!(brute_force_period(&c, 10).unwrap(), 1);
        let id = DiscreteFunction::new(10, 10, |x| x).unwrap();
        assert_eq!(brute_force_period(&id, 10).unwrap(), 10);
        assert_eq!(brute_force_period(&id, 4), Err(Error::NoPeriodFound(4)));
    }

    #[test]
    fn standard_qpa_examples() {
        let f = PeriodicFunction::modular(6, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let out = standard_qpa(&f, &mut rng, 1).unwrap();
            assert_eq!(6 % out, 0, "{out} must divide 6");
        }
        let one = PeriodicFunction::modular(1, 12).unwrap();
        assert_eq!(standard_qpa(&one, &mut rng, 1).unwrap(), 1);
    }

    #[test]
    fn single_sample_qpa_success_is_one_third_for_r6_m12() {
        // Support {0,2,4,6,8,10}, each 1/6; only k in {2, 10} give 12/gcd = 6.
        let f = PeriodicFunction::modular(6, 12).unwrap();
        let marginal = fourier_marginal(&fourier_sample(f.function()).unwrap()).unwrap();
        let exact: f64 = marginal
            .outcomes()
            .iter()
            .filter(|(o, _)| 12 / 12u64.gcd(&o[0]) == 6)
            .map(|(_, p)| p)
            .sum();
        assert!((exact - 1.0 / 3.0).abs() < 1e-9);
    }
}
