//! Shor order finding, integer factorization and prime encoding of sets.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_integer::{Integer, Roots};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::periodfind::{
    fourier_marginal, fourier_sample, Backend, DiscreteFunction, Eqpa, PeriodicFunction,
};
use crate::qstate::Marginal;

/// Largest `N` split by simulated order finding; the index register has `2^t >= N^2` states.
pub const DEFAULT_QUANTUM_BOUND: u64 = 64;
/// Candidate orders from a convergent are repaired with multiples up to this.
const MAX_REPAIR_MULTIPLE: u64 = 6;
const MAX_SAMPLES: usize = 10_000;

pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let mut acc = 1;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `n = base^exp` with the largest `exp >= 2`, if any.
pub fn perfect_power(n: u64) -> Option<(u64, u32)> {
    if n < 4 {
        return None;
    }
    (2..=63u32).rev().find_map(|e| {
        let b = n.nth_root(e);
        (b >= 2 && b.checked_pow(e) == Some(n)).then_some((b, e))
    })
}

/// Distinct prime divisors by trial division.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Reduces a verified multiple of the order of `a` to the order itself.
fn reduce_order(a: u64, n: u64, mut r: u64) -> u64 {
    for p in prime_divisors(r) {
        while r % p == 0 && pow_mod(a, r / p, n) == 1 {
            r /= p;
        }
    }
    r
}

/// Continued-fraction convergent denominators of `num / den`, ascending, below `limit`.
pub fn convergent_denominators(num: u64, den: u64, limit: u64) -> Vec<u64> {
    let (mut num, mut den) = (num as u128, den as u128);
    let (mut q2, mut q1) = (1u128, 0u128);
    let mut out = Vec::new();
    while den != 0 {
        let a = num / den;
        (num, den) = (den, num - a * den);
        let q = a * q1 + q2;
        if q >= limit as u128 {
            break;
        }
        out.push(q as u64);
        (q2, q1) = (q1, q);
    }
    out
}

/// Simulated Shor order finding with marginals cached per `(a, N)`.
#[derive(Debug)]
pub struct OrderFinder {
    quantum_bound: u64,
    marginals: HashMap<(u64, u64), (u64, Arc<Marginal>)>,
    samples: u64,
}

impl Default for OrderFinder {
    fn default() -> Self {
        Self::new(DEFAULT_QUANTUM_BOUND)
    }
}

impl OrderFinder {
    pub fn new(quantum_bound: u64) -> Self {
        Self {
            quantum_bound,
            marginals: HashMap::new(),
            samples: 0,
        }
    }

    pub fn quantum_bound(&self) -> u64 {
        self.quantum_bound
    }

    /// Fourier samples drawn so far; each is one call to the transform.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    fn marginal(&mut self, a: u64, n: u64) -> Result<(u64, Arc<Marginal>)> {
        if !self.marginals.contains_key(&(a, n)) {
            let t = 64 - (n * n - 1).leading_zeros();
            let q = 1u64 << t;
            let f = DiscreteFunction::new(q, n, move |x| pow_mod(a, x, n))?;
            let marginal = fourier_marginal(&fourier_sample(&f)?)?;
            self.marginals.insert((a, n), (q, Arc::new(marginal)));
        }
        Ok(self.marginals[&(a, n)].clone())
    }

    /// Multiplicative order of `a` mod `n` by Fourier sampling over `Z_{2^t}`,
    /// continued fractions and classical verification. Returns the order and
    /// the number of samples drawn.
    pub fn order(&mut self, a: u64, n: u64, rng: &mut dyn RngCore) -> Result<(u64, usize)> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "modulus {n} must be at least 2"
            )));
        }
        let g = a.gcd(&n);
        if g != 1 {
            return Err(Error::NotCoprime { a, n, gcd: g });
        }
        let a = a % n;
        if a == 1 {
            return Ok((1, 0));
        }
        if n > self.quantum_bound {
            return Err(Error::BeyondSimulationBound {
                n,
                bound: self.quantum_bound,
            });
        }
        let (q, marginal) = self.marginal(a, n)?;
        for samples in 1..=MAX_SAMPLES {
            self.samples += 1;
            let k = marginal.sample(rng).ok_or(Error::ZeroNorm)?[0];
            let candidate = convergent_denominators(k, q, n)
                .into_iter()
                .flat_map(|d| (1..=MAX_REPAIR_MULTIPLE).map(move |c| d * c))
                .filter(|&r| pow_mod(a, r, n) == 1)
                .min();
            if let Some(r) = candidate {
                return Ok((reduce_order(a, n, r), samples));
            }
        }
        Err(Error::NoPeriodFound(n))
    }

    /// One Shor attempt: random base, one order finding, and the gcd step.
    pub fn attempt(&mut self, n: u64, rng: &mut dyn RngCore) -> Result<Option<u64>> {
        let a = rng.gen_range(2..n);
        let g = a.gcd(&n);
        if g != 1 {
            return Ok(Some(g));
        }
        let (r, _) = self.order(a, n, rng)?;
        if r % 2 == 1 {
            return Ok(None);
        }
        let half = pow_mod(a, r / 2, n);
        Ok([(half + n - 1) % n, (half + 1) % n]
            .into_iter()
            .map(|x| x.gcd(&n))
            .find(|&d| d > 1 && d < n))
    }

    /// A nontrivial divisor of `n` and the number of attempts used.
    pub fn split(&mut self, n: u64, rng: &mut dyn RngCore) -> Result<(u64, u64)> {
        if n < 4 {
            return Err(if n < 2 {
                Error::InvalidInput(format!("{n} has no nontrivial divisor"))
            } else {
                Error::Prime(n)
            });
        }
        if n % 2 == 0 {
            return Ok((2, 0));
        }
        if is_prime(n) {
            return Err(Error::Prime(n));
        }
        if let Some((base, exp)) = perfect_power(n) {
            if is_prime(base) {
                return Err(Error::PrimePower { n, base, exp });
            }
        }
        if n > self.quantum_bound {
            return Err(Error::BeyondSimulationBound {
                n,
                bound: self.quantum_bound,
            });
        }
        let mut attempts = 0;
        loop {
            attempts += 1;
            if let Some(d) = self.attempt(n, rng)? {
                return Ok((d, attempts));
            }
        }
    }
}

/// Multiplicative order of `a` mod `n` by simulated Shor order finding.
pub fn order_find<R: RngCore>(a: u64, n: u64, rng: &mut R) -> Result<u64> {
    OrderFinder::default().order(a, n, rng).map(|(r, _)| r)
}

/// Exact order of `a` mod `n` by exact period finding on `x -> a^x mod n` over
/// `Z_multiple`, where `multiple` is a known multiple of the order.
pub fn order_find_exact(a: u64, n: u64, multiple: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "modulus {n} must be at least 2"
        )));
    }
    let g = a.gcd(&n);
    if g != 1 {
        return Err(Error::NotCoprime { a, n, gcd: g });
    }
    if multiple == 0 || pow_mod(a, multiple, n) != 1 {
        return Err(Error::PromiseViolation(format!(
            "{multiple} is not a multiple of the order of {a} mod {n}"
        )));
    }
    let f = DiscreteFunction::new(multiple, n, move |x| pow_mod(a, x, n))?;
    let mut engine = Eqpa::new(&PeriodicFunction::new(f, None)?, Backend::Statevector)?;
    // Exact, so the seed does not influence the result.
    Ok(engine.run(&mut ChaCha8Rng::seed_from_u64(0))?.period)
}

/// A nontrivial divisor of composite `n`. Even `n` gives 2.
pub fn shor_factor<R: RngCore>(n: u64, rng: &mut R) -> Result<u64> {
    OrderFinder::default().split(n, rng).map(|(d, _)| d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorMethod {
    /// Primality test, even part or perfect power.
    Classical,
    QuantumOrderFinding,
    TrialDivision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorizationResult {
    pub n: u64,
    /// Prime factors in ascending order with multiplicity.
    pub factors: Vec<u64>,
    /// How each entry of `factors` was split off.
    pub methods: Vec<FactorMethod>,
    /// Shor attempts across all quantum splits.
    pub trials: u64,
    /// Fourier samples drawn by order finding.
    pub fourier_calls: u64,
}

/// Full prime factorization with quantum splitting up to the finder's bound.
pub fn factorize_with(
    n: u64,
    finder: &mut OrderFinder,
    rng: &mut dyn RngCore,
) -> Result<FactorizationResult> {
    let mut found: Vec<(u64, FactorMethod)> = Vec::new();
    let mut trials = 0;
    let samples_before = finder.samples();
    let mut rest = n.max(1);
    while rest % 2 == 0 {
        found.push((2, FactorMethod::Classical));
        rest /= 2;
    }
    let mut stack = vec![(rest, FactorMethod::Classical)];
    while let Some((x, how)) = stack.pop() {
        if x == 1 {
            continue;
        }
        if is_prime(x) {
            found.push((x, how));
        } else if let Some((base, exp)) = perfect_power(x) {
            stack.extend((0..exp).map(|_| (base, FactorMethod::Classical)));
        } else if x <= finder.quantum_bound() {
            let (d, attempts) = finder.split(x, rng)?;
            trials += attempts;
            stack.push((d, FactorMethod::QuantumOrderFinding));
            stack.push((x / d, FactorMethod::QuantumOrderFinding));
        } else {
            let p = (3..)
                .step_by(2)
                .find(|p| x % p == 0)
                .expect("odd composite");
            stack.push((p, FactorMethod::TrialDivision));
            stack.push((x / p, FactorMethod::TrialDivision));
        }
    }
    found.sort();
    Ok(FactorizationResult {
        n,
        factors: found.iter().map(|f| f.0).collect(),
        methods: found.iter().map(|f| f.1).collect(),
        trials,
        fourier_calls: finder.samples() - samples_before,
    })
}

pub fn factorize<R: RngCore>(n: u64, rng: &mut R) -> Result<FactorizationResult> {
    factorize_with(n, &mut OrderFinder::default(), rng)
}

/// The `(u + 1)`-th prime.
pub fn prime_encode(u: u64) -> u64 {
    (2..)
        .filter(|&p| is_prime(p))
        .nth(u as usize)
        .expect("primes are infinite")
}

/// Index `u` with `prime_encode(u) = p`, for prime `p`.
pub fn prime_index(p: u64) -> u64 {
    (2..p).filter(|&q| is_prime(q)).count() as u64
}

/// Product of the encoding primes of `set`.
pub fn encode_set<'a>(set: impl IntoIterator<Item = &'a u64>) -> Result<u64> {
    let unique: BTreeSet<u64> = set.into_iter().copied().collect();
    unique.iter().try_fold(1u64, |acc, &u| {
        acc.checked_mul(prime_encode(u))
            .ok_or_else(|| Error::Overflow(format!("encoding of {unique:?}")))
    })
}

/// Inverse of [`encode_set`] over the universe `{0, ..., universe_size - 1}`.
pub fn decode_set(x: u64, universe_size: u64, rng: &mut dyn RngCore) -> Result<BTreeSet<u64>> {
    if x == 0 {
        return Err(Error::InvalidInput("0 encodes no set".into()));
    }
    let factors = factorize_with(x, &mut OrderFinder::default(), rng)?.factors;
    let mut set = BTreeSet::new();
    for p in factors {
        let u = prime_index(p);
        if u >= universe_size {
            return Err(Error::OutsideUniverse(p));
        }
        if !set.insert(u) {
            return Err(Error::NotSquarefree(x));
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..40).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]);
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(4_294_967_297));
    }

    #[test]
    fn perfect_powers() {
        assert_eq!(perfect_power(81), Some((3, 4)));
        assert_eq!(perfect_power(64), Some((2, 6)));
        assert_eq!(perfect_power(36), Some((6, 2)));
        assert_eq!(perfect_power(15), None);
    }

    #[test]
    fn convergents() {
        // 11/16 = [0; 1, 2, 5]: denominators 1, 1, 3, 16.
        assert_eq!(convergent_denominators(11, 16, 100), vec![1, 1, 3, 16]);
        assert_eq!(convergent_denominators(11, 16, 10), vec![1, 1, 3]);
        assert_eq!(convergent_denominators(0, 16, 10), vec![1]);
    }

    #[test]
    fn order_find_examples() {
        let mut rng = rng();
        assert_eq!(order_find(2, 15, &mut rng).unwrap(), 4);
        assert_eq!(order_find(4, 15, &mut rng).unwrap(), 2);
        assert_eq!(order_find(1, 15, &mut rng).unwrap(), 1);
        assert_eq!(
            order_find(3, 15, &mut rng),
            Err(Error::NotCoprime {
                a: 3,
                n: 15,
                gcd: 3
            })
        );
    }

    #[test]
    fn order_find_matches_brute_force() {
        let mut finder = OrderFinder::default();
        let mut rng = rng();
        for n in [15u64, 21, 33, 35, 49, 55, 63] {
            for a in (2..n).filter(|a| a.gcd(&n) == 1) {
                let brute = (1..=n).find(|&r| pow_mod(a, r, n) == 1).unwrap();
                assert_eq!(
                    finder.order(a, n, &mut rng).unwrap().0,
                    brute,
                    "a={a} n={n}"
                );
            }
        }
    }

    #[test]
    fn order_find_exact_examples() {
        assert_eq!(order_find_exact(2, 15, 4).unwrap(), 4);
        assert_eq!(order_find_exact(7, 15, 12).unwrap(), 4);
        assert_eq!(order_find_exact(1, 15, 6).unwrap(), 1);
        assert!(matches!(
            order_find_exact(2, 15, 6),
            Err(Error::PromiseViolation(_))
        ));
    }

    #[test]
    fn shor_factor_examples() {
        let mut rng = rng();
        for _ in 0..10 {
            let d = shor_factor(15, &mut rng).unwrap();
            assert!(d == 3 || d == 5);
            let d = shor_factor(21, &mut rng).unwrap();
            assert!(d == 3 || d == 7);
        }
        assert_eq!(shor_factor(7, &mut rng), Err(Error::Prime(7)));
        assert_eq!(
            shor_factor(27, &mut rng),
            Err(Error::PrimePower {
                n: 27,
                base: 3,
                exp: 3
            })
        );
        assert!(matches!(
            shor_factor(77, &mut rng),
            Err(Error::BeyondSimulationBound { n: 77, bound: 64 })
        ));
    }

    #[test]
    fn factorize_examples() {
        let mut rng = rng();
        assert_eq!(factorize(60, &mut rng).unwrap().factors, vec![2, 2, 3, 5]);
        assert!(factorize(1, &mut rng).unwrap().factors.is_empty());
        let r = factorize(105, &mut rng).unwrap();
        assert_eq!(r.factors, vec![3, 5, 7]);
        assert!(r.methods.contains(&FactorMethod::TrialDivision));
        let r = factorize(45, &mut rng).unwrap();
        assert_eq!(r.factors, vec![3, 3, 5]);
        assert!(r.methods.contains(&FactorMethod::QuantumOrderFinding));
        assert!(r.trials >= 1);
    }

    #[test]
    fn encoding_examples() {
        assert_eq!([0, 1, 2].map(prime_encode), [2, 3, 5]);
        assert_eq!(prime_index(5), 2);
        assert_eq!(encode_set(&[0, 2]).unwrap(), 10);
        assert_eq!(encode_set(&[]).unwrap(), 1);
        let mut rng = rng();
        assert_eq!(decode_set(10, 4, &mut rng).unwrap(), BTreeSet::from([0, 2]));
        assert_eq!(decode_set(1, 4, &mut rng).unwrap(), BTreeSet::new());
        assert_eq!(decode_set(22, 4, &mut rng), Err(Error::OutsideUniverse(11)));
        assert_eq!(decode_set(12, 4, &mut rng), Err(Error::NotSquarefree(12)));
    }
}
