use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, RngCore};

use super::{chi_j, DiscreteFunction};
use crate::error::{Error, Result};
use crate::qstate::{dft_group, Marginal};

/// Distribution of the index register after one round of Fourier sampling.
#[derive(Clone, Debug)]
pub enum Spectrum {
    /// Tabulated outcome probabilities.
    Explicit { modulus: u64, marginal: Marginal },
    /// Uniform over the `period` multiples of `modulus / period`.
    Periodic { modulus: u64, period: u64 },
}

impl Spectrum {
    /// Exact spectrum of `f` computed class by class, without knowing its period.
    pub fn from_function(f: &DiscreteFunction) -> Self {
        let m = f.modulus();
        let mut classes: HashMap<u64, Vec<u64>> = HashMap::new();
        for x in 0..m {
            classes.entry(f.eval(x)).or_default().push(x);
        }
        let amp = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
        let mut weights: BTreeMap<u64, f64> = BTreeMap::new();
        let mut inputs = Vec::new();
        for members in classes.values() {
            inputs.clear();
            inputs.extend(members.iter().map(|&x| (x, amp)));
            dft_group(m, &inputs, false, |k, a| {
                *weights.entry(k).or_default() += a.norm_sqr()
            });
        }
        Self::Explicit {
            modulus: m,
            marginal: Marginal::from_weights(weights.into_iter().map(|(k, p)| (vec![k], p))),
        }
    }

    pub fn periodic(modulus: u64, period: u64) -> Result<Self> {
        if period == 0 || modulus % period != 0 {
            return Err(Error::PeriodDoesNotDivide { period, modulus });
        }
        Ok(Self::Periodic { modulus, period })
    }

    pub fn modulus(&self) -> u64 {
        match self {
            Self::Explicit { modulus, .. } | Self::Periodic { modulus, .. } => *modulus,
        }
    }

    pub fn probability(&self, k: u64) -> f64 {
        match self {
            Self::Explicit { marginal, .. } => marginal.probability(&[k]),
            Self::Periodic { modulus, period } => {
                if k < *modulus && k % (modulus / period) == 0 {
                    1.0 / *period as f64
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample_index(&self, rng: &mut dyn RngCore) -> u64 {
        match self {
            Self::Explicit { marginal, .. } => marginal.sample(rng).map_or(0, |o| o[0]),
            Self::Periodic { modulus, period } => rng.gen_range(0..*period) * (modulus / period),
        }
    }

    /// Mass of `chi_j` under the spectrum times a uniform coin.
    pub fn good_mass(&self, d: u64, j: i32) -> f64 {
        match self {
            Self::Explicit { modulus, marginal } => marginal
                .outcomes()
                .iter()
                .map(|(o, p)| {
                    let hits =
                        chi_j(d, *modulus, j, o[0], 0) as u8 + chi_j(d, *modulus, j, o[0], 1) as u8;
                    p * hits as f64 / 2.0
                })
                .sum(),
            Self::Periodic { modulus, period } => periodic_good_mass(*modulus, *period, d, j),
        }
    }

    /// Nonzero `(k, p_k)` pairs in ascending `k`.
    pub fn outcomes(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match self {
            Self::Explicit { marginal, .. } => {
                Box::new(marginal.outcomes().iter().map(|(o, p)| (o[0], *p)))
            }
            Self::Periodic { modulus, period } => {
                let step = modulus / period;
                let p = 1.0 / *period as f64;
                Box::new((0..*period).map(move |c| (c * step, p)))
            }
        }
    }

    /// Exact `(k, b, chi)` distribution after one `boost_half` of `U_j`.
    pub fn boosted_distribution(&self, d: u64, j: i32) -> Marginal {
        let m = self.modulus();
        let (good, bad) = boost_weights(self.good_mass(d, j));
        Marginal::from_weights(self.outcomes().flat_map(|(k, p)| {
            (0..2).map(move |b| {
                let chi = chi_j(d, m, j, k, b);
                let w = if chi { good } else { bad };
                (vec![k, b, chi as u64], p * w / 2.0)
            })
        }))
    }
}

/// Squared coefficients `(|alpha|^2, |beta|^2)` that one `Q` with
/// `phi = varphi = i` applies to the good and bad components.
pub(crate) fn boost_weights(a: f64) -> (f64, f64) {
    let phase = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let c = phase * a + (1.0 - a);
    let alpha = -(phase + (phase - one) * c);
    let beta = -(one + (phase - one) * c);
    (alpha.norm_sqr(), beta.norm_sqr())
}

/// Closed form of the good mass for the spectrum uniform on multiples of `m/r`.
fn periodic_good_mass(m: u64, r: u64, d: u64, j: i32) -> f64 {
    // k = c m / r gives rep(dk) = (dc mod r) m / r; dc mod r runs over the
    // s = r / g multiples of g = gcd(d, r), each hit g times.
    let g = d.gcd(&r) as u128;
    let s = r as u128 / g;
    let high = s / 2;
    let low = if j < 0 {
        0
    } else {
        // t g m / r <= 2^j with 1 <= t and 2t < s.
        let bound = (1u128 << j.min(100)).saturating_mul(r as u128) / (g * m as u128);
        bound.min(s.div_ceil(2).saturating_sub(1))
    };
    (2 * high + low) as f64 / (2 * s) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_enumeration() {
        for (m, r) in [(12, 3), (12, 6), (16, 16), (24, 8), (30, 5), (64, 1)] {
            let f = DiscreteFunction::new(m, m, move |x| x % r).unwrap();
            let explicit = Spectrum::from_function(&f);
            let closed = Spectrum::periodic(m, r).unwrap();
            for k in 0..m {
                assert!((explicit.probability(k) - closed.probability(k)).abs() < 1e-9);
            }
            for d in (1..=r).filter(|d| r % d == 0) {
                for j in -1..=(63 - m.leading_zeros() as i32) {
                    let a = explicit.good_mass(d, j);
                    let b = closed.good_mass(d, j);
                    assert!((a - b).abs() < 1e-9, "m={m} r={r} d={d} j={j}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn half_mass_is_boosted_to_certainty() {
        let (good, bad) = boost_weights(0.5);
        assert!((good - 2.0).abs() < 1e-12);
        assert!(bad.abs() < 1e-12);
    }

    #[test]
    fn boost_preserves_normalization() {
        for a in [0.0, 0.1, 1.0 / 3.0, 0.5, 0.9, 1.0] {
            let (good, bad) = boost_weights(a);
            assert!((a * good + (1.0 - a) * bad - 1.0).abs() < 1e-12);
        }
    }
}
