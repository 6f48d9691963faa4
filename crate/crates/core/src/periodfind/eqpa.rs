use std::collections::HashMap;

use num_integer::Integer;
use rand::{Rng, RngCore};
use serde::Serialize;

use super::spectrum::boost_weights;
use super::{
    build_uj, chi_j, fourier_marginal, fourier_sample, rep, PeriodicFunction, SamplingProgram,
    Spectrum,
};
use super::{CHI_REGISTER, COIN_REGISTER};
use crate::amplify::{boost_half, Counters};
use crate::error::{Error, Result};
use crate::qstate::Marginal;

/// Spot checks of `f(x) = f(x + d)` after the sweep loop terminates.
const PROMISE_CHECKS: usize = 16;
const SWEEP_LIMIT: u32 = 66;

/// One measured outcome of a boosted `U_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoostSample {
    pub k: u64,
    pub b: u64,
    pub chi: bool,
}

/// Produces measurement outcomes of `boost_half(U_j)` for the current divisor.
pub trait BoostSampler {
    fn modulus(&self) -> u64;

    /// Samples one boosted outcome and charges the executed operations to `counters`.
    /// Also returns the good mass of `U_j |0>`.
    fn sample(
        &mut self,
        d: u64,
        j: i32,
        rng: &mut dyn RngCore,
        counters: &mut Counters,
    ) -> Result<(BoostSample, f64)>;
}

/// Runs the full statevector simulation of each boost.
///
/// Boosts are pure in `(d, j)`, so their outcome distributions are cached.
/// The boosted state only depends on `chi_j` restricted to the support of
/// `A|0>`, so pairs inducing the same good set share one simulation.
/// Cache hits still charge the operation counts of a real execution.
pub struct StatevectorSampler {
    sampling: SamplingProgram,
    support: Vec<u64>,
    by_pair: HashMap<(u64, i32), usize>,
    by_good_set: HashMap<Vec<u64>, usize>,
    boosts: Vec<(Marginal, f64, Counters)>,
}

impl StatevectorSampler {
    pub fn new(f: &PeriodicFunction) -> Result<Self> {
        Self::from_sampling(fourier_sample(f.function())?)
    }

    /// Boosts `U_j` built on an arbitrary sampling program.
    pub fn from_sampling(sampling: SamplingProgram) -> Result<Self> {
        let support = fourier_marginal(&sampling)?
            .outcomes()
            .iter()
            .map(|(o, _)| o[0])
            .collect();
        Ok(Self {
            sampling,
            support,
            by_pair: HashMap::new(),
            by_good_set: HashMap::new(),
            boosts: Vec::new(),
        })
    }

    /// Exact `(k, b, chi)` distribution of `boost_half(U_j)`.
    pub fn distribution(&mut self, d: u64, j: i32) -> Result<&Marginal> {
        self.entry(d, j).map(|(m, _, _)| &*m)
    }

    /// Number of distinct boosts simulated so far.
    pub fn simulated(&self) -> usize {
        self.boosts.len()
    }

    fn good_set(&self, d: u64, j: i32) -> Vec<u64> {
        let m = self.modulus();
        let mut bits = vec![0u64; (2 * self.support.len()).div_ceil(64)];
        let pairs = self.support.iter().flat_map(|&k| [(k, 0), (k, 1)]);
        for (i, (k, b)) in pairs.enumerate() {
            if chi_j(d, m, j, k, b) {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        bits
    }

    fn entry(&mut self, d: u64, j: i32) -> Result<&(Marginal, f64, Counters)> {
        if let Some(&i) = self.by_pair.get(&(d, j)) {
            return Ok(&self.boosts[i]);
        }
        let (program, chi) = build_uj(&self.sampling, d, j)?;
        let key = self.good_set(d, j);
        let i = match self.by_good_set.get(&key) {
            Some(&i) => i,
            None => {
                let mut counters = Counters::default();
                let outcome = boost_half(&program, &chi, &mut counters)?;
                let marginal = outcome.state.marginal(&[
                    self.sampling.index.as_str(),
                    COIN_REGISTER,
                    CHI_REGISTER,
                ])?;
                self.boosts.push((marginal, outcome.initial_mass, counters));
                self.by_good_set.insert(key, self.boosts.len() - 1);
                self.boosts.len() - 1
            }
        };
        self.by_pair.insert((d, j), i);
        Ok(&self.boosts[i])
    }
}

impl BoostSampler for StatevectorSampler {
    fn modulus(&self) -> u64 {
        self.sampling.modulus()
    }

    fn sample(
        &mut self,
        d: u64,
        j: i32,
        rng: &mut dyn RngCore,
        counters: &mut Counters,
    ) -> Result<(BoostSample, f64)> {
        let (marginal, mass, cost) = self.entry(d, j)?;
        add(counters, cost);
        let o = marginal.sample(rng).ok_or(Error::ZeroNorm)?;
        Ok((
            BoostSample {
                k: o[0],
                b: o[1],
                chi: o[2] == 1,
            },
            *mass,
        ))
    }
}

/// Samples boosted outcomes from the two-dimensional invariant subspace of `Q`.
///
/// `A|0> = g + h` with `g` good and `h` bad; one `Q` maps it to `alpha g + beta h`,
/// so only the good mass and the Fourier spectrum are needed.
pub struct SubspaceSampler {
    spectrum: Spectrum,
    masses: HashMap<(u64, i32), f64>,
}

impl SubspaceSampler {
    /// Cost of one boost: `A`, then `A^-1` and `A` inside `Q`.
    pub const BOOST_COST: Counters = Counters {
        fourier_calls: 3,
        prep_calls: 6,
        oracle_calls: 6,
        forward_runs: 2,
        inverse_runs: 1,
    };

    pub fn new(spectrum: Spectrum) -> Self {
        Self {
            spectrum,
            masses: HashMap::new(),
        }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

impl BoostSampler for SubspaceSampler {
    fn modulus(&self) -> u64 {
        self.spectrum.modulus()
    }

    fn sample(
        &mut self,
        d: u64,
        j: i32,
        rng: &mut dyn RngCore,
        counters: &mut Counters,
    ) -> Result<(BoostSample, f64)> {
        let m = self.modulus();
        if d == 0 || m % d != 0 {
            return Err(Error::PeriodDoesNotDivide {
                period: d,
                modulus: m,
            });
        }
        let spectrum = &self.spectrum;
        let a = *self
            .masses
            .entry((d, j))
            .or_insert_with(|| spectrum.good_mass(d, j));
        add(counters, &Self::BOOST_COST);
        let (good, bad) = boost_weights(a);
        let ceiling = good.max(bad);
        loop {
            let k = spectrum.sample_index(rng);
            let b = rng.gen_range(0..2);
            let chi = chi_j(d, m, j, k, b);
            let w = if chi { good } else { bad };
            if w > 0.0 && rng.gen::<f64>() * ceiling < w {
                return Ok((BoostSample { k, b, chi }, a));
            }
        }
    }
}

fn add(total: &mut Counters, delta: &Counters) {
    total.fourier_calls += delta.fourier_calls;
    total.prep_calls += delta.prep_calls;
    total.oracle_calls += delta.oracle_calls;
    total.forward_runs += delta.forward_runs;
    total.inverse_runs += delta.inverse_runs;
}

/// Simulation route for the boosts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Statevector,
    /// Invariant-subspace sampling over the enumerated spectrum of `f`.
    Subspace,
}

/// One boost in the sweep loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EqpaRecord {
    pub sweep: u32,
    pub j: i32,
    pub d_before: u64,
    pub k: u64,
    pub b: u64,
    pub chi: bool,
    pub initial_mass: f64,
    pub d_after: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EqpaTrace {
    pub records: Vec<EqpaRecord>,
    pub sweeps: u32,
    pub counters: Counters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqpaOutcome {
    pub period: u64,
    pub trace: EqpaTrace,
}

/// `4 (floor(log2 m) + 2) (ceil(log2 r) + 1)`.
pub fn fourier_call_bound(modulus: u64, period: u64) -> u64 {
    let floor_log_m = 63 - modulus.max(1).leading_zeros() as u64;
    let ceil_log_r = if period <= 1 {
        0
    } else {
        64 - (period - 1).leading_zeros() as u64
    };
    4 * (floor_log_m + 2) * (ceil_log_r + 1)
}

/// Exact period finding with a reusable sampler.
pub struct Eqpa {
    sampler: Box<dyn BoostSampler>,
    check: Box<dyn Fn(u64) -> u64>,
}

impl Eqpa {
    pub fn new(f: &PeriodicFunction, backend: Backend) -> Result<Self> {
        let sampler: Box<dyn BoostSampler> = match backend {
            Backend::Statevector => Box::new(StatevectorSampler::new(f)?),
            Backend::Subspace => {
                Box::new(SubspaceSampler::new(Spectrum::from_function(f.function())))
            }
        };
        let func = f.function().clone();
        Ok(Self::from_sampler(sampler, move |x| func.eval(x)))
    }

    /// `check` evaluates `f` for the final promise spot checks.
    pub fn from_sampler(
        sampler: Box<dyn BoostSampler>,
        check: impl Fn(u64) -> u64 + 'static,
    ) -> Self {
        Self {
            sampler,
            check: Box::new(check),
        }
    }

    pub fn run(&mut self, rng: &mut dyn RngCore) -> Result<EqpaOutcome> {
        eqpa_with(self.sampler.as_mut(), &*self.check, rng)
    }
}

/// Exact period of `f` using the statevector backend.
pub fn eqpa<R: RngCore>(f: &PeriodicFunction, rng: &mut R) -> Result<EqpaOutcome> {
    Eqpa::new(f, Backend::Statevector)?.run(rng)
}

/// The sweep loop: for `j = -1, ..., floor(log2 m)` boost `U_j`, measure, and
/// fold every informative `k` into `d <- lcm(d, m / gcd(m, k))`. Stops after a
/// sweep without updates.
pub fn eqpa_with(
    sampler: &mut dyn BoostSampler,
    check: &dyn Fn(u64) -> u64,
    rng: &mut dyn RngCore,
) -> Result<EqpaOutcome> {
    let m = sampler.modulus();
    let top = 63 - m.leading_zeros() as i32;
    let mut trace = EqpaTrace::default();
    let mut d = 1u64;
    loop {
        trace.sweeps += 1;
        if trace.sweeps > SWEEP_LIMIT {
            return Err(Error::PromiseViolation("divisor did not stabilize".into()));
        }
        let mut updated = false;
        for j in -1..=top {
            let (s, mass) = sampler.sample(d, j, rng, &mut trace.counters)?;
            let d_before = d;
            if rep(d, s.k, m) != 0 {
                d = d.lcm(&(m / m.gcd(&s.k)));
                updated = true;
            }
            trace.records.push(EqpaRecord {
                sweep: trace.sweeps,
                j,
                d_before,
                k: s.k,
                b: s.b,
                chi: s.chi,
                initial_mass: mass,
                d_after: d,
            });
        }
        if !updated {
            break;
        }
    }
    spot_check(check, m, d, rng)?;
    Ok(EqpaOutcome { period: d, trace })
}

fn spot_check(f: &dyn Fn(u64) -> u64, m: u64, d: u64, rng: &mut dyn RngCore) -> Result<()> {
    let points = std::iter::once(0).chain((0..PROMISE_CHECKS).map(|_| rng.gen_range(0..m)));
    for x in points {
        let y = ((x as u128 + d as u128) % m as u128) as u64;
        if f(x) != f(y) {
            return Err(Error::PromiseViolation(format!(
                "f({x}) != f({y}) for candidate period {d}"
            )));
        }
    }
    Ok(())
}
