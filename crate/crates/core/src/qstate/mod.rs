//! Exact sparse statevector simulation over qudit registers.
//!
//! Basis tuples are packed into a single mixed-radix `u64` key (first
//! register least significant). States never materialize the full Hilbert
//! space; only nonzero amplitudes are stored.

mod dft;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub(crate) use dft::dft_group;

/// Amplitudes below this modulus are dropped after every Fourier transform.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Tolerance for norm and unit-modulus checks.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Packed computational-basis index.
pub type BasisKey = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Register {
    name: String,
    dim: u64,
}

/// Ordered named registers, each a qudit of arbitrary dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    strides: Vec<u64>,
    total: u64,
}

impl RegisterLayout {
    pub fn new<I, S>(registers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut regs: Vec<Register> = Vec::new();
        let mut strides = Vec::new();
        let mut total: u64 = 1;
        for (name, dim) in registers {
            let name = name.into();
            if regs.iter().any(|r| r.name == name) {
                return Err(Error::DuplicateRegister(name));
            }
            if dim == 0 {
                return Err(Error::ZeroDimension(name));
            }
            strides.push(total);
            total = total.checked_mul(dim).ok_or(Error::DimensionOverflow)?;
            regs.push(Register { name, dim });
        }
        Ok(Self {
            registers: regs,
            strides,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    /// Product of all register dimensions.
    pub fn total_dimension(&self) -> u64 {
        self.total
    }

    pub fn registers(&self) -> impl Iterator<Item = (&str, u64)> {
        self.registers.iter().map(|r| (r.name.as_str(), r.dim))
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn name(&self, index: usize) -> &str {
        &self.registers[index].name
    }

    pub fn dim(&self, index: usize) -> u64 {
        self.registers[index].dim
    }

    pub fn dim_of(&self, name: &str) -> Result<u64> {
        Ok(self.dim(self.index_of(name)?))
    }

    pub fn encode(&self, values: &[u64]) -> Result<BasisKey> {
        if values.len() != self.registers.len() {
            return Err(Error::ArityMismatch {
                expected: self.registers.len(),
                got: values.len(),
            });
        }
        let mut key = 0;
        for ((reg, &stride), &v) in self.registers.iter().zip(&self.strides).zip(values) {
            if v >= reg.dim {
                return Err(Error::ValueOutOfRange {
                    register: reg.name.clone(),
                    value: v,
                    dim: reg.dim,
                });
            }
            key += v * stride;
        }
        Ok(key)
    }

    pub fn decode(&self, key: BasisKey) -> Vec<u64> {
        let mut out = vec![0; self.len()];
        self.decode_into(key, &mut out);
        out
    }

    #[inline]
    fn decode_into(&self, key: BasisKey, out: &mut [u64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.digit(key, i);
        }
    }

    #[inline]
    fn digit(&self, key: BasisKey, index: usize) -> u64 {
        (key / self.strides[index]) % self.registers[index].dim
    }

    #[inline]
    fn stride(&self, index: usize) -> u64 {
        self.strides[index]
    }
}

/// Boxed pure function from input register values to an output value.
pub type OracleFn = Arc<dyn Fn(&[u64]) -> u64 + Send + Sync>;

/// Reversible classical function `|x>|y> -> |x>|y + f(x) mod D>`.
///
/// Accumulating modulo the output dimension makes the induced map a
/// permutation of basis tuples for any `f`.
#[derive(Clone)]
pub struct ClassicalOracle {
    inputs: Vec<String>,
    output: String,
    func: OracleFn,
}

impl ClassicalOracle {
    pub fn new<S: Into<String>>(
        inputs: impl IntoIterator<Item = S>,
        output: impl Into<String>,
        func: impl Fn(&[u64]) -> u64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            inputs: inputs.into_iter().map(Into::into).collect(),
            output: output.into(),
            func: Arc::new(func),
        }
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn output(&self) -> &str {
        &self.output
    }

    pub fn eval(&self, inputs: &[u64]) -> u64 {
        (self.func)(inputs)
    }
}

impl fmt::Debug for ClassicalOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassicalOracle")
            .field("inputs", &self.inputs)
            .field("output", &self.output)
            .finish_non_exhaustive()
    }
}

/// A sparse pure state over a [`RegisterLayout`].
#[derive(Clone, Debug)]
pub struct SparseState {
    layout: Arc<RegisterLayout>,
    entries: Vec<(BasisKey, Complex64)>,
}

impl SparseState {
    /// The single basis state `|values>`.
    pub fn basis_state(layout: Arc<RegisterLayout>, values: &[u64]) -> Result<Self> {
        let key = layout.encode(values)?;
        Ok(Self {
            layout,
            entries: vec![(key, Complex64::new(1.0, 0.0))],
        })
    }

    /// `|0...0>`.
    pub fn zero(layout: Arc<RegisterLayout>) -> Self {
        Self {
            layout,
            entries: vec![(0, Complex64::new(1.0, 0.0))],
        }
    }

    /// Builds a state from explicit `(tuple, amplitude)` pairs. Zero
    /// amplitudes are dropped; duplicates are summed. No normalization.
    pub fn from_amplitudes(
        layout: Arc<RegisterLayout>,
        amplitudes: impl IntoIterator<Item = (Vec<u64>, Complex64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (values, amp) in amplitudes {
            *map.entry(layout.encode(&values)?)
                .or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let entries = map.into_iter().filter(|(_, a)| a.norm() > 0.0).collect();
        Ok(Self { layout, entries })
    }

    pub fn layout(&self) -> &Arc<RegisterLayout> {
        &self.layout
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, values: &[u64]) -> Result<Complex64> {
        let key = self.layout.encode(values)?;
        Ok(self
            .entries
            .iter()
            .find(|(k, _)| *k == key)
            .map_or(Complex64::new(0.0, 0.0), |&(_, a)| a))
    }

    /// Decoded `(tuple, amplitude)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<u64>, Complex64)> + '_ {
        self.entries
            .iter()
            .map(|&(k, a)| (self.layout.decode(k), a))
    }

    /// Raw packed entries.
    pub fn entries(&self) -> &[(BasisKey, Complex64)] {
        &self.entries
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SparseState) -> Complex64 {
        let mine: std::collections::HashMap<BasisKey, Complex64> =
            self.entries.iter().copied().collect();
        other
            .entries
            .iter()
            .filter_map(|(k, b)| mine.get(k).map(|a| a.conj() * b))
            .sum()
    }

    /// Largest entrywise `|a - b|` over the union of supports.
    pub fn max_abs_diff(&self, other: &SparseState) -> f64 {
        let mut diff: std::collections::HashMap<BasisKey, Complex64> =
            self.entries.iter().copied().collect();
        for &(k, b) in &other.entries {
            *diff.entry(k).or_insert(Complex64::new(0.0, 0.0)) -= b;
        }
        diff.values().map(|d| d.norm()).fold(0.0, f64::max)
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scale(mut self, factor: Complex64) -> Self {
        for (_, a) in &mut self.entries {
            *a *= factor;
        }
        self
    }

    /// Maps `|0>` on `reg` to the uniform superposition over `Z_d`.
    ///
    /// Realized as the unitary DFT on `reg`, so the inverse step is the
    /// inverse DFT. Fails unless `reg` holds 0 in every branch.
    pub fn uniform_prep(self, reg: &str) -> Result<Self> {
        let idx = self.layout.index_of(reg)?;
        if self
            .entries
            .iter()
            .any(|&(k, _)| self.layout.digit(k, idx) != 0)
        {
            return Err(Error::RegisterNotZero(reg.to_string()));
        }
        Ok(self.transform(idx, false))
    }

    /// Applies `oracle`: the output register accumulates `f(inputs)`.
    pub fn apply_oracle(self, oracle: &ClassicalOracle) -> Result<Self> {
        self.oracle_pass(oracle, false)
    }

    /// Inverse of [`apply_oracle`](Self::apply_oracle).
    pub fn unapply_oracle(self, oracle: &ClassicalOracle) -> Result<Self> {
        self.oracle_pass(oracle, true)
    }

    fn oracle_pass(mut self, oracle: &ClassicalOracle, inverse: bool) -> Result<Self> {
        let out = self.layout.index_of(&oracle.output)?;
        let inputs = oracle
            .inputs
            .iter()
            .map(|name| self.layout.index_of(name))
            .collect::<Result<Vec<_>>>()?;
        if inputs.contains(&out) {
            return Err(Error::OracleAliasing(oracle.output.clone()));
        }
        let layout = &self.layout;
        let (dim, stride) = (layout.dim(out), layout.stride(out));
        let mut buf = vec![0u64; inputs.len()];
        for (key, _) in &mut self.entries {
            for (slot, &i) in buf.iter_mut().zip(&inputs) {
                *slot = layout.digit(*key, i);
            }
            let fx = oracle.eval(&buf) % dim;
            let y = layout.digit(*key, out);
            let y_new = if inverse {
                (y + dim - fx) % dim
            } else {
                (y + fx) % dim
            };
            *key = *key - y * stride + y_new * stride;
        }
        Ok(self)
    }

    /// Unitary DFT on `reg` (`inverse` selects `w^{-kx}`); zero amplitudes pruned.
    pub fn dft(self, reg: &str, inverse: bool) -> Result<Self> {
        let idx = self.layout.index_of(reg)?;
        Ok(self.transform(idx, inverse))
    }

    fn transform(self, idx: usize, inverse: bool) -> Self {
        let dim = self.layout.dim(idx);
        if dim == 1 {
            return self;
        }
        let stride = self.layout.stride(idx);
        let groups = self.layout.total / dim;
        let n = self.entries.len();
        // Bucket by the other registers; counting sort when the range is small.
        let rest_of = |k: BasisKey| k % stride + (k / (stride * dim)) * stride;
        let mut grouped: Vec<(BasisKey, u64, Complex64)> = Vec::with_capacity(n);
        if groups <= 4 * n as u64 + 1024 {
            let mut starts = vec![0u32; groups as usize + 1];
            for &(k, _) in &self.entries {
                starts[rest_of(k) as usize + 1] += 1;
            }
            for i in 1..starts.len() {
                starts[i] += starts[i - 1];
            }
            grouped.resize(n, (0, 0, Complex64::new(0.0, 0.0)));
            for &(k, a) in &self.entries {
                let slot = &mut starts[rest_of(k) as usize];
                let digit = self.layout.digit(k, idx);
                grouped[*slot as usize] = (k - digit * stride, digit, a);
                *slot += 1;
            }
        } else {
            grouped.extend(self.entries.iter().map(|&(k, a)| {
                let digit = self.layout.digit(k, idx);
                (k - digit * stride, digit, a)
            }));
            grouped.sort_unstable_by_key(|&(rest, digit, _)| (rest, digit));
        }

        let mut out = Vec::with_capacity(n);
        let mut group: Vec<(u64, Complex64)> = Vec::new();
        let mut start = 0;
        while start < n {
            let rest = grouped[start].0;
            let end = grouped[start..]
                .iter()
                .position(|e| e.0 != rest)
                .map_or(n, |p| start + p);
            group.clear();
            group.extend(grouped[start..end].iter().map(|&(_, d, a)| (d, a)));
            dft_group(dim, &group, inverse, |k, a| {
                out.push((rest + k * stride, a))
            });
            start = end;
        }
        Self {
            layout: self.layout,
            entries: out,
        }
    }

    /// `|j>_src |x>_dst -> |j>_src |x - j mod d>_dst`.
    pub fn controlled_subtract(self, src: &str, dst: &str) -> Result<Self> {
        self.shift(src, dst, true)
    }

    /// `|j>_src |x>_dst -> |j>_src |x + j mod d>_dst`; inverse of
    /// [`controlled_subtract`](Self::controlled_subtract).
    pub fn controlled_add(self, src: &str, dst: &str) -> Result<Self> {
        self.shift(src, dst, false)
    }

    fn shift(mut self, src: &str, dst: &str, subtract: bool) -> Result<Self> {
        let s = self.layout.index_of(src)?;
        let t = self.layout.index_of(dst)?;
        let (sd, td) = (self.layout.dim(s), self.layout.dim(t));
        if sd != td || s == t {
            return Err(Error::DimensionMismatch {
                src: src.to_string(),
                src_dim: sd,
                dst: dst.to_string(),
                dst_dim: td,
            });
        }
        let layout = &self.layout;
        let stride = layout.stride(t);
        for (key, _) in &mut self.entries {
            let j = layout.digit(*key, s);
            let x = layout.digit(*key, t);
            let x_new = if subtract {
                (x + td - j) % td
            } else {
                (x + j) % td
            };
            *key = *key - x * stride + x_new * stride;
        }
        Ok(self)
    }

    /// Multiplies amplitudes of tuples satisfying `predicate` by `phase`.
    pub fn phase_flip(
        mut self,
        predicate: impl Fn(&[u64]) -> bool,
        phase: Complex64,
    ) -> Result<Self> {
        if (phase.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NonUnitPhase(phase.norm()));
        }
        let mut buf = vec![0u64; self.layout.len()];
        for (key, amp) in &mut self.entries {
            self.layout.decode_into(*key, &mut buf);
            if predicate(&buf) {
                *amp *= phase;
            }
        }
        Ok(self)
    }

    /// Flips the phase of the all-zero tuple only (`S_0`).
    pub fn phase_flip_zero(mut self, phase: Complex64) -> Result<Self> {
        if (phase.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NonUnitPhase(phase.norm()));
        }
        for (key, amp) in &mut self.entries {
            if *key == 0 {
                *amp *= phase;
            }
        }
        Ok(self)
    }

    /// `sum |a|^2` over tuples satisfying `predicate`.
    pub fn good_mass(&self, predicate: impl Fn(&[u64]) -> bool) -> f64 {
        let mut buf = vec![0u64; self.layout.len()];
        self.entries
            .iter()
            .filter(|&&(key, _)| {
                self.layout.decode_into(key, &mut buf);
                predicate(&buf)
            })
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Exact joint marginal of `regs`, sorted by outcome.
    pub fn marginal(&self, regs: &[&str]) -> Result<Marginal> {
        let idx = regs
            .iter()
            .map(|r| self.layout.index_of(r))
            .collect::<Result<Vec<_>>>()?;
        let mut acc: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for &(key, a) in &self.entries {
            let outcome: Vec<u64> = idx.iter().map(|&i| self.layout.digit(key, i)).collect();
            *acc.entry(outcome).or_insert(0.0) += a.norm_sqr();
        }
        Ok(Marginal {
            outcomes: acc.into_iter().collect(),
        })
    }

    /// Measures `reg` in the computational basis.
    pub fn measure<R: Rng + ?Sized>(&self, reg: &str, rng: &mut R) -> Result<(u64, SparseState)> {
        let (outcome, collapsed) = self.measure_many(&[reg], rng)?;
        Ok((outcome[0], collapsed))
    }

    /// Jointly measures several registers; the outcome is drawn from the
    /// exact marginal and the collapsed state is renormalized.
    pub fn measure_many<R: Rng + ?Sized>(
        &self,
        regs: &[&str],
        rng: &mut R,
    ) -> Result<(Vec<u64>, SparseState)> {
        let marginal = self.marginal(regs)?;
        let outcome = marginal.sample(rng).ok_or(Error::ZeroNorm)?.to_vec();
        let idx = regs
            .iter()
            .map(|r| self.layout.index_of(r))
            .collect::<Result<Vec<_>>>()?;
        let kept: Vec<_> = self
            .entries
            .iter()
            .copied()
            .filter(|&(key, _)| {
                idx.iter()
                    .zip(&outcome)
                    .all(|(&i, &v)| self.layout.digit(key, i) == v)
            })
            .collect();
        let norm = kept.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        let entries = kept.into_iter().map(|(k, a)| (k, a / norm)).collect();
        Ok((
            outcome,
            SparseState {
                layout: self.layout.clone(),
                entries,
            },
        ))
    }
}

/// Probability distribution over measurement outcomes, sorted by outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    outcomes: Vec<(Vec<u64>, f64)>,
}

impl Marginal {
    /// Builds a distribution from `(outcome, weight)` pairs; outcomes are sorted
    /// and duplicate outcomes summed.
    pub fn from_weights(weights: impl IntoIterator<Item = (Vec<u64>, f64)>) -> Self {
        let mut acc: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (o, w) in weights {
            *acc.entry(o).or_insert(0.0) += w;
        }
        Self {
            outcomes: acc.into_iter().collect(),
        }
    }

    pub fn outcomes(&self) -> &[(Vec<u64>, f64)] {
        &self.outcomes
    }

    pub fn probability(&self, outcome: &[u64]) -> f64 {
        self.outcomes
            .binary_search_by(|(o, _)| o.as_slice().cmp(outcome))
            .map_or(0.0, |i| self.outcomes[i].1)
    }

    /// Inverse-CDF draw with a single uniform variate; `None` if empty.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&[u64]> {
        let total: f64 = self.outcomes.iter().map(|(_, p)| p).sum();
        if self.outcomes.is_empty() || total <= 0.0 {
            return None;
        }
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (o, p) in &self.outcomes {
            acc += p;
            if u < acc {
                return Some(o);
            }
        }
        self.outcomes
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(o, _)| o.as_slice())
    }
}
