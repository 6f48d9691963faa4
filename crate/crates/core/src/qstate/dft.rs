//! Sparse discrete Fourier transform kernel over `Z_d`.
//!
//! A group of nonzero inputs `x_0, x_1, ...` always lies in a coset
//! `x_0 + g Z_d` where `g = gcd(d, x_i - x_0)`. The transform then factors
//! into a dense transform of length `L = d / g` over the compressed offsets,
//! replicated `g` times with a linear phase. Periodic inputs therefore cost
//! `O(L log L + output)` instead of `O(s d)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;
use rustfft::{Fft, FftPlanner};

use super::PRUNE_THRESHOLD;

const ROOT_TABLE_LIMIT: u64 = 1 << 20;

thread_local! {
    static ROOT_TABLES: RefCell<HashMap<u64, Rc<[Complex64]>>> = RefCell::new(HashMap::new());
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// `e^{2 pi i e / n}` with the exponent already reduced mod `n`.
fn exact_root(n: u64, e: u64) -> Complex64 {
    // Quarter turns are returned exactly.
    let quarter = (4 * e as u128) % n as u128 == 0;
    if quarter {
        match ((4 * e as u128) / n as u128) % 4 {
            0 => return Complex64::new(1.0, 0.0),
            1 => return Complex64::new(0.0, 1.0),
            2 => return Complex64::new(-1.0, 0.0),
            _ => return Complex64::new(0.0, -1.0),
        }
    }
    let angle = TAU * (e as f64) / (n as f64);
    let (s, c) = angle.sin_cos();
    Complex64::new(c, s)
}

/// Roots of unity of order `n`, tabulated when `n` is small enough.
pub(crate) struct Roots {
    n: u64,
    table: Option<Rc<[Complex64]>>,
}

impl Roots {
    pub(crate) fn new(n: u64) -> Self {
        let table = (n <= ROOT_TABLE_LIMIT).then(|| {
            ROOT_TABLES.with(|cache| {
                cache
                    .borrow_mut()
                    .entry(n)
                    .or_insert_with(|| (0..n).map(|e| exact_root(n, e)).collect())
                    .clone()
            })
        });
        Self { n, table }
    }

    /// `omega^e` for any `e`; reduced mod `n` before lookup.
    #[inline]
    pub(crate) fn pow(&self, e: u64) -> Complex64 {
        let e = e % self.n;
        match &self.table {
            Some(t) => t[e as usize],
            None => exact_root(self.n, e),
        }
    }

    /// `omega^{sign * a * b}` with the product reduced mod `n` in 128 bits.
    #[inline]
    pub(crate) fn pow_product(&self, a: u64, b: u64, inverse: bool) -> Complex64 {
        let e = ((a as u128 * b as u128) % self.n as u128) as u64;
        let e = if inverse && e != 0 { self.n - e } else { e };
        self.pow(e)
    }
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        // Positive exponent for the forward transform, i.e. rustfft's "inverse".
        if inverse {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

/// Unitary DFT over `Z_dim` of one group of sparse inputs.
///
/// Forward: `x -> (1/sqrt d) sum_k w^{kx} |k>`, `w = e^{2 pi i / d}`;
/// inverse uses `w^{-kx}`. Every emitted amplitude has modulus at least
/// [`PRUNE_THRESHOLD`]. Inputs must have distinct digits.
pub(crate) fn dft_group(
    dim: u64,
    inputs: &[(u64, Complex64)],
    inverse: bool,
    mut emit: impl FnMut(u64, Complex64),
) {
    if inputs.is_empty() {
        return;
    }
    if dim == 1 {
        emit(0, inputs[0].1);
        return;
    }
    if dim == 2 {
        let (mut even, mut odd) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &(x, a) in inputs {
            even += a;
            odd += if x == 0 { a } else { -a };
        }
        for (k, v) in [(0, even), (1, odd)] {
            let v = v * std::f64::consts::FRAC_1_SQRT_2;
            if v.norm_sqr() >= PRUNE_THRESHOLD * PRUNE_THRESHOLD {
                emit(k, v);
            }
        }
        return;
    }
    let x0 = inputs[0].0;
    let offset = |x: u64| (x + dim - x0) % dim;
    let g = inputs[1..].iter().fold(dim, |g, &(x, _)| g.gcd(&offset(x)));
    let len = dim / g;
    let scale = 1.0 / (dim as f64).sqrt();

    let compressed: Vec<Complex64> = if len == 1 {
        vec![inputs.iter().map(|&(_, a)| a).sum()]
    } else if (inputs.len() as f64) <= 4.0 * (len as f64).log2() {
        let roots = Roots::new(len);
        (0..len)
            .map(|q| {
                inputs
                    .iter()
                    .map(|&(x, a)| a * roots.pow_product(q, offset(x) / g, inverse))
                    .sum()
            })
            .collect()
    } else {
        let mut buf = vec![Complex64::new(0.0, 0.0); len as usize];
        for &(x, a) in inputs {
            buf[(offset(x) / g) as usize] += a;
        }
        plan(len as usize, inverse).process(&mut buf);
        buf
    };

    let outer = Roots::new(dim);
    for (q, &value) in compressed.iter().enumerate() {
        let value = value * scale;
        if value.norm_sqr() < PRUNE_THRESHOLD * PRUNE_THRESHOLD {
            continue;
        }
        for c in 0..g {
            let k = q as u64 + c * len;
            let amp = if x0 == 0 {
                value
            } else {
                value * outer.pow_product(k, x0, inverse)
            };
            emit(k, amp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(dim: u64, inputs: &[(u64, Complex64)], inverse: bool) -> Vec<Complex64> {
        let sign = if inverse { -1.0 } else { 1.0 };
        (0..dim)
            .map(|k| {
                inputs
                    .iter()
                    .map(|&(x, a)| {
                        let angle = sign * TAU * ((k * x) % dim) as f64 / dim as f64;
                        a * Complex64::from_polar(1.0, angle)
                    })
                    .sum::<Complex64>()
                    / (dim as f64).sqrt()
            })
            .collect()
    }

    fn sparse(dim: u64, inputs: &[(u64, Complex64)], inverse: bool) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); dim as usize];
        dft_group(dim, inputs, inverse, |k, a| out[k as usize] += a);
        out
    }

    #[test]
    fn matches_dense_matrix_on_assorted_supports() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let cases: Vec<(u64, Vec<(u64, Complex64)>)> = vec![
            (2, vec![(0, c(1.0, 0.0))]),
            (
                12,
                vec![(3, c(0.5, 0.1)), (7, c(-0.2, 0.3)), (11, c(0.0, -0.4))],
            ),
            (12, (0..12).step_by(3).map(|x| (x, c(0.5, 0.0))).collect()),
            (
                64,
                (1..64).step_by(8).map(|x| (x, c(x as f64, -1.0))).collect(),
            ),
            (
                60,
                (0..60)
                    .map(|x| (x, c((x % 7) as f64, (x % 5) as f64)))
                    .collect(),
            ),
        ];
        for (dim, inputs) in cases {
            for inverse in [false, true] {
                let got = sparse(dim, &inputs, inverse);
                let want = dense(dim, &inputs, inverse);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).norm() < 1e-9, "dim {dim}: {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(exact_root(4, 1), Complex64::new(0.0, 1.0));
        assert_eq!(exact_root(8, 4), Complex64::new(-1.0, 0.0));
        assert_eq!(exact_root(12, 9), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn periodic_input_yields_sparse_output() {
        // Uniform over the coset 2 + 4Z_16: support is the 4 multiples of 4.
        let inputs: Vec<_> = (0..4)
            .map(|t| (2 + 4 * t, Complex64::new(0.5, 0.0)))
            .collect();
        let mut support = Vec::new();
        dft_group(16, &inputs, false, |k, _| support.push(k));
        support.sort();
        assert_eq!(support, vec![0, 4, 8, 12]);
    }
}
