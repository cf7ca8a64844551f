//! Solvers for self-referencing convolution recursions
//!
//! ```text
//! x[n] = b[n] + sum_{k=1}^{n} c[k] * x[n - k],   n = 0, 1, ..., len - 1
//! ```
//!
//! The renewal weights are the case `b = delta_0`, `c = pmf`; the law of the
//! first collision depth of two lineages is the case `b = q_m q_{m+i}`,
//! `c = -q_m^2`.
//!
//! [`solve_naive`] is the direct quadratic recursion with compensated
//! summation. [`solve_relaxed`] is the divide-and-conquer online scheme: once
//! the left half of a dyadic block is final, its contribution to the right
//! half is pushed forward with one real FFT product, giving
//! `O(len log^2 len)` work. The spectrum of `c[0..L)` is shared by all blocks
//! of length `L` and is computed once per level.

use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{RealFftPlanner, RealToComplex, ComplexToReal};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Direct O(len^2) evaluation. `c[0]` is ignored.
pub fn solve_naive(b: &[f64], c: &[f64], len: usize) -> Vec<f64> {
    assert!(b.len() >= len && c.len() >= len);
    let mut x = vec![0.0; len];
    for n in 0..len {
        let mut acc = CompensatedSum::default();
        acc.add(b[n]);
        for k in 1..=n {
            acc.add(c[k] * x[n - k]);
        }
        x[n] = acc.value();
    }
    x
}

const BASE_BLOCK: usize = 64;

struct Level {
    len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    kernel: Vec<Complex64>,
}

/// Online divide-and-conquer evaluation with FFT block products. `c[0]` is
/// ignored.
pub fn solve_relaxed(b: &[f64], c: &[f64], len: usize) -> Vec<f64> {
    assert!(b.len() >= len && c.len() >= len);
    if len <= BASE_BLOCK {
        return solve_naive(b, c, len);
    }
    let size = len.next_power_of_two();
    let mut x = vec![0.0; size];
    x[..len].copy_from_slice(&b[..len]);

    let mut planner = RealFftPlanner::<f64>::new();
    let mut levels = Vec::new();
    let mut block = BASE_BLOCK * 2;
    while block <= size {
        let fft_len = 2 * block;
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut padded = forward.make_input_vec();
        let take = block.min(len);
        padded[1..take].copy_from_slice(&c[1..take]);
        let mut kernel = forward.make_output_vec();
        forward.process(&mut padded, &mut kernel).expect("fft length");
        levels.push(Level {
            len: block,
            forward,
            inverse,
            kernel,
        });
        block *= 2;
    }

    let mut scratch_in = Vec::new();
    let mut scratch_spec = Vec::new();
    recurse(&mut x, c, 0, size, len, &levels, &mut scratch_in, &mut scratch_spec);
    x.truncate(len);
    x
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    x: &mut [f64],
    c: &[f64],
    lo: usize,
    hi: usize,
    len: usize,
    levels: &[Level],
    scratch_in: &mut Vec<f64>,
    scratch_spec: &mut Vec<Complex64>,
) {
    if lo >= len {
        return;
    }
    let block = hi - lo;
    if block <= BASE_BLOCK {
        let end = hi.min(len);
        for n in lo..end {
            let mut acc = CompensatedSum::default();
            acc.add(x[n]);
            for j in lo..n {
                acc.add(c[n - j] * x[j]);
            }
            x[n] = acc.value();
        }
        return;
    }
    let mid = lo + block / 2;
    recurse(x, c, lo, mid, len, levels, scratch_in, scratch_spec);
    if mid < len {
        // contribution of x[lo..mid) to x[mid..hi): sum_j x[j] c[n - j]
        let level = levels
            .iter()
            .find(|l| l.len == block)
            .expect("level table covers every block size");
        let fft_len = 2 * block;
        scratch_in.clear();
        scratch_in.resize(fft_len, 0.0);
        scratch_in[..block / 2].copy_from_slice(&x[lo..mid]);
        scratch_spec.clear();
        scratch_spec.resize(fft_len / 2 + 1, Complex64::new(0.0, 0.0));
        level
            .forward
            .process(scratch_in, scratch_spec)
            .expect("fft length");
        for (s, k) in scratch_spec.iter_mut().zip(&level.kernel) {
            *s *= k;
        }
        level
            .inverse
            .process(scratch_spec, scratch_in)
            .expect("fft length");
        let scale = 1.0 / fft_len as f64;
        let end = hi.min(len);
        for n in mid..end {
            x[n] += scratch_in[n - lo] * scale;
        }
    }
    recurse(x, c, mid, hi, len, levels, scratch_in, scratch_spec);
}

/// Full cross-correlation `r[i] = sum_m a[m] a[m + i]` for `i < lags`,
/// via one real FFT of size `>= 2 len`.
pub fn autocorrelation(a: &[f64], lags: usize) -> Vec<f64> {
    let len = a.len();
    let fft_len = (2 * len).next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);
    let mut input = forward.make_input_vec();
    input[..len].copy_from_slice(a);
    let mut spec = forward.make_output_vec();
    forward.process(&mut input, &mut spec).expect("fft length");
    for s in spec.iter_mut() {
        *s = Complex64::new(s.norm_sqr(), 0.0);
    }
    inverse.process(&mut spec, &mut input).expect("fft length");
    let scale = 1.0 / fft_len as f64;
    input[..lags.min(len)].iter().map(|v| v * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure_power_pmf(alpha: f64, len: usize) -> Vec<f64> {
        let tail = |n: usize| (n as f64).powf(-alpha);
        (0..len).map(|n| if n == 0 { 0.0 } else { tail(n) - tail(n + 1) }).collect()
    }

    #[test]
    fn relaxed_matches_naive_renewal() {
        for &len in &[1usize, 2, 63, 64, 65, 200, 1000, 1500] {
            let c = pure_power_pmf(0.3, len);
            let mut b = vec![0.0; len];
            b[0] = 1.0;
            let naive = solve_naive(&b, &c, len);
            let fast = solve_relaxed(&b, &c, len);
            for n in 0..len {
                assert!(((naive[n] - fast[n]) / naive[n]).abs() < 1e-12, "len {len} n {n}");
            }
        }
    }

    #[test]
    fn relaxed_matches_naive_signed_kernel() {
        let len = 700;
        let b: Vec<f64> = (0..len).map(|n| 1.0 / (1.0 + n as f64)).collect();
        let c: Vec<f64> = (0..len).map(|n| -0.5 / (1.0 + n as f64).powi(2)).collect();
        let naive = solve_naive(&b, &c, len);
        let fast = solve_relaxed(&b, &c, len);
        let scale = naive.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for n in 0..len {
            assert!((naive[n] - fast[n]).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn geometric_closed_form() {
        // c[k] = r^k gives x[n] = r^n 2^{n-1} for n >= 1 when b = delta_0.
        let r = 0.25f64;
        let len = 300;
        let c: Vec<f64> = (0..len).map(|k| r.powi(k as i32)).collect();
        let mut b = vec![0.0; len];
        b[0] = 1.0;
        let x = solve_relaxed(&b, &c, len);
        for n in 1..40 {
            let expect = r.powi(n as i32) * 2f64.powi(n as i32 - 1);
            assert!(((x[n] - expect) / expect).abs() < 1e-12);
        }
    }

    #[test]
    fn autocorrelation_matches_direct() {
        let a: Vec<f64> = (0..500).map(|m| 1.0 / (1.0 + m as f64).sqrt()).collect();
        let r = autocorrelation(&a, 50);
        for i in 0..50 {
            let direct: f64 = (0..500 - i).map(|m| a[m] * a[m + i]).sum();
            assert!(((r[i] - direct) / direct).abs() < 1e-12);
        }
    }
}
