//! The heavy-tailed increment law of the ancestral jumps.
//!
//! Both variants have tail `P(R >= n) = n^{-alpha} L(n)` with `tail(1) = 1`:
//! [`TailVariant::PurePower`] has `L = 1`, [`TailVariant::LogPerturbed`] has
//! `L(n) = (ln(e + n) / ln(e + 1))^{-beta}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest increment returned by the samplers.
pub const MAX_INCREMENT: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailVariant {
    PurePower,
    LogPerturbed { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementLaw {
    alpha: f64,
    variant: TailVariant,
}

impl IncrementLaw {
    pub fn new(alpha: f64, variant: TailVariant) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return domain(format!("tail exponent alpha = {alpha} must lie in (0, 1/2)"));
        }
        if let TailVariant::LogPerturbed { beta } = variant {
            if !(beta >= 0.0 && beta.is_finite()) {
                return domain(format!("log exponent beta = {beta} must be finite and >= 0"));
            }
        }
        Ok(IncrementLaw { alpha, variant })
    }

    pub fn pure(alpha: f64) -> Result<Self> {
        Self::new(alpha, TailVariant::PurePower)
    }

    pub fn log_perturbed(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, TailVariant::LogPerturbed { beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn variant(&self) -> TailVariant {
        self.variant
    }

    /// Hurst parameter `1/2 + alpha` of the limiting fractional Brownian motion.
    pub fn hurst(&self) -> f64 {
        0.5 + self.alpha
    }

    /// Slowly varying factor `L(x)` of the tail, `L(1) = 1`.
    pub fn slowly_varying(&self, x: f64) -> f64 {
        match self.variant {
            TailVariant::PurePower => 1.0,
            TailVariant::LogPerturbed { beta } => {
                let e = std::f64::consts::E;
                ((e + x).ln() / (e + 1.0).ln()).powf(-beta)
            }
        }
    }

    fn ln_tail(&self, n: f64) -> f64 {
        let base = -self.alpha * n.ln();
        match self.variant {
            TailVariant::PurePower => base,
            TailVariant::LogPerturbed { beta } => {
                let e = std::f64::consts::E;
                base - beta * ((e + n).ln() / (e + 1.0).ln()).ln()
            }
        }
    }

    /// `P(R >= n)`; equals 1 for `n <= 1`.
    pub fn tail(&self, n: u64) -> f64 {
        if n <= 1 {
            1.0
        } else {
            self.ln_tail(n as f64).exp()
        }
    }

    /// `P(R = n) = tail(n) - tail(n + 1)`, evaluated without cancellation.
    pub fn pmf(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return domain("increments are positive: pmf(0) is undefined");
        }
        Ok(self.pmf_unchecked(n))
    }

    pub(crate) fn pmf_unchecked(&self, n: u64) -> f64 {
        let x = n as f64;
        // ln tail(n+1) - ln tail(n)
        let mut d = -self.alpha * (1.0 / x).ln_1p();
        if let TailVariant::LogPerturbed { beta } = self.variant {
            let e = std::f64::consts::E;
            let l = (e + x).ln();
            d -= beta * ((1.0 / (e + x)).ln_1p() / l).ln_1p();
        }
        -self.tail(n) * d.exp_m1()
    }

    /// Probability mass function on `0..len` (entry 0 is zero).
    pub fn pmf_table(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| if n == 0 { 0.0 } else { self.pmf_unchecked(n as u64) })
            .collect()
    }

    /// Exact inverse-tail sampler: returns `n` with `P(result >= n) = tail(n)`.
    pub fn sample(&self, u: f64) -> Result<u64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("uniform input {u} must lie in (0, 1)"));
        }
        Ok(self.sample_unchecked(u))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, u: f64) -> u64 {
        match self.variant {
            TailVariant::PurePower => {
                let v = (-u.ln() / self.alpha).exp();
                if v >= MAX_INCREMENT as f64 {
                    MAX_INCREMENT
                } else {
                    v as u64
                }
            }
            TailVariant::LogPerturbed { .. } => {
                // smallest n >= 1 with tail(n + 1) < u
                if self.tail(2) < u {
                    return 1;
                }
                let mut hi = 2u64;
                while self.tail(hi + 1) >= u {
                    if hi >= MAX_INCREMENT / 2 {
                        return MAX_INCREMENT;
                    }
                    hi *= 2;
                }
                let mut lo = hi / 2; // tail(lo + 1) >= u
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if self.tail(mid + 1) < u {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }

    /// `max_{n <= n_max} n P(R = n) / P(R > n)`, the quantity bounded in
    /// Doney's sufficient criterion for the strong renewal theorem.
    pub fn doney_ratio_max(&self, n_max: u64) -> f64 {
        (1..=n_max.max(1))
            .map(|n| self.doney_ratio(n))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn doney_ratio(&self, n: u64) -> f64 {
        n as f64 * self.pmf_unchecked(n) / self.tail(n + 1)
    }
}
