//! Renewal weights `q_n` and the exact coalescence oracles built on them.
//!
//! `q_n` is the probability that a renewal process with increments from the
//! [`IncrementLaw`] ever visits `n`. Two decoupled lineages started at `0`
//! and `i` share on average `sum_m q_m q_{m+i}` sites; decomposing at their
//! first collision gives the pair coalescence probability
//!
//! ```text
//! P(0 ~ i) = sum_{m>=0} q_m q_{m+i} / sum_{m>=0} q_m^2.
//! ```
//!
//! Sums over the truncated table are completed by a tail correction from the
//! strong renewal asymptotics `q_m ~ c_srt m^{alpha-1} / L(m)`, integrated by
//! adaptive quadrature.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::convolution::{autocorrelation, solve_naive, solve_relaxed, CompensatedSum};
use crate::error::{check_budget, domain, Error, Result};
use crate::increments::IncrementLaw;
use crate::quad::integrate;
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalMode {
    Naive,
    Fast,
}

impl std::str::FromStr for RenewalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(RenewalMode::Naive),
            "fast" => Ok(RenewalMode::Fast),
            other => domain(format!("unknown renewal mode {other:?} (expected naive|fast)")),
        }
    }
}

/// Constants of the large-scale asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    /// `1 / (Gamma(alpha) Gamma(1 - alpha))`.
    pub c_srt: f64,
    /// `B(alpha, 1 - 2 alpha)`.
    pub beta_integral: f64,
    /// Pair coalescence constant `C_alpha`.
    pub c_alpha: f64,
    /// `C_alpha / (alpha (2 alpha + 1))`.
    pub variance_constant: f64,
}

impl AsymptoticConstants {
    /// `Gamma(1 - 2 alpha) / (Gamma(alpha) Gamma(1 - alpha)^3)`, the numerator of
    /// `C_alpha` before division by `sum q_m^2`.
    pub fn gamma_ratio(alpha: f64) -> f64 {
        gamma(1.0 - 2.0 * alpha) / (gamma(alpha) * gamma(1.0 - alpha).powi(3))
    }
}

/// Strong renewal constant `1 / (Gamma(alpha) Gamma(1 - alpha))`.
pub fn srt_constant(alpha: f64) -> f64 {
    1.0 / (gamma(alpha) * gamma(1.0 - alpha))
}

/// `B(alpha, 1 - 2 alpha)` in closed form.
pub fn beta_integral(alpha: f64) -> f64 {
    gamma(alpha) * gamma(1.0 - 2.0 * alpha) / gamma(1.0 - alpha)
}

/// `int_0^inf (1 + x)^{alpha-1} x^{alpha-1} dx` by quadrature, for
/// cross-checking [`beta_integral`].
pub fn beta_integral_quadrature(alpha: f64) -> f64 {
    betaprime_mass_below(alpha, 1.0) + betaprime_mass_above(alpha, 1.0)
}

/// `int_0^x t^{alpha-1} (1 + t)^{alpha-1} dt` with `t = s^{1/alpha}` removing
/// the singularity at 0.
pub(crate) fn betaprime_mass_below(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let top = x.powf(alpha);
    let f = |s: f64| (1.0 + s.powf(1.0 / alpha)).powf(alpha - 1.0) / alpha;
    integrate(f, 0.0, top, 1e-15, 1e-13).value
}

/// `int_x^inf t^{alpha-1} (1 + t)^{alpha-1} dt` with `t = x u^{-1/(1-2 alpha)}`,
/// which makes the integrand bounded on `(0, 1]`.
pub(crate) fn betaprime_mass_above(alpha: f64, x: f64) -> f64 {
    power_tail_integral(alpha, x, 1.0, &|_| 1.0)
}

/// `int_{x0}^inf t^{alpha-1} (t + lag)^{alpha-1} w(t) dt`.
fn power_tail_integral(alpha: f64, x0: f64, lag: f64, w: &dyn Fn(f64) -> f64) -> f64 {
    let k = 1.0 / (1.0 - 2.0 * alpha);
    let f = |u: f64| {
        let t = x0 * u.powf(-k);
        t.powf(alpha - 1.0) * (t + lag).powf(alpha - 1.0) * w(t) * x0 * k * u.powf(-k - 1.0)
    };
    integrate(f, 0.0, 1.0, 0.0, 1e-12).value
}

/// A product sum split into its table part and analytic tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedSum {
    pub truncated: f64,
    pub tail_correction: f64,
}

impl CorrectedSum {
    pub fn total(&self) -> f64 {
        self.truncated + self.tail_correction
    }

    /// Share of the total carried by the tail correction.
    pub fn correction_ratio(&self) -> f64 {
        self.tail_correction / self.total()
    }
}

/// Pair coalescence oracle value with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOracle {
    pub lag: usize,
    pub probability: f64,
    pub numerator: CorrectedSum,
    pub denominator: CorrectedSum,
}

impl PairOracle {
    /// Relative weight of the analytic tails in the final value.
    pub fn tail_correction_ratio(&self) -> f64 {
        let exact_part = self.numerator.truncated / self.denominator.total();
        (self.probability - exact_part) / self.probability
    }
}

/// Renewal weights `q_0..=q_N` of an increment law.
#[derive(Debug)]
pub struct RenewalTable {
    law: IncrementLaw,
    q: Vec<f64>,
    sum_q_sq_truncated: f64,
    tail_correction_q_sq: f64,
    autocorr: OnceLock<Vec<f64>>,
}

impl Clone for RenewalTable {
    fn clone(&self) -> Self {
        RenewalTable {
            law: self.law,
            q: self.q.clone(),
            sum_q_sq_truncated: self.sum_q_sq_truncated,
            tail_correction_q_sq: self.tail_correction_q_sq,
            autocorr: OnceLock::new(),
        }
    }
}

impl RenewalTable {
    /// Solves `q_n = sum_{k=1}^n pmf(k) q_{n-k}`, `q_0 = 1`, for `n <= max_index`.
    pub fn compute(law: IncrementLaw, max_index: usize, mode: RenewalMode) -> Result<Self> {
        let len = max_index + 1;
        let words = match mode {
            RenewalMode::Naive => 3 * len as u64,
            RenewalMode::Fast => 3 * len as u64 + 6 * len.next_power_of_two() as u64,
        };
        check_budget("renewal table", 8 * words)?;
        if mode == RenewalMode::Fast && max_index < 1 {
            return domain("fast mode needs N >= 1");
        }
        let pmf = law.pmf_table(len);
        let mut delta = vec![0.0; len];
        delta[0] = 1.0;
        let q = match mode {
            RenewalMode::Naive => solve_naive(&delta, &pmf, len),
            RenewalMode::Fast => solve_relaxed(&delta, &pmf, len),
        };
        Ok(Self::from_weights(law, q))
    }

    fn from_weights(law: IncrementLaw, q: Vec<f64>) -> Self {
        let sum_q_sq_truncated = q.iter().map(|v| v * v).collect::<CompensatedSum>().value();
        let mut table = RenewalTable {
            law,
            q,
            sum_q_sq_truncated,
            tail_correction_q_sq: 0.0,
            autocorr: OnceLock::new(),
        };
        table.tail_correction_q_sq = table.tail_product_sum(table.max_index() + 1, 0);
        table
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn weights(&self) -> &[f64] {
        &self.q
    }

    /// Largest tabulated index `N`.
    pub fn max_index(&self) -> usize {
        self.q.len() - 1
    }

    pub fn sum_q_sq_truncated(&self) -> f64 {
        self.sum_q_sq_truncated
    }

    pub fn tail_correction_q_sq(&self) -> f64 {
        self.tail_correction_q_sq
    }

    /// `sum_{m>=0} q_m^2` including the analytic tail.
    pub fn sum_q_sq(&self) -> f64 {
        self.sum_q_sq_truncated + self.tail_correction_q_sq
    }

    /// Strong renewal approximation to `sum_{m >= from} q_m q_{m+lag}`.
    pub fn tail_product_sum(&self, from: usize, lag: usize) -> f64 {
        let alpha = self.law.alpha();
        let c = srt_constant(alpha);
        let law = self.law;
        let lag_f = lag as f64;
        let weight = move |t: f64| 1.0 / (law.slowly_varying(t) * law.slowly_varying(t + lag_f));
        c * c * power_tail_integral(alpha, from as f64 - 0.5, lag_f, &weight)
    }

    /// `q_n Gamma(alpha) Gamma(1 - alpha) n^{1-alpha} L(n)`; tends to 1.
    pub fn srt_ratio(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.max_index() {
            return Err(Error::OutOfRange {
                index: n as i64,
                min: 1,
                max: self.max_index() as i64,
            });
        }
        let alpha = self.law.alpha();
        let x = n as f64;
        Ok(self.q[n] * x.powf(1.0 - alpha) * self.law.slowly_varying(x) / srt_constant(alpha))
    }

    fn check_lag(&self, i: usize) -> Result<()> {
        let n = self.max_index();
        if 2 * i > n {
            return Err(Error::Precision {
                lag: i,
                table_len: self.q.len(),
                required: 2 * i + 1,
            });
        }
        Ok(())
    }

    /// `E|A_0 cap A_i| = sum_{m>=0} q_m q_{m+i}`, split into table and tail.
    pub fn overlap(&self, i: usize) -> Result<CorrectedSum> {
        self.check_lag(i)?;
        if i == 0 {
            return Ok(CorrectedSum {
                truncated: self.sum_q_sq_truncated,
                tail_correction: self.tail_correction_q_sq,
            });
        }
        let n = self.max_index();
        let truncated = self.q[..=n - i]
            .iter()
            .zip(&self.q[i..])
            .map(|(a, b)| a * b)
            .collect::<CompensatedSum>()
            .value();
        Ok(CorrectedSum {
            truncated,
            tail_correction: self.tail_product_sum(n - i + 1, i),
        })
    }

    pub fn overlap_mean(&self, i: usize) -> Result<f64> {
        Ok(self.overlap(i)?.total())
    }

    /// `sum_{m=0}^{depth} q_m q_{m+i}`: mean overlap of two decoupled lineages
    /// counted only down to `depth` below 0. Exact (no tail correction).
    pub fn overlap_mean_within(&self, i: usize, depth: usize) -> Result<f64> {
        self.check_span(i, depth)?;
        Ok(self.q[..=depth]
            .iter()
            .zip(&self.q[i..])
            .map(|(a, b)| a * b)
            .collect::<CompensatedSum>()
            .value())
    }

    fn check_span(&self, i: usize, depth: usize) -> Result<()> {
        if depth + i > self.max_index() {
            return Err(Error::Precision {
                lag: i,
                table_len: self.q.len(),
                required: depth + i + 1,
            });
        }
        Ok(())
    }

    /// `P(0 ~ i)` with its numerator/denominator breakdown.
    pub fn pair_oracle(&self, i: usize) -> Result<PairOracle> {
        let numerator = self.overlap(i)?;
        let denominator = self.overlap(0)?;
        Ok(PairOracle {
            lag: i,
            probability: numerator.total() / denominator.total(),
            numerator,
            denominator,
        })
    }

    /// `P(0 ~ i)`.
    pub fn pair_coalescence(&self, i: usize) -> Result<f64> {
        Ok(self.pair_oracle(i)?.probability)
    }

    /// `P(i ~ j)`, which depends on `|i - j|` only.
    pub fn pair_coalescence_between(&self, i: i64, j: i64) -> Result<f64> {
        self.pair_coalescence(i.abs_diff(j) as usize)
    }

    fn autocorrelation(&self) -> &[f64] {
        self.autocorr
            .get_or_init(|| autocorrelation(&self.q, self.q.len() / 2 + 1))
    }

    /// `P(0 ~ i)` for every `i < n`, using one FFT autocorrelation of the table.
    pub fn pair_profile(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        self.check_lag(n - 1)?;
        let big_n = self.max_index();
        let denom = self.sum_q_sq();
        let corr = self.autocorrelation();
        Ok((0..n)
            .map(|i| {
                if i == 0 {
                    1.0
                } else {
                    (corr[i] + self.tail_product_sum(big_n - i + 1, i)) / denom
                }
            })
            .collect())
    }

    /// `sum_{i,j in [n]} P(i ~ j) = n + 2 sum_{i=1}^{n-1} (n - i) P(0 ~ i)`.
    pub fn pair_sum(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::OutOfRange { index: 0, min: 1, max: (self.max_index() / 2) as i64 });
        }
        let profile = self.pair_profile(n)?;
        Ok(weighted_pair_sum(&profile, n))
    }

    /// `sum_{i,j in [n]} a_i a_j P(i ~ j)` for an arbitrary coefficient vector.
    pub fn coefficient_pair_sum(&self, coefficients: &[f64]) -> Result<f64> {
        let n = coefficients.len();
        if n == 0 {
            return domain("empty coefficient vector");
        }
        let profile = self.pair_profile(n)?;
        // sum_i a_i^2 + 2 sum_{lag>=1} P(lag) sum_i a_i a_{i+lag}
        let corr = crate::convolution::autocorrelation(coefficients, n);
        let mut acc = CompensatedSum::default();
        acc.add(corr[0]);
        for lag in 1..n {
            acc.add(2.0 * profile[lag] * corr[lag]);
        }
        Ok(acc.value())
    }

    pub fn constants(&self) -> Result<AsymptoticConstants> {
        if self.max_index() < 10_000 {
            return domain(format!(
                "constants need a table with N >= 10^4 (got N = {})",
                self.max_index()
            ));
        }
        let alpha = self.law.alpha();
        let c_srt = srt_constant(alpha);
        let beta_integral = beta_integral(alpha);
        let c_alpha = AsymptoticConstants::gamma_ratio(alpha) / self.sum_q_sq();
        Ok(AsymptoticConstants {
            c_srt,
            beta_integral,
            c_alpha,
            variance_constant: c_alpha / (alpha * (2.0 * alpha + 1.0)),
        })
    }

    /// Law of the first collision depth of the coalescing lineages of `0` and
    /// `i`: entry `k` is `P(lineages first meet at site -k)`, `k = 0..=depth`.
    ///
    /// Solves `q_k q_{k+i} = sum_{l<=k} f(l) q_{k-l}^2` by the online solver.
    pub fn first_collision_law(&self, i: usize, depth: usize) -> Result<Vec<f64>> {
        self.check_span(i, depth)?;
        check_budget("first collision law", 8 * 9 * (depth as u64 + 1).next_power_of_two())?;
        let len = depth + 1;
        let b: Vec<f64> = (0..len).map(|k| self.q[k] * self.q[k + i]).collect();
        let c: Vec<f64> = (0..len).map(|l| -self.q[l] * self.q[l]).collect();
        Ok(solve_relaxed(&b, &c, len))
    }

    /// `P(lineages of 0 and i meet at or above site -depth)`: the pair
    /// coalescence probability seen by a simulation with that cutoff.
    pub fn cutoff_pair_coalescence(&self, i: usize, depth: usize) -> Result<f64> {
        if i == 0 {
            return Ok(1.0);
        }
        Ok(self
            .first_collision_law(i, depth)?
            .into_iter()
            .collect::<CompensatedSum>()
            .value())
    }

    /// Asymptotic `P(lineages of 0 and i first meet strictly below -depth)`
    /// for `depth >> i`.
    ///
    /// Inverting `q_k q_{k+i} = sum_l f(l) q_{k-l}^2` for regularly varying
    /// sequences gives `f(k) ~ (q_k q_{k+i} - P(0~i) q_k^2) / sum q_m^2`,
    /// whose tail is summed with the strong renewal integral.
    pub fn first_collision_tail(&self, i: usize, depth: u64) -> Result<f64> {
        if i == 0 {
            return Ok(0.0);
        }
        let p = self.pair_coalescence(i)?;
        let from = depth as f64 + 1.0;
        let tail = self.tail_integral(from, i as f64) - p * self.tail_integral(from, 0.0);
        Ok((tail / self.sum_q_sq()).max(0.0))
    }

    fn tail_integral(&self, from: f64, lag: f64) -> f64 {
        let alpha = self.law.alpha();
        let c = srt_constant(alpha);
        let law = self.law;
        let weight = move |t: f64| 1.0 / (law.slowly_varying(t) * law.slowly_varying(t + lag));
        c * c * power_tail_integral(alpha, from - 0.5, lag, &weight)
    }

    /// `E[sum_c |c|^2]` for the window `{1..n}` traced with floor `-cutoff`:
    /// [`pair_sum`](Self::pair_sum) minus the coalescence lost below the
    /// floor, from [`first_collision_tail`](Self::first_collision_tail).
    /// The lower site `j` of a pair sits `j + cutoff` above the floor; the
    /// `n - g` pairs at lag `g` are represented by their mean depth.
    pub fn cutoff_pair_sum(&self, n: usize, cutoff: u64) -> Result<f64> {
        let full = self.pair_sum(n)?;
        let mut lost = CompensatedSum::default();
        for g in 1..n {
            let pairs = (n - g) as f64;
            let depth = cutoff + ((n - g + 1) / 2) as u64;
            lost.add(2.0 * pairs * self.first_collision_tail(g, depth)?);
        }
        Ok(full - lost.value())
    }
}

/// `n + 2 sum_{i=1}^{n-1} (n - i) p[i]`.
pub(crate) fn weighted_pair_sum(profile: &[f64], n: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    acc.add(n as f64);
    for (i, p) in profile.iter().enumerate().take(n).skip(1) {
        acc.add(2.0 * (n - i) as f64 * p);
    }
    acc.value()
}
