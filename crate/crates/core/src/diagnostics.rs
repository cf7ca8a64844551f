//! Statistical checks of the limit theorems: the Beta-prime MRCA law, KS
//! distances, component-moment scaling, Stein factors and the covariance
//! inequality for coalescence indicators.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::increments::IncrementLaw;
use crate::lineages::{replicate, ComponentPartition, LineageWorld};
use crate::paths::{mean, sample_variance};
use crate::renewal::{beta_integral, betaprime_mass_above, betaprime_mass_below, RenewalTable};

/// Beta-prime law with density `x^{a-1} (1+x)^{a-1} / B(a, 1-2a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrimeLaw {
    alpha: f64,
    normalizer: f64,
}

impl BetaPrimeLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return domain(format!("alpha must lie in (0, 1/2), got {alpha}"));
        }
        Ok(BetaPrimeLaw {
            alpha,
            normalizer: beta_integral(alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let a = self.alpha;
        x.powf(a - 1.0) * (1.0 + x).powf(a - 1.0) / self.normalizer
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return domain(format!("Beta-prime CDF needs x >= 0, got {x}"));
        }
        Ok(self.cdf_unchecked(x))
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x.is_infinite() {
            1.0
        } else if x <= 1.0 {
            betaprime_mass_below(self.alpha, x) / self.normalizer
        } else {
            1.0 - betaprime_mass_above(self.alpha, x) / self.normalizer
        }
    }

    /// `B / (1 - B)` for `B ~ Beta(alpha, 1 - 2 alpha)` given as a draw of `B`.
    pub fn from_beta(b: f64) -> f64 {
        b / (1.0 - b)
    }
}

/// One-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return domain("KS distance of an empty sample");
    }
    let len = sample.len() as f64;
    censored_ks_distance(sample, len, cdf, f64::INFINITY)
}

/// KS distance of a censored sample. `sample` holds the observations that
/// fell at or below `limit` out of a population of size `population`; the
/// empirical sub-distribution `#{x_k <= x} / population` is compared with
/// `cdf` on `[0, limit]`.
pub fn censored_ks_distance(sample: &[f64], population: f64, cdf: impl Fn(f64) -> f64, limit: f64) -> Result<f64> {
    if sample.is_empty() || !(population > 0.0) {
        return domain("KS distance of an empty sample");
    }
    let mut xs: Vec<f64> = sample.iter().cloned().filter(|&x| x <= limit).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let mut d: f64 = 0.0;
    let mut k = 0;
    while k < xs.len() {
        let x = xs[k];
        let below = k as f64 / population;
        let mut j = k;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let at = j as f64 / population;
        let f = cdf(x);
        d = d.max((f - below).abs()).max((at - f).abs());
        k = j;
    }
    if limit.is_finite() {
        d = d.max((xs.len() as f64 / population - cdf(limit)).abs());
    }
    Ok(d)
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        Estimate {
            mean: mean(xs),
            se: (sample_variance(xs) / xs.len() as f64).sqrt(),
        }
    }
}

/// Weighted least-squares slope of `ln y` on `ln x` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub se: f64,
}

/// Fits `ln mean ~ ln n` with weights from the delta-method variances
/// `(se / mean)^2`.
pub fn loglog_slope(ns: &[f64], estimates: &[Estimate]) -> Result<SlopeFit> {
    if ns.len() < 2 || ns.len() != estimates.len() {
        return domain("slope fit needs at least two points");
    }
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
    let ws: Vec<f64> = estimates
        .iter()
        .map(|e| {
            let rel = e.se / e.mean;
            if rel > 0.0 {
                1.0 / (rel * rel)
            } else {
                1.0
            }
        })
        .collect();
    let sw: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ybar = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (x - xbar) * (y - ybar)).sum();
    Ok(SlopeFit {
        slope: sxy / sxx,
        se: (1.0 / sxx).sqrt(),
    })
}

/// Component moments of one partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSample {
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub unresolved: usize,
}

impl MomentSample {
    pub fn of(p: &ComponentPartition) -> Self {
        MomentSample {
            s2: p.moment(2),
            s3: p.moment(3),
            s4: p.moment(4),
            unresolved: p.unresolved_lineages(),
        }
    }
}

/// `P(I ~ J ~ ...)` for `k` independent uniform picks from the window,
/// computed site by site: `n^{-k} sum_i |c(i)|^{k-1}`. Equals `S_k / n^k`.
pub fn uniform_pick_probability(p: &ComponentPartition, k: i32) -> f64 {
    let n = p.n() as f64;
    let sizes = p.sizes();
    p.labels()
        .iter()
        .map(|&c| (sizes[c as usize] as f64).powi(k - 1))
        .sum::<f64>()
        / n.powi(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub s2: Estimate,
    pub s3: Estimate,
    pub s4: Estimate,
    pub mean_unresolved: f64,
    /// `sum_{i,j} P(i ~ j)` from the oracle, when a table was supplied.
    pub pair_sum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScalingReport {
    pub n_grid: Vec<usize>,
    pub reps: u64,
    pub cutoff_mult: u64,
    pub rows: Vec<MomentRow>,
    pub slopes: [SlopeFit; 3],
    /// Rows whose mean unresolved count is not negligible (> 1% of n).
    pub unresolved_bias: Vec<bool>,
}

impl MomentScalingReport {
    pub fn from_samples(
        n_grid: &[usize],
        samples: &[Vec<MomentSample>],
        cutoff_mult: u64,
        table: Option<&RenewalTable>,
    ) -> Result<Self> {
        if n_grid.len() != samples.len() || n_grid.is_empty() {
            return domain("one sample set per grid point is required");
        }
        let mut rows = Vec::new();
        for (&n, set) in n_grid.iter().zip(samples) {
            if set.len() < 2 {
                return domain("moment scaling needs at least 2 replicas");
            }
            let col = |f: fn(&MomentSample) -> f64| Estimate::of(&set.iter().map(f).collect::<Vec<_>>());
            rows.push(MomentRow {
                n,
                s2: col(|m| m.s2),
                s3: col(|m| m.s3),
                s4: col(|m| m.s4),
                mean_unresolved: set.iter().map(|m| m.unresolved as f64).sum::<f64>() / set.len() as f64,
                pair_sum: table.map(|t| t.pair_sum(n)).transpose()?,
            });
        }
        let ns: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
        let fit = |f: fn(&MomentRow) -> Estimate| loglog_slope(&ns, &rows.iter().map(f).collect::<Vec<_>>());
        let slopes = [fit(|r| r.s2)?, fit(|r| r.s3)?, fit(|r| r.s4)?];
        let unresolved_bias = rows.iter().map(|r| r.mean_unresolved > 0.01 * r.n as f64).collect();
        Ok(MomentScalingReport {
            n_grid: n_grid.to_vec(),
            reps: samples[0].len() as u64,
            cutoff_mult,
            rows,
            slopes,
            unresolved_bias,
        })
    }
}

/// Simulates component moments over an ascending grid of window sizes.
pub fn moment_scaling(
    law: IncrementLaw,
    n_grid: &[usize],
    reps: u64,
    cutoff_mult: u64,
    seed: u64,
    table: Option<&RenewalTable>,
) -> Result<MomentScalingReport> {
    if n_grid.len() < 4 || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return domain("n grid must be ascending with at least 4 positive points");
    }
    if reps < 2 || cutoff_mult == 0 {
        return domain("need reps >= 2 and cutoff multiplier >= 1");
    }
    let samples: Vec<Vec<MomentSample>> = n_grid
        .iter()
        .map(|&n| {
            let cutoff = (n as u64).saturating_mul(cutoff_mult);
            replicate(reps, |r| {
                MomentSample::of(&LineageWorld::new(law, seed, r, cutoff).components_on_window(n))
            })
        })
        .collect();
    MomentScalingReport::from_samples(n_grid, &samples, cutoff_mult, table)
}

/// Coefficients `a_i = alpha_g` for `floor(rho_{g-1} m) < i <= floor(rho_g m)`.
pub fn step_coefficients(m: usize, rho: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if rho.len() != weights.len() || rho.is_empty() {
        return domain("need one weight per rho breakpoint");
    }
    if rho.windows(2).any(|w| w[0] >= w[1]) || rho[0] <= 0.0 || (rho[rho.len() - 1] - 1.0).abs() > 1e-12 {
        return domain("rho breakpoints must increase strictly to 1");
    }
    let mut a = vec![0.0; m];
    let mut lo = 0usize;
    for (g, (&r, &w)) in rho.iter().zip(weights).enumerate() {
        let hi = if g + 1 == rho.len() { m } else { (r * m as f64).floor() as usize };
        for v in &mut a[lo..hi] {
            *v = w;
        }
        lo = hi;
    }
    Ok(a)
}

/// Per-replica Stein terms `(sum_c Y_c^2 A_c^2, sum_c |Y_c|^3 At_c A_c^2)`
/// with `A_c = sum_{i in c} a_i` and `At_c = sum_{i in c} |a_i|`.
pub fn stein_terms(p: &ComponentPartition, colours: &[f64], coefficients: &[f64]) -> (f64, f64) {
    let k = p.component_count();
    let mut sum_a = vec![0.0; k];
    let mut sum_abs = vec![0.0; k];
    for (&c, &a) in p.labels().iter().zip(coefficients) {
        sum_a[c as usize] += a;
        sum_abs[c as usize] += a.abs();
    }
    let mut first = 0.0;
    let mut second = 0.0;
    for c in 0..k {
        let y = colours[c];
        let a2 = sum_a[c] * sum_a[c];
        first += y * y * a2;
        second += y.abs().powi(3) * sum_abs[c] * a2;
    }
    (first, second)
}

/// The h-free multipliers of the two Stein bound terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinFactors {
    pub n: usize,
    pub weights: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma_bar_sq: f64,
    pub factor1: f64,
    pub factor2: f64,
    /// Standard error of `factor2` (factor1 is a ratio of a sample variance).
    pub factor2_se: f64,
    pub reps: usize,
}

/// Factors from per-replica Stein terms and the oracle `sigma_bar^2`.
pub fn stein_factors(
    n: usize,
    rho: &[f64],
    weights: &[f64],
    terms: &[(f64, f64)],
    sigma_bar_sq: f64,
) -> Result<SteinFactors> {
    if weights.iter().all(|&w| w == 0.0) || !(sigma_bar_sq > 0.0) {
        return domain("all-zero coefficients give sigma_bar = 0");
    }
    if terms.len() < 2 {
        return domain("Stein factors need at least 2 replicas");
    }
    let first: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let second: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let s3 = sigma_bar_sq.powf(1.5);
    let e2 = Estimate::of(&second);
    Ok(SteinFactors {
        n,
        weights: weights.to_vec(),
        rho: rho.to_vec(),
        sigma_bar_sq,
        factor1: sample_variance(&first).sqrt() / sigma_bar_sq,
        factor2: e2.mean / s3,
        factor2_se: e2.se / s3,
        reps: terms.len(),
    })
}

/// `sigma_bar^2 = E[Y^2] sum_{i,j} a_i a_j P(i ~ j)`.
pub fn sigma_bar_sq(table: &RenewalTable, second_moment: f64, coefficients: &[f64]) -> Result<f64> {
    Ok(second_moment * table.coefficient_pair_sum(coefficients)?)
}

/// `sum a_i a_j P(i~j) / sum P(i~j)`: the largest admissible positivity
/// constant for the given coefficients.
pub fn positivity_constant(table: &RenewalTable, coefficients: &[f64]) -> Result<f64> {
    Ok(table.coefficient_pair_sum(coefficients)? / table.pair_sum(coefficients.len())?)
}

/// Empirical sides of `Cov[1{i~j}, 1{k~l}] <= P(i~j~k~l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCheck {
    pub indices: [usize; 4],
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs - rhs` (delta method).
    pub se: f64,
}

impl CovarianceCheck {
    /// Lemma holds up to `z` standard errors.
    pub fn holds(&self, z: f64) -> bool {
        self.lhs <= self.rhs + z * self.se
    }
}

/// Evaluates the covariance inequality on window positions (0-based).
pub fn covariance_condition_check(
    partitions: &[ComponentPartition],
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Result<CovarianceCheck> {
    if partitions.len() < 2 {
        return domain("covariance check needs at least 2 replicas");
    }
    let n = partitions[0].n();
    if [i, j, k, l].iter().any(|&x| x >= n) {
        return domain(format!("indices must lie in the window of size {n}"));
    }
    let obs: Vec<[f64; 3]> = partitions
        .iter()
        .map(|p| {
            let a = p.same_component(i, j);
            let b = p.same_component(k, l);
            let all = a && b && p.same_component(i, k);
            [a as u8 as f64, b as u8 as f64, all as u8 as f64]
        })
        .collect();
    Ok(covariance_from_indicators([i, j, k, l], &obs))
}

/// Same check from per-replica indicator triples `(1{i~j}, 1{k~l}, 1{all})`.
pub fn covariance_from_indicators(indices: [usize; 4], obs: &[[f64; 3]]) -> CovarianceCheck {
    let r = obs.len() as f64;
    let mx = obs.iter().map(|o| o[0]).sum::<f64>() / r;
    let my = obs.iter().map(|o| o[1]).sum::<f64>() / r;
    let cross: Vec<f64> = obs.iter().map(|o| (o[0] - mx) * (o[1] - my)).collect();
    let lhs = cross.iter().sum::<f64>() / (r - 1.0);
    let rhs = obs.iter().map(|o| o[2]).sum::<f64>() / r;
    let diff: Vec<f64> = cross.iter().zip(obs).map(|(c, o)| c - o[2]).collect();
    CovarianceCheck {
        indices,
        lhs,
        rhs,
        se: (sample_variance(&diff) / r).sqrt(),
    }
}
