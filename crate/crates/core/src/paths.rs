//! Coloured component sums and rescaled paths.
//!
//! Each component of a partition receives one i.i.d. centred colour; `S_k`
//! is the sum of the colours of sites `1..=k`. The rescaled path
//! `S^(n)(t)` linearly interpolates `S_{floor(nt)}` and divides by `sigma_n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::increments::IncrementLaw;
use crate::lineages::{replicate, ComponentPartition, LineageWorld};
use crate::renewal::RenewalTable;
use crate::rng::{StreamKey, StreamKind};

/// Law of the centred colour `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColouringLaw {
    /// `xi - p` with `xi ~ Bernoulli(p)`.
    CenteredRademacher { p: f64 },
    /// Uniform on `[-halfwidth, halfwidth]`.
    CenteredUniform { halfwidth: f64 },
    /// `a` with probability `w`, else `b`, shifted to mean zero.
    CenteredTwoPoint { a: f64, b: f64, w: f64 },
}

/// Closed-form moments of a colouring law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColourMoments {
    pub second: f64,
    pub abs_third: f64,
    pub fourth: f64,
}

impl ColouringLaw {
    pub fn rademacher(p: f64) -> Result<Self> {
        ColouringLaw::CenteredRademacher { p }.validated()
    }

    pub fn uniform(halfwidth: f64) -> Result<Self> {
        ColouringLaw::CenteredUniform { halfwidth }.validated()
    }

    pub fn two_point(a: f64, b: f64, w: f64) -> Result<Self> {
        ColouringLaw::CenteredTwoPoint { a, b, w }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            ColouringLaw::CenteredRademacher { p } if !(p > 0.0 && p < 1.0) => {
                domain(format!("Rademacher parameter must lie in (0, 1), got {p}"))
            }
            ColouringLaw::CenteredUniform { halfwidth } if !(halfwidth > 0.0 && halfwidth.is_finite()) => {
                domain(format!("uniform half-width must be positive, got {halfwidth}"))
            }
            ColouringLaw::CenteredTwoPoint { a, b, w }
                if !(w > 0.0 && w < 1.0 && a != b && a.is_finite() && b.is_finite()) =>
            {
                domain(format!("two-point law needs a != b and w in (0, 1), got ({a}, {b}, {w})"))
            }
            law => Ok(law),
        }
    }

    /// Two-point representation `(low, high, P(high))` of the discrete laws.
    fn atoms(&self) -> Option<(f64, f64, f64)> {
        match *self {
            ColouringLaw::CenteredRademacher { p } => Some((-p, 1.0 - p, p)),
            ColouringLaw::CenteredTwoPoint { a, b, w } => {
                let mean = w * a + (1.0 - w) * b;
                Some((b - mean, a - mean, w))
            }
            ColouringLaw::CenteredUniform { .. } => None,
        }
    }

    pub fn moments(&self) -> ColourMoments {
        match (self.atoms(), *self) {
            (Some((lo, hi, w)), _) => {
                let m = |k: i32| w * hi.abs().powi(k) + (1.0 - w) * lo.abs().powi(k);
                ColourMoments {
                    second: m(2),
                    abs_third: m(3),
                    fourth: m(4),
                }
            }
            (None, ColouringLaw::CenteredUniform { halfwidth: h }) => ColourMoments {
                second: h * h / 3.0,
                abs_third: h.powi(3) / 4.0,
                fourth: h.powi(4) / 5.0,
            },
            (None, _) => unreachable!(),
        }
    }

    /// Colour from a uniform `u` in `(0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match (self.atoms(), *self) {
            (Some((lo, hi, w)), _) => {
                if u < w {
                    hi
                } else {
                    lo
                }
            }
            (None, ColouringLaw::CenteredUniform { halfwidth }) => halfwidth * (2.0 * u - 1.0),
            (None, _) => unreachable!(),
        }
    }
}

impl fmt::Display for ColouringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColouringLaw::CenteredRademacher { p } => write!(f, "rademacher:{p}"),
            ColouringLaw::CenteredUniform { halfwidth } => write!(f, "uniform:{halfwidth}"),
            ColouringLaw::CenteredTwoPoint { a, b, w } => write!(f, "twopoint:{a},{b},{w}"),
        }
    }
}

/// Parses `rademacher:P`, `uniform[:H]` or `twopoint:A,B,W`.
impl FromStr for ColouringLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Domain(format!("bad number '{a}' in colouring '{s}'"))))
                .collect::<Result<_>>()?
        };
        match (name, nums.as_slice()) {
            ("rademacher", [p]) => Self::rademacher(*p),
            ("rademacher", []) => Self::rademacher(0.5),
            ("uniform", [h]) => Self::uniform(*h),
            ("uniform", []) => Self::uniform(1.0),
            ("twopoint", [a, b, w]) => Self::two_point(*a, *b, *w),
            _ => domain(format!("unknown colouring '{s}' (rademacher:P, uniform:H, twopoint:A,B,W)")),
        }
    }
}

/// One colour per component label.
pub fn component_colours(
    partition: &ComponentPartition,
    colouring: &ColouringLaw,
    seed: u64,
    replica: u64,
) -> Vec<f64> {
    let key = StreamKey::new(seed, StreamKind::Colour, replica);
    (0..partition.component_count() as u64)
        .map(|c| colouring.sample(key.uniform(c)))
        .collect()
}

/// Prefix sums `S_0 = 0, S_1, ..., S_n` of the coloured window.
pub fn colour_and_sum(
    partition: &ComponentPartition,
    colouring: &ColouringLaw,
    seed: u64,
    replica: u64,
) -> Vec<f64> {
    let colours = component_colours(partition, colouring, seed, replica);
    prefix_sums(partition, &colours)
}

/// Prefix sums for given component colours.
pub fn prefix_sums(partition: &ComponentPartition, colours: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(partition.n() + 1);
    let mut acc = 0.0;
    s.push(acc);
    for &c in partition.labels() {
        acc += colours[c as usize];
        s.push(acc);
    }
    s
}

/// Linear interpolation of `k -> S_k` at `x = t n`.
pub fn interpolate(prefix: &[f64], n: usize, t: f64) -> f64 {
    let x = t * n as f64;
    let k = (x.floor() as usize).min(prefix.len() - 1);
    let frac = x - k as f64;
    if frac <= 0.0 || k + 1 >= prefix.len() {
        prefix[k]
    } else {
        prefix[k] + frac * (prefix[k + 1] - prefix[k])
    }
}

/// fBM covariance `(s^{2H} + t^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.abs().powf(h2) + t.abs().powf(h2) - (t - s).abs().powf(h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `sigma_n^2 = E[Y^2] pair_sum(n)` from the renewal oracle.
    ExactSigma,
    /// Sample standard deviation of `S_n` across replicas.
    EmpiricalSigma,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Normalization::ExactSigma),
            "empirical" => Ok(Normalization::EmpiricalSigma),
            _ => domain(format!("unknown normalization '{s}' (exact|empirical)")),
        }
    }
}

/// Parameters of [`make_ensemble`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub law: IncrementLaw,
    pub colouring: ColouringLaw,
    pub n: usize,
    pub grid: Vec<f64>,
    pub reps: u64,
    pub cutoff_mult: u64,
    pub normalization: Normalization,
    pub seed: u64,
}

/// Replicated rescaled paths on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    n: usize,
    grid: Vec<f64>,
    /// Row-major `reps x grid.len()`.
    values: Vec<f64>,
    normalization: Normalization,
    sigma: f64,
    colouring: ColouringLaw,
    mean_unresolved: f64,
}

/// Window length needed to evaluate a path on `grid`.
fn window_for(n: usize, grid: &[f64]) -> usize {
    let t_max = grid.iter().cloned().fold(1.0, f64::max);
    (t_max * n as f64).ceil() as usize
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return domain("empty time grid");
    }
    if let Some(t) = grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return domain(format!("grid times must be finite and >= 0, got {t}"));
    }
    Ok(())
}

/// Simulates `reps` partitions and colours them into an ensemble.
pub fn make_ensemble(config: &EnsembleConfig, table: Option<&RenewalTable>) -> Result<PathEnsemble> {
    check_grid(&config.grid)?;
    if config.n == 0 || config.reps < 2 {
        return domain("ensembles need n >= 1 and at least 2 replicas");
    }
    if config.cutoff_mult == 0 {
        return domain("cutoff multiplier must be >= 1");
    }
    let window = window_for(config.n, &config.grid);
    let cutoff = (window as u64).saturating_mul(config.cutoff_mult);
    let sums = replicate(config.reps, |r| {
        let part = LineageWorld::new(config.law, config.seed, r, cutoff).components_on_window(window);
        (colour_and_sum(&part, &config.colouring, config.seed, r), part.unresolved_lineages())
    });
    let unresolved = sums.iter().map(|s| s.1 as f64).sum::<f64>() / sums.len() as f64;
    let prefixes: Vec<Vec<f64>> = sums.into_iter().map(|s| s.0).collect();
    let sigma = match config.normalization {
        Normalization::ExactSigma => {
            let table = table.ok_or_else(|| Error::Domain("ExactSigma needs a renewal table".into()))?;
            if table.law() != &config.law {
                return domain("renewal table was computed for a different law");
            }
            exact_sigma(table, &config.colouring, config.n)?
        }
        Normalization::EmpiricalSigma => {
            let finals: Vec<f64> = prefixes.iter().map(|p| p[config.n]).collect();
            sample_variance(&finals).sqrt()
        }
    };
    PathEnsemble::from_prefix_sums(
        config.n,
        &config.grid,
        &prefixes,
        config.normalization,
        sigma,
        config.colouring,
        unresolved,
    )
}

/// `sigma_n = sqrt(E[Y^2] pair_sum(n))`.
pub fn exact_sigma(table: &RenewalTable, colouring: &ColouringLaw, n: usize) -> Result<f64> {
    Ok((colouring.moments().second * table.pair_sum(n)?).sqrt())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    sample_covariance(xs, xs)
}

/// Unbiased sample covariance.
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

impl PathEnsemble {
    /// Builds an ensemble from per-replica prefix sums `S_0..S_m`.
    pub fn from_prefix_sums(
        n: usize,
        grid: &[f64],
        prefixes: &[Vec<f64>],
        normalization: Normalization,
        sigma: f64,
        colouring: ColouringLaw,
        mean_unresolved: f64,
    ) -> Result<Self> {
        check_grid(grid)?;
        if !(sigma > 0.0) {
            return domain("normalising sigma must be positive");
        }
        let window = window_for(n, grid);
        let mut values = Vec::with_capacity(prefixes.len() * grid.len());
        for p in prefixes {
            if p.len() < window + 1 {
                return domain("prefix sums shorter than the grid requires");
            }
            values.extend(grid.iter().map(|&t| interpolate(p, n, t) / sigma));
        }
        Ok(PathEnsemble {
            n,
            grid: grid.to_vec(),
            values,
            normalization,
            sigma,
            colouring,
            mean_unresolved,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn reps(&self) -> usize {
        self.values.len() / self.grid.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn colouring(&self) -> ColouringLaw {
        self.colouring
    }

    /// Mean number of cutoff-stopped lineages per replica.
    pub fn mean_unresolved(&self) -> f64 {
        self.mean_unresolved
    }

    /// Path values of replica `r` on the grid.
    pub fn path(&self, r: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[r * g..(r + 1) * g]
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        self.grid
            .iter()
            .position(|&g| (g - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| Error::Domain(format!("time {t} is not on the ensemble grid")))
    }

    /// Replica values at grid time `t`.
    pub fn column(&self, t: f64) -> Result<Vec<f64>> {
        let k = self.index_of(t)?;
        Ok((0..self.reps()).map(|r| self.path(r)[k]).collect())
    }

    pub fn empirical_covariance(&self, s: f64, t: f64) -> Result<f64> {
        Ok(sample_covariance(&self.column(s)?, &self.column(t)?))
    }

    /// Sample mean and its standard error at grid time `t`.
    pub fn mean_with_error(&self, t: f64) -> Result<(f64, f64)> {
        let xs = self.column(t)?;
        Ok((mean(&xs), (sample_variance(&xs) / xs.len() as f64).sqrt()))
    }

    /// Least-squares Hurst index from the variances on the dyadic ladder
    /// `T, T/2, T/4, ...` contained in the grid.
    pub fn hurst_estimate(&self) -> Result<f64> {
        let t_max = self.grid.iter().cloned().fold(0.0, f64::max);
        let mut times = Vec::new();
        let mut variances = Vec::new();
        let mut t = t_max;
        while t > 0.0 && t >= t_max * 1e-9 {
            if let Ok(col) = self.column(t) {
                times.push(t);
                variances.push(sample_variance(&col));
            } else {
                break;
            }
            t /= 2.0;
        }
        hurst_from_variances(&times, &variances)
    }
}

/// Half the least-squares slope of `ln v` against `ln t`.
pub fn hurst_from_variances(times: &[f64], variances: &[f64]) -> Result<f64> {
    if times.len() < 3 || times.len() != variances.len() {
        return domain(format!("need at least 3 dyadic ladder points, got {}", times.len()));
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let slope = sample_covariance(&xs, &ys) / sample_variance(&xs);
    Ok(slope / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colour_moments_match_quadrature_of_samples() {
        for law in [
            ColouringLaw::rademacher(0.7).unwrap(),
            ColouringLaw::uniform(2.0).unwrap(),
            ColouringLaw::two_point(3.0, -1.0, 0.2).unwrap(),
        ] {
            // midpoint rule over u is exact for the step functions
            let m = 200_000;
            let ys: Vec<f64> = (0..m).map(|k| law.sample((k as f64 + 0.5) / m as f64)).collect();
            let mom = law.moments();
            let avg = |f: &dyn Fn(f64) -> f64| ys.iter().map(|&y| f(y)).sum::<f64>() / m as f64;
            assert!(avg(&|y| y).abs() < 1e-9, "{law}");
            assert!((avg(&|y| y * y) - mom.second).abs() < 1e-6, "{law}");
            assert!((avg(&|y| y.abs().powi(3)) - mom.abs_third).abs() < 1e-6, "{law}");
            assert!((avg(&|y| y.powi(4)) - mom.fourth).abs() < 1e-6, "{law}");
        }
    }

    #[test]
    fn colouring_parse_round_trip() {
        for s in ["rademacher:0.7", "uniform:1.5", "twopoint:2,-1,0.25"] {
            let law: ColouringLaw = s.parse().unwrap();
            assert_eq!(law.to_string().parse::<ColouringLaw>().unwrap(), law);
        }
        assert!("rademacher:1.5".parse::<ColouringLaw>().is_err());
        assert!("gauss".parse::<ColouringLaw>().is_err());
    }

    #[test]
    fn single_component_gives_linear_sums() {
        let part = ComponentPartition::from_labels(&[0; 10]);
        let law = ColouringLaw::rademacher(0.3).unwrap();
        let s = colour_and_sum(&part, &law, 4, 0);
        let y = s[1];
        for (k, v) in s.iter().enumerate() {
            assert!((v - k as f64 * y).abs() < 1e-12);
        }
    }

    #[test]
    fn singleton_parity() {
        let labels: Vec<u32> = (0..33).collect();
        let part = ComponentPartition::from_labels(&labels);
        let law = ColouringLaw::rademacher(0.5).unwrap();
        for r in 0..20 {
            let s = colour_and_sum(&part, &law, 8, r);
            // +-1/2 steps: 2 S_n has the parity of n
            let twice = (2.0 * s[33]).round() as i64;
            assert_eq!(twice.rem_euclid(2), 1);
        }
    }

    #[test]
    fn interpolation() {
        let p = [0.0, 1.0, 3.0, 6.0];
        assert_eq!(interpolate(&p, 3, 0.0), 0.0);
        assert_eq!(interpolate(&p, 3, 1.0), 6.0);
        assert!((interpolate(&p, 3, 0.5) - 2.0).abs() < 1e-12);
        assert!((interpolate(&p, 2, 0.75) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hurst_on_exact_power_law() {
        let times = [0.125, 0.25, 0.5, 1.0];
        let vars: Vec<f64> = times.iter().map(|t: &f64| t.powf(1.78)).collect();
        assert!((hurst_from_variances(&times, &vars).unwrap() - 0.89).abs() < 1e-12);
        assert!(hurst_from_variances(&times[..2], &vars[..2]).is_err());
    }

    #[test]
    fn fbm_covariance_closed_forms() {
        assert!((fbm_covariance(0.89, 0.5, 1.0) - 0.5).abs() < 1e-15);
        assert!((fbm_covariance(0.89, 1.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
