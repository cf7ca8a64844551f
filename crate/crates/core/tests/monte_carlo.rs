//! Moderately sized Monte Carlo checks against the renewal oracles. Every
//! comparison with an untruncated oracle carries the computed cutoff bias.

use powerurn::diagnostics::Estimate;
use powerurn::lineages::{decoupled_overlap, replicate, LineageWorld};
use powerurn::paths::{
    component_colours, make_ensemble, sample_covariance, sample_variance, ColouringLaw, EnsembleConfig,
    Normalization,
};
use powerurn::seedbank::{SeedbankModel, SeedbankWorld};
use powerurn::{IncrementLaw, RenewalMode, RenewalTable};

const DEEP: u64 = 1 << 18;

fn law() -> IncrementLaw {
    IncrementLaw::pure(0.39).unwrap()
}

fn table() -> RenewalTable {
    RenewalTable::compute(law(), 1 << 18, RenewalMode::Fast).unwrap()
}

#[test]
fn mean_square_component_size_matches_pair_sum() {
    let t = table();
    let n = 512;
    let s2: Vec<f64> = replicate(1500, |r| {
        LineageWorld::new(law(), 21, r, n as u64 * DEEP).components_on_window(n).moment(2)
    });
    let est = Estimate::of(&s2);
    let full = t.pair_sum(n).unwrap();
    let cut = t.cutoff_pair_sum(n, n as u64 * DEEP).unwrap();
    assert!((est.mean - cut).abs() <= 3.0 * est.se, "{} +- {} vs {cut}", est.mean, est.se);
    assert!((est.mean - full).abs() <= 3.0 * est.se + (full - cut));
}

#[test]
fn decoupled_overlap_matches_truncated_oracle() {
    let t = table();
    let depth = 100_000u64;
    let counts: Vec<f64> = replicate(20_000, |r| decoupled_overlap(law(), 10, depth, 22, r).unwrap() as f64);
    let est = Estimate::of(&counts);
    let target = t.overlap_mean_within(10, depth as usize).unwrap();
    assert!((est.mean - target).abs() <= 3.0 * est.se, "{} +- {} vs {target}", est.mean, est.se);
    let at_zero = decoupled_overlap(law(), 0, depth, 22, 0).unwrap();
    assert!(at_zero >= 1);
}

#[test]
fn variance_of_sums_matches_pair_sum() {
    let t = table();
    let n = 256;
    let colouring = ColouringLaw::rademacher(0.5).unwrap();
    let sums: Vec<f64> = replicate(20_000, |r| {
        let p = LineageWorld::new(law(), 23, r, n as u64 * DEEP).components_on_window(n);
        let colours = component_colours(&p, &colouring, 23, r);
        p.labels().iter().map(|&c| colours[c as usize]).sum()
    });
    let var = sample_variance(&sums);
    // SE of a sample variance from the fourth moment
    let m4 = sums.iter().map(|x| x.powi(4)).sum::<f64>() / sums.len() as f64;
    let se = ((m4 - var * var) / sums.len() as f64).sqrt();
    let ey2 = colouring.moments().second;
    let full = ey2 * t.pair_sum(n).unwrap();
    let cut = ey2 * t.cutoff_pair_sum(n, n as u64 * DEEP).unwrap();
    assert!((var - cut).abs() <= 3.0 * se, "{var} +- {se} vs {cut}");
    assert!((var - full).abs() <= 3.0 * se + (full - cut));
}

#[test]
fn normalisations_agree_and_start_at_zero() {
    let t = table();
    let mut config = EnsembleConfig {
        law: law(),
        colouring: ColouringLaw::uniform(1.0).unwrap(),
        n: 256,
        grid: vec![0.0, 0.5, 1.0],
        reps: 3000,
        cutoff_mult: DEEP,
        normalization: Normalization::ExactSigma,
        seed: 24,
    };
    let exact = make_ensemble(&config, Some(&t)).unwrap();
    assert!(exact.column(0.0).unwrap().iter().all(|&v| v == 0.0));
    let ones = exact.column(1.0).unwrap();
    let var = sample_variance(&ones);
    let se = var * (2.0 / (ones.len() - 1) as f64).sqrt() * 1.2;
    let bias = 1.0 - t.cutoff_pair_sum(256, 256 * DEEP).unwrap() / t.pair_sum(256).unwrap();
    assert!((var - 1.0).abs() <= 3.0 * se + bias, "var {var}");

    config.normalization = Normalization::EmpiricalSigma;
    let empirical = make_ensemble(&config, None).unwrap();
    assert!((sample_variance(&empirical.column(1.0).unwrap()) - 1.0).abs() < 1e-12);
    // same partitions and colours, only the scale differs
    let ratio = exact.sigma() / empirical.sigma();
    for (a, b) in ones.iter().zip(empirical.column(1.0).unwrap()) {
        assert!((a * ratio - b).abs() < 1e-9 * (1.0 + b.abs()));
    }
}

#[test]
fn colours_are_independent_across_components_and_replicas() {
    let colouring = ColouringLaw::rademacher(0.7).unwrap();
    let p = LineageWorld::new(law(), 25, 0, 1 << 20).components_on_window(64);
    let draws: Vec<Vec<f64>> = (0..20_000).map(|r| component_colours(&p, &colouring, 25, r)).collect();
    let first: Vec<f64> = draws.iter().map(|c| c[0]).collect();
    let second: Vec<f64> = draws.iter().map(|c| c[c.len() - 1]).collect();
    let shifted: Vec<f64> = draws.iter().skip(1).map(|c| c[0]).collect();
    let var = colouring.moments().second;
    let tol = 4.0 * var / (20_000f64).sqrt();
    assert!(p.component_count() > 1);
    assert!(sample_covariance(&first, &second).abs() < tol);
    assert!(sample_covariance(&first[..shifted.len()], &shifted).abs() < tol);
    assert!((first.iter().sum::<f64>() / first.len() as f64).abs() < tol);
}

#[test]
fn seedbank_islands_are_exchangeable() {
    let model = SeedbankModel::new(law(), 5).unwrap();
    let reps = 100_000;
    let hits = |other: u32| -> f64 {
        replicate(reps, |r| {
            let world = SeedbankWorld::new(model, 26, r, 100_000);
            world.components_of(&[(0, 1), (20, other)]).same_component(0, 1) as u64
        })
        .iter()
        .sum::<u64>() as f64
            / reps as f64
    };
    let (same, cross) = (hits(1), hits(2));
    let se = ((same * (1.0 - same) + cross * (1.0 - cross)) / reps as f64).sqrt();
    assert!((same - cross).abs() <= 4.0 * se, "{same} vs {cross}");
}

#[test]
fn seedbank_decoupled_overlap_dilutes_by_islands() {
    use powerurn::seedbank::seedbank_decoupled_overlap;
    let reps = 40_000;
    let mean = |islands: u32| {
        let model = SeedbankModel::new(law(), islands).unwrap();
        Estimate::of(&replicate(reps, |r| {
            seedbank_decoupled_overlap(model, 5, 0, 0, 100_000, 27, r).unwrap() as f64
        }))
    };
    // a shared time is a shared individual with probability 1/N
    let (one, four) = (mean(1), mean(4));
    let predicted = table().overlap_mean_within(5, 100_000).unwrap() / 4.0;
    assert!((four.mean - predicted).abs() <= 3.0 * four.se, "{} vs {predicted}", four.mean);
    assert!(one.mean > 3.0 * four.mean);
}

#[test]
fn hurst_index_from_the_variance_ladder() {
    for (alpha, seed) in [(0.39, 28), (0.25, 29)] {
        let config = EnsembleConfig {
            law: IncrementLaw::pure(alpha).unwrap(),
            colouring: ColouringLaw::rademacher(0.5).unwrap(),
            n: 4096,
            grid: vec![0.0625, 0.125, 0.25, 0.5, 1.0],
            reps: 1500,
            cutoff_mult: DEEP,
            normalization: Normalization::EmpiricalSigma,
            seed,
        };
        let h = make_ensemble(&config, None).unwrap().hurst_estimate().unwrap();
        assert!((h - (0.5 + alpha)).abs() <= 0.03, "alpha {alpha}: H = {h}");
    }
}
