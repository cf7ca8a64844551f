//! One function per subcommand. Each returns the CSV body and the verdict
//! fields of the summary.

use anyhow::{bail, Result};
use powerurn::diagnostics::{
    censored_ks_distance, ks_distance, moment_scaling, positivity_constant, sigma_bar_sq, step_coefficients,
    stein_factors, stein_terms, BetaPrimeLaw, Estimate,
};
use powerurn::lineages::{replicate, LineageWorld};
use powerurn::paths::{component_colours, fbm_covariance, make_ensemble, EnsembleConfig};
use powerurn::seedbank::{seedbank_components, SeedbankModel};
use powerurn::special::normal_cdf;
use powerurn::{RenewalMode, RenewalTable};
use serde_json::json;

use crate::config::{RunConfig, SeedbankTarget};
use crate::output::{real, Csv, Outcome};

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.experiment.as_str() {
        "renewal" => renewal(cfg),
        "pair" => pair(cfg),
        "simulate-components" => components(cfg),
        "mrca" => mrca(cfg),
        "mrca-test" => mrca_test(cfg),
        "paths" => paths(cfg),
        "normality" => normality(cfg),
        "scaling" => scaling(cfg),
        "stein" => stein(cfg),
        "seedbank" => seedbank(cfg),
        other => bail!("experiment: unknown experiment {other:?}"),
    }
}

fn table(cfg: &RunConfig, at_least: usize) -> Result<RenewalTable> {
    Ok(RenewalTable::compute(cfg.law()?, cfg.table_len.max(at_least), RenewalMode::Fast)?)
}

fn outcome(csv: Csv, protocol: String) -> Outcome {
    Outcome { csv, statistic: None, threshold: None, pass: None, protocol, details: json!({}) }
}

fn verdict(mut o: Outcome, statistic: f64, threshold: f64) -> Outcome {
    o.statistic = Some(statistic);
    o.threshold = Some(threshold);
    o.pass = Some(statistic <= threshold);
    o
}

fn renewal(cfg: &RunConfig) -> Result<Outcome> {
    let t = RenewalTable::compute(cfg.law()?, cfg.n, cfg.mode)?;
    let mut csv = Csv::new(cfg, &["n", "q_n", "srt_ratio"]);
    for k in 0..=cfg.n {
        let ratio = if k == 0 { String::new() } else { real(t.srt_ratio(k)?) };
        csv.row(&[k.to_string(), real(t.weights()[k]), ratio]);
    }
    let mut o = outcome(csv, format!("renewal weights q_0..q_{} by the {:?} solver", cfg.n, cfg.mode));
    o.statistic = Some(t.srt_ratio(cfg.n)?);
    o.details = json!({ "sum_q_sq": t.sum_q_sq(), "constants": t.constants().ok() });
    Ok(o)
}

fn pair(cfg: &RunConfig) -> Result<Outcome> {
    let max_i = *cfg.i_list.iter().max().unwrap();
    let t = table(cfg, 2 * max_i + 1)?;
    let mut csv = Csv::new(cfg, &["i", "p_pair", "tail_correction_ratio"]);
    for &i in &cfg.i_list {
        let p = t.pair_oracle(i)?;
        csv.row(&[i.to_string(), real(p.probability), real(p.tail_correction_ratio())]);
    }
    let mut o = outcome(csv, format!("pair coalescence oracle on a table of {} weights", t.max_index()));
    o.details = json!({ "sum_q_sq": t.sum_q_sq() });
    Ok(o)
}

fn histogram(h: &[(u32, u32)]) -> String {
    h.iter().map(|(s, c)| format!("{s}:{c}")).collect::<Vec<_>>().join(";")
}

fn components(cfg: &RunConfig) -> Result<Outcome> {
    let law = cfg.law()?;
    let cutoff = cfg.cutoff(cfg.n as u64);
    let parts = replicate(cfg.reps, |r| LineageWorld::new(law, cfg.seed, r, cutoff).components_on_window(cfg.n));
    let mut csv = Csv::new(cfg, &["replica", "component_count", "unresolved", "histogram"]);
    for (r, p) in parts.iter().enumerate() {
        csv.row(&[
            r.to_string(),
            p.component_count().to_string(),
            p.unresolved_lineages().to_string(),
            histogram(&p.size_histogram()),
        ]);
    }
    let t = table(cfg, 2 * cfg.n)?;
    let oracle = t.cutoff_pair_sum(cfg.n, cutoff)?;
    let s2 = Estimate::of(&parts.iter().map(|p| p.moment(2)).collect::<Vec<_>>());
    let z = (s2.mean - oracle) / s2.se;
    let mut o = verdict(
        outcome(csv, format!("|z| of mean sum of squared component sizes against the cutoff-aware oracle, cutoff {cutoff}")),
        z.abs(),
        3.0,
    );
    o.details = json!({ "s2_mean": s2.mean, "s2_se": s2.se, "oracle": oracle, "untruncated_oracle": t.pair_sum(cfg.n)? });
    Ok(o)
}

fn mrca_depths(cfg: &RunConfig) -> Result<Vec<Option<u64>>> {
    let law = cfg.law()?;
    let cutoff = cfg.cutoff(cfg.gap);
    Ok(replicate(cfg.reps, |r| LineageWorld::new(law, cfg.seed, r, cutoff).mrca_pair(cfg.gap).depth))
}

fn mrca(cfg: &RunConfig) -> Result<Outcome> {
    let depths = mrca_depths(cfg)?;
    let mut csv = Csv::new(cfg, &["replica", "coalesced", "depth"]);
    for (r, d) in depths.iter().enumerate() {
        let (flag, depth) = match d {
            Some(d) => ("1", d.to_string()),
            None => ("0", String::new()),
        };
        csv.row(&[r.to_string(), flag.into(), depth]);
    }
    let cutoff = cfg.cutoff(cfg.gap);
    let t = table(cfg, 2 * cfg.gap as usize + 1)?;
    let target = t.cutoff_pair_coalescence(cfg.gap as usize, cutoff as usize)?;
    let hits = depths.iter().filter(|d| d.is_some()).count() as f64;
    let p_hat = hits / cfg.reps as f64;
    let se = (target * (1.0 - target) / cfg.reps as f64).sqrt();
    let mut o = verdict(
        outcome(csv, format!("|z| of coalesced fraction within depth {cutoff} against the exact cutoff law")),
        ((p_hat - target) / se).abs(),
        3.0,
    );
    o.details = json!({ "p_hat": p_hat, "p_cutoff": target, "p_pair": t.pair_coalescence(cfg.gap as usize)? });
    Ok(o)
}

fn mrca_test(cfg: &RunConfig) -> Result<Outcome> {
    let gap = cfg.gap as f64;
    let depths: Vec<f64> = mrca_depths(cfg)?.into_iter().flatten().map(|d| d as f64 / gap).collect();
    let bp = BetaPrimeLaw::new(cfg.alpha)?;
    let cdf = |x: f64| bp.cdf(x).unwrap_or(f64::NAN);
    let t = table(cfg, 2 * cfg.gap as usize + 1)?;
    let p = t.pair_coalescence(cfg.gap as usize)?;
    let limit = cfg.cutoff_mult as f64;
    let ks = censored_ks_distance(&depths, cfg.reps as f64 * p, cdf, limit)?;
    let renormalised = if depths.is_empty() {
        None
    } else {
        Some(ks_distance(&depths, |x| (cdf(x) / cdf(limit)).min(1.0))?)
    };
    let mut csv = Csv::new(cfg, &["x", "density", "cdf"]);
    let points = 400;
    for k in 0..=points {
        let x = 1e-3 * (limit / 1e-3).powf(k as f64 / points as f64);
        csv.row(&[real(x), real(bp.density(x)), real(bp.cdf(x)?)]);
    }
    let mut o = verdict(
        outcome(
            csv,
            format!("censored KS distance of D/i against the Beta-prime law on [0, {limit}], gap {}", cfg.gap),
        ),
        ks,
        0.05,
    );
    o.details = json!({ "coalesced": depths.len(), "p_pair": p, "renormalised_ks": renormalised });
    Ok(o)
}

fn ensemble_config(cfg: &RunConfig, grid: Vec<f64>) -> Result<EnsembleConfig> {
    Ok(EnsembleConfig {
        law: cfg.law()?,
        colouring: cfg.colouring()?,
        n: cfg.n,
        grid,
        reps: cfg.reps,
        cutoff_mult: cfg.cutoff_mult,
        normalization: cfg.normalization()?,
        seed: cfg.seed,
    })
}

fn paths(cfg: &RunConfig) -> Result<Outcome> {
    let t = table(cfg, 2 * cfg.n)?;
    let ens = make_ensemble(&ensemble_config(cfg, cfg.grid.clone())?, Some(&t))?;
    let mut csv = Csv::new(cfg, &["replica", "t", "value"]);
    for r in 0..ens.reps() {
        for (tt, v) in cfg.grid.iter().zip(ens.path(r)) {
            csv.row(&[r.to_string(), real(*tt), real(*v)]);
        }
    }
    let h = cfg.alpha + 0.5;
    let mut worst = 0.0f64;
    let mut cells = Vec::new();
    for (a, &s) in cfg.grid.iter().enumerate() {
        for &u in &cfg.grid[a..] {
            let emp = ens.empirical_covariance(s, u)?;
            let target = fbm_covariance(h, s, u);
            worst = worst.max((emp - target).abs());
            cells.push(json!({ "s": s, "t": u, "empirical": emp, "fbm": target }));
        }
    }
    let mut o = verdict(
        outcome(csv, format!("max |empirical covariance - fBM covariance| over grid pairs, H = {h}")),
        worst,
        0.05,
    );
    o.details = json!({ "sigma": ens.sigma(), "mean_unresolved": ens.mean_unresolved(), "covariance": cells });
    Ok(o)
}

fn normality(cfg: &RunConfig) -> Result<Outcome> {
    let t = table(cfg, 2 * cfg.n)?;
    let ens = make_ensemble(&ensemble_config(cfg, vec![1.0])?, Some(&t))?;
    let values = ens.column(1.0)?;
    let mut csv = Csv::new(cfg, &["replica", "value"]);
    for (r, v) in values.iter().enumerate() {
        csv.row(&[r.to_string(), real(*v)]);
    }
    let ks = ks_distance(&values, normal_cdf)?;
    let mut o = verdict(outcome(csv, "KS distance of S_n / sigma_n against the standard normal".into()), ks, 0.025);
    o.details = json!({ "sigma": ens.sigma() });
    Ok(o)
}

fn scaling(cfg: &RunConfig) -> Result<Outcome> {
    let max_n = *cfg.n_grid.last().unwrap_or(&1);
    let t = table(cfg, 2 * max_n)?;
    let report = moment_scaling(cfg.law()?, &cfg.n_grid, cfg.reps, cfg.cutoff_mult, cfg.seed, Some(&t))?;
    let mut csv = Csv::new(
        cfg,
        &["n", "s2", "s2_se", "s3", "s3_se", "s4", "s4_se", "mean_unresolved", "pair_sum", "cutoff_pair_sum"],
    );
    for row in &report.rows {
        let cutoff = cfg.cutoff(row.n as u64);
        csv.row(&[
            row.n.to_string(),
            real(row.s2.mean),
            real(row.s2.se),
            real(row.s3.mean),
            real(row.s3.se),
            real(row.s4.mean),
            real(row.s4.se),
            real(row.mean_unresolved),
            real(t.pair_sum(row.n)?),
            real(t.cutoff_pair_sum(row.n, cutoff)?),
        ]);
    }
    let target = 2.0 * cfg.alpha + 1.0;
    let mut o = verdict(
        outcome(csv, format!("|fitted log-log slope of E[S2] - (2 alpha + 1)|, target {target}")),
        (report.slopes[0].slope - target).abs(),
        0.15,
    );
    o.details = json!({ "slopes": report.slopes, "unresolved_bias": report.unresolved_bias });
    Ok(o)
}

fn stein(cfg: &RunConfig) -> Result<Outcome> {
    let law = cfg.law()?;
    let colouring = cfg.colouring()?;
    let coeffs = step_coefficients(cfg.n, &cfg.rho, &cfg.weights)?;
    let cutoff = cfg.cutoff(cfg.n as u64);
    let terms = replicate(cfg.reps, |r| {
        let p = LineageWorld::new(law, cfg.seed, r, cutoff).components_on_window(cfg.n);
        stein_terms(&p, &component_colours(&p, &colouring, cfg.seed, r), &coeffs)
    });
    let mut csv = Csv::new(cfg, &["replica", "t1", "t2"]);
    for (r, (a, b)) in terms.iter().enumerate() {
        csv.row(&[r.to_string(), real(*a), real(*b)]);
    }
    let t = table(cfg, 2 * cfg.n)?;
    let sbar = sigma_bar_sq(&t, colouring.moments().second, &coeffs)?;
    let f = stein_factors(cfg.n, &cfg.rho, &cfg.weights, &terms, sbar)?;
    let mut o = outcome(csv, format!("Stein bound factors at n = {} from {} replicas", cfg.n, cfg.reps));
    o.statistic = Some(f.factor2);
    o.details = json!({ "factors": f, "positivity_constant": positivity_constant(&t, &coeffs)? });
    Ok(o)
}

fn seedbank(cfg: &RunConfig) -> Result<Outcome> {
    let model = SeedbankModel::new(cfg.law()?, cfg.islands)?;
    match cfg.target {
        SeedbankTarget::Pair => {
            let max_i = *cfg.i_list.iter().max().unwrap();
            let t = table(cfg, 2 * max_i + 1)?;
            let mut csv = Csv::new(cfg, &["i", "p_pair", "p_cutoff"]);
            for &i in &cfg.i_list {
                let depth = cfg.cutoff(i as u64) as usize;
                csv.row(&[
                    i.to_string(),
                    real(model.pair_coalescence(&t, i)?),
                    real(model.cutoff_pair_coalescence(&t, i, depth)?),
                ]);
            }
            let mut o = outcome(csv, format!("seedbank pair coalescence with {} islands", cfg.islands));
            o.details = json!({ "denominator": model.denominator(&t), "c_alpha_n": model.c_alpha_n(&t).ok() });
            Ok(o)
        }
        SeedbankTarget::Components => {
            let cutoff = cfg.cutoff(cfg.n as u64);
            let parts = replicate(cfg.reps, |r| seedbank_components(model, cfg.n, cutoff, cfg.seed, r));
            let mut csv = Csv::new(cfg, &["replica", "component_count", "unresolved", "histogram"]);
            for (r, p) in parts.into_iter().enumerate() {
                let p = p?;
                csv.row(&[
                    r.to_string(),
                    p.component_count().to_string(),
                    p.unresolved_lineages().to_string(),
                    histogram(&p.size_histogram()),
                ]);
            }
            Ok(outcome(csv, format!("seedbank components of {} x {} individuals", cfg.n, cfg.islands)))
        }
    }
}
