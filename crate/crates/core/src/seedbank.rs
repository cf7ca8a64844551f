//! The N-island seedbank genealogy on `Z x [N]`.
//!
//! Individual `(t, k)` has parent `(t - R_{t,k}, H_{t,k})` with `R` from the
//! increment law and `H` uniform on the islands. Both are keyed per site,
//! and island 0 reuses the base model's increment keys, so `N = 1` replays
//! [`LineageWorld`](crate::lineages::LineageWorld) exactly.

use serde::{Deserialize, Serialize};

use crate::convolution::{solve_relaxed, CompensatedSum};
use crate::error::{domain, Result};
use crate::increments::IncrementLaw;
use crate::lineages::{sweep, ComponentPartition, Genealogy};
use crate::renewal::{AsymptoticConstants, RenewalTable};
use crate::rng::{StreamKey, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedbankModel {
    law: IncrementLaw,
    islands: u32,
}

impl SeedbankModel {
    pub fn new(law: IncrementLaw, islands: u32) -> Result<Self> {
        if islands == 0 {
            return domain("island count must be >= 1");
        }
        Ok(SeedbankModel { law, islands })
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn islands(&self) -> u32 {
        self.islands
    }

    /// `N + sum_{m>=1} q_m^2`, tail-corrected.
    pub fn denominator(&self, table: &RenewalTable) -> f64 {
        (self.islands - 1) as f64 + table.sum_q_sq()
    }

    /// `C_{alpha,N}`.
    pub fn c_alpha_n(&self, table: &RenewalTable) -> Result<f64> {
        self.check_table(table)?;
        Ok(AsymptoticConstants::gamma_ratio(self.law.alpha()) / self.denominator(table))
    }

    /// `P((0, k) ~ (i, l))`, the same for every pair of island labels.
    pub fn pair_coalescence(&self, table: &RenewalTable, i: usize) -> Result<f64> {
        self.check_table(table)?;
        if i == 0 {
            return domain("seedbank pairs need distinct time coordinates (i >= 1)");
        }
        Ok(table.overlap_mean(i)? / self.denominator(table))
    }

    /// `P((0, k) ~ (i, l))` restricted to a first meeting at or above time
    /// `-depth`, for `k != l`.
    ///
    /// Counting shared individuals at time `-m` by the time of the first
    /// meeting gives `q_m q_{m+i} = sum_l f(l) (N 1{m=l} + q_{m-l}^2 1{m>l})`,
    /// which is solved for `f` with the online solver.
    pub fn cutoff_pair_coalescence(&self, table: &RenewalTable, i: usize, depth: usize) -> Result<f64> {
        self.check_table(table)?;
        let q = table.weights();
        if i == 0 || depth + i >= q.len() {
            return domain(format!("need 1 <= i and depth + i within the table (got i = {i}, depth = {depth})"));
        }
        let n = self.islands as f64;
        let len = depth + 1;
        let b: Vec<f64> = (0..len).map(|k| q[k] * q[k + i] / n).collect();
        let c: Vec<f64> = (0..len).map(|m| -q[m] * q[m] / n).collect();
        Ok(solve_relaxed(&b, &c, len).into_iter().collect::<CompensatedSum>().value())
    }

    fn check_table(&self, table: &RenewalTable) -> Result<()> {
        if table.law() != &self.law {
            return domain("renewal table was computed for a different law");
        }
        Ok(())
    }
}

/// One realisation of the seedbank genealogy.
#[derive(Debug, Clone, Copy)]
pub struct SeedbankWorld {
    model: SeedbankModel,
    increments: StreamKey,
    choices: StreamKey,
    cutoff: u64,
}

/// A site `(time, island)`.
pub type Individual = (i64, u32);

impl SeedbankWorld {
    pub fn new(model: SeedbankModel, seed: u64, replica: u64, cutoff: u64) -> Self {
        SeedbankWorld {
            model,
            increments: StreamKey::new(seed, StreamKind::Increment, replica),
            choices: StreamKey::new(seed, StreamKind::Island, replica),
            cutoff,
        }
    }

    pub fn floor(&self) -> i64 {
        -(self.cutoff.min(i64::MAX as u64 / 2) as i64)
    }

    /// Partition of arbitrary distinct individuals, labelled by position.
    pub fn components_of(&self, sites: &[Individual]) -> ComponentPartition {
        ComponentPartition::from_sweep(sweep(self, sites, self.floor()))
    }

    /// Partition of `{1..n} x [N]`, individual `(t, k)` at position
    /// `(t - 1) N + k`.
    pub fn components_on_window(&self, n: usize) -> ComponentPartition {
        let islands = self.model.islands;
        let sites: Vec<Individual> = (1..=n as i64)
            .flat_map(|t| (0..islands).map(move |k| (t, k)))
            .collect();
        self.components_of(&sites)
    }
}

impl Genealogy for SeedbankWorld {
    type Site = Individual;

    #[inline]
    fn parent(&self, (t, k): Individual) -> Individual {
        let r = self.model.law.sample_unchecked(self.increments.child(k as u64).site_uniform(t));
        let h = self.choices.child(k as u64).index(t as u64, self.model.islands as u64) as u32;
        (t.saturating_sub(r as i64), h)
    }

    #[inline]
    fn time(&self, site: Individual) -> i64 {
        site.0
    }
}

/// Components of `{1..n} x [N]` for one replica.
pub fn seedbank_components(
    model: SeedbankModel,
    n: usize,
    cutoff: u64,
    seed: u64,
    replica: u64,
) -> Result<ComponentPartition> {
    if n == 0 {
        return domain("window size must be >= 1");
    }
    if cutoff < n as u64 {
        return domain(format!("cutoff {cutoff} must be >= window size {n}"));
    }
    crate::error::check_budget("seedbank window", 64 * n as u64 * model.islands as u64)?;
    Ok(SeedbankWorld::new(model, seed, replica, cutoff).components_on_window(n))
}

/// Shared individuals of two independent seedbank lineages started at
/// `(0, first)` and `(gap, second)`, counted down to time `-depth`.
pub fn seedbank_decoupled_overlap(
    model: SeedbankModel,
    gap: u64,
    first: u32,
    second: u32,
    depth: u64,
    seed: u64,
    replica: u64,
) -> Result<u64> {
    if depth == 0 || first >= model.islands || second >= model.islands {
        return domain("depth must be >= 1 and islands in range");
    }
    let mut streams = [
        StreamKey::new(seed, StreamKind::DecoupledFirst, replica).stream(),
        StreamKey::new(seed, StreamKind::DecoupledSecond, replica).stream(),
    ];
    let n = model.islands as f64;
    let law = model.law;
    let step = |(t, _): Individual, rng: &mut crate::rng::CounterRng| {
        let r = law.sample_unchecked(rng.uniform());
        let h = ((rng.uniform() * n) as u32).min(model.islands - 1);
        (t.saturating_sub(r as i64), h)
    };
    let floor = -(depth as i64);
    let mut a: Individual = (0, first);
    let mut b: Individual = (gap as i64, second);
    let mut shared = 0;
    while a.0 >= floor && b.0 >= floor {
        if a == b {
            shared += 1;
            a = step(a, &mut streams[0]);
            b = step(b, &mut streams[1]);
        } else if a.0 >= b.0 {
            a = step(a, &mut streams[0]);
        } else {
            b = step(b, &mut streams[1]);
        }
    }
    Ok(shared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineages::LineageWorld;
    use crate::renewal::RenewalMode;

    fn law() -> IncrementLaw {
        IncrementLaw::pure(0.39).unwrap()
    }

    #[test]
    fn single_island_replays_base_model() {
        let model = SeedbankModel::new(law(), 1).unwrap();
        for r in 0..10 {
            let a = seedbank_components(model, 300, 30_000, 17, r).unwrap();
            let b = LineageWorld::new(law(), 17, r, 30_000).components_on_window(300);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_island_formula_is_base_formula() {
        let table = RenewalTable::compute(law(), 1 << 14, RenewalMode::Fast).unwrap();
        let model = SeedbankModel::new(law(), 1).unwrap();
        for i in [1, 7, 100, 4000] {
            assert_eq!(model.pair_coalescence(&table, i).unwrap(), table.pair_coalescence(i).unwrap());
        }
        assert_eq!(model.c_alpha_n(&table).unwrap(), table.constants().unwrap().c_alpha);
    }

    #[test]
    fn more_islands_dilute_coalescence() {
        let table = RenewalTable::compute(law(), 1 << 14, RenewalMode::Fast).unwrap();
        let one = SeedbankModel::new(law(), 1).unwrap();
        let five = SeedbankModel::new(law(), 5).unwrap();
        assert!(five.c_alpha_n(&table).unwrap() < one.c_alpha_n(&table).unwrap());
        let ratio = table.sum_q_sq() / five.denominator(&table);
        for i in [1, 10, 1000] {
            let r = five.pair_coalescence(&table, i).unwrap() / one.pair_coalescence(&table, i).unwrap();
            assert!((r - ratio).abs() < 1e-14);
        }
        assert!(five.pair_coalescence(&table, 0).is_err());
        assert!(SeedbankModel::new(law(), 0).is_err());
    }

    #[test]
    fn cutoff_law_tends_to_formula() {
        let table = RenewalTable::compute(law(), 1 << 17, RenewalMode::Fast).unwrap();
        let one = SeedbankModel::new(law(), 1).unwrap();
        let five = SeedbankModel::new(law(), 5).unwrap();
        let base = table.cutoff_pair_coalescence(20, 50_000).unwrap();
        assert!((one.cutoff_pair_coalescence(&table, 20, 50_000).unwrap() - base).abs() < 1e-12);
        let shallow = five.cutoff_pair_coalescence(&table, 20, 1000).unwrap();
        let deep = five.cutoff_pair_coalescence(&table, 20, 60_000).unwrap();
        let full = five.pair_coalescence(&table, 20).unwrap();
        assert!(shallow < deep && deep < full);
        assert!(deep / full > 0.85);
    }

    #[test]
    fn island_choices_cover_all_islands() {
        let model = SeedbankModel::new(law(), 5).unwrap();
        let world = SeedbankWorld::new(model, 3, 0, 1000);
        let mut seen = [0u32; 5];
        for t in 0..5000 {
            let (p, h) = world.parent((t, 2));
            assert!(p < t);
            seen[h as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 900 && c < 1100), "{seen:?}");
    }
}
