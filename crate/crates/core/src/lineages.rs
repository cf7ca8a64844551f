//! Coalescing ancestral lineages of the power-law urn.
//!
//! Site `j` has parent `j - R_j` where `R_j` is drawn from the increment law
//! with a uniform keyed by `(seed, replica, j)`. A [`LineageWorld`] is
//! therefore a pure function of its key: a site's increment is "sampled" the
//! first time it is read and every later read returns the same value. This
//! shared per-site randomness is what makes lineages coalesce.
//!
//! Lineages are traced with a sweep in decreasing site order: the lineage at
//! the highest current site is always advanced next. Every other live lineage
//! sits strictly below the site it leaves, so a lineage collides with the
//! genealogy exactly when it lands on a site currently held by another
//! lineage. This is the lookdown construction: the newcomer stops and its
//! component is merged into the lineage it met. Lineages that would step
//! below the cutoff floor `-M` stop unresolved and keep their own component.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::increments::IncrementLaw;
use crate::rng::{StreamKey, StreamKind};

/// Runs `f` for replicas `0..reps` in parallel and returns the results in
/// replica order.
pub fn replicate<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if already merged.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }
}

/// A genealogy whose sites are totally ordered with every parent strictly
/// below its child.
pub trait Genealogy {
    type Site: Ord + Copy;

    fn parent(&self, site: Self::Site) -> Self::Site;

    /// Time coordinate of a site (compared against the cutoff floor).
    fn time(&self, site: Self::Site) -> i64;
}

/// Outcome of tracing a set of lineages.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub sets: UnionFind,
    pub unresolved: usize,
    /// Time coordinates of the sites where two lineages met.
    pub merge_times: Vec<i64>,
    /// Number of lineage steps taken.
    pub steps: u64,
}

/// Traces the lineages of `starts` until each has merged or stepped below
/// `floor`. Duplicate starts are merged immediately. The last live lineage
/// has nothing left to meet and counts as resolved.
pub fn sweep<G: Genealogy>(genealogy: &G, starts: &[G::Site], floor: i64) -> Sweep {
    let mut sets = UnionFind::new(starts.len());
    let mut live: BTreeMap<G::Site, u32> = BTreeMap::new();
    let mut merge_times = Vec::new();
    let mut unresolved = 0;
    let mut steps = 0;
    for (k, &s) in starts.iter().enumerate() {
        match live.entry(s) {
            Entry::Occupied(e) => {
                sets.union(*e.get(), k as u32);
            }
            Entry::Vacant(v) => {
                v.insert(k as u32);
            }
        }
    }
    while let Some((site, id)) = live.pop_last() {
        if live.is_empty() {
            // nothing left to meet
            break;
        }
        let up = genealogy.parent(site);
        steps += 1;
        if genealogy.time(up) < floor {
            unresolved += 1;
            continue;
        }
        match live.entry(up) {
            Entry::Occupied(e) => {
                sets.union(*e.get(), id);
                merge_times.push(genealogy.time(up));
            }
            Entry::Vacant(v) => {
                v.insert(id);
            }
        }
    }
    Sweep {
        sets,
        unresolved,
        merge_times,
        steps,
    }
}

/// One realisation of the genealogy on `Z` with a tracing cutoff.
#[derive(Debug, Clone, Copy)]
pub struct LineageWorld {
    law: IncrementLaw,
    key: StreamKey,
    cutoff: u64,
}

impl LineageWorld {
    pub fn new(law: IncrementLaw, seed: u64, replica: u64, cutoff: u64) -> Self {
        LineageWorld {
            law,
            key: StreamKey::new(seed, StreamKind::Increment, replica),
            cutoff,
        }
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    /// Lowest site that is still expanded.
    pub fn floor(&self) -> i64 {
        -(self.cutoff.min(i64::MAX as u64 / 2) as i64)
    }

    /// The increment `R_j` of site `j`.
    #[inline]
    pub fn increment(&self, site: i64) -> u64 {
        self.law.sample_unchecked(self.key.site_uniform(site))
    }

    /// The same world traced with another cutoff.
    pub fn with_cutoff(&self, cutoff: u64) -> Self {
        LineageWorld { cutoff, ..*self }
    }

    /// Components of the window `{1, ..., n}`.
    pub fn components_on_window(&self, n: usize) -> ComponentPartition {
        let sites: Vec<i64> = (1..=n as i64).collect();
        self.components_of(&sites)
    }

    /// Partition of an arbitrary list of distinct sites, labelled by position.
    pub fn components_of(&self, sites: &[i64]) -> ComponentPartition {
        let result = sweep(self, sites, self.floor());
        ComponentPartition::from_sweep(result)
    }

    /// Edges `(child, parent)` of the ancestral lines of `{1, ..., n}`. Each
    /// line is followed until it joins a site already drawn or would leave
    /// the cutoff.
    pub fn ancestral_edges(&self, n: usize) -> Vec<(i64, i64)> {
        let floor = self.floor();
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::new();
        for start in (1..=n as i64).rev() {
            let mut site = start;
            if !seen.insert(site) {
                continue;
            }
            loop {
                let up = self.parent(site);
                if up < floor {
                    break;
                }
                edges.push((site, up));
                if !seen.insert(up) {
                    break;
                }
                site = up;
            }
        }
        edges
    }

    /// Lineages of `0` and `gap`, traced jointly.
    pub fn mrca_pair(&self, gap: u64) -> MrcaSample {
        let floor = self.floor();
        let mut a = 0i64;
        let mut b = gap as i64;
        loop {
            if a == b {
                return MrcaSample {
                    gap,
                    depth: Some((-a) as u64),
                };
            }
            let top = if b > a { &mut b } else { &mut a };
            *top = self.parent(*top);
            if *top < floor {
                return MrcaSample { gap, depth: None };
            }
        }
    }
}

impl Genealogy for LineageWorld {
    type Site = i64;

    #[inline]
    fn parent(&self, site: i64) -> i64 {
        site.saturating_sub(self.increment(site) as i64)
    }

    #[inline]
    fn time(&self, site: i64) -> i64 {
        site
    }
}

/// Partition of a window induced by the traced lineages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPartition {
    n: usize,
    component_id: Vec<u32>,
    component_sizes: Vec<u32>,
    unresolved_lineages: usize,
    coalescence_depths: Vec<i64>,
}

impl ComponentPartition {
    pub(crate) fn from_sweep(mut sweep: Sweep) -> Self {
        let n = sweep.sets.parent.len();
        let mut label = vec![u32::MAX; n];
        let mut component_id = Vec::with_capacity(n);
        let mut component_sizes: Vec<u32> = Vec::new();
        for k in 0..n as u32 {
            let root = sweep.sets.find(k) as usize;
            if label[root] == u32::MAX {
                label[root] = component_sizes.len() as u32;
                component_sizes.push(0);
            }
            component_id.push(label[root]);
            component_sizes[label[root] as usize] += 1;
        }
        ComponentPartition {
            n,
            component_id,
            component_sizes,
            unresolved_lineages: sweep.unresolved,
            coalescence_depths: sweep.merge_times.iter().map(|t| -t).collect(),
        }
    }

    /// Builds a partition from explicit labels (used for oracles and tests).
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut sets = UnionFind::new(labels.len());
        let mut first: std::collections::HashMap<u32, u32> = Default::default();
        for (k, &l) in labels.iter().enumerate() {
            let r = *first.entry(l).or_insert(k as u32);
            sets.union(r, k as u32);
        }
        Self::from_sweep(Sweep {
            sets,
            unresolved: 0,
            merge_times: Vec::new(),
            steps: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Component label of window position `k` (0-based).
    pub fn component_of(&self, k: usize) -> u32 {
        self.component_id[k]
    }

    pub fn labels(&self) -> &[u32] {
        &self.component_id
    }

    pub fn sizes(&self) -> &[u32] {
        &self.component_sizes
    }

    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn unresolved_lineages(&self) -> usize {
        self.unresolved_lineages
    }

    /// True when no lineage was stopped by the cutoff.
    pub fn is_exact(&self) -> bool {
        self.unresolved_lineages == 0
    }

    pub fn coalescence_depths(&self) -> &[i64] {
        &self.coalescence_depths
    }

    pub fn same_component(&self, a: usize, b: usize) -> bool {
        self.component_id[a] == self.component_id[b]
    }

    /// `S_k = sum_c |c|^k`.
    pub fn moment(&self, k: i32) -> f64 {
        self.component_sizes.iter().map(|&s| (s as f64).powi(k)).sum()
    }

    /// Histogram `size -> count` in increasing size order.
    pub fn size_histogram(&self) -> Vec<(u32, u32)> {
        let mut h: BTreeMap<u32, u32> = BTreeMap::new();
        for &s in &self.component_sizes {
            *h.entry(s).or_default() += 1;
        }
        h.into_iter().collect()
    }

    /// Members of every component, by label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.component_sizes.len()];
        for (k, &c) in self.component_id.iter().enumerate() {
            out[c as usize].push(k);
        }
        out
    }
}

/// Depth of the most recent common ancestor of `0` and `gap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrcaSample {
    pub gap: u64,
    /// `-(first common site)` when the lineages met above the cutoff.
    pub depth: Option<u64>,
}

/// Components of `{1, ..., n}` for one replica.
pub fn components_on_window(
    law: IncrementLaw,
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
    Ok(LineageWorld::new(law, seed, replica, cutoff).components_on_window(n))
}

/// MRCA depth of `0` and `gap` for one replica.
pub fn mrca_pair(law: IncrementLaw, gap: u64, cutoff: u64, seed: u64, replica: u64) -> Result<MrcaSample> {
    if gap == 0 {
        return domain("gap must be >= 1");
    }
    if cutoff < gap {
        return domain(format!("cutoff {cutoff} must be >= gap {gap}"));
    }
    Ok(LineageWorld::new(law, seed, replica, cutoff).mrca_pair(gap))
}

/// Number of sites in `[-depth, gap]` shared by two independent renewal
/// lineages started at `0` and `gap`.
pub fn decoupled_overlap(law: IncrementLaw, gap: u64, depth: u64, seed: u64, replica: u64) -> Result<u64> {
    if depth == 0 {
        return domain("depth must be >= 1");
    }
    let mut first = StreamKey::new(seed, StreamKind::DecoupledFirst, replica).stream();
    let mut second = StreamKey::new(seed, StreamKind::DecoupledSecond, replica).stream();
    let floor = -(depth as i64);
    let mut a = 0i64;
    let mut b = gap as i64;
    let mut shared = 0;
    let step = |pos: i64, rng: &mut crate::rng::CounterRng| pos.saturating_sub(law.sample_unchecked(rng.uniform()) as i64);
    while a >= floor && b >= floor {
        if a == b {
            shared += 1;
            a = step(a, &mut first);
            b = step(b, &mut second);
        } else if a > b {
            a = step(a, &mut first);
        } else {
            b = step(b, &mut second);
        }
    }
    Ok(shared)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law() -> IncrementLaw {
        IncrementLaw::pure(0.39).unwrap()
    }

    /// Brute-force partition: follow each lineage step by step and compare
    /// pairwise visited-site sets above the floor.
    fn brute_force(world: &LineageWorld, n: usize) -> Vec<Vec<bool>> {
        let floor = world.floor();
        let paths: Vec<std::collections::HashSet<i64>> = (1..=n as i64)
            .map(|s| {
                let mut set = std::collections::HashSet::new();
                let mut x = s;
                while x >= floor {
                    set.insert(x);
                    x = world.parent(x);
                }
                set
            })
            .collect();
        (0..n)
            .map(|a| (0..n).map(|b| !paths[a].is_disjoint(&paths[b])).collect())
            .collect()
    }

    #[test]
    fn sweep_agrees_with_brute_force() {
        for replica in 0..20 {
            let world = LineageWorld::new(law(), 5, replica, 5000);
            let part = world.components_on_window(60);
            let truth = brute_force(&world, 60);
            for a in 0..60 {
                for b in 0..60 {
                    assert_eq!(part.same_component(a, b), truth[a][b], "replica {replica} ({a},{b})");
                }
            }
            assert_eq!(part.sizes().iter().sum::<u32>(), 60);
        }
    }

    #[test]
    fn parents_are_strictly_lower() {
        let world = LineageWorld::new(law(), 1, 0, 100);
        for s in -1000..1000 {
            assert!(world.parent(s) < s);
            assert_eq!(world.parent(s), world.parent(s));
        }
    }

    #[test]
    fn single_site_window() {
        let p = components_on_window(law(), 1, 10, 3, 0).unwrap();
        assert_eq!(p.sizes(), &[1]);
        assert!(p.unresolved_lineages() <= 1);
        assert!(components_on_window(law(), 10, 5, 3, 0).is_err());
        assert!(components_on_window(law(), 0, 5, 3, 0).is_err());
    }

    #[test]
    fn mrca_when_first_step_hits_origin() {
        // find a replica in which R_1 = 1: the lineage of 1 steps onto 0
        let replica = (0..1000)
            .find(|&r| LineageWorld::new(law(), 9, r, 100).increment(1) == 1)
            .unwrap();
        let s = mrca_pair(law(), 1, 100, 9, replica).unwrap();
        assert_eq!(s.depth, Some(0));
    }

    #[test]
    fn mrca_matches_window_partition() {
        for replica in 0..200 {
            let world = LineageWorld::new(law(), 21, replica, 2000);
            let m = world.mrca_pair(7);
            let p = world.components_of(&[0, 7]);
            assert_eq!(m.depth.is_some(), p.same_component(0, 1));
            if let Some(d) = m.depth {
                assert_eq!(p.coalescence_depths(), &[d as i64]);
            }
        }
    }

    #[test]
    fn decoupled_overlap_edge_cases() {
        for r in 0..50 {
            assert!(decoupled_overlap(law(), 0, 100, 2, r).unwrap() >= 1);
            // gap beyond depth: counts stay well defined
            let _ = decoupled_overlap(law(), 500, 100, 2, r).unwrap();
        }
        assert!(decoupled_overlap(law(), 3, 0, 2, 0).is_err());
    }

    #[test]
    fn deterministic_and_cutoff_monotone() {
        let world = LineageWorld::new(law(), 77, 3, 1000);
        assert_eq!(world.components_on_window(300), world.components_on_window(300));
        let deep = world.with_cutoff(100_000).components_on_window(300);
        let shallow = world.components_on_window(300);
        for a in 0..300 {
            for b in 0..300 {
                if shallow.same_component(a, b) {
                    assert!(deep.same_component(a, b));
                }
            }
        }
        assert!(deep.unresolved_lineages() <= shallow.unresolved_lineages());
    }

    #[test]
    fn edges_reach_every_window_site() {
        let world = LineageWorld::new(law(), 2, 0, 10_000);
        let edges = world.ancestral_edges(100);
        for s in 1..=100 {
            assert!(edges.iter().any(|e| e.0 == s) || world.parent(s) < world.floor());
        }
        for &(c, p) in &edges {
            assert_eq!(world.parent(c), p);
        }
    }

    #[test]
    fn labels_round_trip() {
        let p = ComponentPartition::from_labels(&[4, 4, 1, 4, 7, 1]);
        assert_eq!(p.labels(), &[0, 0, 1, 0, 2, 1]);
        assert_eq!(p.sizes(), &[3, 2, 1]);
        assert_eq!(p.moment(2), 14.0);
        assert_eq!(p.size_histogram(), vec![(1, 1), (2, 1), (3, 1)]);
    }
}
