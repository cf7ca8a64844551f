use powerurn::diagnostics::{ks_distance, step_coefficients};
use powerurn::lineages::{ComponentPartition, LineageWorld};
use powerurn::paths::{prefix_sums, ColouringLaw};
use powerurn::{IncrementLaw, RenewalMode, RenewalTable};
use proptest::prelude::*;

fn any_law() -> impl Strategy<Value = IncrementLaw> {
    (0.05f64..0.49, prop::option::of(0.0f64..3.0)).prop_map(|(a, b)| match b {
        None => IncrementLaw::pure(a).unwrap(),
        Some(beta) => IncrementLaw::log_perturbed(a, beta).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partitions_are_consistent(law in any_law(), n in 1usize..300, seed in any::<u64>(), mult in 1u64..5000) {
        let p = LineageWorld::new(law, seed, 0, n as u64 * mult).components_on_window(n);
        prop_assert_eq!(p.n(), n);
        prop_assert_eq!(p.sizes().iter().map(|&s| s as usize).sum::<usize>(), n);
        // labels appear in order of first use
        let mut next = 0;
        for &l in p.labels() {
            prop_assert!(l <= next);
            if l == next {
                next += 1;
            }
        }
        prop_assert_eq!(next as usize, p.component_count());
        prop_assert!(p.unresolved_lineages() <= n);
        let relabelled = ComponentPartition::from_labels(p.labels());
        prop_assert_eq!(relabelled.labels(), p.labels());
        prop_assert!((p.moment(1) - n as f64).abs() < 1e-9);
    }

    #[test]
    fn deeper_cutoffs_only_merge(law in any_law(), n in 2usize..200, seed in any::<u64>()) {
        let shallow = LineageWorld::new(law, seed, 3, n as u64 * 4);
        let deep = shallow.with_cutoff(n as u64 * 4096);
        let (a, b) = (shallow.components_on_window(n), deep.components_on_window(n));
        for i in 0..n {
            for j in 0..i {
                prop_assert!(!a.same_component(i, j) || b.same_component(i, j));
            }
        }
    }

    #[test]
    fn renewal_weights_are_probabilities(law in any_law()) {
        let t = RenewalTable::compute(law, 512, RenewalMode::Fast).unwrap();
        let naive = RenewalTable::compute(law, 512, RenewalMode::Naive).unwrap();
        for (f, s) in t.weights().iter().zip(naive.weights()) {
            prop_assert!(*f > 0.0 && *f <= 1.0);
            prop_assert!((f - s).abs() <= 1e-12 * s);
        }
    }

    #[test]
    fn pmf_sums_to_one_minus_tail(law in any_law(), n in 1u64..5000) {
        let partial: f64 = (1..=n).map(|k| law.pmf(k).unwrap()).sum();
        prop_assert!((partial - (1.0 - law.tail(n + 1))).abs() < 1e-12);
    }

    #[test]
    fn prefix_sums_of_one_colour(n in 1usize..100, y in -3.0f64..3.0) {
        let p = ComponentPartition::from_labels(&vec![0; n]);
        let s = prefix_sums(&p, &[y]);
        for (k, v) in s.iter().enumerate() {
            prop_assert!((v - k as f64 * y).abs() < 1e-12);
        }
    }

    #[test]
    fn colourings_are_centred(p in 0.01f64..0.99, a in -5.0f64..-0.1, b in 0.1f64..5.0, w in 0.05f64..0.95) {
        for law in [ColouringLaw::rademacher(p).unwrap(), ColouringLaw::two_point(a, b, w).unwrap()] {
            let mean = law.sample(0.0) * weight_high(&law) + law.sample(1.0 - 1e-15) * (1.0 - weight_high(&law));
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!(law.moments().second > 0.0);
        }
    }

    #[test]
    fn ks_distance_is_a_distance(xs in prop::collection::vec(-10.0f64..10.0, 1..200)) {
        let d = ks_distance(&xs, |x| 1.0 / (1.0 + (-x).exp())).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64);
    }

    #[test]
    fn step_coefficients_fill_the_window(m in 1usize..500, split in 0.01f64..0.99) {
        let a = step_coefficients(m, &[split, 1.0], &[2.0, -1.0]).unwrap();
        prop_assert_eq!(a.len(), m);
        prop_assert_eq!(a.iter().filter(|&&v| v == 2.0).count(), (split * m as f64).floor() as usize);
    }
}

fn weight_high(law: &ColouringLaw) -> f64 {
    match *law {
        ColouringLaw::CenteredRademacher { p } => p,
        ColouringLaw::CenteredTwoPoint { w, .. } => w,
        ColouringLaw::CenteredUniform { .. } => unreachable!(),
    }
}
