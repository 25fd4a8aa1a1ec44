use csaqr::subsets::{count_combinations, rank_combination, sample_subsets, unrank_combination};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn pascal_rule_up_to_thirty() {
    for total in 1..=30usize {
        for k in 1..total {
            let lhs = count_combinations(total, k).unwrap();
            let rhs = count_combinations(total - 1, k - 1).unwrap()
                + count_combinations(total - 1, k).unwrap();
            assert_eq!(lhs, rhs, "C({total},{k})");
        }
    }
}

#[test]
fn unrank_rank_round_trip_up_to_twelve() {
    for total in 1..=12usize {
        for k in 0..=total {
            let count = count_combinations(total, k).unwrap().to_usize().unwrap();
            let mut prev: Option<Vec<usize>> = None;
            for r in 0..count {
                let s = unrank_combination(total, k, &BigUint::from(r)).unwrap();
                assert_eq!(s.members.len(), k);
                assert!(s.members.windows(2).all(|w| w[0] < w[1]));
                assert_eq!(
                    rank_combination(total, &s.members).unwrap(),
                    BigUint::from(r)
                );
                if let Some(p) = &prev {
                    // Colexicographic: compare reversed member lists.
                    assert!(p.iter().rev().lt(s.members.iter().rev()));
                }
                prev = Some(s.members);
            }
        }
    }
}

#[test]
fn small_plans_enumerate_everything() {
    let plan = sample_subsets(3, 2, 100, 1).unwrap();
    assert!(!plan.capped);
    assert_eq!(plan.len(), 3);
    let capped = sample_subsets(15, 7, 100, 1).unwrap();
    assert!(capped.capped);
    assert_eq!(capped.len(), 100);
    assert_eq!(capped, sample_subsets(15, 7, 100, 1).unwrap());
    assert_ne!(
        capped.selected,
        sample_subsets(15, 7, 100, 2).unwrap().selected
    );
    let mut seen = capped.selected.clone();
    seen.dedup();
    assert_eq!(seen.len(), 100);
}

#[test]
fn capped_sampling_is_uniform() {
    let (total, k, cap, seeds) = (8usize, 4usize, 10usize, 50_000u64);
    let count = 70usize;
    let mut freq = vec![0u64; count];
    for seed in 0..seeds {
        for s in sample_subsets(total, k, cap, seed).unwrap().selected {
            freq[rank_combination(total, &s.members)
                .unwrap()
                .to_usize()
                .unwrap()] += 1;
        }
    }
    let p = cap as f64 / count as f64;
    let expected = seeds as f64 * p;
    let stat: f64 = freq
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / (expected * (1.0 - p)))
        .sum();
    let crit = ChiSquared::new((count - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(stat < crit, "chi-square {stat} >= {crit}");
}

proptest! {
    #[test]
    fn plans_are_sorted_distinct_and_valid(total in 1usize..40, k_frac in 0.0f64..1.0, cap in 1usize..60, seed in any::<u64>()) {
        let k = 1 + ((total - 1) as f64 * k_frac) as usize;
        let plan = sample_subsets(total, k, cap, seed).unwrap();
        let ranks: Vec<BigUint> = plan.selected.iter().map(|s| rank_combination(total, &s.members).unwrap()).collect();
        prop_assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(plan.capped, plan.total > BigUint::from(cap));
        if plan.capped {
            prop_assert_eq!(plan.len(), cap);
        } else {
            prop_assert_eq!(BigUint::from(plan.len()), plan.total.clone());
        }
    }
}
