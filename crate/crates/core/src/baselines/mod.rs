//! Problem-agnostic scenario selectors and the ranking adapter.
//!
//! Selectors return exactly `k` distinct scenario indices. Random and
//! MaxSum come with a full ordering whose prefixes are their selections.

mod kmeans;
mod ranking;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rng::substream;

pub use kmeans::{kmeans, select_kmeans_rows, KmeansFit};
pub use ranking::{read_rankings, top_k_from_ranking, write_rankings, Ranking, RankingBody};

pub(crate) fn check_budget(k: usize, num_scenarios: usize) -> Result<()> {
    if k == 0 || k > num_scenarios {
        return Err(Error::param(format!("budget k must be in 1..={num_scenarios}, got {k}")));
    }
    Ok(())
}

/// Uniformly random permutation of the scenarios, deterministic in `seed`.
pub fn random_order(num_scenarios: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..num_scenarios).collect();
    order.shuffle(&mut substream(seed, "random_selection"));
    order
}

/// `k` scenarios sampled uniformly without replacement.
pub fn select_random(inst: &Instance, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_budget(k, inst.num_scenarios())?;
    let mut order = random_order(inst.num_scenarios(), seed);
    order.truncate(k);
    Ok(order)
}

/// Scenarios by descending coefficient sum; ties go to the smallest index.
pub fn maxsum_order(rows: &[Vec<f64>]) -> Vec<usize> {
    let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    order
}

pub fn select_maxsum(inst: &Instance, k: usize) -> Result<Vec<usize>> {
    check_budget(k, inst.num_scenarios())?;
    let mut order = maxsum_order(inst.scenarios.rows());
    order.truncate(k);
    Ok(order)
}

/// Nearest original scenario to each of `k` k-means centroids.
pub fn select_kmeans(inst: &Instance, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_budget(k, inst.num_scenarios())?;
    Ok(select_kmeans_rows(inst.scenarios.rows(), k, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, DistributionSpec, ProblemClass, ScenarioSet};
    use proptest::prelude::*;

    fn with_rows(rows: Vec<Vec<f64>>) -> Instance {
        let n = rows[0].len();
        let mut inst = generate_instance(ProblemClass::Selection, n, None, rows.len(), &DistributionSpec::Uniform, 1).unwrap();
        inst.scenarios = ScenarioSet::new(rows).unwrap();
        inst
    }

    #[test]
    fn full_budget_returns_everything() {
        let inst = generate_instance(ProblemClass::Selection, 6, None, 7, &DistributionSpec::Uniform, 3).unwrap();
        let all: Vec<usize> = (0..7).collect();
        for set in [
            select_random(&inst, 7, 1).unwrap(),
            select_maxsum(&inst, 7).unwrap(),
            select_kmeans(&inst, 7, 1).unwrap(),
        ] {
            let mut set = set;
            set.sort_unstable();
            assert_eq!(set, all);
        }
    }

    #[test]
    fn budget_errors() {
        let inst = generate_instance(ProblemClass::Selection, 4, None, 3, &DistributionSpec::Uniform, 3).unwrap();
        assert!(matches!(select_random(&inst, 4, 0), Err(Error::Param(_))));
        assert!(select_maxsum(&inst, 0).is_err());
        assert!(select_kmeans(&inst, 5, 0).is_err());
    }

    #[test]
    fn random_is_seed_deterministic() {
        let inst = generate_instance(ProblemClass::Selection, 4, None, 30, &DistributionSpec::Uniform, 3).unwrap();
        assert_eq!(select_random(&inst, 5, 9).unwrap(), select_random(&inst, 5, 9).unwrap());
        assert_ne!(random_order(30, 9), random_order(30, 10));
    }

    #[test]
    fn random_frequencies_within_three_sigma() {
        let draws = 10_000u64;
        let mut counts = [0u64; 5];
        for seed in 0..draws {
            counts[random_order(5, seed)[0]] += 1;
        }
        let p = 0.2;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn maxsum_ties_and_dominance() {
        let same = with_rows(vec![vec![3.0, 4.0]; 5]);
        assert_eq!(select_maxsum(&same, 3).unwrap(), vec![0, 1, 2]);
        let dom = with_rows(vec![vec![3.0, 4.0], vec![5.0, 6.0], vec![1.0, 9.0]]);
        assert_eq!(select_maxsum(&dom, 1).unwrap(), vec![1]);
    }

    #[test]
    fn maxsum_scale_invariant() {
        let inst = generate_instance(ProblemClass::Selection, 10, None, 25, &DistributionSpec::Uniform, 8).unwrap();
        let scaled = Instance {
            scenarios: inst.scenarios.scaled(3.7),
            ..inst.clone()
        };
        for k in 1..=25 {
            let mut a = select_maxsum(&inst, k).unwrap();
            let mut b = select_maxsum(&scaled, k).unwrap();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn selectors_return_k_distinct_indices(s in 1usize..12, k_raw in 0usize..12, seed in any::<u64>()) {
            let k = k_raw % s + 1;
            let inst = generate_instance(ProblemClass::Selection, 4, None, s, &DistributionSpec::Uniform, seed).unwrap();
            for set in [
                select_random(&inst, k, seed).unwrap(),
                select_maxsum(&inst, k).unwrap(),
                select_kmeans(&inst, k, seed).unwrap(),
            ] {
                prop_assert_eq!(set.len(), k);
                let mut sorted = set.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), k);
                prop_assert!(set.iter().all(|&j| j < s));
            }
        }
    }
}
