//! External quality metrics against ground-truth labels.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Dataset, Partition};

fn check_len(partition: &Partition, n_labels: usize) -> Result<()> {
    if partition.n_points() != n_labels {
        return Err(Error::InvalidData(format!(
            "{n_labels} labels for a partition of {} points",
            partition.n_points()
        )));
    }
    Ok(())
}

/// Fraction of points that carry their cluster's majority label.
pub fn purity<L: Eq + std::hash::Hash>(partition: &Partition, labels: &[L]) -> Result<f64> {
    check_len(partition, labels.len())?;
    let mut hits = 0usize;
    for c in partition.clusters() {
        let mut counts: HashMap<&L, usize> = HashMap::new();
        for &m in c.members() {
            *counts.entry(&labels[m]).or_default() += 1;
        }
        hits += counts.values().copied().max().unwrap_or(0);
    }
    Ok(hits as f64 / partition.n_points() as f64)
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Rand index between two labelings of the same points: the fraction of
/// point pairs on which they agree (together in both or apart in both).
pub fn rand_index_labels<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Eq + std::hash::Hash,
    B: Eq + std::hash::Hash,
{
    if a.len() != b.len() {
        return Err(Error::InvalidData(format!("labelings of length {} and {}", a.len(), b.len())));
    }
    let n = a.len() as u64;
    if n < 2 {
        return Ok(1.0);
    }
    let mut joint: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let both: u64 = joint.values().map(|&c| pairs(c)).sum();
    let in_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let in_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let agree = total + 2 * both - in_a - in_b;
    Ok(agree as f64 / total as f64)
}

pub fn rand_index<L: Eq + std::hash::Hash>(partition: &Partition, labels: &[L]) -> Result<f64> {
    check_len(partition, labels.len())?;
    rand_index_labels(&partition.assignments(), labels)
}

/// Purity and Rand index against the dataset's own labels.
pub fn score(partition: &Partition, dataset: &Dataset) -> Result<(f64, f64)> {
    let labels = dataset.labels().ok_or(Error::MissingLabels)?;
    Ok((purity(partition, labels)?, rand_index(partition, labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(n: usize) -> Dataset {
        Dataset::new("e", (0..n).map(|i| vec![i as f64]).collect()).unwrap()
    }

    fn brute_rand(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let mut agree = 0;
        let mut total = 0;
        for i in 0..n {
            for j in i + 1..n {
                total += 1;
                if (a[i] == a[j]) == (b[i] == b[j]) {
                    agree += 1;
                }
            }
        }
        agree as f64 / total as f64
    }

    fn brute_purity(a: &[usize], labels: &[usize]) -> f64 {
        let k = a.iter().max().unwrap() + 1;
        let c = labels.iter().max().unwrap() + 1;
        let mut hits = 0;
        for cluster in 0..k {
            hits += (0..c)
                .map(|class| (0..a.len()).filter(|&i| a[i] == cluster && labels[i] == class).count())
                .max()
                .unwrap();
        }
        hits as f64 / a.len() as f64
    }

    fn dense(a: &[usize]) -> Vec<usize> {
        let mut map = HashMap::new();
        a.iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert(next)
            })
            .collect()
    }

    #[test]
    fn exact_match() {
        let d = ds(6);
        let labels = ["a", "a", "b", "b", "c", "c"];
        let p = Partition::from_assignments(&[0, 0, 1, 1, 2, 2], &d).unwrap();
        assert_eq!(purity(&p, &labels).unwrap(), 1.0);
        assert_eq!(rand_index(&p, &labels).unwrap(), 1.0);
    }

    #[test]
    fn single_cluster_purity_is_majority_fraction() {
        let d = ds(5);
        let p = Partition::from_assignments(&[0; 5], &d).unwrap();
        assert_eq!(purity(&p, &["x", "y", "x", "x", "y"]).unwrap(), 0.6);
    }

    #[test]
    fn two_points_apart_versus_together() {
        let d = ds(2);
        let p = Partition::from_assignments(&[0, 1], &d).unwrap();
        assert_eq!(rand_index(&p, &[7, 7]).unwrap(), 0.0);
    }

    #[test]
    fn missing_labels_error() {
        let d = ds(3);
        let p = Partition::from_assignments(&[0, 0, 1], &d).unwrap();
        assert!(matches!(score(&p, &d), Err(Error::MissingLabels)));
        assert!(purity(&p, &[1, 2]).is_err());
    }

    proptest! {
        #[test]
        fn purity_matches_majority_count_oracle(
            a in prop::collection::vec(0usize..4, 12),
            labels in prop::collection::vec(0usize..3, 12),
        ) {
            let a = dense(&a);
            let p = Partition::from_assignments(&a, &ds(12)).unwrap();
            let got = purity(&p, &labels).unwrap();
            prop_assert!((got - brute_purity(&a, &labels)).abs() < 1e-15);
            let majority = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).max().unwrap();
            prop_assert!(got >= majority as f64 / 12.0);
        }

        #[test]
        fn rand_matches_pair_count_oracle(
            a in prop::collection::vec(0usize..4, 10),
            b in prop::collection::vec(0usize..4, 10),
        ) {
            let a = dense(&a);
            let p = Partition::from_assignments(&a, &ds(10)).unwrap();
            let got = rand_index(&p, &b).unwrap();
            prop_assert!((got - brute_rand(&a, &b)).abs() < 1e-15);
            prop_assert_eq!(rand_index_labels(&a, &b).unwrap(), rand_index_labels(&b, &a).unwrap());
        }

        #[test]
        fn singletons_are_pure(labels in prop::collection::vec(0usize..3, 1..15)) {
            let n = labels.len();
            let p = Partition::from_assignments(&(0..n).collect::<Vec<_>>(), &ds(n)).unwrap();
            prop_assert_eq!(purity(&p, &labels).unwrap(), 1.0);
        }
    }
}
