//! Divisive hierarchical K-means and ensemble member generation.
//!
//! A k-cluster partition grows to k+1 by picking a cluster, locating its two
//! mutually furthest members `p` and `q`, seeding a 2-means at the points
//! one and two thirds of the way from `p` to `q`, and polishing the k+1
//! resulting centroids with a global K-means. Repeating from two clusters
//! up to `k + 10` gives a chain of partitions; ensemble members are drawn
//! from that chain without replacement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{kmeans, lloyd, LloydParams};
use crate::model::{
    centroid_of, partition_objective, sse_of, squared_distance, Dataset, Partition,
};
use crate::orclus::ProjectedClustering;

/// How many cluster counts past the target the chain explores.
pub const CHAIN_EXTENSION: usize = 10;

/// Which cluster a divisive step splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitRule {
    #[default]
    LargestSse,
    LargestSize,
}

/// Where the divisive chain starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainStart {
    /// A 2-cluster split of the whole dataset, seeded from the two most
    /// separated projected-clustering centroids.
    #[default]
    WholeData,
    /// The projected-clustering partition itself, so the chain covers
    /// `k..=k+10`.
    Orclus,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HkOptions {
    pub rule: SplitRule,
    pub start: ChainStart,
    pub lloyd: LloydParams,
}

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    /// 1-based position in the sampled ensemble.
    pub id: usize,
    pub k_value: usize,
    pub partition: Partition,
    pub objective: f64,
}

/// The two members of `members` furthest apart, first pair in index order
/// on ties. `None` when fewer than two distinct points exist.
pub fn furthest_pair(dataset: &Dataset, members: &[usize]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut best_d = 0.0;
    for (a, &i) in members.iter().enumerate() {
        let pi = dataset.point(i);
        for &j in &members[a + 1..] {
            let d = squared_distance(pi, dataset.point(j));
            if d > best_d {
                best_d = d;
                best = Some((i, j));
            }
        }
    }
    best
}

/// Points one and two thirds of the way from `p` to `q`.
pub fn thirds_seeds(p: &[f64], q: &[f64]) -> [Vec<f64>; 2] {
    let at = |t: f64| p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect();
    [at(1.0 / 3.0), at(2.0 / 3.0)]
}

/// Splits `members` in two with a 2-means seeded from the furthest-pair
/// thirds. `None` when the members hold fewer than two distinct points.
pub fn bisect(
    dataset: &Dataset,
    members: &[usize],
    params: LloydParams,
) -> Result<Option<[Vec<usize>; 2]>> {
    let Some((p, q)) = furthest_pair(dataset, members) else {
        return Ok(None);
    };
    let seeds = thirds_seeds(dataset.point(p), dataset.point(q));
    let fit = lloyd(dataset, members, &seeds, params)?;
    let mut groups = fit.groups.into_iter();
    let a = groups.next().expect("two groups");
    let b = groups.next().expect("two groups");
    Ok(Some([a, b]))
}

/// Grows `partition` by one cluster.
pub fn divisive_step(partition: &Partition, dataset: &Dataset, options: &HkOptions) -> Result<Partition> {
    let mut target: Option<(usize, f64)> = None;
    for (c, cluster) in partition.clusters().iter().enumerate() {
        if furthest_pair(dataset, cluster.members()).is_none() {
            continue;
        }
        let score = match options.rule {
            SplitRule::LargestSse => sse_of(dataset, cluster.members(), cluster.centroid())?,
            SplitRule::LargestSize => cluster.len() as f64,
        };
        if target.is_none_or(|(_, best)| score > best) {
            target = Some((c, score));
        }
    }
    let (chosen, _) = target.ok_or(Error::Unsplittable)?;
    let [a, b] = bisect(dataset, partition.clusters()[chosen].members(), options.lloyd)?
        .ok_or(Error::Unsplittable)?;

    let mut centers = partition.centroids();
    centers[chosen] = centroid_of(dataset, &a)?;
    centers.push(centroid_of(dataset, &b)?);

    let before = partition_objective(partition, dataset)?;
    let grown = kmeans(dataset, &centers, options.lloyd.max_iters, options.lloyd.tol)?;
    if grown.final_objective > before + 1e-9 * before.max(1.0) {
        return Err(Error::Invariant(format!(
            "divisive step raised the objective from {before} to {}",
            grown.final_objective
        )));
    }
    Ok(grown.partition)
}

/// Initial 2-cluster split of the whole dataset. The two most separated
/// projected-clustering centroids stand in for the furthest pair.
fn chain_root(base: &ProjectedClustering, dataset: &Dataset, options: &HkOptions) -> Result<Partition> {
    let centroids = base.partition.centroids();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            let d = squared_distance(&centroids[i], &centroids[j]);
            if d > best.map_or(0.0, |b| b.2) {
                best = Some((i, j, d));
            }
        }
    }
    let (p, q) = match best {
        Some((i, j, _)) => (centroids[i].clone(), centroids[j].clone()),
        None => {
            let all: Vec<usize> = (0..dataset.len()).collect();
            let (i, j) = furthest_pair(dataset, &all).ok_or(Error::Unsplittable)?;
            (dataset.point(i).to_vec(), dataset.point(j).to_vec())
        }
    };
    let seeds = thirds_seeds(&p, &q);
    Ok(kmeans(dataset, &seeds, options.lloyd.max_iters, options.lloyd.tol)?.partition)
}

/// The divisive chain: one partition per cluster count, from the chain
/// start up to `k + 10` or until nothing can be split.
pub fn divisive_chain(
    base: &ProjectedClustering,
    dataset: &Dataset,
    k: usize,
    options: &HkOptions,
) -> Result<Vec<Partition>> {
    let k_max = k + CHAIN_EXTENSION;
    let first = match options.start {
        ChainStart::WholeData => match chain_root(base, dataset, options) {
            Ok(p) => p,
            Err(Error::Unsplittable) => return Ok(Vec::new()),
            Err(e) => return Err(e),
        },
        ChainStart::Orclus => {
            let centers = base.partition.centroids();
            kmeans(dataset, &centers, options.lloyd.max_iters, options.lloyd.tol)?.partition
        }
    };
    let mut chain = vec![first];
    while chain.last().expect("nonempty").k() < k_max {
        match divisive_step(chain.last().expect("nonempty"), dataset, options) {
            Ok(next) => chain.push(next),
            Err(Error::Unsplittable) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(chain)
}

/// Samples `ensemble_size` distinct partitions from the divisive chain.
pub fn generate_members(
    base: &ProjectedClustering,
    dataset: &Dataset,
    k: usize,
    ensemble_size: usize,
    rng: &mut impl Rng,
    options: &HkOptions,
) -> Result<Vec<EnsembleMember>> {
    if ensemble_size == 0 {
        return Err(Error::InvalidConfig("ensemble size must be at least 1".into()));
    }
    let chain = divisive_chain(base, dataset, k, options)?;
    if ensemble_size > chain.len() {
        return Err(Error::InsufficientMembers {
            available: chain.len(),
            requested: ensemble_size,
        });
    }
    rand::seq::index::sample(rng, chain.len(), ensemble_size)
        .into_iter()
        .enumerate()
        .map(|(slot, idx)| {
            let partition = chain[idx].clone();
            Ok(EnsembleMember {
                id: slot + 1,
                k_value: partition.k(),
                objective: partition_objective(&partition, dataset)?,
                partition,
            })
        })
        .collect()
}
