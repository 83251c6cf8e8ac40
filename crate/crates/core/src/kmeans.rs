//! Lloyd-style K-means. Used directly as a baseline and as the inner
//! primitive for divisive splitting and the split stage.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{centroid_of, squared_distance, Cluster, Dataset, Partition};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydParams {
    pub max_iters: usize,
    /// Stop once the relative objective improvement drops to this level.
    pub tol: f64,
}

impl Default for LloydParams {
    fn default() -> Self {
        LloydParams {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    /// Number of assignment/update rounds that changed the clustering.
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
    /// Objective after every half step: assignment against the previous
    /// centers, then the centroid update.
    pub objective_trace: Vec<f64>,
}

/// Result of Lloyd iterations restricted to a subset of the dataset.
#[derive(Debug, Clone)]
pub(crate) struct SubsetFit {
    /// Point ids per cluster, ascending. Never empty.
    pub groups: Vec<Vec<usize>>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

impl SubsetFit {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("at least one iteration")
    }
}

/// K-means over the whole dataset from explicit starting centers.
pub fn kmeans(
    dataset: &Dataset,
    initial_centers: &[Vec<f64>],
    max_iters: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let members: Vec<usize> = (0..dataset.len()).collect();
    let fit = lloyd(dataset, &members, initial_centers, LloydParams { max_iters, tol })?;
    let clusters = fit
        .groups
        .iter()
        .zip(&fit.centers)
        .map(|(g, c)| Cluster::with_center(g.clone(), c.clone()))
        .collect::<Result<Vec<_>>>()?;
    let partition = Partition::new(clusters, dataset.len())?;
    Ok(KMeansResult {
        partition,
        iterations: fit.iterations,
        final_objective: fit.objective(),
        converged: fit.converged,
        objective_trace: fit.trace,
    })
}

/// Nearest center by squared Euclidean distance; lowest index wins ties.
#[inline]
pub(crate) fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub(crate) fn lloyd(
    dataset: &Dataset,
    members: &[usize],
    initial_centers: &[Vec<f64>],
    params: LloydParams,
) -> Result<SubsetFit> {
    let k = initial_centers.len();
    if k == 0 {
        return Err(Error::Empty("k-means needs at least one initial center"));
    }
    if let Some(c) = initial_centers.iter().find(|c| c.len() != dataset.dim()) {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            found: c.len(),
        });
    }
    if members.is_empty() {
        return Err(Error::Empty("k-means over no points"));
    }
    if k > members.len() {
        return Err(Error::InvalidConfig(format!(
            "{k} centers for {} points",
            members.len()
        )));
    }
    for &m in members {
        dataset.check_index(m)?;
    }

    let position: HashMap<usize, usize> =
        members.iter().enumerate().map(|(pos, &m)| (m, pos)).collect();
    let mut centers = initial_centers.to_vec();
    let mut labels: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;

    for round in 1..=params.max_iters.max(1) {
        let assigned: Vec<(usize, f64)> = members
            .par_iter()
            .map(|&m| nearest(dataset.point(m), &centers))
            .collect();
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        if round > 1 && new_labels == labels {
            converged = true;
            break;
        }
        labels = new_labels;
        let assigned_objective: f64 = assigned.iter().map(|a| a.1).sum();
        if let Some(prev) = previous {
            debug_assert!(
                assigned_objective <= prev + 1e-9 * prev.max(1.0),
                "assignment raised the objective: {prev} -> {assigned_objective}"
            );
        }
        trace.push(assigned_objective);

        groups = group_labels(members, &labels, k);
        for (point, cluster) in repair_empty(dataset, &mut groups)? {
            labels[position[&point]] = cluster;
        }
        for (center, g) in centers.iter_mut().zip(&groups) {
            *center = centroid_of(dataset, g)?;
        }
        let objective = groups_objective(dataset, &groups, &centers);
        debug_assert!(
            objective <= assigned_objective + 1e-9 * assigned_objective.max(1.0),
            "centroid update raised the objective: {assigned_objective} -> {objective}"
        );
        trace.push(objective);
        iterations = round;

        if let Some(prev) = previous {
            if prev - objective <= params.tol * prev {
                converged = true;
                break;
            }
        }
        previous = Some(objective);
    }

    Ok(SubsetFit {
        groups,
        centers,
        iterations,
        converged,
        trace,
    })
}

fn group_labels(members: &[usize], labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); k];
    for (&m, &l) in members.iter().zip(labels) {
        groups[l].push(m);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

fn groups_objective(dataset: &Dataset, groups: &[Vec<usize>], centers: &[Vec<f64>]) -> f64 {
    groups
        .iter()
        .zip(centers)
        .map(|(g, c)| g.iter().map(|&m| squared_distance(dataset.point(m), c)).sum::<f64>())
        .sum()
}

/// Refills each empty group with the point of the currently largest group
/// that lies farthest from that group's mean. Ties go to the lowest index.
/// Returns the moved points with their new group.
pub(crate) fn repair_empty(
    dataset: &Dataset,
    groups: &mut [Vec<usize>],
) -> Result<Vec<(usize, usize)>> {
    let mut moved = Vec::new();
    for empty in 0..groups.len() {
        if !groups[empty].is_empty() {
            continue;
        }
        let mut donor = 0;
        for (c, g) in groups.iter().enumerate() {
            if g.len() > groups[donor].len() {
                donor = c;
            }
        }
        if groups[donor].len() < 2 {
            return Err(Error::Invariant(
                "empty cluster with no cluster able to donate a point".into(),
            ));
        }
        let mean = centroid_of(dataset, &groups[donor])?;
        let mut far = 0;
        let mut far_d = -1.0;
        for (pos, &m) in groups[donor].iter().enumerate() {
            let d = squared_distance(dataset.point(m), &mean);
            if d > far_d {
                far = pos;
                far_d = d;
            }
        }
        let point = groups[donor].remove(far);
        groups[empty].push(point);
        moved.push((point, empty));
    }
    Ok(moved)
}

/// `k` distinct point indices drawn without replacement.
pub fn seed_indices(n: usize, k: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "cannot draw {k} distinct seeds from {n} points"
        )));
    }
    Ok(rand::seq::index::sample(rng, n, k).into_vec())
}

/// `k` distinct dataset points to use as initial centers.
pub fn seed_random(dataset: &Dataset, k: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    Ok(seed_indices(dataset.len(), k, rng)?
        .into_iter()
        .map(|i| dataset.point(i).to_vec())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::partition_objective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(rows: &[&[f64]]) -> Dataset {
        Dataset::new("t", rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_center_gives_dataset_mean() {
        let d = ds(&[&[0.0, 1.0], &[2.0, 3.0], &[4.0, -1.0]]);
        let r = kmeans(&d, &[vec![100.0, 100.0]], 100, 1e-6).unwrap();
        assert_eq!(r.partition.k(), 1);
        assert_eq!(r.partition.clusters()[0].centroid(), &[2.0, 1.0]);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn two_separated_pairs() {
        let d = ds(&[&[0.0, 0.0], &[0.0, 1.0], &[10.0, 0.0], &[10.0, 1.0]]);
        let r = kmeans(&d, &[vec![0.0, 0.0], vec![10.0, 0.0]], 100, 1e-6).unwrap();
        assert_eq!(r.partition.assignments(), vec![0, 0, 1, 1]);
        assert!((r.final_objective - 1.0).abs() < 1e-12);
        let j = partition_objective(&r.partition, &d).unwrap();
        assert!((j - r.final_objective).abs() < 1e-9);
    }

    #[test]
    fn zero_centers_is_an_error() {
        let d = ds(&[&[0.0]]);
        assert!(kmeans(&d, &[], 10, 1e-6).is_err());
        assert!(kmeans(&d, &[vec![0.0, 1.0]], 10, 1e-6).is_err());
        assert!(kmeans(&d, &[vec![0.0], vec![1.0]], 10, 1e-6).is_err());
    }

    #[test]
    fn empty_cluster_is_repaired() {
        let d = ds(&[&[0.0], &[1.0], &[2.0], &[10.0]]);
        // third center attracts nothing at the start
        let r = kmeans(&d, &[vec![0.0], vec![10.0], vec![1000.0]], 100, 0.0).unwrap();
        assert_eq!(r.partition.k(), 3);
        r.partition.validate().unwrap();
        assert!(r.partition.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        assert_eq!(nearest(&[1.0], &[vec![0.0], vec![2.0]]).0, 0);
    }

    #[test]
    fn converged_result_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let d = Dataset::new("r", rows).unwrap();
        let centers = seed_random(&d, 4, &mut rng).unwrap();
        let r = kmeans(&d, &centers, 500, 0.0).unwrap();
        assert!(r.converged);
        let labels = r.partition.assignments();
        let cents = r.partition.centroids();
        for i in 0..d.len() {
            let own = squared_distance(d.point(i), &cents[labels[i]]);
            for c in &cents {
                assert!(own <= squared_distance(d.point(i), c) + 1e-12);
            }
        }
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn seeding_is_deterministic_and_varies_with_seed() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let d = Dataset::new("s", rows).unwrap();
        let pick = |seed| seed_indices(d.len(), 5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(pick(9), pick(9));
        let mut distinct = std::collections::BTreeSet::new();
        for seed in 0..20 {
            let mut s = pick(seed);
            assert_eq!(s.len(), 5);
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 5);
            distinct.insert(s);
        }
        assert!(distinct.len() >= 19);
        let all = seed_random(&d, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(all.len(), 100);
        assert!(seed_random(&d, 101, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}
