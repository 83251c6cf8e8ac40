//! Domain types shared by every stage, plus the distance, centroid and
//! squared-error primitives that the clustering objectives are built from.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// N points in D-dimensional real space, stored row-major, with optional
/// ground-truth class labels that are only ever used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    dim: usize,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().ok_or(Error::Empty("dataset has no points"))?.len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidData(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(name, dim, values)
    }

    pub fn from_flat(name: impl Into<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("dimensionality must be at least 1".into()));
        }
        if values.is_empty() {
            return Err(Error::Empty("dataset has no points"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidData(format!(
                "{} values do not form rows of length {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at point {}, coordinate {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Dataset {
            name: name.into(),
            dim,
            values,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidData(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of points N.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Dimensionality D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Labels mapped to dense class ids in order of first appearance.
    pub fn label_ids(&self) -> Option<Vec<usize>> {
        let labels = self.labels.as_ref()?;
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        let mut next = 0;
        Some(
            labels
                .iter()
                .map(|l| {
                    *ids.entry(l.as_str()).or_insert_with(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect(),
        )
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                n: self.len(),
            });
        }
        Ok(())
    }
}

/// A nonempty set of point indices with a center.
///
/// Clusters built through [`Cluster::from_members`] are finalized: the
/// center is the arithmetic mean of the members.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    members: Vec<usize>,
    centroid: Vec<f64>,
}

impl Cluster {
    /// Builds a cluster whose centroid is the mean of its members.
    pub fn from_members(mut members: Vec<usize>, dataset: &Dataset) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        let centroid = centroid_of(dataset, &members)?;
        Ok(Cluster { members, centroid })
    }

    /// Builds a cluster with an explicit (possibly non-mean) center.
    pub fn with_center(mut members: Vec<usize>, centroid: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("cluster has no members"));
        }
        members.sort_unstable();
        members.dedup();
        Ok(Cluster { members, centroid })
    }

    /// Sorted point indices.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn centroid(&self) -> &[f64] {
        &self.centroid
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// An exhaustive, disjoint assignment of the points `0..n_points` to clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    clusters: Vec<Cluster>,
    n_points: usize,
}

impl Partition {
    pub fn new(clusters: Vec<Cluster>, n_points: usize) -> Result<Self> {
        let partition = Partition { clusters, n_points };
        partition.validate()?;
        Ok(partition)
    }

    /// Groups points by assignment value. Clusters are ordered by ascending
    /// assignment id; ids that no point uses are skipped.
    pub fn from_assignments(assignments: &[usize], dataset: &Dataset) -> Result<Self> {
        if assignments.len() != dataset.len() {
            return Err(Error::InvalidPartition(format!(
                "{} assignments for {} points",
                assignments.len(),
                dataset.len()
            )));
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (point, &cluster) in assignments.iter().enumerate() {
            groups.entry(cluster).or_default().push(point);
        }
        let clusters = groups
            .into_values()
            .map(|members| Cluster::from_members(members, dataset))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(clusters, dataset.len())
    }

    /// Disjoint-cover check over `0..n_points`.
    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::InvalidPartition("no clusters".into()));
        }
        let mut seen = vec![false; self.n_points];
        let mut covered = 0usize;
        for (c, cluster) in self.clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::InvalidPartition(format!("cluster {c} is empty")));
            }
            for &m in cluster.members() {
                match seen.get_mut(m) {
                    None => {
                        return Err(Error::InvalidPartition(format!(
                            "cluster {c} holds point {m}, outside 0..{}",
                            self.n_points
                        )))
                    }
                    Some(true) => {
                        return Err(Error::InvalidPartition(format!(
                            "point {m} assigned more than once"
                        )))
                    }
                    Some(slot) => {
                        *slot = true;
                        covered += 1;
                    }
                }
            }
        }
        if covered != self.n_points {
            return Err(Error::InvalidPartition(format!(
                "{} of {} points unassigned",
                self.n_points - covered,
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn into_clusters(self) -> Vec<Cluster> {
        self.clusters
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Cluster index of every point.
    pub fn assignments(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_points];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &m in cluster.members() {
                out[m] = c;
            }
        }
        out
    }

    pub fn centroids(&self) -> Vec<Vec<f64>> {
        self.clusters.iter().map(|c| c.centroid.clone()).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Cluster::len).collect()
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Coordinate-wise arithmetic mean.
pub fn centroid(points: &[&[f64]]) -> Result<Vec<f64>> {
    let first = points.first().ok_or(Error::Empty("centroid of no points"))?;
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    let n = points.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

/// Mean of the dataset points at `members`.
pub fn centroid_of(dataset: &Dataset, members: &[usize]) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::Empty("centroid of no points"));
    }
    let mut sum = vec![0.0; dataset.dim()];
    for &m in members {
        dataset.check_index(m)?;
        for (s, v) in sum.iter_mut().zip(dataset.point(m)) {
            *s += v;
        }
    }
    let n = members.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

/// Sum of squared distances from `members` to `center`.
pub fn sse_of(dataset: &Dataset, members: &[usize], center: &[f64]) -> Result<f64> {
    if center.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            found: center.len(),
        });
    }
    let mut total = 0.0;
    for &m in members {
        dataset.check_index(m)?;
        total += squared_distance(dataset.point(m), center);
    }
    Ok(total)
}

pub fn cluster_sse(cluster: &Cluster, dataset: &Dataset, center: &[f64]) -> Result<f64> {
    sse_of(dataset, cluster.members(), center)
}

/// Within-cluster squared error summed over clusters, each measured at the
/// cluster's stored center.
pub fn partition_objective(partition: &Partition, dataset: &Dataset) -> Result<f64> {
    if partition.n_points() != dataset.len() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} points, dataset has {}",
            partition.n_points(),
            dataset.len()
        )));
    }
    partition
        .clusters()
        .iter()
        .map(|c| cluster_sse(c, dataset, c.centroid()))
        .sum()
}

/// Per-point mean squared distance to the cluster mean.
pub fn mse(cluster: &Cluster, dataset: &Dataset) -> Result<f64> {
    mse_of(dataset, cluster.members())
}

pub fn mse_of(dataset: &Dataset, members: &[usize]) -> Result<f64> {
    let center = centroid_of(dataset, members)?;
    Ok(sse_of(dataset, members, &center)? / members.len() as f64)
}
