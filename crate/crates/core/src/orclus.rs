//! Projected clustering in arbitrarily oriented subspaces.
//!
//! Starting from `k0` random seeds in the full space, each phase assigns
//! points to the nearest seed measured inside that seed's subspace,
//! recomputes every cluster's least-spread subspace, and merges the pairs
//! whose union stays tightest. Cluster count and subspace dimensionality
//! decay geometrically from `(k0, D)` to `(k, d)`; a final refinement runs
//! assignment and subspace determination to a fixed point.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kmeans::{repair_empty, seed_random, LloydParams};
use crate::linalg::{covariance_of, eig_sym, least_spread_basis, projected_distance, Basis, SymMatrix};
use crate::model::{centroid_of, Cluster, Dataset, Partition};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct OrclusParams {
    /// Target cluster count.
    pub k: usize,
    /// Target subspace dimensionality.
    pub d: usize,
    /// Initial seed count.
    pub k0: usize,
    /// Cluster-count decay factor per phase.
    pub alpha: f64,
    /// Dimension decay factor per phase; derived from the other parameters
    /// when `None`.
    pub beta: Option<f64>,
    /// Iteration cap for the final refinement.
    pub refine: LloydParams,
}

impl OrclusParams {
    pub fn new(k: usize, d: usize, k0: usize) -> Self {
        OrclusParams {
            k,
            d,
            k0,
            alpha: DEFAULT_ALPHA,
            beta: None,
            refine: LloydParams::default(),
        }
    }

    /// Dimension decay that reaches `d` in the same number of phases in
    /// which the cluster count reaches `k`.
    pub fn resolved_beta(&self, dim: usize) -> f64 {
        if let Some(beta) = self.beta {
            return beta;
        }
        if self.k0 <= self.k || dim <= self.d {
            return self.alpha;
        }
        let dims = (dim as f64 / self.d as f64).ln();
        let counts = (self.k0 as f64 / self.k as f64).ln();
        (-dims * (1.0 / self.alpha).ln() / counts).exp()
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let n = dataset.len();
        let dim = dataset.dim();
        if self.k == 0 || self.k > self.k0 || self.k0 > n {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= k ({}) <= k0 ({}) <= N ({n})",
                self.k, self.k0
            )));
        }
        if self.d == 0 || self.d > dim {
            return Err(Error::InvalidConfig(format!(
                "subspace dimensionality {} outside 1..={dim}",
                self.d
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::InvalidConfig(format!("beta {beta} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ProjectedClustering {
    pub partition: Partition,
    /// One basis per cluster, in partition order.
    pub subspaces: Vec<Basis>,
    pub current_k: usize,
    pub current_dim: usize,
    /// `(cluster count, subspace dimensionality)` after every phase.
    pub history: Vec<(usize, usize)>,
}

impl ProjectedClustering {
    fn new(partition: Partition, subspaces: Vec<Basis>, dim: usize) -> Self {
        let k = partition.k();
        ProjectedClustering {
            partition,
            subspaces,
            current_k: k,
            current_dim: dim,
            history: vec![(k, dim)],
        }
    }
}

fn decay(current: usize, target: usize, factor: f64) -> usize {
    if current <= target {
        return target;
    }
    let next = (factor * current as f64).ceil() as usize;
    next.min(current - 1).max(target)
}

pub fn orclus(
    dataset: &Dataset,
    params: &OrclusParams,
    rng: &mut impl Rng,
) -> Result<ProjectedClustering> {
    params.validate(dataset)?;
    let dim = dataset.dim();
    let beta = params.resolved_beta(dim);

    let mut centers = seed_random(dataset, params.k0, rng)?;
    let mut bases = vec![Basis::identity(dim); params.k0];
    let mut k_c = params.k0;
    let mut l_c = dim;
    let mut history = vec![(k_c, l_c)];

    while k_c > params.k || l_c > params.d {
        let k_new = decay(k_c, params.k, params.alpha);
        let l_new = decay(l_c, params.d, beta);

        let partition = assign_phase(dataset, &centers, &bases)?;
        let subspaces = subspace_determination(&partition, dataset, l_c)?;
        let mut phase = ProjectedClustering::new(partition, subspaces, l_c);
        if k_new < phase.current_k {
            phase = merge_phase(&phase, dataset, k_new, l_new)?;
        } else {
            phase.subspaces = subspace_determination(&phase.partition, dataset, l_new)?;
            phase.current_dim = l_new;
        }
        centers = phase.partition.centroids();
        bases = phase.subspaces;
        k_c = k_new;
        l_c = l_new;
        history.push((k_c, l_c));
    }

    let mut partition = assign_phase(dataset, &centers, &bases)?;
    let mut subspaces = subspace_determination(&partition, dataset, params.d)?;
    for _ in 1..params.refine.max_iters.max(1) {
        let next = assign_phase(dataset, &partition.centroids(), &subspaces)?;
        if next.assignments() == partition.assignments() {
            break;
        }
        partition = next;
        subspaces = subspace_determination(&partition, dataset, params.d)?;
    }
    debug_assert_eq!(partition.k(), params.k);
    let mut result = ProjectedClustering::new(partition, subspaces, params.d);
    history.push((result.current_k, result.current_dim));
    result.history = history;
    Ok(result)
}

/// Assigns every point to the center nearest within that center's own
/// subspace (lowest index on ties), then recomputes full-space centroids.
/// Clusters left empty are refilled as in K-means so the count is kept.
pub fn assign_phase(dataset: &Dataset, centers: &[Vec<f64>], subspaces: &[Basis]) -> Result<Partition> {
    if centers.is_empty() {
        return Err(Error::Empty("assignment needs at least one center"));
    }
    if centers.len() != subspaces.len() {
        return Err(Error::DimensionMismatch {
            expected: centers.len(),
            found: subspaces.len(),
        });
    }
    let labels = (0..dataset.len())
        .into_par_iter()
        .map(|i| {
            let x = dataset.point(i);
            let mut best = (0, f64::INFINITY);
            for (c, (center, basis)) in centers.iter().zip(subspaces).enumerate() {
                let dist = projected_distance(x, center, basis)?;
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            Ok(best.0)
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut groups = vec![Vec::new(); centers.len()];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    repair_empty(dataset, &mut groups)?;
    let clusters = groups
        .into_iter()
        .map(|g| Cluster::from_members(g, dataset))
        .collect::<Result<Vec<_>>>()?;
    Partition::new(clusters, dataset.len())
}

/// Least-spread `dim_sub`-dimensional basis of every cluster's covariance.
/// Singleton clusters get the first `dim_sub` canonical axes.
pub fn subspace_determination(
    partition: &Partition,
    dataset: &Dataset,
    dim_sub: usize,
) -> Result<Vec<Basis>> {
    if dim_sub == 0 || dim_sub > dataset.dim() {
        return Err(Error::InvalidConfig(format!(
            "subspace dimensionality {dim_sub} outside 1..={}",
            dataset.dim()
        )));
    }
    partition
        .clusters()
        .par_iter()
        .map(|c| {
            if c.len() == 1 {
                Ok(Basis::canonical(dataset.dim(), dim_sub))
            } else {
                least_spread_basis(&covariance_of(dataset, c.members())?, dim_sub)
            }
        })
        .collect()
}

/// Sufficient statistics of a cluster: size, mean and scatter
/// `Σ (x−μ)(x−μ)ᵀ`.
#[derive(Debug, Clone)]
struct Moments {
    members: Vec<usize>,
    mean: Vec<f64>,
    scatter: SymMatrix,
}

impl Moments {
    fn of(dataset: &Dataset, members: &[usize]) -> Result<Self> {
        let mut scatter = covariance_of(dataset, members)?;
        scatter.scale(members.len() as f64);
        Ok(Moments {
            members: members.to_vec(),
            mean: centroid_of(dataset, members)?,
            scatter,
        })
    }

    fn union(&self, other: &Moments) -> Moments {
        let (na, nb) = (self.members.len() as f64, other.members.len() as f64);
        let n = na + nb;
        let delta: Vec<f64> = self.mean.iter().zip(&other.mean).map(|(a, b)| a - b).collect();
        let mean = self
            .mean
            .iter()
            .zip(&other.mean)
            .map(|(a, b)| (na * a + nb * b) / n)
            .collect();
        let mut scatter = self.scatter.clone();
        scatter.add_assign(&other.scatter);
        scatter.add_outer(na * nb / n, &delta);
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        members.sort_unstable();
        Moments {
            members,
            mean,
            scatter,
        }
    }

    /// Mean squared distance to the mean inside the least-spread
    /// `dim_sub`-dimensional subspace: the sum of the smallest eigenvalues
    /// of the covariance.
    fn projected_energy(&self, dim_sub: usize) -> Result<f64> {
        let mut cov = self.scatter.clone();
        cov.scale(1.0 / self.members.len() as f64);
        Ok(eig_sym(&cov)?.eigenvalues()[..dim_sub].iter().sum())
    }
}

/// Greedily merges the pair whose union has the smallest projected energy
/// in its own least-spread `dim_sub`-dimensional subspace until `target_k`
/// clusters remain, then recomputes every subspace at `dim_sub`.
pub fn merge_phase(
    clustering: &ProjectedClustering,
    dataset: &Dataset,
    target_k: usize,
    dim_sub: usize,
) -> Result<ProjectedClustering> {
    if target_k == 0 || target_k > clustering.partition.k() {
        return Err(Error::InvalidConfig(format!(
            "cannot merge {} clusters down to {target_k}",
            clustering.partition.k()
        )));
    }
    if dim_sub == 0 || dim_sub > dataset.dim() {
        return Err(Error::InvalidConfig(format!(
            "subspace dimensionality {dim_sub} outside 1..={}",
            dataset.dim()
        )));
    }
    let mut active: Vec<Moments> = clustering
        .partition
        .clusters()
        .iter()
        .map(|c| Moments::of(dataset, c.members()))
        .collect::<Result<_>>()?;

    // energy[i][j] for i < j
    let mut energy: Vec<Vec<f64>> = vec![Vec::new(); active.len()];
    for i in 0..active.len() {
        energy[i] = ((i + 1)..active.len())
            .into_par_iter()
            .map(|j| active[i].union(&active[j]).projected_energy(dim_sub))
            .collect::<Result<_>>()?;
    }

    let mut history = clustering.history.clone();
    while active.len() > target_k {
        let mut best = (0, 1, f64::INFINITY);
        for (i, row) in energy.iter().enumerate() {
            for (offset, &e) in row.iter().enumerate() {
                if e < best.2 {
                    best = (i, i + 1 + offset, e);
                }
            }
        }
        let (i, j, _) = best;
        let merged = active[i].union(&active[j]);
        active.remove(j);
        energy.remove(j);
        for (a, row) in energy.iter_mut().enumerate().take(j) {
            row.remove(j - a - 1);
        }
        active[i] = merged;
        let fresh: Vec<f64> = (0..active.len())
            .into_par_iter()
            .map(|other| {
                if other == i {
                    Ok(f64::NAN)
                } else {
                    active[i].union(&active[other]).projected_energy(dim_sub)
                }
            })
            .collect::<Result<_>>()?;
        for (a, row) in energy.iter_mut().enumerate().take(i) {
            row[i - a - 1] = fresh[a];
        }
        energy[i] = fresh[i + 1..].to_vec();
        history.push((active.len(), dim_sub));
    }

    let clusters = active
        .into_iter()
        .map(|m| Cluster::from_members(m.members, dataset))
        .collect::<Result<Vec<_>>>()?;
    let partition = Partition::new(clusters, dataset.len())?;
    let subspaces = subspace_determination(&partition, dataset, dim_sub)?;
    let mut result = ProjectedClustering::new(partition, subspaces, dim_sub);
    result.history = history;
    Ok(result)
}
