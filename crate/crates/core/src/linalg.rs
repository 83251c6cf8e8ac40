//! Dense symmetric linear algebra for the projected-clustering stage:
//! covariance, a cyclic Jacobi eigensolver, least-spread bases and
//! distances measured inside a basis.

use crate::error::{Error, Result};
use crate::model::{squared_distance, Dataset};

/// Maximum number of full Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Real symmetric matrix backed by its packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        SymMatrix {
            order,
            lower: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle (`i >= j`).
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in 0..=i {
                m.lower[packed(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Reads the lower triangle of a dense row-major matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.lower[packed(i, j)] = value;
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `self += weight * v vᵀ`
    pub fn add_outer(&mut self, weight: f64, v: &[f64]) {
        for i in 0..self.order {
            for j in 0..=i {
                self.lower[packed(i, j)] += weight * v[i] * v[j];
            }
        }
    }

    pub fn add_assign(&mut self, other: &SymMatrix) {
        for (a, b) in self.lower.iter_mut().zip(&other.lower) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.lower.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().all(|v| v.is_finite())
    }
}

/// Orthonormal vectors spanning a subspace of R^D, with the eigenvalue each
/// vector was selected for (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    dim_ambient: usize,
    vectors: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl Basis {
    /// Builds a basis from explicit vectors, checking orthonormality.
    pub fn new(dim_ambient: usize, vectors: Vec<Vec<f64>>, eigenvalues: Vec<f64>) -> Result<Self> {
        if vectors.is_empty() || vectors.len() > dim_ambient {
            return Err(Error::InvalidConfig(format!(
                "basis of {} vectors in {dim_ambient} dimensions",
                vectors.len()
            )));
        }
        if eigenvalues.len() != vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                found: eigenvalues.len(),
            });
        }
        for v in &vectors {
            if v.len() != dim_ambient {
                return Err(Error::DimensionMismatch {
                    expected: dim_ambient,
                    found: v.len(),
                });
            }
        }
        for (a, va) in vectors.iter().enumerate() {
            for (b, vb) in vectors.iter().enumerate().skip(a) {
                let expected = if a == b { 1.0 } else { 0.0 };
                if (dot(va, vb) - expected).abs() > 1e-8 {
                    return Err(Error::InvalidData(format!(
                        "basis vectors {a} and {b} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Basis {
            dim_ambient,
            vectors,
            eigenvalues,
        })
    }

    /// The first `dim_sub` canonical axes, with zero eigenvalues.
    pub fn canonical(dim_ambient: usize, dim_sub: usize) -> Self {
        let vectors = (0..dim_sub)
            .map(|i| {
                let mut e = vec![0.0; dim_ambient];
                e[i] = 1.0;
                e
            })
            .collect();
        Basis {
            dim_ambient,
            vectors,
            eigenvalues: vec![0.0; dim_sub],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::canonical(dim, dim)
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn dim_sub(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Coordinates of `v` in this basis.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|b| dot(b, v)).collect()
    }

    /// Keeps the first `d` vectors.
    pub fn truncate(mut self, d: usize) -> Self {
        self.vectors.truncate(d);
        self.eigenvalues.truncate(d);
        self
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Population covariance `(1/n) Σ (x−μ)(x−μ)ᵀ`.
pub fn covariance(points: &[&[f64]]) -> Result<SymMatrix> {
    let first = points.first().ok_or(Error::Empty("covariance of no points"))?;
    let dim = first.len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    let mean = crate::model::centroid(points)?;
    let mut scatter = SymMatrix::zeros(dim);
    let mut centered = vec![0.0; dim];
    for p in points {
        for ((c, x), m) in centered.iter_mut().zip(p.iter()).zip(&mean) {
            *c = x - m;
        }
        scatter.add_outer(1.0, &centered);
    }
    scatter.scale(1.0 / points.len() as f64);
    Ok(scatter)
}

/// Population covariance of the dataset rows at `members`.
pub fn covariance_of(dataset: &Dataset, members: &[usize]) -> Result<SymMatrix> {
    for &m in members {
        dataset.check_index(m)?;
    }
    let points: Vec<&[f64]> = members.iter().map(|&m| dataset.point(m)).collect();
    covariance(&points)
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenpairs are returned with eigenvalues ascending; equal eigenvalues keep
/// the order in which the rotations left them on the diagonal.
pub fn eig_sym(m: &SymMatrix) -> Result<Basis> {
    let n = m.order();
    if n == 0 {
        return Err(Error::Empty("eigendecomposition of a 0x0 matrix"));
    }
    if !m.is_finite() {
        return Err(Error::InvalidData("matrix has non-finite entries".into()));
    }
    let mut a = m.to_dense();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let frob2: f64 = a.iter().flatten().map(|x| x * x).sum();
    let stop = (1e-15f64).powi(2) * frob2;
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * a[i][j] * a[i][j])
            .sum();
        if off <= stop {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let eigenvalues = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    Ok(Basis {
        dim_ambient: n,
        vectors,
        eigenvalues,
    })
}

/// The `d` eigenvectors with the smallest eigenvalues: the directions in
/// which the scatter described by `m` is tightest.
pub fn least_spread_basis(m: &SymMatrix, d: usize) -> Result<Basis> {
    if d == 0 || d > m.order() {
        return Err(Error::InvalidConfig(format!(
            "subspace dimensionality {d} outside 1..={}",
            m.order()
        )));
    }
    Ok(eig_sym(m)?.truncate(d))
}

/// Length of `x − c` after projection onto `basis`.
pub fn projected_distance(x: &[f64], c: &[f64], basis: &Basis) -> Result<f64> {
    if x.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: c.len(),
        });
    }
    if x.len() != basis.dim_ambient() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim_ambient(),
            found: x.len(),
        });
    }
    // A complete orthonormal basis preserves length.
    if basis.dim_sub() == basis.dim_ambient() {
        return Ok(squared_distance(x, c).sqrt());
    }
    let mut total = 0.0;
    for b in basis.vectors() {
        let coord: f64 = b.iter().zip(x.iter().zip(c)).map(|(bi, (xi, ci))| bi * (xi - ci)).sum();
        total += coord * coord;
    }
    Ok(total.sqrt())
}
