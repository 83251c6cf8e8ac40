//! Labeled Gaussian-blob datasets with informative and noise dimensions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_points: usize,
    pub n_blobs: usize,
    /// Dimensions in which blob centers differ.
    pub informative_dims: usize,
    /// Dimensions drawn from one shared zero-mean Gaussian for every blob.
    pub noise_dims: usize,
    /// Per-coordinate standard deviation inside a blob.
    pub sigma: f64,
    /// Noise standard deviation as a multiple of `sigma`.
    pub noise_ratio: f64,
    /// Blob centers are uniform in `[-center_box, center_box]` per
    /// informative dimension.
    pub center_box: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_points: 300,
            n_blobs: 4,
            informative_dims: 5,
            noise_dims: 10,
            sigma: 1.0,
            noise_ratio: 3.0,
            center_box: 10.0,
            seed: 0,
        }
    }
}

/// Blob `i % n_blobs` owns point `i` before a final shuffle, so blob sizes
/// differ by at most one. Labels are the blob numbers.
pub fn gaussian_blobs(params: &SynthParams) -> Result<Dataset> {
    let dim = params.informative_dims + params.noise_dims;
    if params.n_blobs == 0 || params.n_points < params.n_blobs || params.informative_dims == 0 {
        return Err(Error::InvalidConfig(
            "need at least one blob, one informative dimension and a point per blob".into(),
        ));
    }
    let bad = |v: f64| !(v.is_finite() && v > 0.0);
    if bad(params.sigma) || bad(params.noise_ratio) || bad(params.center_box) {
        return Err(Error::InvalidConfig("sigma, noise ratio and center box must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let centers: Vec<Vec<f64>> = (0..params.n_blobs)
        .map(|_| {
            (0..params.informative_dims)
                .map(|_| rng.random_range(-params.center_box..=params.center_box))
                .collect()
        })
        .collect();
    let signal = Normal::new(0.0, params.sigma).expect("positive sigma");
    let noise = Normal::new(0.0, params.sigma * params.noise_ratio).expect("positive sigma");

    let mut rows: Vec<(Vec<f64>, usize)> = (0..params.n_points)
        .map(|i| {
            let blob = i % params.n_blobs;
            let mut row = Vec::with_capacity(dim);
            row.extend(centers[blob].iter().map(|c| c + signal.sample(&mut rng)));
            row.extend((0..params.noise_dims).map(|_| noise.sample(&mut rng)));
            (row, blob)
        })
        .collect();
    rows.shuffle(&mut rng);
    let labels = rows.iter().map(|(_, b)| b.to_string()).collect();
    Dataset::new(
        format!("blobs-{}", params.seed),
        rows.into_iter().map(|(r, _)| r).collect(),
    )?
    .with_labels(labels)
}
