//! Subspace-aware hierarchical K-means ensemble clustering.
//!
//! The pipeline runs five stages over a numeric dataset:
//!
//! 1. ingest: CSV loading with missing cells imputed as zero ([`ingest`]);
//! 2. projected clustering with per-cluster least-spread subspaces ([`orclus`]);
//! 3. a divisive hierarchical K-means chain from which ensemble members are
//!    sampled ([`hk`]);
//! 4. threshold splitting of oversized clusters, then
//! 5. MSE-guided merging and consensus selection ([`split_merge`]).
//!
//! [`pipeline::run`] wires the stages together; [`eval`] scores results.

pub mod config;
pub mod error;
pub mod eval;
pub mod hk;
pub mod ingest;
pub mod kmeans;
pub mod linalg;
pub mod model;
pub mod orclus;
pub mod partition_io;
pub mod pipeline;
pub mod report;
pub mod split_merge;
pub mod synth;

pub use error::{Error, Result};
pub use model::{Cluster, Dataset, Partition};
