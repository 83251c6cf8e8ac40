//! Run configuration: TOML file values overlaid with command-line values,
//! then resolved against the loaded dataset.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::hk::{ChainStart, SplitRule};
use crate::kmeans::{LloydParams, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::model::Dataset;
use crate::orclus::DEFAULT_ALPHA;
use crate::split_merge::{ConsensusMode, DEFAULT_MERGE_RATIO};

pub const DEFAULT_ENSEMBLE_SIZE: usize = 5;

/// Partially specified settings, as read from a config file or flags.
/// Every field is optional; unset fields fall back to defaults that may
/// depend on the data.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub threshold: Option<usize>,
    pub ensemble_size: Option<usize>,
    pub seed: Option<u64>,
    pub k0: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub consensus: Option<ConsensusMode>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub split_rule: Option<SplitRule>,
    pub chain_start: Option<ChainStart>,
    pub merge_ratio: Option<f64>,
    pub zscore: Option<bool>,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Values set in `top` win over values set in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        Settings {
            k: top.k.or(self.k),
            d: top.d.or(self.d),
            threshold: top.threshold.or(self.threshold),
            ensemble_size: top.ensemble_size.or(self.ensemble_size),
            seed: top.seed.or(self.seed),
            k0: top.k0.or(self.k0),
            alpha: top.alpha.or(self.alpha),
            beta: top.beta.or(self.beta),
            consensus: top.consensus.or(self.consensus),
            max_iters: top.max_iters.or(self.max_iters),
            tol: top.tol.or(self.tol),
            split_rule: top.split_rule.or(self.split_rule),
            chain_start: top.chain_start.or(self.chain_start),
            merge_ratio: top.merge_ratio.or(self.merge_ratio),
            zscore: top.zscore.or(self.zscore),
        }
    }

    /// Fills defaults from the dataset and validates the result.
    ///
    /// Data-dependent defaults: `d = max(1, D / 2)`, `threshold = ceil(N / k)`
    /// (at least 2), `k0 = clamp(5k, k, N)` capped at `N / 2` when that
    /// still leaves `k0 >= k`.
    pub fn resolve(&self, dataset: &Dataset) -> Result<PipelineConfig> {
        let (n, dim) = (dataset.len(), dataset.dim());
        let k = self
            .k
            .ok_or_else(|| Error::InvalidConfig("cluster count k is required".into()))?;
        let k0 = self.k0.unwrap_or_else(|| (5 * k).min(n / 2).max(k));
        let config = PipelineConfig {
            k,
            d: self.d.unwrap_or((dim / 2).max(1)),
            threshold: self.threshold.unwrap_or_else(|| n.div_ceil(k.max(1)).max(2)),
            ensemble_size: self.ensemble_size.unwrap_or(DEFAULT_ENSEMBLE_SIZE),
            seed: self.seed.unwrap_or(0),
            k0,
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            beta: self.beta,
            consensus: self.consensus.unwrap_or_default(),
            max_iters: self.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            split_rule: self.split_rule.unwrap_or_default(),
            chain_start: self.chain_start.unwrap_or_default(),
            merge_ratio: self.merge_ratio.unwrap_or(DEFAULT_MERGE_RATIO),
            zscore: self.zscore.unwrap_or(false),
        };
        config.validate(dataset)?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub d: usize,
    pub threshold: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    pub k0: usize,
    pub alpha: f64,
    /// `None` derives the dimension decay from the other parameters.
    pub beta: Option<f64>,
    pub consensus: ConsensusMode,
    pub max_iters: usize,
    pub tol: f64,
    pub split_rule: SplitRule,
    pub chain_start: ChainStart,
    pub merge_ratio: f64,
    pub zscore: bool,
}

impl PipelineConfig {
    pub fn lloyd(&self) -> LloydParams {
        LloydParams {
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let (n, dim) = (dataset.len(), dataset.dim());
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k < 2 || self.k > n {
            return fail(format!("k = {} must lie in 2..={n}", self.k));
        }
        if self.d == 0 || self.d > dim {
            return fail(format!("d = {} must lie in 1..={dim}", self.d));
        }
        if self.threshold < 2 {
            return fail(format!("threshold = {} must be at least 2", self.threshold));
        }
        if self.ensemble_size == 0 {
            return fail("ensemble_size must be at least 1".into());
        }
        if self.k0 < self.k || self.k0 > n {
            return fail(format!("k0 = {} must lie in {}..={n}", self.k0, self.k));
        }
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.alpha) {
            return fail(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if let Some(beta) = self.beta {
            if !unit(beta) {
                return fail(format!("beta = {beta} must lie in (0, 1)"));
            }
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".into());
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return fail(format!("tol = {} must be finite and non-negative", self.tol));
        }
        if !(self.merge_ratio >= 1.0 && self.merge_ratio.is_finite()) {
            return fail(format!("merge_ratio = {} must be finite and at least 1", self.merge_ratio));
        }
        Ok(())
    }

    /// `(key, value)` pairs in a fixed order, for reports.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("k", self.k.to_string()),
            ("d", self.d.to_string()),
            ("threshold", self.threshold.to_string()),
            ("ensemble_size", self.ensemble_size.to_string()),
            ("seed", self.seed.to_string()),
            ("k0", self.k0.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.map_or_else(|| "auto".into(), |b| b.to_string())),
            ("consensus", self.consensus.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("tol", self.tol.to_string()),
            (
                "split_rule",
                match self.split_rule {
                    SplitRule::LargestSse => "largest-sse",
                    SplitRule::LargestSize => "largest-size",
                }
                .into(),
            ),
            (
                "chain_start",
                match self.chain_start {
                    ChainStart::WholeData => "whole-data",
                    ChainStart::Orclus => "orclus",
                }
                .into(),
            ),
            ("merge_ratio", self.merge_ratio.to_string()),
            ("zscore", self.zscore.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize, dim: usize) -> Dataset {
        Dataset::new("c", (0..n).map(|i| vec![i as f64; dim]).collect()).unwrap()
    }

    #[test]
    fn defaults_follow_the_data() {
        let c = Settings { k: Some(4), ..Settings::default() }.resolve(&data(300, 15)).unwrap();
        assert_eq!((c.d, c.threshold, c.k0, c.ensemble_size), (7, 75, 20, 5));
        assert_eq!(c.consensus, ConsensusMode::MinSse);
        assert_eq!(c.beta, None);
        let small = Settings { k: Some(2), ..Settings::default() }.resolve(&data(6, 2)).unwrap();
        assert_eq!((small.k0, small.threshold, small.d), (3, 3, 1));
    }

    #[test]
    fn toml_file_then_overrides() {
        let file = Settings::from_toml("k = 3\nd = 2\nconsensus = \"co-association\"\nseed = 9\n").unwrap();
        let flags = Settings { k: Some(5), ..Settings::default() };
        let s = file.overlay(flags);
        assert_eq!(s.k, Some(5));
        assert_eq!(s.d, Some(2));
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.consensus, Some(ConsensusMode::CoAssociation));
        assert!(Settings::from_toml("colour = 3").is_err());
        assert!(Settings::from_toml("split_rule = \"largest-size\"").is_ok());
    }

    #[test]
    fn invariants_are_enforced() {
        let ds = data(50, 4);
        let base = Settings { k: Some(3), ..Settings::default() };
        let bad = [
            Settings { k: Some(1), ..base.clone() },
            Settings { d: Some(0), ..base.clone() },
            Settings { d: Some(5), ..base.clone() },
            Settings { threshold: Some(1), ..base.clone() },
            Settings { ensemble_size: Some(0), ..base.clone() },
            Settings { k0: Some(2), ..base.clone() },
            Settings { alpha: Some(1.0), ..base.clone() },
            Settings { beta: Some(0.0), ..base.clone() },
            Settings { merge_ratio: Some(0.5), ..base.clone() },
            Settings::default(),
        ];
        for s in bad {
            assert!(matches!(s.resolve(&ds), Err(Error::InvalidConfig(_))), "{s:?}");
        }
        assert!(base.resolve(&ds).is_ok());
    }
}
