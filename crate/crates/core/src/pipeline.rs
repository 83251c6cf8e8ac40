//! End-to-end runs: projected clustering, divisive ensemble, per-member
//! split and merge, consensus.
//!
//! All randomness comes from one seed. Each stage draws from its own
//! ChaCha stream of that seed, so changing one stage's consumption never
//! shifts another's.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::eval;
use crate::hk::{generate_members, EnsembleMember, HkOptions};
use crate::kmeans::{kmeans, seed_random, KMeansResult};
use crate::model::{partition_objective, Dataset, Partition};
use crate::orclus::{orclus, OrclusParams, ProjectedClustering};
use crate::report::Report;
use crate::split_merge::{
    consensus_select, merge_pass, min_sse_index, split_pass, verify_merge_log, ClusterTree, ConsensusMode,
    MergeOutcome,
};

pub const STREAM_ORCLUS: u64 = 1;
pub const STREAM_ENSEMBLE: u64 = 2;
pub const STREAM_BASELINE: u64 = 3;

pub fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One ensemble member carried through split and merge.
#[derive(Debug, Clone)]
pub struct MemberResult {
    pub member: EnsembleMember,
    pub tree: ClusterTree,
    pub split: Partition,
    pub split_objective: f64,
    pub merge: MergeOutcome,
    pub final_objective: f64,
}

impl MemberResult {
    pub fn final_partition(&self) -> &Partition {
        &self.merge.partition
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: PipelineConfig,
    pub orclus: ProjectedClustering,
    pub orclus_objective: f64,
    pub members: Vec<MemberResult>,
    pub partition: Partition,
    pub objective: f64,
    /// Member chosen by min-sse consensus.
    pub selected: Option<usize>,
    pub timings: Vec<(&'static str, Duration)>,
}

pub fn orclus_params(config: &PipelineConfig) -> OrclusParams {
    OrclusParams {
        alpha: config.alpha,
        beta: config.beta,
        refine: config.lloyd(),
        ..OrclusParams::new(config.k, config.d, config.k0)
    }
}

pub fn orclus_only(dataset: &Dataset, config: &PipelineConfig) -> Result<ProjectedClustering> {
    config.validate(dataset)?;
    orclus(dataset, &orclus_params(config), &mut stage_rng(config.seed, STREAM_ORCLUS))
}

/// Plain K-means with `k` random data points as seeds.
pub fn kmeans_baseline(dataset: &Dataset, config: &PipelineConfig) -> Result<KMeansResult> {
    config.validate(dataset)?;
    let seeds = seed_random(dataset, config.k, &mut stage_rng(config.seed, STREAM_BASELINE))?;
    kmeans(dataset, &seeds, config.max_iters, config.tol)
}

/// Splits one member's clusters down to the threshold, then merges.
pub fn refine_member(member: EnsembleMember, dataset: &Dataset, config: &PipelineConfig) -> Result<MemberResult> {
    let tree = split_pass(&member.partition, dataset, config.threshold, config.lloyd())?;
    tree.validate()?;
    let split = tree.leaf_partition()?;
    let merge = merge_pass(&tree, dataset, config.merge_ratio)?;
    verify_merge_log(&tree, dataset, &merge)?;
    Ok(MemberResult {
        split_objective: partition_objective(&split, dataset)?,
        final_objective: partition_objective(&merge.partition, dataset)?,
        member,
        tree,
        split,
        merge,
    })
}

pub fn run(dataset: &Dataset, config: &PipelineConfig) -> Result<RunOutput> {
    config.validate(dataset)?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, Duration)>| {
        timings.push((name, clock.elapsed()));
        clock = Instant::now();
    };

    let projected = orclus_only(dataset, config)?;
    projected.partition.validate()?;
    lap("orclus", &mut timings);

    let options = HkOptions {
        rule: config.split_rule,
        start: config.chain_start,
        lloyd: config.lloyd(),
    };
    let members = generate_members(
        &projected,
        dataset,
        config.k,
        config.ensemble_size,
        &mut stage_rng(config.seed, STREAM_ENSEMBLE),
        &options,
    )?;
    lap("ensemble", &mut timings);

    let members: Vec<MemberResult> = members
        .into_par_iter()
        .map(|m| refine_member(m, dataset, config))
        .collect::<Result<_>>()?;
    lap("split_merge", &mut timings);

    let finals: Vec<Partition> = members.iter().map(|m| m.final_partition().clone()).collect();
    let partition = consensus_select(&finals, dataset, config.consensus)?;
    let selected = match config.consensus {
        ConsensusMode::MinSse => Some(min_sse_index(&finals, dataset)?.0),
        ConsensusMode::CoAssociation => None,
    };
    lap("consensus", &mut timings);

    Ok(RunOutput {
        config: config.clone(),
        orclus_objective: partition_objective(&projected.partition, dataset)?,
        orclus: projected,
        objective: partition_objective(&partition, dataset)?,
        members,
        partition,
        selected,
        timings,
    })
}

/// Dataset facts shared by every report.
pub fn dataset_report(report: &mut Report, command: &str, dataset: &Dataset, missing: usize) {
    report.push("command", command);
    report.push("dataset", dataset.name());
    report.push("n", dataset.len());
    report.push("dim", dataset.dim());
    report.push("missing_cells", missing);
    report.push("labels", dataset.labels().is_some());
}

pub fn config_report(report: &mut Report, config: &PipelineConfig) {
    for (k, v) in config.entries() {
        report.push(format!("config.{k}"), v);
    }
}

/// Objective, MSE, sizes and, when labels exist, purity and Rand index.
pub fn partition_report(report: &mut Report, prefix: &str, partition: &Partition, dataset: &Dataset) -> Result<()> {
    let objective = partition_objective(partition, dataset)?;
    report.push(format!("{prefix}.k"), partition.k());
    report.push(format!("{prefix}.objective"), objective);
    report.push(format!("{prefix}.mse"), objective / dataset.len() as f64);
    report.push_list(format!("{prefix}.sizes"), &partition.sizes());
    if dataset.labels().is_some() {
        let (purity, rand) = eval::score(partition, dataset)?;
        report.push(format!("{prefix}.purity"), purity);
        report.push(format!("{prefix}.rand_index"), rand);
    }
    Ok(())
}

impl RunOutput {
    pub fn report(&self, dataset: &Dataset, missing: usize) -> Result<Report> {
        let mut r = Report::new();
        dataset_report(&mut r, "run", dataset, missing);
        config_report(&mut r, &self.config);
        r.push_list(
            "orclus.trace",
            &self
                .orclus
                .history
                .iter()
                .map(|(k, l)| format!("{k}:{l}"))
                .collect::<Vec<_>>(),
        );
        partition_report(&mut r, "orclus", &self.orclus.partition, dataset)?;
        r.push("members", self.members.len());
        for m in &self.members {
            let p = format!("member.{}", m.member.id);
            r.push(format!("{p}.k_value"), m.member.k_value);
            r.push(format!("{p}.objective"), m.member.objective);
            r.push(format!("{p}.split_k"), m.split.k());
            r.push(format!("{p}.split_objective"), m.split_objective);
            r.push(format!("{p}.oversize_leaves"), m.tree.oversize_leaves().len());
            r.push(format!("{p}.merges_accepted"), m.merge.accepted().count());
            r.push(format!("{p}.merges_rejected"), m.merge.rejected().count());
            r.push(format!("{p}.final_k"), m.final_partition().k());
            r.push(format!("{p}.final_objective"), m.final_objective);
            r.push_list(
                format!("{p}.k_trace"),
                &[m.member.k_value, m.split.k(), m.final_partition().k()],
            );
        }
        r.push("consensus.mode", self.config.consensus);
        if let Some(i) = self.selected {
            r.push("consensus.selected_member", self.members[i].member.id);
        }
        partition_report(&mut r, "final", &self.partition, dataset)?;
        Ok(r)
    }

    pub fn timings_report(&self) -> Report {
        let mut r = Report::new();
        for (stage, d) in &self.timings {
            r.push(format!("seconds.{stage}"), d.as_secs_f64());
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    fn toy() -> Dataset {
        Dataset::new(
            "toy",
            vec![
                vec![0.0, 0.0],
                vec![0.5, 0.2],
                vec![0.1, 0.6],
                vec![9.0, 9.0],
                vec![9.4, 9.3],
                vec![8.8, 9.5],
            ],
        )
        .unwrap()
    }

    fn toy_config() -> PipelineConfig {
        Settings {
            k: Some(2),
            threshold: Some(3),
            ensemble_size: Some(2),
            seed: Some(7),
            ..Settings::default()
        }
        .resolve(&toy())
        .unwrap()
    }

    #[test]
    fn toy_run_is_deterministic() {
        let ds = toy();
        let config = toy_config();
        let a = run(&ds, &config).unwrap();
        let b = run(&ds, &config).unwrap();
        assert_eq!(a.partition, b.partition);
        assert_eq!(a.report(&ds, 0).unwrap().render(), b.report(&ds, 0).unwrap().render());
        for c in a.partition.clusters() {
            assert!(c.members().iter().all(|&m| m < 3) || c.members().iter().all(|&m| m >= 3));
        }
        assert_eq!(a.members.len(), 2);
    }

    #[test]
    fn report_objectives_reproduce_from_partitions() {
        let ds = toy();
        let out = run(&ds, &toy_config()).unwrap();
        let r = out.report(&ds, 0).unwrap();
        let j = partition_objective(&out.partition, &ds).unwrap();
        assert!((r.get_f64("final.objective").unwrap() - j).abs() <= 1e-9);
        for m in &out.members {
            let key = format!("member.{}.final_objective", m.member.id);
            let j = partition_objective(m.final_partition(), &ds).unwrap();
            assert!((r.get_f64(&key).unwrap() - j).abs() <= 1e-9);
        }
    }

    #[test]
    fn streams_are_independent() {
        use rand::Rng;
        let a: u64 = stage_rng(5, STREAM_ORCLUS).random();
        let b: u64 = stage_rng(5, STREAM_ENSEMBLE).random();
        let c: u64 = stage_rng(5, STREAM_ORCLUS).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn baseline_runs() {
        let ds = toy();
        let r = kmeans_baseline(&ds, &toy_config()).unwrap();
        assert_eq!(r.partition.k(), 2);
    }
}
