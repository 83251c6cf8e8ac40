use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hkens::config::{PipelineConfig, Settings};
use hkens::ingest::{impute_missing, load_csv, standardize, write_csv, LabelColumn};
use hkens::partition_io::{read_partition, write_partition};
use hkens::pipeline::{self, config_report, dataset_report, partition_report, stage_rng, STREAM_ENSEMBLE};
use hkens::report::Report;
use hkens::split_merge::ConsensusMode;
use hkens::synth::{gaussian_blobs, SynthParams};
use hkens::{Dataset, Error, Result};

#[derive(Parser)]
#[command(name = "hkens", version, about = "Subspace-aware hierarchical K-means ensemble clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: projected clustering, divisive ensemble, split, merge, consensus.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write each member's final partition under <out>/members/.
        #[arg(long)]
        write_members: bool,
    },
    /// Plain K-means from k random data points.
    KmeansBaseline {
        #[command(flatten)]
        common: Common,
    },
    /// Projected clustering only.
    OrclusOnly {
        #[command(flatten)]
        common: Common,
    },
    /// The sampled ensemble members before splitting and merging.
    Members {
        #[command(flatten)]
        common: Common,
    },
    /// Scores an existing partition file against the dataset's labels.
    Metrics {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        partition: PathBuf,
    },
    /// Writes a labeled Gaussian-blob dataset as CSV.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        n_points: usize,
        #[arg(long, default_value_t = 4)]
        blobs: usize,
        #[arg(long, default_value_t = 5)]
        informative: usize,
        #[arg(long, default_value_t = 10)]
        noise: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 3.0)]
        noise_ratio: f64,
        #[arg(long, default_value_t = 10.0)]
        center_box: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth label column, by zero-based index or header name.
    #[arg(long)]
    label_col: Option<String>,
    /// The first line is data, not a header.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    input: InputArgs,
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    ensemble_size: Option<usize>,
    #[arg(long, value_parser = parse_consensus)]
    consensus: Option<ConsensusMode>,
}

fn parse_consensus(s: &str) -> std::result::Result<ConsensusMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Loaded {
    dataset: Dataset,
    missing: usize,
}

fn load(input: &InputArgs) -> Result<Loaded> {
    let label = input.label_col.as_deref().map(str::parse::<LabelColumn>).transpose()?;
    let raw = load_csv(&input.input, label.as_ref(), !input.no_header)?;
    Ok(Loaded {
        missing: raw.missing_count(),
        dataset: impute_missing(&raw)?,
    })
}

fn prepare(common: &Common) -> Result<(Loaded, PipelineConfig)> {
    let mut loaded = load(&common.input)?;
    let file = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let flags = Settings {
        k: common.k,
        d: common.d,
        threshold: common.threshold,
        ensemble_size: common.ensemble_size,
        seed: common.seed,
        consensus: common.consensus,
        ..Settings::default()
    };
    let config = file.overlay(flags).resolve(&loaded.dataset)?;
    if config.zscore {
        loaded.dataset = standardize(&loaded.dataset)?;
    }
    Ok((loaded, config))
}

fn out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, write_members } => {
            let (data, config) = prepare(&common)?;
            let out = pipeline::run(&data.dataset, &config)?;
            out_dir(&common.out)?;
            write_partition(&common.out.join("partition.txt"), &out.partition)?;
            let report = out.report(&data.dataset, data.missing)?;
            report.write(&common.out.join("report.txt"))?;
            out.timings_report().write(&common.out.join("timings.txt"))?;
            if write_members {
                let dir = common.out.join("members");
                out_dir(&dir)?;
                for m in &out.members {
                    write_partition(&dir.join(format!("member-{}.txt", m.member.id)), m.final_partition())?;
                }
            }
            print!("{}", report.render());
        }
        Command::KmeansBaseline { common } => {
            let (data, config) = prepare(&common)?;
            let result = pipeline::kmeans_baseline(&data.dataset, &config)?;
            let mut report = Report::new();
            dataset_report(&mut report, "kmeans-baseline", &data.dataset, data.missing);
            config_report(&mut report, &config);
            report.push("kmeans.iterations", result.iterations);
            report.push("kmeans.converged", result.converged);
            partition_report(&mut report, "final", &result.partition, &data.dataset)?;
            out_dir(&common.out)?;
            write_partition(&common.out.join("partition.txt"), &result.partition)?;
            report.write(&common.out.join("report.txt"))?;
            print!("{}", report.render());
        }
        Command::OrclusOnly { common } => {
            let (data, config) = prepare(&common)?;
            let projected = pipeline::orclus_only(&data.dataset, &config)?;
            let mut report = Report::new();
            dataset_report(&mut report, "orclus-only", &data.dataset, data.missing);
            config_report(&mut report, &config);
            let trace: Vec<String> = projected.history.iter().map(|(k, l)| format!("{k}:{l}")).collect();
            report.push_list("orclus.trace", &trace);
            partition_report(&mut report, "final", &projected.partition, &data.dataset)?;
            out_dir(&common.out)?;
            write_partition(&common.out.join("partition.txt"), &projected.partition)?;
            report.write(&common.out.join("report.txt"))?;
            print!("{}", report.render());
        }
        Command::Members { common } => {
            let (data, config) = prepare(&common)?;
            let projected = pipeline::orclus_only(&data.dataset, &config)?;
            let options = hkens::hk::HkOptions {
                rule: config.split_rule,
                start: config.chain_start,
                lloyd: config.lloyd(),
            };
            let members = hkens::hk::generate_members(
                &projected,
                &data.dataset,
                config.k,
                config.ensemble_size,
                &mut stage_rng(config.seed, STREAM_ENSEMBLE),
                &options,
            )?;
            let mut report = Report::new();
            dataset_report(&mut report, "members", &data.dataset, data.missing);
            config_report(&mut report, &config);
            let dir = common.out.join("members");
            out_dir(&dir)?;
            for m in &members {
                partition_report(&mut report, &format!("member.{}", m.id), &m.partition, &data.dataset)?;
                write_partition(&dir.join(format!("member-{}.txt", m.id)), &m.partition)?;
            }
            report.write(&common.out.join("report.txt"))?;
            print!("{}", report.render());
        }
        Command::Metrics { input, partition } => {
            let data = load(&input)?;
            let p = read_partition(&partition, &data.dataset)?;
            let mut report = Report::new();
            dataset_report(&mut report, "metrics", &data.dataset, data.missing);
            partition_report(&mut report, "final", &p, &data.dataset)?;
            print!("{}", report.render());
        }
        Command::GenSynth {
            out,
            n_points,
            blobs,
            informative,
            noise,
            sigma,
            noise_ratio,
            center_box,
            seed,
        } => {
            let ds = gaussian_blobs(&SynthParams {
                n_points,
                n_blobs: blobs,
                informative_dims: informative,
                noise_dims: noise,
                sigma,
                noise_ratio,
                center_box,
                seed,
            })?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                out_dir(parent)?;
            }
            write_csv(&out, &ds)?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => 2,
        Error::Io { .. }
        | Error::Csv { .. }
        | Error::Parse { .. }
        | Error::InvalidData(_)
        | Error::MissingLabels
        | Error::Empty(_)
        | Error::DimensionMismatch { .. }
        | Error::IndexOutOfRange { .. }
        | Error::Unsplittable
        | Error::InsufficientMembers { .. } => 3,
        Error::InvalidPartition(_) | Error::NoConvergence { .. } | Error::Invariant(_) => 4,
    }
}

fn init_threads() {
    let Ok(value) = std::env::var("HKENS_THREADS") else { return };
    let threads = match value.trim().parse::<usize>() {
        Ok(0) => 1,
        Ok(n) => n,
        Err(_) => {
            eprintln!("hkens: ignoring HKENS_THREADS={value:?}");
            return;
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("hkens: could not size thread pool: {e}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hkens: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
