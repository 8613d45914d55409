//! `forceagg` — batch pipeline over report logs:
//! simulate -> aggregate -> classify -> score.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 non-convergence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forceagg::config::PipelineConfig;
use forceagg::domain::{
    default_templates, parse_report_log, serialize_report_log, ClassificationTree, UnitTemplate,
};
use forceagg::pipeline::{
    aggregate_reports, classify_tracks, write_trace_csv, PipelineError, TracksFile,
};
use forceagg::scengen::{generate_scenario, score, GroundTruth, ScenarioSpec};
use forceagg::{Real, SituationPicture64};

const EXIT_DATA: u8 = 2;
const EXIT_NON_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "forceagg",
    version,
    about = "Conflict-based force aggregation pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Pipeline config file (JSON); defaults are built in.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Classification tree file (JSON); default tree is built in.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Unit template file (JSON); default templates are built in.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario into a report log.
    Simulate {
        /// Scenario spec file (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Report log to write (JSON lines).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Cluster a report log into vehicle tracks.
    Aggregate {
        /// Report log to read.
        #[arg(long)]
        log: PathBuf,
        /// Tracks file to write (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Override the maximum cluster count.
        #[arg(long)]
        k_max: Option<usize>,
        /// Override the cluster acceptance threshold (total weight of
        /// conflict).
        #[arg(long)]
        threshold: Option<Real>,
        /// Write the per-sweep convergence trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Aggregate tracks into typed units.
    Classify {
        /// Tracks file from `aggregate`.
        #[arg(long)]
        tracks: PathBuf,
        /// Situation picture to write (JSON).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Score a situation picture against the ground-truth names in a log.
    Score {
        /// Situation picture from `classify`.
        #[arg(long)]
        picture: PathBuf,
        /// Report log carrying ground-truth vehicle names.
        #[arg(long)]
        log: PathBuf,
    },
    /// Inspect the configuration.
    Config {
        /// Print the effective config as JSON.
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage problems exit 1.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_non_convergence() {
                ExitCode::from(EXIT_NON_CONVERGENCE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn load_config(common: &CommonOpts) -> Result<PipelineConfig, PipelineError> {
    let mut config: PipelineConfig = match &common.config {
        Some(path) => serde_json::from_reader(open(path)?)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_tree(common: &CommonOpts) -> Result<ClassificationTree, PipelineError> {
    match &common.tree {
        Some(path) => Ok(serde_json::from_reader(open(path)?)?),
        None => Ok(ClassificationTree::default_vehicles()),
    }
}

fn load_templates(common: &CommonOpts) -> Result<Vec<UnitTemplate>, PipelineError> {
    match &common.templates {
        Some(path) => Ok(serde_json::from_reader(open(path)?)?),
        None => Ok(default_templates()),
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Simulate { spec, out, common } => {
            let mut scenario: ScenarioSpec = serde_json::from_reader(open(&spec)?)?;
            if let Some(seed) = common.seed {
                scenario.seed = seed;
            }
            let tree = load_tree(&common)?;
            let templates = load_templates(&common)?;
            let (truth, reports) = generate_scenario(&scenario, &templates, &tree)?;
            let mut writer = create(&out)?;
            serialize_report_log(&reports, &mut writer)?;
            writer.flush()?;
            eprintln!(
                "simulate: {} vehicles in {} units -> {} reports",
                truth.vehicles.len(),
                truth.units.len(),
                reports.len()
            );
            Ok(())
        }
        Command::Aggregate {
            log,
            out,
            k_max,
            threshold,
            trace,
            common,
        } => {
            let mut config = load_config(&common)?;
            if let Some(k) = k_max {
                config.k_max = k;
            }
            if let Some(t) = threshold {
                config.cluster_threshold = t;
            }
            let tree = load_tree(&common)?;
            let reports = parse_report_log(open(&log)?, &tree)?;
            let output = aggregate_reports(&reports, &tree, &config)?;
            if output.split_clusters > 0 {
                eprintln!(
                    "warning: split {} cluster(s) containing classification conflicts",
                    output.split_clusters
                );
            }
            if let Some(trace_path) = trace {
                let mut w = create(&trace_path)?;
                write_trace_csv(&output.sweeps, &mut w)?;
                w.flush()?;
            }
            let file = TracksFile::from_output(&output, &reports);
            let mut writer = create(&out)?;
            serde_json::to_writer_pretty(&mut writer, &file)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
            eprintln!(
                "aggregate: {} reports -> {} tracks (K = {}, metaconflict {:.4})",
                reports.len(),
                file.tracks.len(),
                output.k,
                output.metaconflict
            );
            Ok(())
        }
        Command::Classify {
            tracks,
            out,
            common,
        } => {
            let config = load_config(&common)?;
            let tree = load_tree(&common)?;
            let templates = load_templates(&common)?;
            let file: TracksFile = serde_json::from_reader(open(&tracks)?)?;
            let track_list = file.to_tracks(&tree)?;
            let picture = classify_tracks(&track_list, &templates, &tree, &config);
            let mut writer = create(&out)?;
            serde_json::to_writer_pretty(&mut writer, &picture)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
            eprintln!(
                "classify: {} tracks -> {} units, {} unaggregated",
                picture.tracks.len(),
                picture.units.len(),
                picture.unaggregated.len()
            );
            Ok(())
        }
        Command::Score { picture, log } => {
            let picture: SituationPicture64 = serde_json::from_reader(open(&picture)?)?;
            let tree = ClassificationTree::default_vehicles();
            let reports = parse_report_log(open(&log)?, &tree)?;
            let truth = GroundTruth::from_reports(&reports)?;
            let metrics = score(&picture, &truth)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
            Ok(())
        }
        Command::Config { dump, common } => {
            let config = load_config(&common)?;
            if dump {
                println!("{}", serde_json::to_string_pretty(&config)?);
            } else {
                eprintln!("nothing to do; try --dump");
            }
            Ok(())
        }
    }
}
