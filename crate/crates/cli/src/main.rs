use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use maplabel_cli::config::{ConfigOverrides, PipelineConfig};
use maplabel_cli::pipeline::{self, BaselineKind};
use maplabel_cli::report;
use maplabel_cli::Result;

#[derive(Parser)]
#[command(
    name = "maplabel",
    about = "Semantic landmark mapping and cross-modal LiDAR pseudo-label generation",
    version
)]
struct Cli {
    /// Configuration file (TOML); flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Landmark range threshold override, meters.
    #[arg(long, global = true)]
    range: Option<f64>,
    /// Sampling frequency override, Hz.
    #[arg(long, global = true)]
    frequency: Option<f64>,
    /// Motion compensation override.
    #[arg(long, global = true)]
    motion_compensation: Option<bool>,
    /// Sequence name (default: the first eval-split sequence).
    #[arg(long, global = true)]
    sequence: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    B1,
    B2,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic dataset (train + eval sequences) with a truth
    /// sidecar.
    Simulate {
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the semantic parametric map from detections and scans.
    Map {
        #[arg(long)]
        dataset: PathBuf,
        /// Output map file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render per-frame 2D label images from a map.
    Render {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also dump viewable PPM rasters.
        #[arg(long)]
        dump_ppm: bool,
    },
    /// Label per-frame 3D point clouds through rendered frusta.
    Label3d {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single-shot baseline (b1: shape-preserving lift, b2:
    /// depth-preserving projection).
    Baseline {
        #[arg(value_enum)]
        which: BaselineArg,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write truth reference labels for the configured cloud
    /// interpretation.
    Truthref {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one label set against another (2D semantic, 2D panoptic,
    /// 3D semantic).
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Optional output prefix for the key-value report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full experiment grid and emit the report table.
    Report {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let overrides = ConfigOverrides {
        seed: cli.seed,
        range_threshold: cli.range,
        frequency_hz: cli.frequency,
        motion_compensation: cli.motion_compensation,
    };
    let config = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    let pool = pipeline::worker_pool()?;
    let sequence = cli.sequence.as_deref();
    pool.install(|| match cli.command {
        Command::Simulate { out } => pipeline::run_simulate(&config, &out),
        Command::Map { dataset, out } => {
            let summary = pipeline::run_map(&config, &dataset, sequence, &out)?;
            println!(
                "map: {} landmarks, {} sets rejected, {} detections dropped",
                summary.landmarks, summary.rejected, summary.dropped_detections
            );
            Ok(())
        }
        Command::Render {
            dataset,
            map,
            out,
            dump_ppm,
        } => pipeline::run_render(&config, &dataset, sequence, &map, &out, dump_ppm),
        Command::Label3d { dataset, map, out } => {
            pipeline::run_label3d(&config, &dataset, sequence, &map, &out)
        }
        Command::Baseline {
            which,
            dataset,
            out,
        } => {
            let kind = match which {
                BaselineArg::B1 => BaselineKind::ShapePreservingLift,
                BaselineArg::B2 => BaselineKind::DepthPreservingProjection,
            };
            pipeline::run_baseline(&config, &dataset, sequence, kind, &out)
        }
        Command::Truthref { dataset, out } => {
            pipeline::run_truth_reference(&config, &dataset, sequence, &out)
        }
        Command::Eval {
            pred,
            reference,
            out,
        } => {
            let summary = pipeline::run_eval(&pred, &reference, &config.lidar.model()?)?;
            let kv = report::metrics_kv("eval", &summary);
            print!("{kv}");
            if let Some(prefix) = out {
                if let Some(parent) = prefix.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                std::fs::write(prefix.with_extension("kv"), kv)?;
            }
            Ok(())
        }
        Command::Report { dataset, out } => report::run_report(&config, &dataset, &out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
