//! occuforge: occupancy-grid curation, Gaussian point-map rendering, LiDAR
//! simulation, and evaluation metrics for driving scenes.

mod commands;
mod config;
mod error;
mod schemas;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "occuforge", version, about = "Occupancy-centric driving-scene toolkit")]
struct Cli {
    /// JSON config file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-key overrides, e.g. --set render.gaussian_scale=0.01
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (0 = all cores). Overrides config and OCCU_FORGE_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curate a semantic occupancy grid from a clip manifest.
    Curate {
        manifest: PathBuf,
        #[arg(long, default_value = "curate_out")]
        out: PathBuf,
    },
    /// Render sparse depth/semantic point maps from an occupancy grid.
    Render {
        occ: PathBuf,
        cameras: PathBuf,
        #[arg(long, default_value = "render_out")]
        out: PathBuf,
        /// Projection backend: ewa or ut.
        #[arg(long)]
        projection: Option<String>,
        #[arg(long)]
        gaussian_scale: Option<f64>,
        #[arg(long)]
        opacity: Option<f64>,
    },
    /// Simulate LiDAR returns from an occupancy grid.
    Lidar {
        occ: PathBuf,
        rig: PathBuf,
        #[arg(long, default_value = "lidar_out")]
        out: PathBuf,
        /// Comma-separated sensor indices (default: all).
        #[arg(long)]
        sensors: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate grids or point clouds.
    Eval {
        #[command(subcommand)]
        target: EvalTarget,
    },
    /// Generate a synthetic scene with ground truth.
    Synth {
        /// wall, box-street, or moving-box.
        scene: String,
        #[arg(long, default_value = "synth_out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify every manifest in a directory as Spatial/Temporal/Neither.
    FilterScenarios {
        dir: PathBuf,
        #[arg(long, default_value = "scenarios.json")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalTarget {
    /// IoU / mIoU between two OCCG grids.
    Occ {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long, default_value = "eval_occ.json")]
        out: PathBuf,
    },
    /// Chamfer / JSD / MMD between point clouds.
    Pc {
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        truth: Vec<PathBuf>,
        #[arg(long, default_value = "eval_pc.json")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::resolve(cli.config.as_deref(), &cli.overrides)?;

    // thread count: flag > env > config
    let threads = cli
        .threads
        .or_else(|| std::env::var("OCCU_FORGE_THREADS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(config.threads);
    config.threads = threads;
    if threads > 0 {
        // ignore the error when a pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    match cli.command {
        Command::Curate { manifest, out } => commands::curate::run(&manifest, &out, &config),
        Command::Render {
            occ,
            cameras,
            out,
            projection,
            gaussian_scale,
            opacity,
        } => {
            if let Some(p) = projection {
                config.render.projection = match p.as_str() {
                    "ewa" => occuforge_core::splat::Backend::Ewa,
                    "ut" => occuforge_core::splat::Backend::Ut,
                    other => return Err(CliError::Usage(format!("--projection must be ewa or ut, got \"{other}\""))),
                };
            }
            if let Some(s) = gaussian_scale {
                config.render.gaussian_scale = s;
            }
            if let Some(o) = opacity {
                config.render.opacity = o;
            }
            commands::render::run(&occ, &cameras, &out, &config)
        }
        Command::Lidar {
            occ,
            rig,
            out,
            sensors,
            seed,
        } => {
            if let Some(s) = seed {
                config.seed = s;
            }
            commands::lidar::run(&occ, &rig, &out, sensors.as_deref(), &config)
        }
        Command::Eval { target } => match target {
            EvalTarget::Occ { pred, gt, out } => commands::eval::run_occ(&pred, &gt, &out, &config),
            EvalTarget::Pc { pred, truth, out } => commands::eval::run_pc(&pred, &truth, &out, &config),
        },
        Command::Synth { scene, out, seed } => {
            if let Some(s) = seed {
                config.seed = s;
            }
            commands::synth::run(&scene, &out, &config)
        }
        Command::FilterScenarios { dir, out } => commands::filter_scenarios::run(&dir, &out, &config),
    }
}
