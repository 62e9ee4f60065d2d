mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use manip_core::sim::{SceneSpec, TaskKind};
use thiserror::Error;

use crate::config::RunConfig;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  invalid input (unreadable or malformed file, bad config, usage error)
  2  scene has no instance embeddings
  3  localization failed (no instance matches the query)
  4  no grasp candidate survived filtering
  5  no valid body pose";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("no instance carries an embedding")]
    NoEmbeddings,
    #[error("localization failed: {0}")]
    Localization(String),
    #[error("grasp filtering failed: {0}")]
    GraspFilter(String),
    #[error("navigation failed: {0}")]
    Navigation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::NoEmbeddings => 2,
            CliError::Localization(_) => 3,
            CliError::GraspFilter(_) => 4,
            CliError::Navigation(_) => 5,
        }
    }
}

/// Open-vocabulary mobile manipulation planner: object lookup, joint
/// grasp/body planning, drawer detection and batch simulation.
#[derive(Debug, Parser)]
#[command(name = "manip", version, after_help = EXIT_CODES)]
struct Cli {
    /// JSON config with optional blocks nav, optimizer, grasp, drawer, sim,
    /// noise and keys seed, output_dir.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Tabletop,
    Cabinet,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Task {
    Grasp,
    Search,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ranks scene instances by similarity to a query embedding.
    Query {
        /// ASCII PLY point cloud.
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        instances: PathBuf,
        /// JSON array with the query embedding.
        #[arg(long)]
        embedding: PathBuf,
    },
    /// Picks the best grasp and body pose for the queried object.
    PlanGrasp {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        /// Grasp batch files, one per detector rotation, in sweep order.
        #[arg(long, required = true, num_args = 1..)]
        grasps: Vec<PathBuf>,
    },
    /// Matches handles to drawers per frame and fuses them into targets.
    MatchDrawers {
        /// Detection frame files.
        #[arg(long, required = true, num_args = 1..)]
        frames: Vec<PathBuf>,
    },
    /// Runs a batch of simulated episodes.
    Simulate {
        /// Scene spec JSON.
        #[arg(long, conflicts_with = "preset")]
        scene: Option<PathBuf>,
        /// Built-in scene spec.
        #[arg(long)]
        preset: Option<Preset>,
        /// Defaults to search when the scene has cabinets, grasp otherwise.
        #[arg(long)]
        task: Option<Task>,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?.resolve(cli.seed, cli.out);
    match cli.command {
        Command::Query {
            scene,
            instances,
            embedding,
        } => commands::query(&cfg, &scene, &instances, &embedding),
        Command::PlanGrasp {
            scene,
            instances,
            embedding,
            grasps,
        } => commands::plan_grasp(&cfg, &scene, &instances, &embedding, &grasps),
        Command::MatchDrawers { frames } => commands::match_drawers(&cfg, &frames),
        Command::Simulate {
            scene,
            preset,
            task,
            episodes,
        } => {
            let preset = preset.map(|p| match p {
                Preset::Tabletop => SceneSpec::tabletop(),
                Preset::Cabinet => SceneSpec::cabinet(),
            });
            let task = task.map(|t| match t {
                Task::Grasp => TaskKind::Grasp,
                Task::Search => TaskKind::Search,
            });
            commands::simulate(&cfg, scene.as_deref(), preset, task, episodes)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors as 2, which is reserved here
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
