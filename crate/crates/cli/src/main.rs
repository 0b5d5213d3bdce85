//! `netsar`: simulate base-station measurements, reconstruct ground images,
//! and run the analysis checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netsar::run::{self, Analysis, RunConfig};

#[derive(Parser)]
#[command(name = "netsar", version, about = "Ground imaging from multi-static OFDM base-station measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (`section.key = value` lines). Defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Root seed; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` assignments applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every slot and write a measurement dataset.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct a dataset with the configured algorithm.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Dataset directory written by `simulate`. Its config.txt is used when
        /// `--config` is absent.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run an analysis check.
    Analyze {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
    /// Generate the ground-truth scene and export it.
    Scene {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    SliceCheck,
    OnedimMse,
    Tradeoff,
}

fn load_config(common: &Common, fallback: Option<&Path>) -> Result<RunConfig> {
    let path = common
        .config
        .clone()
        .or_else(|| fallback.filter(|p| p.is_file()).map(Path::to_path_buf));
    let mut cfg = match &path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&common.overrides)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn print_lines(lines: &[(String, String)]) {
    for (k, v) in lines {
        println!("{k}: {v}");
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load_config(&common, None)?;
            let m = run::simulate_to_dir(&cfg, &common.out)?;
            println!("patches: {}", m.get("patch_count").unwrap_or("0"));
            println!("manifest: {}", common.out.join(run::dataset::MANIFEST).display());
        }
        Command::Reconstruct { common, dataset } => {
            let cfg = load_config(&common, Some(&dataset.join("config.txt")))?;
            let (rec, _) = run::reconstruct_dataset(&cfg, &dataset, &common.out)?;
            print_lines(&rec.report.lines);
        }
        Command::Analyze { which, common } => {
            let cfg = load_config(&common, None)?;
            let which = match which {
                Which::SliceCheck => Analysis::SliceCheck,
                Which::OnedimMse => Analysis::OneDimMse,
                Which::Tradeoff => Analysis::Tradeoff,
            };
            let (report, _) = run::analyze(&cfg, which, &common.out)?;
            print_lines(&report.lines);
        }
        Command::Scene { common } => {
            let cfg = load_config(&common, None)?;
            run::export_scene(&cfg, &common.out)?;
            println!("scene: {}", common.out.join("scene.pgm").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
