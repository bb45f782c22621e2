use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shipwake::cli::{self, CliError, SEED_ENV};
use shipwake::config::PipelineConfig;

/// Ship detection with backwash cancellation for fixed-camera coastal video.
///
/// Any config key can be overridden with `--section.key=value`, e.g.
/// `--model.r1=8 --io.input=frames/`.
#[derive(Parser)]
#[command(name = "shipwake", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `section.key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// `--section.key=value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and track ships in a frame sequence.
    Detect {
        /// Write every intermediate mask under `<io.output>/stages`.
        #[arg(long)]
        dump_stages: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Score detections against ground truth.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Render a synthetic scene with ground truth.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Time the detector at several frame sizes.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<PipelineConfig, CliError> {
    let seed = std::env::var(SEED_ENV).ok();
    Ok(cli::resolve_config(common.config.as_deref(), &common.overrides, seed.as_deref())?)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Detect { dump_stages, common } => {
            let config = load(&common)?;
            let s = cli::run_detect(&config, dump_stages)?;
            println!(
                "{} frames read, {} processed, {} boxes -> {}",
                s.frames,
                s.processed,
                s.boxes,
                s.detections_path.display()
            );
            if let Some(t) = s.timing {
                println!("timing {}", t.render());
            }
        }
        Command::Eval { common } => {
            let config = load(&common)?;
            print!("{}", cli::run_eval(&config)?.render_text());
        }
        Command::Synth { common } => {
            let config = load(&common)?;
            let n = cli::run_synth(&config)?;
            println!("{n} frames written to {}", config.io.output.display());
        }
        Command::Bench { common } => {
            let config = load(&common)?;
            let rows = cli::run_bench(&config)?;
            for row in &rows {
                println!("{} ({} boxes)", row.timing.render(), row.boxes);
            }
            if let [small, large] = rows.as_slice() {
                let pixels = (large.timing.width * large.timing.height) as f64
                    / (small.timing.width * small.timing.height) as f64;
                println!(
                    "latency ratio {:.2} for {:.2}x pixels",
                    large.timing.mean_ns / small.timing.mean_ns,
                    pixels
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shipwake: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
