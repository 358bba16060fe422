use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frgnn_cli::commands::{
    cmd_export_plots, cmd_fr, cmd_matrix, cmd_sample_bias, cmd_train, cmd_validate_theory,
};
use frgnn_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "frgnn", version, about = "Test-time feature reconstruction for GNNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; every key has a default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces every seed list (split, init, theory) with this one seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one base model.
    Train(Common),
    /// Reconstruct features for a trained model (from --run, or trained now).
    Fr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Run every split × init cell and aggregate.
    Matrix(Common),
    /// Write biased splits for every split seed.
    SampleBias(Common),
    /// Monte-Carlo checks of the concentration and Lipschitz bounds.
    ValidateTheory(Common),
    /// PCA scatter plots of a run's embeddings.
    ExportPlots {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Common {
    fn config(&self) -> CliResult<RunConfig> {
        let config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(match self.seed {
            Some(s) => config.with_seed(s),
            None => config,
        })
    }

    fn out(&self, default: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(default))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let dir = match cli.command {
        Command::Train(c) => cmd_train(&c.config()?, &c.out("train"))?,
        Command::Fr { common, run } => {
            let out = match (&common.out, &run) {
                (None, Some(r)) => r.join("fr"),
                _ => common.out("fr"),
            };
            cmd_fr(&common.config()?, run.as_deref(), &out)?
        }
        Command::Matrix(c) => cmd_matrix(&c.config()?, &c.out("matrix"))?,
        Command::SampleBias(c) => cmd_sample_bias(&c.config()?, &c.out("sample-bias"))?,
        Command::ValidateTheory(c) => {
            let (dir, pass) = cmd_validate_theory(&c.config()?, &c.out("theory"))?;
            if !pass {
                return Err(CliError::Internal(format!(
                    "theory checks failed; see {}",
                    dir.display()
                )));
            }
            dir
        }
        Command::ExportPlots { run, out } => {
            let out = out.unwrap_or_else(|| run.join("plots"));
            cmd_export_plots(&run, &out)?
        }
    };
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
