use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gdde_cli::problem::list_problems_text;
use gdde_cli::{
    compare_dir, load_config, render_compare_table, render_summary_table, run_experiment,
    show_defaults_text, HarnessError,
};

/// Surrogate-assisted differential-evolution experiment harness.
#[derive(Parser)]
#[command(name = "gdde", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm x seed) combination from a TOML configuration.
    Run {
        /// Path to the experiment configuration file.
        config: PathBuf,
        /// Output directory [default: runs/<config file stem>]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum concurrent runs [default: available CPU parallelism]
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare finished runs found in an output directory.
    Compare {
        /// Directory holding the trace CSVs of at least two algorithms.
        dir: PathBuf,
    },
    /// List available benchmark functions and reservoir cases.
    ListProblems,
    /// Print an annotated configuration with every default value.
    ShowDefaults,
}

fn default_out_dir(config_path: &Path) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".to_string());
    PathBuf::from("runs").join(stem)
}

fn dispatch(cli: Cli) -> gdde_cli::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
        } => {
            let cfg = load_config(&config)?;
            let out_dir = out.unwrap_or_else(|| default_out_dir(&config));
            let workers = match workers {
                Some(0) => return Err(HarnessError::Config("--workers must be at least 1".into())),
                Some(n) => n,
                None => std::thread::available_parallelism()
                    .map(usize::from)
                    .unwrap_or(1),
            };
            let summary = run_experiment(&cfg, &out_dir, workers)?;
            print!("{}", render_summary_table(&summary));
            println!("outputs written to {}", out_dir.display());
            Ok(())
        }
        Command::Compare { dir } => {
            let report = compare_dir(&dir)?;
            print!("{}", render_compare_table(&report));
            Ok(())
        }
        Command::ListProblems => {
            print!("{}", list_problems_text());
            Ok(())
        }
        Command::ShowDefaults => {
            print!("{}", show_defaults_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print on stdout and succeed; actual usage
            // mistakes are configuration errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
