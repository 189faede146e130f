use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sign_game::cli::{cmd_report, cmd_run, cmd_sweep, CommandError, EXIT_USAGE};
use sign_game::report::{ReportKind, DEFAULT_THRESHOLDS};
use sign_game::AgreementMetric;

#[derive(Parser)]
#[command(name = "sign", version, about = "Schema-induced naming game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one game from a config file and write its JSON-lines log.
    Run {
        config: PathBuf,
        /// Log path (default: <config stem>.jsonl).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every cell of a sweep spec, skipping completed logs.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Output directory (default: the sweep spec's output_dir, else runs/<stem>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write CSV reports from a directory of run logs.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS.to_vec())]
        thresholds: Vec<f64>,
        #[arg(long, value_enum)]
        metric: Option<Metric>,
        /// Output directory (default: the log directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Table1,
    Curves,
    Tokens,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Pairwise,
    Modal,
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Run { config, out } => {
            let (path, log) = cmd_run(&config, out.as_deref())?;
            println!("log: {}", path.display());
            println!(
                "final {} agreement: {:.4}",
                log.config.agreement_metric.as_str(),
                log.final_agreement().unwrap_or(0.0)
            );
            println!("total tokens: {}", log.total_tokens());
        }
        Command::Sweep {
            spec,
            parallelism,
            out,
        } => {
            let (dir, outcome) = cmd_sweep(&spec, parallelism, out.as_deref())?;
            println!(
                "{}: {} run, {} already complete",
                dir.display(),
                outcome.ran.len(),
                outcome.skipped.len()
            );
        }
        Command::Report {
            dir,
            kind,
            thresholds,
            metric,
            out,
        } => {
            if let Some(bad) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
                eprintln!("error: threshold {bad} is outside (0, 1]");
                std::process::exit(EXIT_USAGE);
            }
            let kind = match kind {
                Kind::Table1 => ReportKind::Table1,
                Kind::Curves => ReportKind::Curves,
                Kind::Tokens => ReportKind::Tokens,
            };
            let metric = metric.map(|m| match m {
                Metric::Pairwise => AgreementMetric::Pairwise,
                Metric::Modal => AgreementMetric::Modal,
            });
            for path in cmd_report(&dir, kind, &thresholds, metric, out.as_deref())? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CommandError::SweepFailures(outcome) = &e {
                for (path, reason) in &outcome.failed {
                    eprintln!("  {}: {reason}", path.display());
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
