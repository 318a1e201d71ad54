use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hdmc_bounds::sweep::SweepConfig;
use hdmc_cli::config::{ConfigSource, Variant, STEP_SIZES};
use hdmc_cli::experiment::{best_series, final_interval, run, summarize};
use hdmc_cli::output::{experiment_csv, line_chart, only};
use hdmc_cli::play::{transcript, PlayPolicy};
use hdmc_cli::verify::{self, parse_check};
use hdmc_cli::{CliError, EXIT_OK, EXIT_VERIFICATION_FAILED};

#[derive(Parser)]
#[command(name = "hdmc", about = "Hallucinated DAgger-MC workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and emit per-iteration records plus a summary.
    Run {
        /// Flat `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one key, e.g. `--set trials=5`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a line chart of the summary.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Run every step size in {0.005, 0.01, 0.05, 0.1, 0.5} as its own series.
        #[arg(long)]
        sweep_alpha: bool,
        /// Like --sweep-alpha, but keep only the series with the best
        /// final-10-iteration mean.
        #[arg(long, conflicts_with = "sweep_alpha")]
        best_alpha: bool,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Check the value-error inequalities on random tabular instances.
    VerifyBounds {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        /// Discounts, used round-robin across instances.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.9")]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        max_reward: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Margins CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-check the single instance serialized in this file.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Flip one check's verdict (harness self-test).
        #[arg(long, hide = true)]
        invert: Option<String>,
    },
    /// Print an episode as ASCII frames with per-step rewards.
    Play {
        #[arg(long, default_value = "a")]
        variant: String,
        #[arg(long, value_enum, default_value_t = PlayPolicy::Expert)]
        policy: PlayPolicy,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run {
            config,
            overrides,
            out,
            svg,
            sweep_alpha,
            best_alpha,
            print_config,
        } => {
            let mut src = ConfigSource::default();
            if let Some(path) = &config {
                src.read_text(&read(path)?)?;
            }
            for o in &overrides {
                src.read_override(o)?;
            }
            if sweep_alpha || best_alpha {
                let list: Vec<String> = STEP_SIZES.iter().map(f64::to_string).collect();
                src.set("step_sizes", &list.join(","))?;
            }
            let cfg = src.build()?;
            if print_config {
                emit(None, &cfg.to_text())?;
                return Ok(EXIT_OK);
            }
            let mut records = run(&cfg)?;
            if best_alpha {
                if let Some(best) = best_series(&records) {
                    let iv = final_interval(&records, &best, 10);
                    eprintln!("best: {} (final-10 mean {})", best.label(), iv.mean);
                    records = only(&records, &best);
                }
            }
            let summary = summarize(&records);
            emit(out.as_deref(), &experiment_csv(&records, &summary))?;
            if let Some(path) = &svg {
                let title = format!("variant {}: {} iterations, {} trials", cfg.variant.name(), cfg.iterations, cfg.trials);
                emit(Some(path), &line_chart(&title, &summary))?;
            }
            Ok(EXIT_OK)
        }
        Command::VerifyBounds {
            count,
            states,
            actions,
            horizon,
            gammas,
            max_reward,
            seed,
            out,
            replay,
            invert,
        } => {
            let invert = invert.as_deref().map(parse_check).transpose()?;
            let outcome = match &replay {
                Some(path) => verify::replay(&read(path)?, invert)?,
                None => {
                    let mut cfg = SweepConfig::new(count, states, actions, horizon, seed);
                    cfg.gammas = gammas;
                    cfg.max_reward = max_reward;
                    cfg.invert = invert;
                    verify::sweep(&cfg)?
                }
            };
            emit(out.as_deref(), &outcome.csv())?;
            match outcome.first_failure() {
                None => {
                    let above = outcome.reports.iter().filter(|r| r.thm3_above_eq4).count();
                    eprintln!(
                        "{} instances: all checks hold ({above} with the hallucinated bound above eq4)",
                        outcome.reports.len()
                    );
                    Ok(EXIT_OK)
                }
                Some(r) => {
                    let names: Vec<&str> = r.failures.iter().map(|c| c.name()).collect();
                    eprintln!("# violated: {}", names.join(", "));
                    eprintln!("# first violating instance; this block is valid --replay input");
                    eprint!("{}", r.describe()?);
                    Ok(EXIT_VERIFICATION_FAILED)
                }
            }
        }
        Command::Play {
            variant,
            policy,
            steps,
            seed,
        } => {
            let v = Variant::parse(&variant).ok_or_else(|| CliError::Config(format!("unknown variant {variant:?}")))?;
            emit(None, &transcript(v, policy, steps, seed))?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("hdmc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
