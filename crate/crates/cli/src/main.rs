use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use gradtime_cli::config::{load_config, ExperimentConfig, ExperimentKind};
use gradtime_cli::runner::execute;
use gradtime_cli::verify;

/// Virtual-time analysis of parallel stochastic gradient methods:
/// implicit time-complexity sequences, method simulation against the exact
/// computation model, and lower-bound verification.
#[derive(Parser)]
#[command(name = "gradtime", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config's `output`, then $GRADTIME_OUT,
    /// then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path config overrides, e.g. `constants.epsilon=0.05`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an implicit time-complexity sequence.
    Bound(RunArgs),
    /// Simulate a method over seeds.
    Simulate(RunArgs),
    /// Run the lower-bound laboratory.
    Adversary(RunArgs),
    /// Run the verification suite and print a pass/fail table.
    Verify {
        /// Optional config; only its seed and output directory are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_out(config: &ExperimentConfig, cli_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or_else(|| config.output.clone())
        .or_else(|| std::env::var_os("GRADTIME_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(args: RunArgs, expected: ExperimentKind) -> Result<bool> {
    let mut config = load_config(&args.config, &args.overrides)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if config.experiment != expected {
        anyhow::bail!(
            "config declares experiment {:?}, but the {:?} subcommand was invoked",
            config.experiment,
            expected
        );
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = resolve_out(&config, args.out);
    let report = execute(&config, &out)?;
    for line in &report.lines {
        println!("{line}");
    }
    for artifact in &report.artifacts {
        println!("wrote {}", artifact.display());
    }
    Ok(report.all_passed)
}

fn run_verify(config: Option<PathBuf>, seed: Option<u64>, out: Option<PathBuf>) -> Result<bool> {
    let (base_seed, out_dir) = match config {
        Some(path) => {
            let mut parsed = load_config(&path, &[])?;
            if let Some(seed) = seed {
                parsed.seed = seed;
            }
            let out = resolve_out(&parsed, out);
            (parsed.seed, out)
        }
        None => (
            seed.unwrap_or(1),
            out.or_else(|| std::env::var_os("GRADTIME_OUT").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out")),
        ),
    };
    let reports = verify::run_all(base_seed);
    let mut all = true;
    let mut csv = String::from("id,name,pass,details\n");
    for r in &reports {
        all &= r.passed;
        println!("{}", r.render());
        csv.push_str(&format!(
            "{},{},{},\"{}\"\n",
            r.id,
            r.name,
            r.passed,
            r.details.replace('"', "'")
        ));
    }
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("verify.csv");
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    println!(
        "{}",
        if all {
            "all checks passed"
        } else {
            "SOME CHECKS FAILED"
        }
    );
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bound(args) => run(args, ExperimentKind::Bound),
        Command::Simulate(args) => run(args, ExperimentKind::Simulate),
        Command::Adversary(args) => run(args, ExperimentKind::Adversary),
        Command::Verify { config, seed, out } => run_verify(config, seed, out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
