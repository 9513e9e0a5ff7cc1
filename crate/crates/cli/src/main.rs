use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holoqd_cli::config::{ConfigIssue, Experiment, ExperimentConfig, VerifyAllParams};
use holoqd_cli::report::Report;
use holoqd_cli::{exit_code, load_config, run_experiment, EXIT_CONFIG, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "holoqd", version, about = "Holonomic gates in quantum-dot networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run { config: PathBuf },
    /// Check a configuration and print it with every default filled in.
    Validate { config: PathBuf },
    /// Run the full verification suite.
    VerifyAll {
        /// Integrator tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Output directory (the HOLOQD_OUTPUT_DIR variable takes precedence).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_issues(issues: &[ConfigIssue]) {
    eprintln!("configuration rejected ({} issue{}):", issues.len(), if issues.len() == 1 { "" } else { "s" });
    for i in issues {
        eprintln!("  - {i}");
    }
}

fn summarise(report: &Report) {
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} {:<48} {:>12.4e} {} {:.1e}",
            c.name,
            c.value,
            serde_json::to_value(c.comparison).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
            c.threshold
        );
    }
    if let Some(f) = &report.failure {
        eprintln!("numerical failure: {f}");
    }
    for c in report.failed_checks() {
        eprintln!("failed check: {}", serde_json::to_string(c).unwrap_or_default());
    }
    println!("{}", if report.passed { "all checks passed" } else { "checks FAILED" });
}

fn execute(config: &ExperimentConfig) -> ExitCode {
    match run_experiment(config) {
        Ok(report) => {
            summarise(&report);
            ExitCode::from(exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("cannot write outputs to {}: {e}", config.output_dir().display());
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match load_config(&config) {
            Ok(c) => execute(&c),
            Err(issues) => {
                print_issues(&issues);
                ExitCode::from(EXIT_CONFIG as u8)
            }
        },
        Command::Validate { config } => match load_config(&config) {
            Ok(c) => {
                println!("{}", serde_json::to_string_pretty(&c.effective()).unwrap_or_default());
                ExitCode::SUCCESS
            }
            Err(issues) => {
                print_issues(&issues);
                ExitCode::from(EXIT_CONFIG as u8)
            }
        },
        Command::VerifyAll { tolerance, output, seed } => {
            let mut params = VerifyAllParams::default();
            if let Some(t) = tolerance {
                params.tolerance = t;
            }
            let mut config = ExperimentConfig::new(Experiment::VerifyAll(params));
            config.seed = seed;
            if let Some(dir) = output {
                config.output_path = dir;
            }
            let issues = holoqd_cli::config::validate(&config);
            if !issues.is_empty() {
                print_issues(&issues);
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            execute(&config)
        }
    }
}
