use clap::{Args, Parser, Subcommand};
use fracstefan_cli::{
    execute_audit, execute_limit, execute_run, execute_study, CliError, CommandOptions,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// One-phase Stefan problem with a space-fractional flux law.
#[derive(Parser)]
#[command(name = "fracstefan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory the artifacts are written into.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the randomized audits.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat warnings (trivial data, stalled fronts, clamping) as failures.
    #[arg(long)]
    strict_audits: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write front.csv, snapshots/,
    /// audit.json, and (in fixed-point mode) iteration.log.
    Run(CommonArgs),
    /// Run the full audit suite against the configured problem.
    Audit(CommonArgs),
    /// Refinement study: convergence orders for a fixed-front solve and
    /// the free-boundary marcher.
    Study(CommonArgs),
    /// Compare the fractional solver against a classical reference on the
    /// same data; meaningful for alpha near 1.
    Limit(CommonArgs),
}

fn options(args: &CommonArgs) -> CommandOptions<'_> {
    CommandOptions {
        config_path: &args.config,
        out_dir: &args.out,
        seed: args.seed,
        strict_audits: args.strict_audits,
    }
}

fn report_error(e: &CliError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => match execute_run(&options(args)) {
            Ok(summary) => {
                println!(
                    "run complete: s(T) = {:.12}, artifacts in {}",
                    summary.final_front,
                    summary.out_dir.display()
                );
                for w in &summary.warnings {
                    println!("warning: {w}");
                }
                if summary.audits_passed {
                    println!("audits: pass");
                    ExitCode::SUCCESS
                } else {
                    println!("audits: FAIL (see audit.json)");
                    ExitCode::from(1)
                }
            }
            Err(e) => report_error(&e),
        },
        Command::Audit(args) => match execute_audit(&options(args)) {
            Ok(summary) => {
                print!("{}", summary.table);
                for w in &summary.warnings {
                    println!("warning: {w}");
                }
                if summary.passed {
                    println!("audit suite: pass");
                    ExitCode::SUCCESS
                } else {
                    println!("audit suite: FAIL");
                    ExitCode::from(1)
                }
            }
            Err(e) => report_error(&e),
        },
        Command::Study(args) => match execute_study(&options(args)) {
            Ok(summary) => {
                println!(
                    "{:<26} {:>14} {:>14} {:>14} {:>8}",
                    "observable", "coarse", "medium", "fine", "order"
                );
                for row in &summary.rows {
                    println!(
                        "{:<26} {:>14.8e} {:>14.8e} {:>14.8e} {:>8.3}",
                        row.observable,
                        row.values[0],
                        row.values[1],
                        row.values[2],
                        row.observed_order
                    );
                }
                ExitCode::SUCCESS
            }
            Err(e) => report_error(&e),
        },
        Command::Limit(args) => match execute_limit(&options(args)) {
            Ok(summary) => {
                println!(
                    "fractional s(T) = {:.10}, classical s(T) = {:.10}, relative gap = {:.4e}",
                    summary.fractional_final, summary.classical_final, summary.relative_gap
                );
                ExitCode::SUCCESS
            }
            Err(e) => report_error(&e),
        },
    }
}
