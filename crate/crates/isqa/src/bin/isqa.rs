//! Benchmark CLI for the inexact SQA solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use isqa::cli::{audit_command, regen_fixtures, run_command};
use isqa::diagnostics::AuditKind;

#[derive(Parser)]
#[command(name = "isqa", about = "Inexact SQA benchmark harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every run in a config file, writing traces and a summary.
    Run {
        /// TOML benchmark configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for traces and summary.txt.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the configs' audit selection: all, none, or a
        /// comma-separated list (lemma2,lemma3,thm2_bound,floor,a4).
        #[arg(long)]
        audits: Option<String>,
    },
    /// Re-run diagnostics on a stored trace.
    Audit {
        /// Trace CSV produced by `isqa run`.
        #[arg(long)]
        trace: PathBuf,
        /// Config file describing the run that produced the trace.
        #[arg(long)]
        spec: PathBuf,
        /// Run id, required when the config expands to several runs.
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Rebuild the oracle reference fixtures.
    Fixtures {
        /// Actually regenerate (guards against accidental invocation).
        #[arg(long)]
        regen: bool,
        /// Overwrite an existing fixture file.
        #[arg(long)]
        force: bool,
        /// Fixture directory.
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

fn parse_audit_selection(raw: &str) -> Result<Option<Vec<AuditKind>>, isqa::Error> {
    match raw {
        "all" => Ok(Some(AuditKind::all())),
        "none" => Ok(Some(Vec::new())),
        list => {
            let kinds = list
                .split(',')
                .map(|s| AuditKind::parse(s.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Some(kinds))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            audits,
        } => {
            let selection = match audits.as_deref().map(parse_audit_selection) {
                Some(Ok(sel)) => sel,
                Some(Err(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
                None => None,
            };
            match run_command(&config, &out, jobs, selection.as_deref()) {
                Ok(all_ok) => {
                    println!(
                        "benchmark {}; summary at {}",
                        if all_ok { "ok" } else { "FAILED" },
                        out.join("summary.txt").display()
                    );
                    if all_ok {
                        Ok(())
                    } else {
                        return ExitCode::FAILURE;
                    }
                }
                Err(e) => Err(e),
            }
        }
        Command::Audit {
            trace,
            spec,
            run_id,
        } => match audit_command(&trace, &spec, run_id.as_deref()) {
            Ok(outcomes) => {
                let mut all_ok = true;
                for o in &outcomes {
                    println!(
                        "{}: {} ({})",
                        o.kind.label(),
                        if o.passed { "pass" } else { "FAIL" },
                        o.detail
                    );
                    all_ok &= o.passed;
                }
                if all_ok {
                    Ok(())
                } else {
                    return ExitCode::FAILURE;
                }
            }
            Err(e) => Err(e),
        },
        Command::Fixtures { regen, force, dir } => {
            if !regen {
                eprintln!("nothing to do: pass --regen to rebuild fixtures");
                return ExitCode::FAILURE;
            }
            match regen_fixtures(&dir, force) {
                Ok(path) => {
                    println!("fixtures written to {}", path.display());
                    Ok(())
                }
                Err(e) => Err(e),
            }
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
