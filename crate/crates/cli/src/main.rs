use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fitolab::functional::catalog_entries;
use fitolab::lab::{run_experiment, ExperimentConfig, RunOptions, SEED_ENV, THREADS_ENV};
use fitolab::{Error, ErrorKind};

/// Functional Ito calculus lab: runs experiments from JSON configs and
/// browses the functional catalog.
///
/// Exit codes: 0 success, 2 config or usage error, 3 numerical failure,
/// 4 I/O error. Failures print a JSON object to stderr.
#[derive(Debug, Parser)]
#[command(name = "fitolab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on this).
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
        /// Replace an existing output directory.
        #[arg(long)]
        force: bool,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the functional catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// One line per functional: id, dimension, claims, formula.
    List,
    /// Full JSON description of one functional.
    Show { id: String },
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Numerical => "numerical",
        ErrorKind::Io => "io",
    }
}

fn fail(kind: &str, code: u8, message: &str) -> ExitCode {
    let body = serde_json::json!({ "error": { "kind": kind, "code": code, "message": message } });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn claims_label(e: &fitolab::functional::CatalogEntry) -> String {
    let mut tags = Vec::new();
    if e.claims.is_martingale {
        tags.push("martingale");
    }
    if e.claims.is_strict_local_martingale {
        tags.push("strict-local");
    }
    if e.claims.is_c12b {
        tags.push("c12b");
    }
    if tags.is_empty() {
        "-".into()
    } else {
        tags.join(",")
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", 2, e.to_string().trim()),
    };
    let result = match cli.command {
        Command::Catalog { action: CatalogAction::List } => {
            for e in catalog_entries() {
                println!("{:<20} d={}  {:<26} {}", e.id, e.dim, claims_label(e), e.formula);
            }
            Ok(())
        }
        Command::Catalog { action: CatalogAction::Show { id } } => {
            match catalog_entries().iter().find(|e| e.id == id) {
                Some(e) => serde_json::to_string_pretty(e).map(|s| println!("{s}")).map_err(Error::from),
                None => Err(Error::Config(format!("unknown functional `{id}`"))),
            }
        }
        Command::Run {
            config,
            seed,
            threads,
            force,
            out,
        } => ExperimentConfig::load(&config).and_then(|c| {
            let opts = RunOptions { seed, threads, force, out };
            let outcome = run_experiment(&c, &opts)?;
            let summary = serde_json::json!({
                "out_dir": outcome.out_dir,
                "files": outcome.artifacts.files.iter().map(|(n, _)| n).collect::<Vec<_>>(),
                "checks_passed": outcome.artifacts.report.all_checks_passed(),
                "checks": outcome.artifacts.report.checks.iter()
                    .map(|c| serde_json::json!({ "name": c.name, "passed": c.passed }))
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            fail(kind_name(kind), exit_code(kind), &e.to_string())
        }
    }
}
