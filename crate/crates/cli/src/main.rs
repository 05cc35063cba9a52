use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use colwave::run::RunError;
use colwave::{bundled, parse_ladder_override, run_text, validate, BUNDLED};

#[derive(Parser)]
#[command(name = "colwave", version, about = "Regularized wave and transport problems with discontinuous coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario id) and write its reports.
    Run {
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; falls back to COLWAVE_THREADS, then all cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Replace the ladder: "eps0,ratio,count".
        #[arg(long)]
        ladder_override: Option<String>,
    },
    /// Run all static checks without solving.
    Validate {
        scenario: String,
        #[arg(long)]
        ladder_override: Option<String>,
    },
    /// List the bundled scenarios.
    List,
}

fn load(arg: &str) -> Result<String, RunError> {
    let path = PathBuf::from(arg);
    if path.exists() {
        return std::fs::read_to_string(&path).map_err(|e| RunError::Io(format!("{arg}: {e}")));
    }
    bundled(arg).map(str::to_string).ok_or_else(|| RunError::Io(format!("{arg}: no such file or bundled scenario")))
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, RunError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("COLWAVE_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| RunError::Validation(format!("COLWAVE_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn main_inner(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::List => {
            for (id, text) in BUNDLED {
                let desc = text.lines().find_map(|l| l.strip_prefix("# ")).unwrap_or("");
                println!("{id:<16} {desc}");
            }
        }
        Command::Validate { scenario, ladder_override } => {
            let ladder = ladder_override.as_deref().map(parse_ladder_override).transpose()?;
            let sc = validate(&load(&scenario)?, ladder)?;
            println!("{}: ok ({}, {} ladder members, nx = {})", sc.id, sc.problem.name(), sc.ladder.count, sc.grid.nx);
        }
        Command::Run { scenario, out, threads: n, ladder_override } => {
            if let Some(n) = threads(n)? {
                if n == 0 {
                    return Err(RunError::Validation("--threads must be positive".into()));
                }
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| RunError::Validation(e.to_string()))?;
            }
            let ladder = ladder_override.as_deref().map(parse_ladder_override).transpose()?;
            let report = run_text(&load(&scenario)?, ladder, &out)?;
            println!("{}: done, outputs in {}", report.scenario_id, out.join(&report.scenario_id).display());
            if let Some(d) = &report.detection {
                print!("{}", colwave::report::verdict_txt(d));
            }
            for a in &report.associations {
                println!("associate {:?}: final {:.3e}, decreasing {}, pass {}", a.psi, a.verdict.final_error, a.verdict.decreasing, a.verdict.pass);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("colwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
