use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nvne::config::{bundled_examples, ScenarioConfig};
use nvne::scenario::{evaluate, write_artifacts};

/// Darboux soliton solutions of the nonlinear von Neumann equation.
#[derive(Parser)]
#[command(name = "nvne", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the solution, run all checks and write CSV series and the report.
    Run { config: PathBuf },
    /// Run the checks only.
    Verify { config: PathBuf },
    /// Write the bundled example scenarios into a directory.
    ExportExamples { dir: PathBuf },
}

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => scenario(&config, true),
        Command::Verify { config } => scenario(&config, false),
        Command::ExportExamples { dir } => match export_examples(&dir) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}

fn export_examples(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in bundled_examples() {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn scenario(path: &Path, write: bool) -> ExitCode {
    let cfg = match ScenarioConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let run = match evaluate(&cfg) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("config error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    print!("{}", run.report);

    let mut report_path = None;
    if write {
        let base = path.parent().unwrap_or(Path::new("."));
        match write_artifacts(&cfg, &run, &cfg.output_dir(base)) {
            Ok(a) => {
                println!("wrote {}", a.solution_csv.display());
                if let Some(s) = &a.series_csv {
                    println!("wrote {}", s.display());
                }
                println!("wrote {}", a.report_json.display());
                report_path = Some(a.report_json);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }

    if run.report.all_passed() {
        ExitCode::SUCCESS
    } else {
        let failed: Vec<&str> = run.report.failures().map(|r| r.name.as_str()).collect();
        eprintln!("{} check(s) failed: {}", failed.len(), failed.join(", "));
        if let Some(p) = report_path {
            eprintln!("report: {}", p.display());
        }
        ExitCode::from(EXIT_CHECKS_FAILED)
    }
}
