use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hjs_lab::{exit, parse_config, write_error_report, LabError, Scenario, VERSION};

#[derive(Parser)]
#[command(name = "hjs-lab", about = "Run HJS simulation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `outdir` in the file.
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Override a config entry, e.g. `--set N=2048`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the available scenarios.
    ListScenarios,
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListScenarios => {
            for sc in Scenario::ALL {
                println!("{:<20} {}", sc.name(), sc.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("hjs-lab {VERSION}");
            ExitCode::SUCCESS
        }
        Command::Run { config, outdir, set } => ExitCode::from(run(&config, outdir, &set)),
    }
}

fn run(path: &PathBuf, outdir: Option<PathBuf>, set: &[String]) -> u8 {
    let parsed = fs::read_to_string(path)
        .map_err(|source| LabError::Io { path: path.clone(), source })
        .and_then(|text| Ok(parse_config(&text, set, outdir.as_deref())?));
    let cfg = match parsed {
        Ok(cfg) => cfg,
        Err(e) => {
            let info = e.info();
            eprintln!("hjs-lab: {}", info.message);
            if let Some(dir) = &outdir {
                if let Err(e) = write_error_report(dir, &info) {
                    eprintln!("hjs-lab: cannot write report: {e}");
                }
            }
            return info.exit_code;
        }
    };
    let (code, result) = hjs_lab::execute(&cfg);
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                let tag = if c.pass { "ok  " } else { "FAIL" };
                let op = if c.relation == "below" { "<" } else { ">" };
                println!("{tag} {:<44} {:>11.3e} {op} {:e}", c.name, c.value, c.bound);
            }
        }
        Err(e) => eprintln!("hjs-lab: {} error: {}", e.kind, e.message),
    }
    let verdict = match code {
        exit::PASS => "PASS",
        exit::TOLERANCE => "FAIL (tolerance)",
        exit::CONFIG => "ERROR (configuration)",
        _ => "ERROR (numerical)",
    };
    println!("{}: {verdict}; report in {}", cfg.scenario.name(), cfg.outdir.join("report.json").display());
    code
}
