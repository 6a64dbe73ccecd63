use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gflow_cli::{exit, parse_config, scenario};

/// Run a gflow scenario described by a configuration file.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// evolve | check-lemmas | classify | envelope | soliton | deturck-compare | entropy
    scenario: String,
    /// Configuration file (TOML sections)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding output.directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Set a single key, e.g. --override grid.n=32
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = std::env::var("GFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = match parse_config(&cli.config, Some(&cli.scenario), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gflow: {}: {e}", cli.config.display());
            if let Some(dir) = &cli.out {
                if let Err(io) = scenario::write_config_error(dir, &cli.scenario, &e.to_string()) {
                    eprintln!("gflow: {}: {io}", dir.display());
                }
            }
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    if let Some(dir) = cli.out {
        cfg.output.directory = dir;
    }
    match scenario::execute(&cfg) {
        Ok(outcome) => {
            let r = &outcome.report;
            for c in &r.checks {
                println!("{:<40} {}", c.name, if c.pass { "pass" } else { "FAIL" });
            }
            if let Some(err) = &r.error {
                eprintln!("gflow: {err}");
            }
            if let Some(gflow_core::flow::Termination::Aborted { kind, message, t }) = &r.termination {
                eprintln!("gflow: aborted at t = {t}: {kind}: {message}");
            }
            println!("{}: {:?} -> {}", r.scenario, r.status, cfg.output.directory.display());
            ExitCode::from(r.exit_code as u8)
        }
        Err(e) => {
            eprintln!("gflow: writing to {}: {e}", cfg.output.directory.display());
            ExitCode::from(exit::IO as u8)
        }
    }
}
