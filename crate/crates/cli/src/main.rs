mod commands;
mod config;
mod output;

use clap::Parser;
use commands::{Check, Failure};
use config::{Cli, Command, RunConfig};
use output::Outputs;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Serialize)]
struct Report<'a> {
    config: &'a RunConfig,
    version: &'static str,
    passed: bool,
    checks: &'a [Check],
    result: &'a serde_json::Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    version: &'static str,
    timestamp: u64,
    seed: u64,
    files: &'a [String],
    checks: Vec<(&'a str, bool)>,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn load_config(path: &PathBuf) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_value(v["config"].clone()).map_err(|e| format!("{}: no usable config echo ({e})", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match &cli.command {
        Command::Rerun { report } => match load_config(report) {
            Ok(c) => c,
            Err(m) => return usage_error(&m),
        },
        c => RunConfig::from_cli(c.clone(), &cli.opts),
    };
    if let Err(m) = cfg.validate() {
        return usage_error(&m);
    }
    let dir = cli.opts.out.clone().or_else(|| std::env::var_os("OUT_DIR").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let mut out = match Outputs::create(&dir) {
        Ok(o) => o,
        Err(e) => return usage_error(&format!("{}: {e}", dir.display())),
    };

    let outcome = match commands::run(&cfg, &mut out) {
        Ok(o) => o,
        Err(Failure::Config(m)) => return usage_error(&m),
        Err(Failure::Io(e)) => return usage_error(&format!("writing {}: {e}", dir.display())),
    };
    let passed = outcome.checks.iter().all(|c| c.passed);
    for c in &outcome.checks {
        eprintln!("{} {}: {:.3e} (tolerance {:.3e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.tolerance);
    }
    let report = Report { config: &cfg, version: env!("CARGO_PKG_VERSION"), passed, checks: &outcome.checks, result: &outcome.result };
    if let Err(e) = out.json("report.json", &report) {
        return usage_error(&format!("writing report: {e}"));
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    let manifest = Manifest {
        config: &cfg,
        version: env!("CARGO_PKG_VERSION"),
        timestamp,
        seed: cfg.seed,
        files: &files,
        checks: outcome.checks.iter().map(|c| (c.name.as_str(), c.passed)).collect(),
    };
    if let Err(e) = out.json("manifest.json", &manifest) {
        return usage_error(&format!("writing manifest: {e}"));
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
