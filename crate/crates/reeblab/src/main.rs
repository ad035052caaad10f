//! Thin CLI over the scenario runner and the shipped object library.
//!
//! Exit codes: 0 when every check passes, 1 when a numerical check or the
//! underlying machinery fails, 2 for config and usage errors. Reports are
//! byte-identical for identical config and seed; wall-clock metadata goes
//! in a `.meta.json` sidecar, never in the report.

use clap::{Parser, Subcommand};
use reeblab::formats::json_bytes;
use reeblab::scenario::{self, RunOutput};
use reeblab::{library, Error};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Print without dying on a closed pipe (`reeblab list | head`).
fn emit(line: std::fmt::Arguments) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

#[derive(Parser)]
#[command(name = "reeblab", version, about = "Certified bounds for Reeb flows and contact Hamiltonian paths")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario config and write its report and tables.
    Run {
        /// TOML scenario file.
        config: PathBuf,
        /// Output directory (default: the config's `out`, else ./reports).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config grid scale.
        #[arg(long = "grid-scale")]
        grid_scale: Option<f64>,
    },
    /// List the shipped paths, families, and spacetimes.
    List {
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
        /// Restrict by `kind=...` or `model=...`; repeatable.
        #[arg(long = "filter", value_name = "KEY=VALUE")]
        filters: Vec<String>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { config, out, seed, grid_scale } => run(&config, out, seed, grid_scale),
        Cmd::List { json, filters } => list(json, &filters),
    }
}

fn usage_exit(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn run(config: &Path, out: Option<PathBuf>, seed: Option<u64>, grid_scale: Option<f64>) -> ExitCode {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => return usage_exit(&format!("cannot read {}: {e}", config.display())),
    };
    let mut cfg = match scenario::parse_config(&text) {
        Ok(c) => c,
        Err(Error::Parse { line, detail }) => {
            return usage_exit(&format!("{}:{line}: {detail}", config.display()))
        }
        Err(e) => return usage_exit(&e.to_string()),
    };
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    if let Some(g) = grid_scale {
        cfg.grid_scale = g;
    }
    if let Err(e) = cfg.validate() {
        return usage_exit(&e.to_string());
    }

    let out_dir = out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("reports"));

    let output = match scenario::run(&cfg) {
        Ok(o) => o,
        Err(Error::Config(msg)) => return usage_exit(&msg),
        Err(e) => {
            eprintln!("run failed: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_output(&out_dir, &cfg.kind, &output) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(1);
    }

    for c in &output.report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        say!("{status} {} {} {} {}", c.name, c.value, c.cmp, c.bound);
    }
    let n = output.report.checks.len();
    if output.report.pass {
        say!("ok: {n} checks passed; report in {}", out_dir.display());
        ExitCode::SUCCESS
    } else {
        let first = output.report.checks.iter().find(|c| !c.pass).unwrap();
        say!("FAILED at '{}'; report in {}", first.name, out_dir.display());
        ExitCode::from(1)
    }
}

fn write_output(dir: &Path, kind: &str, output: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let report_name = format!("report-{kind}.json");
    let bytes = json_bytes(&output.report)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    std::fs::write(dir.join(&report_name), bytes)?;
    let mut files = vec![report_name.clone()];
    for (name, contents) in &output.tables {
        std::fs::write(dir.join(name), contents)?;
        files.push(name.clone());
    }
    let written = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({ "written_unix_seconds": written, "files": files });
    std::fs::write(dir.join(format!("report-{kind}.meta.json")), format!("{meta:#}\n"))
}

fn list(json: bool, filters: &[String]) -> ExitCode {
    let mut want_kind: Option<String> = None;
    let mut want_model: Option<String> = None;
    for f in filters {
        let Some((k, v)) = f.split_once('=') else {
            return usage_exit(&format!("filter '{f}' is not KEY=VALUE"));
        };
        match k {
            "kind" => want_kind = Some(v.to_string()),
            "model" => want_model = Some(v.to_string()),
            other => return usage_exit(&format!("unknown filter key '{other}'; use kind or model")),
        }
    }
    let entries: Vec<_> = library::inventory()
        .into_iter()
        .filter(|e| want_kind.as_deref().is_none_or(|k| e.kind.name() == k))
        .filter(|e| want_model.as_deref().is_none_or(|m| e.model == m))
        .collect();
    if json {
        match json_bytes(&entries) {
            Ok(b) => {
                let _ = std::io::stdout().write_all(&b);
            }
            Err(e) => return usage_exit(&e.to_string()),
        }
    } else {
        for e in &entries {
            say!("{:<10} {:<6} {:<20} {}", e.kind.name(), e.model, e.id, e.summary);
        }
        say!("{} entries", entries.len());
    }
    ExitCode::SUCCESS
}
