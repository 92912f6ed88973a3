use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chiralwire::app::validate::Status;
use chiralwire::app::{self, RunConfig};
use chiralwire::error::{Error, Result};

#[derive(Parser)]
#[command(name = "chiralwire", version, about = "Design thin metallic nanowires with maximal em-chirality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset applied before the file: twist-only, spine-only, helix-campaign.
    #[arg(long)]
    preset: Option<String>,
    /// Per-key override, e.g. `--set f_opt_thz=600`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one design.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Continue from a checkpoint file instead of starting afresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a fixed geometry over a frequency range.
    Scan {
        #[command(flatten)]
        common: Common,
    },
    /// Optimize from many sampled helices and rank the results.
    Multistart {
        #[command(flatten)]
        common: Common,
    },
    /// Run the property suites and report per-suite status.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Write a triangulated tube mesh of a geometry.
    Export {
        #[command(flatten)]
        common: Common,
        /// Tube thickness in metres; the geometry file's value when absent.
        #[arg(long)]
        rho_m: Option<f64>,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let base = match &common.preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::default(),
    };
    let cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            base.merge_str(&text)?
        }
        None => base,
    };
    let cfg = cfg.with_overrides(&common.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Optimize { common, resume } => {
            let out = match resume {
                Some(path) => {
                    if common.config.is_some() || common.preset.is_some() {
                        return Err(Error::Config("--resume takes its configuration from the checkpoint".into()));
                    }
                    app::run_resume(&path, &common.overrides)?
                }
                None => app::run_optimize(&load(&common)?)?,
            };
            let r = &out.evaluation.report;
            println!(
                "{:?} after {} iterations: J2 = {:.6}, J_HS = {:.6}, |T|_HS = {:.6e}",
                out.termination, out.iterations, r.j2, r.j_hs, r.hs_norm
            );
            Ok(true)
        }
        Command::Scan { common } => {
            let cfg = load(&common)?;
            let rows = app::run_scan(&cfg)?;
            if let Some(peak) = rows.iter().max_by(|a, b| a.hs_norm.total_cmp(&b.hs_norm)) {
                println!("{} frequencies; |T|_HS peaks at {} THz", rows.len(), peak.f_thz);
            }
            Ok(true)
        }
        Command::Multistart { common } => {
            let cfg = load(&common)?;
            let entries = app::run_multistart(&cfg)?;
            for (rank, e) in entries.iter().enumerate().take(5) {
                let r = &e.outcome.evaluation.report;
                println!("#{} run {} (seed {}): J2 = {:.6}, J_HS = {:.6}", rank + 1, e.run, e.seed, r.j2, r.j_hs);
            }
            Ok(true)
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            let report = app::run_validate(&cfg)?;
            for s in &report.suites {
                let tag = match s.status {
                    Status::Pass => "PASS",
                    Status::Warn => "WARN",
                    Status::Fail => "FAIL",
                };
                println!("{tag} {}: {}", s.name, s.detail);
            }
            Ok(report.passed())
        }
        Command::Export { common, rho_m } => {
            let cfg = load(&common)?;
            for w in app::run_export(&cfg, rho_m)? {
                eprintln!("WARNING: {w}");
            }
            println!("wrote {}", cfg.output_dir.join("mesh.txt").display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
