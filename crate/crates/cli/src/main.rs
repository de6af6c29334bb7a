use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use finsler_core::models::{catalog, catalog_entry};
use finsler_core::scenario::{emit, load_config, run, write_timing, Format, ScenarioConfig};
use finsler_core::validate::validate_entry;
use finsler_core::{FinslerError, Tolerances};

#[derive(Parser)]
#[command(name = "finsler-fermat", version, about = "Fermat's principle on Finsler spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output directory (one subdirectory per scenario when several are given).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance override, repeatable.
        #[arg(long = "tol", value_name = "KEY=VAL", value_parser = parse_kv)]
        tol: Vec<(String, f64)>,
        /// Skip the CSV bundle.
        #[arg(long)]
        no_csv: bool,
    },
    /// Check a catalog model's axioms and known facts on random samples.
    Validate {
        model: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model parameter override, repeatable.
        #[arg(long = "param", value_name = "KEY=VAL", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
    },
    /// List the model catalog.
    Models,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VAL, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("'{v}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn prepare(path: &Path, seed: Option<u64>, tol: &[(String, f64)]) -> Result<ScenarioConfig, FinslerError> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for (k, v) in tol {
        cfg.tolerances.set(k, *v)?;
    }
    cfg.tolerances.validate()?;
    Ok(cfg)
}

/// Runs one scenario and writes its outputs; returns the failed-analysis count.
fn run_one(cfg: &ScenarioConfig, dir: &Path, csv: bool) -> Result<usize, FinslerError> {
    let art = run(cfg)?;
    let mut formats = vec![Format::Json];
    if csv {
        formats.push(Format::CsvBundle);
    }
    emit(&art, dir, &formats)?;
    write_timing(&art, dir)?;
    for o in &art.report.analyses {
        match &o.error {
            None => println!("{:<10} ok", o.analysis.name()),
            Some(e) => println!("{:<10} FAILED {}: {}", o.analysis.name(), e.kind, e.message),
        }
    }
    println!("report written to {}", dir.join("report.json").display());
    Ok(art.report.failed)
}

fn cmd_run(configs: &[PathBuf], out: Option<PathBuf>, seed: Option<u64>, tol: &[(String, f64)], csv: bool) -> ExitCode {
    let mut jobs = Vec::new();
    for path in configs {
        match prepare(path, seed, tol) {
            Ok(cfg) => {
                let base = out
                    .clone()
                    .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
                    .unwrap_or_else(|| PathBuf::from("out"));
                let dir = if configs.len() > 1 {
                    base.join(path.file_stem().unwrap_or_default())
                } else {
                    base
                };
                jobs.push((path.clone(), cfg, dir));
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    let results: Vec<Result<usize, FinslerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, cfg, dir)| scope.spawn(move || run_one(cfg, dir, csv)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let mut failed = 0;
    for ((path, _, _), r) in jobs.iter().zip(results) {
        match r {
            Ok(0) => {}
            Ok(k) => {
                eprintln!("{}: {k} analysis(es) failed", path.display());
                failed += k;
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failed += 1;
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn cmd_validate(model: &str, samples: usize, seed: u64, params: Vec<(String, f64)>) -> ExitCode {
    let params: BTreeMap<String, f64> = params.into_iter().collect();
    let res = catalog_entry(model).and_then(|e| validate_entry(&e, &params, samples, seed, &Tolerances::default()));
    match res {
        Ok(rep) => {
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
            if rep.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_models() -> ExitCode {
    for e in catalog() {
        let defaults: Vec<String> = e.defaults.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{:<22} {} [{}]", e.name, e.description, defaults.join(", "));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            configs,
            out,
            seed,
            tol,
            no_csv,
        } => cmd_run(&configs, out, seed, &tol, !no_csv),
        Command::Validate {
            model,
            samples,
            seed,
            params,
        } => cmd_validate(&model, samples, seed, params),
        Command::Models => cmd_models(),
    }
}
