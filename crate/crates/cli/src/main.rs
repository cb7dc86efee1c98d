//! `randwave`: run a configured experiment and write CSV/JSON (and
//! optionally SVG) artifacts.
//!
//! Usage: `randwave <experiment> --config <path> [--out-dir <path>] [--plot]
//! [--seed N] [--threads N]`
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numeric
//! failure. On failure no output files are left behind.

mod config;
mod report;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{parse_config, ExperimentKind, RunConfig};
use report::{Provenance, ReportRecord, SCHEMA_VERSION};

const USAGE: &str = "\
randwave: random-wave equidistribution experiments

USAGE:
  randwave <experiment> --config <path> [--out-dir <path>] [--plot]
           [--seed N] [--threads N]

EXPERIMENTS:
  weyl            Weyl-law remainder diagnostics over a frequency grid
  expectation     closed-form and Monte Carlo ball-mass expectation
  variance        exact, large-N, and Monte Carlo ball-mass variance
  tail            concentration around the median vs the Levy bound
  uniform         deviation probability over a covering family of balls
  sweep           moment scaling sweep over a frequency grid
  kernel-profile  projector kernel along a geodesic with fitted envelopes
  sogge           worst-case cap mass across radii (top Gram eigenvalue)

FLAGS:
  --config PATH    flat key = value configuration file (required)
  --out-dir PATH   output directory (default: config out_dir, else '.')
  --plot           also emit an SVG plot
  --seed N         override the config seed
  --threads N      cap the worker threads (results identical for any N)
  --help           print this help
";

struct CliArgs {
    experiment: Option<ExperimentKind>,
    config_path: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    plot: bool,
    seed: Option<u64>,
    threads: Option<usize>,
}

fn parse_args() -> Result<CliArgs, String> {
    let mut args = CliArgs {
        experiment: None,
        config_path: None,
        out_dir: None,
        plot: false,
        seed: None,
        threads: None,
    };
    let mut it = std::env::args().skip(1);
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--help" | "-h" => {
                print!("{USAGE}");
                std::process::exit(0);
            }
            "--config" => {
                let v = it.next().ok_or("missing value for --config")?;
                args.config_path = Some(PathBuf::from(v));
            }
            "--out-dir" => {
                let v = it.next().ok_or("missing value for --out-dir")?;
                args.out_dir = Some(PathBuf::from(v));
            }
            "--plot" => args.plot = true,
            "--seed" => {
                let v = it.next().ok_or("missing value for --seed")?;
                args.seed = Some(v.parse().map_err(|_| format!("invalid --seed '{v}'"))?);
            }
            "--threads" => {
                let v = it.next().ok_or("missing value for --threads")?;
                args.threads = Some(v.parse().map_err(|_| format!("invalid --threads '{v}'"))?);
            }
            other if !other.starts_with('-') && args.experiment.is_none() => {
                args.experiment = Some(ExperimentKind::parse(other).map_err(|e| e.to_string())?);
            }
            other => return Err(format!("unknown argument '{other}'")),
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    let Some(config_path) = args.config_path.as_ref() else {
        eprintln!("error: --config is required\n\n{USAGE}");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let mut config: RunConfig = match parse_config(&text, args.experiment) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.plot {
        config.plot = true;
    }

    let threads = args.threads.unwrap_or(0);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let out_dir = args
        .out_dir
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let started = std::time::Instant::now();
    let output = match runner::execute(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                randwave_core::Error::NumericFailure(_) => 3,
                _ => 2,
            };
            return ExitCode::from(code);
        }
    };

    let record = ReportRecord {
        schema_version: SCHEMA_VERSION,
        experiment: config.experiment.name().to_string(),
        config: config.clone(),
        provenance: Provenance {
            seed: config.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
        rows: output.rows,
    };
    let json = match serde_json::to_string_pretty(&record) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: cannot serialize the report: {e}");
            return ExitCode::from(3);
        }
    };

    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }
    let base = config.experiment.name();
    let mut files = vec![
        (out_dir.join(format!("{base}.csv")), output.csv),
        (out_dir.join(format!("{base}.json")), json + "\n"),
    ];
    if let Some(svg) = output.svg {
        files.push((out_dir.join(format!("{base}.svg")), svg));
    }
    let mut written: Vec<&Path> = Vec::new();
    for (path, content) in &files {
        match std::fs::write(path, content) {
            Ok(()) => written.push(path),
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                for w in written {
                    let _ = std::fs::remove_file(w);
                }
                return ExitCode::from(2);
            }
        }
    }
    for (path, _) in &files {
        println!("wrote {}", path.display());
    }
    ExitCode::SUCCESS
}
