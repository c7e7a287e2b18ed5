//! Command-line front end for the `gearr` simulator: configuration loading,
//! single runs, parameter sweeps and profile validation.

pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use gearr_core::reliability::load_catalog;
use gearr_core::sim::{
    baseline_comparison, run_with_catalog, sweep_gearr, sweep_tradeoff, write_csv_rows,
    write_trace_csv, RunRecord,
};
use log::info;
use serde::Serialize;

use crate::config::{load_config, FileConfig};
pub use crate::error::CliError;

/// Environment variable naming the directory under which outputs land when
/// `--out` is not given.
pub const OUT_ROOT_ENV: &str = "GEARR_OUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "gearr", version, about = "Goal-oriented / data-oriented spectrum sharing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and write its trace and summary.
    Run(RunArgs),
    /// Run a grid of configurations over several seeds.
    Sweep(SweepArgs),
    /// Check a reliability profile document and summarize it.
    ValidateProfiles {
        path: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: a fresh directory under $GEARR_OUT_ROOT).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Goal-effectiveness thresholds, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub gamma_th: Vec<f64>,
    /// Average compute budgets in TFLOPS, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub f_th: Vec<f64>,
    /// Lyapunov weights V in Mbit; adds a delay/rate trade-off table.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub v_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub seeds: Vec<u64>,
    /// Also run the static baseline and compare it with the dynamic policy.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: grid size capped at available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Path,
    seeds: &'a [u64],
    artifacts: Vec<&'static str>,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::ValidateProfiles { path } => cmd_validate_profiles(&path, &mut std::io::stdout()),
    }
}

fn runtime<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

fn out_dir(requested: Option<&Path>, command: &str) -> Result<PathBuf, CliError> {
    let dir = match requested {
        Some(d) => d.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("gearr-out"), PathBuf::from);
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0);
            root.join(format!("{command}-{stamp}"))
        }
    };
    std::fs::create_dir_all(&dir).map_err(runtime(&format!("creating {}", dir.display())))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(runtime(&format!("creating {}", path.display())))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(runtime(&format!("writing {name}")))
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<(), CliError> {
    write_csv_rows(rows, create(dir, name)?).map_err(runtime(&format!("writing {name}")))
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_text(dir, "manifest.json", &(text + "\n"))
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut file = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        file.sim.seed = seed;
    }
    let (cfg, catalog) = file.resolve()?;
    let dir = out_dir(args.out.as_deref(), "run")?;
    let echo = FileConfig::from_sim(&file.preset, &cfg, Some(&catalog))?;
    write_text(&dir, "config.toml", &echo.to_toml())?;

    info!("running {} slots, seed {}", cfg.horizon_slots, cfg.seed);
    let out = run_with_catalog(&cfg, &catalog, true).map_err(|e| CliError::from_sim(&e))?;
    write_trace_csv(&out.trace, create(&dir, "trace.csv")?).map_err(runtime("writing trace.csv"))?;
    let summary = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    write_text(&dir, "summary.json", &(summary + "\n"))?;
    write_manifest(
        &dir,
        &Manifest {
            tool: "gearr",
            version: env!("CARGO_PKG_VERSION"),
            command: "run",
            config: Path::new("config.toml"),
            seeds: &[cfg.seed],
            artifacts: vec!["config.toml", "trace.csv", "summary.json"],
        },
    )?;
    let s = &out.summary;
    println!(
        "avg_a_d={:.6e} bits/slot avg_gamma_g={:.4} avg_f={:.4e} FLOPS drop_rate={:.4} unstable={}",
        s.avg_a_d_bits, s.avg_gamma_g, s.avg_f_flops, s.drop_rate, s.unstable
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn check_list(name: &str, values: &[f64], lo: f64, hi: f64) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Validation(format!("--{name}: empty list")));
    }
    match values.iter().find(|v| !(**v >= lo && **v <= hi)) {
        Some(v) => Err(CliError::Validation(format!("--{name}: {v} outside [{lo}, {hi}]"))),
        None => Ok(()),
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    check_list("gamma-th", &args.gamma_th, 0.0, 1.0)?;
    check_list("f-th", &args.f_th, 0.0, f64::MAX)?;
    if let Some(v) = &args.v_grid {
        check_list("v-grid", v, 0.0, f64::MAX)?;
    }
    if args.seeds.is_empty() {
        return Err(CliError::Validation("--seeds: empty list".into()));
    }
    if args.jobs == Some(0) {
        return Err(CliError::Validation("--jobs: must be at least 1".into()));
    }
    let file = load_config(&args.config)?;
    let (base, catalog) = file.resolve()?;
    let grid_points = args.gamma_th.len() * args.f_th.len() * args.seeds.len();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let jobs = args.jobs.unwrap_or_else(|| grid_points.min(cores));

    let dir = out_dir(args.out.as_deref(), "sweep")?;
    let echo = FileConfig::from_sim(&file.preset, &base, Some(&catalog))?;
    write_text(&dir, "config.toml", &echo.to_toml())?;
    let sim_err = |e: gearr_core::SimError| CliError::from_sim(&e);
    let f_th_flops: Vec<f64> = args.f_th.iter().map(|f| f * 1e12).collect();

    let mut runs: Vec<RunRecord> = Vec::new();
    let mut artifacts = vec!["config.toml", "gearr.csv"];
    let gearr = sweep_gearr(&base, &catalog, &args.gamma_th, &f_th_flops, &args.seeds, jobs).map_err(sim_err)?;
    write_csv(&dir, "gearr.csv", &gearr.rows)?;
    runs.extend(gearr.runs);

    if let Some(v_grid) = &args.v_grid {
        let mut tr_rows = Vec::new();
        for &f in &f_th_flops {
            let mut b = base.clone();
            b.policy.f_th_flops = f;
            let t = sweep_tradeoff(&b, &catalog, v_grid, &args.gamma_th, &args.seeds, jobs).map_err(sim_err)?;
            tr_rows.extend(t.rows);
            runs.extend(t.runs);
        }
        write_csv(&dir, "tradeoff.csv", &tr_rows)?;
        artifacts.push("tradeoff.csv");
    }

    if args.baseline {
        let (table, scan) = baseline_comparison(&base, &catalog, &args.gamma_th, &args.seeds, jobs).map_err(sim_err)?;
        write_csv(&dir, "baseline.csv", &table.rows)?;
        write_csv(&dir, "static_scan.csv", &scan)?;
        runs.extend(table.runs);
        artifacts.extend(["baseline.csv", "static_scan.csv"]);
    }

    write_csv(&dir, "runs.csv", &runs)?;
    artifacts.push("runs.csv");
    write_manifest(
        &dir,
        &Manifest {
            tool: "gearr",
            version: env!("CARGO_PKG_VERSION"),
            command: "sweep",
            config: Path::new("config.toml"),
            seeds: &args.seeds,
            artifacts,
        },
    )?;
    let unstable = runs.iter().filter(|r| r.unstable).count();
    println!("{} runs ({unstable} flagged unstable)", runs.len());
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_validate_profiles(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = load_catalog(path).map_err(|e| CliError::Validation(e.to_string()))?;
    for p in &catalog.profiles {
        let (lo, hi) = p.accuracy_range();
        let first = p.curve.first().map_or(f64::NAN, |k| k.0);
        let last = p.curve.last().map_or(f64::NAN, |k| k.0);
        writeln!(
            out,
            "{}: {} knots, {} GFLOPs, ber {first:e}..{last:e}, accuracy {lo:.4}..{hi:.4}",
            p.model_name,
            p.curve.len(),
            p.omega_flops / 1e9,
        )
        .map_err(runtime("writing summary"))?;
    }
    Ok(())
}
