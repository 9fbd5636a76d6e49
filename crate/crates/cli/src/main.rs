//! `sivsim`: run simulated SiV⁻ experiments from config files.

mod svg;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sivsim::config::{canonical, parse_config_with_base, ConfigError, ExperimentConfig};
use sivsim::error::SimError;
use sivsim::exec::Executor;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "sivsim", version, about = "Simulated SiV- spin-qubit experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write data.csv, summary.json and plot.svg.
    Run {
        config: PathBuf,
        /// Override [run] seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores, 1 = sequential).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory. Defaults to [run] out, then $SIVSIM_OUT/<name>,
        /// then ./out/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the SVG plot.
        #[arg(long)]
        no_plot: bool,
    },
    /// Parse a config and report problems without running it.
    Validate { config: PathBuf },
    /// Print the canonical form of a config (all defaults filled in).
    DumpCanonical { config: PathBuf },
}

enum Failure {
    Config(ConfigError),
    Sim(SimError),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn to_json(&self) -> Value {
        let (kind, message, line) = match self {
            Failure::Config(e) => (format!("config.{}", e.kind()), e.to_string(), e.line()),
            Failure::Sim(e) => (format!("simulation.{}", e.kind()), e.to_string(), None),
            Failure::Io(p, e) => ("io".to_string(), format!("{}: {e}", p.display()), None),
        };
        json!({ "error": { "kind": kind, "message": message, "line": line } })
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Sim(_) => 3,
            Failure::Io(..) => 4,
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(path.into(), e))?;
    parse_config_with_base(&text, path.parent()).map_err(Failure::Config)
}

fn write(path: PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(&path, text).map_err(|e| Failure::Io(path, e))
}

fn out_dir(cli_out: Option<PathBuf>, cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    if let Some(p) = cli_out {
        return p;
    }
    if let Some(p) = &cfg.run.out {
        return PathBuf::from(p);
    }
    let name = config_path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let root = std::env::var_os("SIVSIM_OUT").map_or_else(|| PathBuf::from("out"), PathBuf::from);
    root.join(name)
}

fn run(config: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>, no_plot: bool) -> Result<(), Failure> {
    let mut cfg = load(config)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if workers.is_some() {
        cfg.run.workers = workers;
    }
    let dir = out_dir(out, &cfg, config);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(dir.clone(), e))?;

    let start = Instant::now();
    let result = sivsim::experiment::run(&cfg, &Executor::from_workers(cfg.run.workers)).map_err(Failure::Sim)?;
    let mut summary = result.summary;
    summary.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));

    write(dir.join("data.csv"), &result.data.to_csv())?;
    let text = serde_json::to_string_pretty(&Value::Object(summary)).expect("summary serializes");
    write(dir.join("summary.json"), &(text + "\n"))?;
    if !no_plot {
        write(dir.join("plot.svg"), &svg::render(&result.plot))?;
    }
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Run {
            config,
            seed,
            workers,
            out,
            no_plot,
        } => run(&config, seed, workers, out, no_plot),
        Cmd::Validate { config } => load(&config).map(|c| {
            println!("{}", json!({ "valid": true, "experiment": c.experiment.kind() }));
        }),
        Cmd::DumpCanonical { config } => load(&config).map(|c| print!("{}", canonical(&c))),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
